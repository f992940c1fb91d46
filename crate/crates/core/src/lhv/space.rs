use super::LhvState;
use crate::error::Error;
use crate::outcome::Outcome;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSpace {
    /// 16 no-zero, 64 one-zero and the all-zero state.
    #[default]
    #[serde(alias = "reduced81")]
    Reduced,
    /// Every instruction tuple with deterministic no-polarizer responses.
    #[serde(alias = "full324")]
    Full,
}

impl FromStr for StateSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "reduced" | "reduced81" => Ok(StateSpace::Reduced),
            "full" | "full324" => Ok(StateSpace::Full),
            _ => Err(Error::InvalidArgument(format!("unknown state space {s:?}"))),
        }
    }
}

fn instruction_tuples() -> impl Iterator<Item = [Outcome; 4]> {
    let o = Outcome::ALL;
    o.into_iter().flat_map(move |a1| {
        o.into_iter().flat_map(move |a2| {
            o.into_iter()
                .flat_map(move |b1| o.into_iter().map(move |b2| [a1, a2, b1, b2]))
        })
    })
}

/// Free-detection choices of the reduced space for one instruction tuple.
fn reduced_free_values(instr: &[Outcome; 4]) -> Vec<(f64, f64)> {
    let zeros: Vec<usize> = (0..4).filter(|&k| !instr[k].is_detected()).collect();
    match zeros.as_slice() {
        [] => vec![(1.0, 1.0)],
        [k] if *k < 2 => vec![(0.0, 1.0), (1.0, 1.0)],
        [_] => vec![(1.0, 0.0), (1.0, 1.0)],
        [_, _, _, _] => vec![(0.0, 0.0)],
        _ => vec![],
    }
}

/// States in canonical order.
pub fn enumerate_states(space: StateSpace) -> Vec<LhvState> {
    let mut out = Vec::new();
    for instr in instruction_tuples() {
        let frees: Vec<(f64, f64)> = match space {
            StateSpace::Full => vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)],
            StateSpace::Reduced => reduced_free_values(&instr),
        };
        out.extend(frees.into_iter().map(|(p_a, p_b)| LhvState { instr, p_a, p_b }));
    }
    out.sort();
    out
}

/// One printed row of a reduced-space weight table: a state whose first
/// nonzero instruction is +1, paired with its global flip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignPairRow {
    pub state: LhvState,
}

impl SignPairRow {
    /// The one or two states the row stands for.
    pub fn members(&self) -> Vec<LhvState> {
        let f = self.state.flipped();
        if f == self.state {
            vec![self.state]
        } else {
            vec![self.state, f]
        }
    }

    /// Instruction cells as printed: `±1`, `∓1` relative to the first
    /// nonzero instruction, `0` for undetected.
    pub fn labels(&self) -> [&'static str; 4] {
        self.state.instr.map(|o| match o {
            Outcome::Plus => "±1",
            Outcome::Minus => "∓1",
            Outcome::Undetected => "0",
        })
    }
}

/// The 41 rows of the reduced space grouped by position of the zero
/// instruction (none, A1, A2, B1, B2, all), then sign pattern, then the
/// free-detection value.
pub fn sign_pair_rows() -> Vec<SignPairRow> {
    let group = |s: &LhvState| -> usize {
        let zeros: Vec<usize> = (0..4).filter(|&k| !s.instr[k].is_detected()).collect();
        match zeros.as_slice() {
            [] => 0,
            [k] => 1 + k,
            _ => 5,
        }
    };
    let mut rows: Vec<LhvState> = enumerate_states(StateSpace::Reduced)
        .into_iter()
        .filter(|s| s.instr.iter().find(|o| o.is_detected()).map_or(true, |&o| o == Outcome::Plus))
        .collect();
    rows.sort_by(|x, y| group(x).cmp(&group(y)).then(x.cmp(y)));
    rows.into_iter().map(|state| SignPairRow { state }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn key(s: &LhvState) -> ([Outcome; 4], u8, u8) {
        (s.instr, s.p_a as u8, s.p_b as u8)
    }

    #[test]
    fn sizes_and_uniqueness() {
        for (space, n) in [(StateSpace::Full, 324), (StateSpace::Reduced, 81)] {
            let v = enumerate_states(space);
            assert_eq!(v.len(), n);
            let set: HashSet<_> = v.iter().map(key).collect();
            assert_eq!(set.len(), n);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn reduced_is_subset_of_full() {
        let full: HashSet<_> = enumerate_states(StateSpace::Full).iter().map(key).collect();
        assert!(enumerate_states(StateSpace::Reduced).iter().all(|s| full.contains(&key(s))));
    }

    #[test]
    fn rows_cover_reduced_space() {
        let rows = sign_pair_rows();
        assert_eq!(rows.len(), 41);
        let mut all: Vec<LhvState> = rows.iter().flat_map(|r| r.members()).collect();
        all.sort();
        assert_eq!(all, enumerate_states(StateSpace::Reduced));
        assert_eq!(rows[0].labels(), ["±1"; 4]);
        assert_eq!(rows[8].labels(), ["0", "±1", "±1", "±1"]);
        assert_eq!(rows[8].state.p_a, 0.0);
        assert_eq!(rows[40].labels(), ["0"; 4]);
    }
}
