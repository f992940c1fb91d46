//! Named LHV constructions: the CHSH model M and its enhancement
//! extensions, the closed-form η ≤ ½ model, and the cross-talk model.

use super::{ContextualEnsemble, Ensemble, LhvState};
use crate::error::{Error, Result};
use crate::outcome::{Outcome, Side, Sign};
use crate::quantum::PredictionSet;

const SQRT8: f64 = 2.0 * std::f64::consts::SQRT_2;

/// η_crit(β) = 2/(1 + β/2) for 2 ≤ β ≤ 2√2.
pub fn eta_crit_chsh(beta: f64) -> Result<f64> {
    if !(2.0..=SQRT8 + 1e-12).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside [2, 2*sqrt(2)]")));
    }
    Ok(2.0 / (1.0 + beta / 2.0))
}

/// Block weights p = η(3η − 2) and q = 4η(1 − η).
pub fn chsh_block_weights(eta: f64) -> (f64, f64) {
    (eta * (3.0 * eta - 2.0), 4.0 * eta * (1.0 - eta))
}

// Sign patterns of the first member of each pair; the second member is the
// global flip.
const M_P: [[i8; 4]; 4] = [[1, 1, 1, 1], [1, 1, 1, -1], [1, -1, 1, 1], [1, -1, -1, 1]];
const M_Q: [[i8; 4]; 4] = [[1, 1, 1, 0], [1, -1, 0, 1], [1, 0, 1, 1], [0, 1, 1, -1]];

#[derive(Clone, Copy)]
enum Extension {
    None,
    Prime,
    DoublePrime,
}

/// (p_A, p_B) assigned to a state of M by the chosen extension.
fn free_values(instr: &[Outcome; 4], ext: Extension) -> Result<(f64, f64)> {
    let zeros: Vec<usize> = (0..4).filter(|&k| !instr[k].is_detected()).collect();
    let v = match (ext, zeros.as_slice()) {
        (Extension::None, _) => (0.0, 0.0),
        (_, []) => (1.0, 1.0),
        (_, [_, _, _, _]) => (0.0, 0.0),
        (Extension::Prime, [3]) => (1.0, 0.0),
        (Extension::Prime, [2]) => (1.0, 1.0),
        (Extension::Prime, [1]) => (0.0, 1.0),
        (Extension::Prime, [0]) => (1.0, 1.0),
        (Extension::DoublePrime, [2 | 3]) => (1.0, 0.5),
        (Extension::DoublePrime, [0 | 1]) => (0.5, 1.0),
        _ => {
            return Err(Error::UnrecognizedState(format!("{instr:?} is not a state of M")));
        }
    };
    Ok(v)
}

fn m_family(eta: f64, ext: Extension) -> Result<Vec<(LhvState, f64)>> {
    let (p, q) = chsh_block_weights(eta);
    let mut out = Vec::with_capacity(17);
    for (patterns, w) in [(&M_P, p / 8.0), (&M_Q, q / 8.0)] {
        for pat in patterns {
            for sgn in [1i8, -1] {
                let s = LhvState::from_ints(pat.map(|x| x * sgn), 0.0, 0.0)?;
                let (pa, pb) = free_values(&s.instr, ext)?;
                out.push((LhvState::new(s.instr, pa, pb)?, w));
            }
        }
    }
    out.push((LhvState::from_ints([0; 4], 0.0, 0.0)?, 1.0 - p - q));
    Ok(out)
}

fn m_at(beta: f64, ext: Extension) -> Result<Ensemble> {
    let eta = eta_crit_chsh(beta)?;
    if beta <= 2.0 {
        return Err(Error::InvalidArgument("beta must exceed 2".into()));
    }
    let (p, q) = chsh_block_weights(eta);
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("block weights p={p}, q={q} outside [0,1]")));
    }
    Ensemble::new(m_family(eta, ext)?)
}

/// The CHSH model M reproducing violation `beta` at η = η_crit(β). No
/// no-polarizer responses are defined (all `p_a = p_b = 0`).
pub fn build_m(beta: f64) -> Result<Ensemble> {
    m_at(beta, Extension::None)
}

/// Assigns no-polarizer responses to the states of M: (1,1) on the no-zero
/// block, (0,0) on the all-zero state, and on the one-zero block by the
/// position of the zero: B2 → (1,0), B1 → (1,1), A2 → (0,1), A1 → (1,1).
pub fn extend_to_m_prime(m: &Ensemble) -> Result<Ensemble> {
    let mut out = Vec::with_capacity(m.len());
    for &(s, w) in m.entries() {
        let (pa, pb) = free_values(&s.instr, Extension::Prime)?;
        out.push((LhvState::new(s.instr, pa, pb)?, w));
    }
    if m.is_signed() {
        Ensemble::signed(out)
    } else {
        Ensemble::new(out)
    }
}

/// M″: like M′ but with half-probability responses on the one-zero block,
/// B2, B1 → (1, ½) and A2, A1 → (½, 1).
pub fn build_m_double_prime(beta: f64) -> Result<Ensemble> {
    m_at(beta, Extension::DoublePrime)
}

/// M′ at an arbitrary η ∈ (0, 1]; for η < 2/3 the no-zero block weight is
/// negative and the result is a signed ensemble.
pub fn m_prime_signed(eta: f64) -> Result<Ensemble> {
    signed_family(eta, Extension::Prime)
}

/// M″ at an arbitrary η ∈ (0, 1], signed where needed.
pub fn m_double_prime_signed(eta: f64) -> Result<Ensemble> {
    signed_family(eta, Extension::DoublePrime)
}

fn signed_family(eta: f64, ext: Extension) -> Result<Ensemble> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside (0,1]")));
    }
    Ensemble::signed(m_family(eta, ext)?)
}

/// A state where a deterministic detection instruction coexists with a
/// lower no-polarizer detection probability on the same side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enhancement {
    pub state: LhvState,
    pub side: Side,
    pub setting: usize,
}

pub fn check_no_enhancement(ens: &Ensemble) -> Vec<Enhancement> {
    let mut out = Vec::new();
    for &(s, w) in ens.entries() {
        if w == 0.0 {
            continue;
        }
        for side in [Side::A, Side::B] {
            for k in 1..=2 {
                if s.instr_on(side, k).is_detected() && s.free_prob(side) < 1.0 {
                    out.push(Enhancement {
                        state: s,
                        side,
                        setting: k,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppDModel {
    Feasible {
        ensemble: Ensemble,
        rho0: f64,
    },
    Infeasible {
        /// States whose closed-form weight is below −1e-12.
        negative: Vec<(LhvState, f64)>,
        rho0: f64,
    },
}

impl AppDModel {
    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            AppDModel::Feasible { ensemble, .. } => Some(ensemble),
            AppDModel::Infeasible { .. } => None,
        }
    }

    pub fn rho0(&self) -> f64 {
        match *self {
            AppDModel::Feasible { rho0, .. } | AppDModel::Infeasible { rho0, .. } => rho0,
        }
    }
}

fn single_instr(side: Side, k: usize, s: Sign) -> [Outcome; 4] {
    let mut v = [Outcome::Undetected; 4];
    let off = if side == Side::A { 0 } else { 2 };
    v[off + k - 1] = s.into();
    v
}

/// Closed-form 25-state model: ρ^AB = η²Q^AB on states with one detected
/// instruction per side (p = ½ both sides), ρ^A = ηQ^A − Σ η²Q^AB on states
/// detected on A only (½, 0), ρ^B likewise, and the all-zero remainder.
pub fn build_app_d_model(pred: &PredictionSet, eta: f64) -> Result<AppDModel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside [0,1]")));
    }
    let mut entries = Vec::with_capacity(25);
    for i in 1..=2 {
        for a in Sign::BOTH {
            for j in 1..=2 {
                for b in Sign::BOTH {
                    let mut instr = single_instr(Side::A, i, a);
                    instr[1 + j] = b.into();
                    entries.push((LhvState::new(instr, 0.5, 0.5)?, eta * eta * pred.joint(i, j, a, b)));
                }
            }
        }
    }
    for side in [Side::A, Side::B] {
        for k in 1..=2 {
            for s in Sign::BOTH {
                let mut w = eta * pred.marginal(side, k, s);
                for l in 1..=2 {
                    for t in Sign::BOTH {
                        w -= eta
                            * eta
                            * match side {
                                Side::A => pred.joint(k, l, s, t),
                                Side::B => pred.joint(l, k, t, s),
                            };
                    }
                }
                let (pa, pb) = if side == Side::A { (0.5, 0.0) } else { (0.0, 0.5) };
                entries.push((LhvState::new(single_instr(side, k, s), pa, pb)?, w));
            }
        }
    }
    let rho0 = 1.0 - entries.iter().map(|e| e.1).sum::<f64>();
    entries.push((LhvState::from_ints([0; 4], 0.0, 0.0)?, rho0));
    let negative: Vec<_> = entries.iter().copied().filter(|e| e.1 < -1e-12).collect();
    if !negative.is_empty() {
        return Ok(AppDModel::Infeasible { negative, rho0 });
    }
    Ok(AppDModel::Feasible {
        ensemble: Ensemble::new(entries)?,
        rho0,
    })
}

/// Context-dependent model: with A1 chosen the source emits (+1,·;+1,+1);
/// with A2 chosen it emits (·,±1;+1,−1) with probability ½ each. Unused
/// instructions are stored as 0. All no-polarizer responses are 1.
pub fn build_crosstalk_m3() -> ContextualEnsemble {
    let s = |v| LhvState::from_ints(v, 1.0, 1.0).expect("valid state");
    let ctx_a1 = Ensemble::new(vec![(s([1, 0, 1, 1]), 1.0)]).expect("unit weight");
    let ctx_a2 = Ensemble::new(vec![(s([0, 1, 1, -1]), 0.5), (s([0, -1, 1, -1]), 0.5)]).expect("unit weight");
    ContextualEnsemble::new([[ctx_a1.clone(), ctx_a1], [ctx_a2.clone(), ctx_a2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{Event, Sel};

    #[test]
    fn eta_formula() {
        assert!((eta_crit_chsh(SQRT8).unwrap() - 2.0 / (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(eta_crit_chsh(2.0).unwrap(), 1.0);
        assert!((eta_crit_chsh(2.4).unwrap() - 2.0 / 2.2).abs() < 1e-15);
        assert!(eta_crit_chsh(1.9).is_err());
        assert!(eta_crit_chsh(3.0).is_err());
    }

    #[test]
    fn m_has_seventeen_states() {
        let m = build_m(SQRT8).unwrap();
        assert_eq!(m.len(), 17);
        assert!(build_m(2.0).is_err());
    }

    #[test]
    fn m_marginals_equal_eta() {
        for beta in [2.1, 2.4, SQRT8] {
            let eta = eta_crit_chsh(beta).unwrap();
            let m = build_m(beta).unwrap();
            for k in 1..=2 {
                let pa = m.prob(&Event::new().a(k, Sel::Detected));
                let pb = m.prob(&Event::new().b(k, Sel::Detected));
                assert!((pa - eta).abs() < 1e-12 && (pb - eta).abs() < 1e-12);
                let plus = m.prob(&Event::new().a(k, Sign::Plus));
                assert!((plus - eta / 2.0).abs() < 1e-12);
                for j in 1..=2 {
                    let c = m
                        .conditional(&Event::new().a(k, Sel::Detected), &Event::new().b(j, Sel::Detected))
                        .unwrap();
                    assert!((c - eta).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conditional_on_remote_outcome_is_eta() {
        // Counting states: P(A1 det, B2=+1) = p/2 + q/4 = η²/2 and
        // P(B2=+1) = p/2 + 3q/8 = η/2.
        let eta = eta_crit_chsh(SQRT8).unwrap();
        let (p, q) = chsh_block_weights(eta);
        let m = build_m(SQRT8).unwrap();
        let joint = m.prob(&Event::new().a(1, Sel::Detected).b(2, Sign::Plus));
        let cond = m
            .conditional(&Event::new().a(1, Sel::Detected), &Event::new().b(2, Sign::Plus))
            .unwrap();
        assert!((joint - (p / 2.0 + q / 4.0)).abs() < 1e-15);
        assert!((cond - eta).abs() < 1e-12);
    }

    #[test]
    fn m_prime_shape_rules() {
        let m1 = extend_to_m_prime(&build_m(SQRT8).unwrap()).unwrap();
        let viol = check_no_enhancement(&m1);
        let target = LhvState::from_ints([1, 0, 1, 1], 0.0, 1.0).unwrap();
        assert!(viol.iter().any(|v| v.state == target && v.side == Side::A && v.setting == 1));
        let bad = Ensemble::new(vec![(LhvState::from_ints([1, 0, 0, 1], 1.0, 1.0).unwrap(), 1.0)]).unwrap();
        assert!(matches!(extend_to_m_prime(&bad), Err(Error::UnrecognizedState(_))));
    }

    #[test]
    fn app_d_boundary_values() {
        let p = crate::scenario::Scenario::theta(crate::scenario::StateSpec::Psi1, 0.3)
            .prediction_set()
            .unwrap();
        let d = build_app_d_model(&p, 0.5).unwrap();
        assert!(d.rho0().abs() < 1e-12);
        assert!(d.ensemble().is_some());
        let d = build_app_d_model(&p, 0.25).unwrap();
        assert!((d.rho0() - 0.25).abs() < 1e-12);
        assert_eq!(d.ensemble().unwrap().len(), 25);
        match build_app_d_model(&p, 0.6).unwrap() {
            AppDModel::Infeasible { negative, rho0 } => {
                assert_eq!(negative.len(), 8);
                assert!((rho0 - 0.04).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn app_d_violates_no_enhancement_on_pair_states() {
        let p = crate::scenario::Scenario::theta(crate::scenario::StateSpec::Psi2, 0.7)
            .prediction_set()
            .unwrap();
        let d = build_app_d_model(&p, 0.4).unwrap();
        let viol = check_no_enhancement(d.ensemble().unwrap());
        // Each of the 16 pair states violates on both sides, each of the 8
        // single-side states on its detected side.
        assert_eq!(viol.len(), 16 * 2 + 8);
    }

    #[test]
    fn crosstalk_contexts() {
        let m3 = build_crosstalk_m3();
        for i in 1..=2 {
            for j in 1..=2 {
                let b1 = m3.context(i, j).prob(&Event::new().b(1, Sign::Plus));
                assert_eq!(b1, 1.0);
            }
        }
    }
}
