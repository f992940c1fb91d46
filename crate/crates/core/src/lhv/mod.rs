//! Hidden-variable states, weighted ensembles of them and event
//! probabilities.
//!
//! A state carries deterministic outcome instructions for A1, A2, B1, B2 and
//! the probabilities `p_a`, `p_b` of a detection with the polarizer removed.
//! Inside one state the two sides' no-polarizer responses are independent.

mod models;
mod space;

pub use models::{
    build_app_d_model, build_crosstalk_m3, build_m, build_m_double_prime, chsh_block_weights,
    check_no_enhancement, eta_crit_chsh, extend_to_m_prime, m_double_prime_signed, m_prime_signed,
    AppDModel, Enhancement,
};
pub use space::{enumerate_states, sign_pair_rows, SignPairRow, StateSpace};

use crate::error::{Error, Result};
use crate::inequalities::{JointStatistics, Statistics};
use crate::outcome::{slot, Outcome, Side, Sign};
use std::cmp::Ordering;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhvState {
    /// Instructions for A1, A2, B1, B2.
    pub instr: [Outcome; 4],
    pub p_a: f64,
    pub p_b: f64,
}

impl LhvState {
    pub fn new(instr: [Outcome; 4], p_a: f64, p_b: f64) -> Result<Self> {
        for p in [p_a, p_b] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidEnsemble(format!("no-polarizer probability {p} outside [0,1]")));
            }
        }
        Ok(LhvState { instr, p_a, p_b })
    }

    /// Shorthand taking instructions as integers in {+1, −1, 0}.
    pub fn from_ints(v: [i8; 4], p_a: f64, p_b: f64) -> Result<Self> {
        let mut instr = [Outcome::Undetected; 4];
        for (o, x) in instr.iter_mut().zip(v) {
            *o = match x {
                1 => Outcome::Plus,
                -1 => Outcome::Minus,
                0 => Outcome::Undetected,
                _ => return Err(Error::InvalidEnsemble(format!("bad instruction {x}"))),
            };
        }
        LhvState::new(instr, p_a, p_b)
    }

    pub fn a(&self, i: usize) -> Outcome {
        self.instr[slot(i)]
    }

    pub fn b(&self, j: usize) -> Outcome {
        self.instr[2 + slot(j)]
    }

    pub fn instr_on(&self, side: Side, k: usize) -> Outcome {
        match side {
            Side::A => self.a(k),
            Side::B => self.b(k),
        }
    }

    pub fn free_prob(&self, side: Side) -> f64 {
        match side {
            Side::A => self.p_a,
            Side::B => self.p_b,
        }
    }

    /// All instructions flipped (+1 ↔ −1).
    pub fn flipped(&self) -> LhvState {
        LhvState {
            instr: self.instr.map(Outcome::flip),
            ..*self
        }
    }

    /// Probability of the event in this state.
    pub fn prob(&self, ev: &Event) -> f64 {
        let mut p = 1.0;
        for side in [Side::A, Side::B] {
            let mut want_det = false;
            let mut want_undet = false;
            for atom in ev.atoms() {
                match *atom {
                    Atom::Setting { side: s, index, sel } if s == side => {
                        if !sel.matches(self.instr_on(side, index)) {
                            return 0.0;
                        }
                    }
                    Atom::Free { side: s, detected } if s == side => {
                        if detected {
                            want_det = true;
                        } else {
                            want_undet = true;
                        }
                    }
                    _ => {}
                }
            }
            let f = self.free_prob(side);
            match (want_det, want_undet) {
                (true, true) => return 0.0,
                (true, false) => p *= f,
                (false, true) => p *= 1.0 - f,
                (false, false) => {}
            }
        }
        p
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.instr
            .cmp(&other.instr)
            .then(self.p_a.total_cmp(&other.p_a))
            .then(self.p_b.total_cmp(&other.p_b))
    }
}

impl Eq for LhvState {}

impl PartialOrd for LhvState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LhvState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
    }
}

/// Outcome selector of a setting atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sel {
    Plus,
    Minus,
    Undetected,
    Detected,
}

impl Sel {
    pub fn matches(self, o: Outcome) -> bool {
        match self {
            Sel::Plus => o == Outcome::Plus,
            Sel::Minus => o == Outcome::Minus,
            Sel::Undetected => o == Outcome::Undetected,
            Sel::Detected => o.is_detected(),
        }
    }
}

impl From<Outcome> for Sel {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Plus => Sel::Plus,
            Outcome::Minus => Sel::Minus,
            Outcome::Undetected => Sel::Undetected,
        }
    }
}

impl From<Sign> for Sel {
    fn from(s: Sign) -> Self {
        Sel::from(Outcome::from(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Outcome of setting `index` (1 or 2) on `side`.
    Setting { side: Side, index: usize, sel: Sel },
    /// Detection (or not) on `side` with the polarizer removed.
    Free { side: Side, detected: bool },
}

/// Conjunction of atoms. Setting atoms on one side must all refer to the same
/// setting index, since the two settings of a side are never measured
/// together.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Event {
    atoms: Vec<Atom>,
}

impl Event {
    /// The certain event.
    pub fn new() -> Self {
        Event::default()
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        let mut ev = Event::new();
        for a in atoms {
            ev = ev.try_with(a)?;
        }
        Ok(ev)
    }

    pub fn try_with(mut self, atom: Atom) -> Result<Self> {
        if let Atom::Setting { side, index, .. } = atom {
            if index != 1 && index != 2 {
                return Err(Error::InvalidArgument(format!("setting index {index}")));
            }
            let clash = self.atoms.iter().any(|x| {
                matches!(*x, Atom::Setting { side: s, index: k, .. } if s == side && k != index)
            });
            if clash {
                return Err(Error::InvalidArgument(format!(
                    "both settings of side {side:?} in one event"
                )));
            }
        }
        self.atoms.push(atom);
        Ok(self)
    }

    fn with(self, atom: Atom) -> Self {
        self.try_with(atom).expect("incompatible setting atoms")
    }

    /// Adds `A_i ∈ sel`. Panics if the event already fixes the other A setting.
    pub fn a(self, i: usize, sel: impl Into<Sel>) -> Self {
        self.with(Atom::Setting {
            side: Side::A,
            index: i,
            sel: sel.into(),
        })
    }

    /// Adds `B_j ∈ sel`. Panics if the event already fixes the other B setting.
    pub fn b(self, j: usize, sel: impl Into<Sel>) -> Self {
        self.with(Atom::Setting {
            side: Side::B,
            index: j,
            sel: sel.into(),
        })
    }

    pub fn setting(self, side: Side, k: usize, sel: impl Into<Sel>) -> Self {
        match side {
            Side::A => self.a(k, sel),
            Side::B => self.b(k, sel),
        }
    }

    /// Adds a no-polarizer atom on `side`.
    pub fn free(self, side: Side, detected: bool) -> Self {
        self.with(Atom::Free { side, detected })
    }

    pub fn and(&self, other: &Event) -> Result<Event> {
        let mut ev = self.clone();
        for a in other.atoms() {
            ev = ev.try_with(*a)?;
        }
        Ok(ev)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Weighted list of states with unit total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    entries: Vec<(LhvState, f64)>,
    signed: bool,
}

impl Ensemble {
    /// Weights must be nonnegative (values in [−1e-12, 0) are clamped) and
    /// sum to 1 within 1e-12.
    pub fn new(entries: Vec<(LhvState, f64)>) -> Result<Self> {
        let mut entries = entries;
        for (s, w) in entries.iter_mut() {
            if !w.is_finite() || *w < -WEIGHT_TOL {
                return Err(Error::InvalidEnsemble(format!("weight {w} of {s:?}")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        check_total(&entries)?;
        Ok(Ensemble {
            entries,
            signed: false,
        })
    }

    /// Rescales nonnegative weights to unit total.
    pub fn normalized(entries: Vec<(LhvState, f64)>) -> Result<Self> {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total.is_nan() || total <= 0.0 || entries.iter().any(|e| e.1.is_nan() || e.1 < 0.0) {
            return Err(Error::InvalidEnsemble("weights must be nonnegative with a positive total".into()));
        }
        Ensemble::new(entries.into_iter().map(|(s, w)| (s, w / total)).collect())
    }

    /// Signed weights summing to 1: a quasi-probability extension used where
    /// a closed-form family leaves the probability simplex.
    pub fn signed(entries: Vec<(LhvState, f64)>) -> Result<Self> {
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::InvalidEnsemble("non-finite weight".into()));
        }
        check_total(&entries)?;
        let signed = entries.iter().any(|e| e.1 < 0.0);
        Ok(Ensemble { entries, signed })
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn entries(&self) -> &[(LhvState, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges identical states and sorts in canonical order.
    pub fn canonicalize(&self) -> Ensemble {
        let mut v = self.entries.clone();
        v.sort_by_key(|e| e.0);
        let mut out: Vec<(LhvState, f64)> = Vec::with_capacity(v.len());
        for (s, w) in v {
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 += w,
                _ => out.push((s, w)),
            }
        }
        Ensemble {
            entries: out,
            signed: self.signed,
        }
    }

    pub fn prob(&self, ev: &Event) -> f64 {
        self.entries.iter().map(|(s, w)| w * s.prob(ev)).sum()
    }

    /// P(ev | given).
    pub fn conditional(&self, ev: &Event, given: &Event) -> Result<f64> {
        let d = self.prob(given);
        if d.abs() <= 1e-300 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.prob(&ev.and(given)?) / d)
    }

    /// Replaces every state by its four sub-states with `p_a, p_b ∈ {0,1}`.
    pub fn deterministic_expansion(&self) -> Ensemble {
        let mut out = Vec::with_capacity(4 * self.entries.len());
        for (s, w) in &self.entries {
            for (pa, fa) in [(1.0, s.p_a), (0.0, 1.0 - s.p_a)] {
                for (pb, fb) in [(1.0, s.p_b), (0.0, 1.0 - s.p_b)] {
                    if fa * fb > 0.0 {
                        out.push((LhvState { p_a: pa, p_b: pb, ..*s }, w * fa * fb));
                    }
                }
            }
        }
        Ensemble {
            entries: out,
            signed: self.signed,
        }
    }

    /// Adds independent photon losses: each side survives with probability
    /// `eta`; a lost side has all its instructions set to 0 and no
    /// no-polarizer detection.
    pub fn with_detection_loss(&self, eta: f64) -> Result<Ensemble> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("eta {eta} outside [0,1]")));
        }
        let mut out = Vec::with_capacity(4 * self.entries.len());
        for (s, w) in &self.entries {
            for (keep_a, fa) in [(true, eta), (false, 1.0 - eta)] {
                for (keep_b, fb) in [(true, eta), (false, 1.0 - eta)] {
                    let mut t = *s;
                    if !keep_a {
                        t.instr[0] = Outcome::Undetected;
                        t.instr[1] = Outcome::Undetected;
                        t.p_a = 0.0;
                    }
                    if !keep_b {
                        t.instr[2] = Outcome::Undetected;
                        t.instr[3] = Outcome::Undetected;
                        t.p_b = 0.0;
                    }
                    out.push((t, w * fa * fb));
                }
            }
        }
        Ok(Ensemble {
            entries: out,
            signed: self.signed,
        }
        .canonicalize())
    }

    /// Average of the ensemble and its global outcome flip.
    pub fn symmetrize_flip(&self) -> Ensemble {
        let mut v: Vec<_> = self.entries.iter().map(|&(s, w)| (s, w / 2.0)).collect();
        v.extend(self.entries.iter().map(|&(s, w)| (s.flipped(), w / 2.0)));
        Ensemble {
            entries: v,
            signed: self.signed,
        }
        .canonicalize()
    }

    /// Weight of each state of `states` (0 when absent).
    pub fn weights_on(&self, states: &[LhvState]) -> Vec<f64> {
        let c = self.canonicalize();
        states
            .iter()
            .map(|s| {
                c.entries
                    .binary_search_by(|e| e.0.cmp(s))
                    .map(|k| c.entries[k].1)
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

fn check_total(entries: &[(LhvState, f64)]) -> Result<()> {
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
    }
    Ok(())
}

impl JointStatistics for Ensemble {
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64 {
        self.prob(&Event::new().a(i, a).b(j, b))
    }
}

impl Statistics for Ensemble {
    fn setting_free(&self, side: Side, k: usize, o: Outcome, other_detected: bool) -> f64 {
        self.prob(&Event::new().setting(side, k, o).free(side.other(), other_detected))
    }

    fn both_free(&self, a_detected: bool, b_detected: bool) -> f64 {
        self.prob(&Event::new().free(Side::A, a_detected).free(Side::B, b_detected))
    }

    fn marginal(&self, side: Side, k: usize, o: Outcome) -> f64 {
        self.prob(&Event::new().setting(side, k, o))
    }
}

/// One ensemble per setting pair (i, j): models whose hidden states depend on
/// the settings actually chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEnsemble {
    contexts: [[Ensemble; 2]; 2],
}

impl ContextualEnsemble {
    pub fn new(contexts: [[Ensemble; 2]; 2]) -> Self {
        ContextualEnsemble { contexts }
    }

    pub fn context(&self, i: usize, j: usize) -> &Ensemble {
        &self.contexts[slot(i)][slot(j)]
    }
}

impl JointStatistics for ContextualEnsemble {
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64 {
        self.context(i, j).joint(i, j, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(v: [i8; 4], pa: f64, pb: f64) -> LhvState {
        LhvState::from_ints(v, pa, pb).unwrap()
    }

    #[test]
    fn deterministic_readout() {
        let e = Ensemble::new(vec![(st([1, -1, 1, 0], 1.0, 1.0), 1.0)]).unwrap();
        let ev = Event::new().a(1, Sign::Plus).b(1, Sign::Plus);
        assert_eq!(e.prob(&ev), 1.0);
        assert_eq!(e.prob(&Event::new().b(2, Sel::Detected)), 0.0);
    }

    #[test]
    fn free_atoms_independent_per_side() {
        let e = Ensemble::new(vec![(st([0, 0, 0, 0], 0.25, 0.5), 1.0)]).unwrap();
        let both = Event::new().free(Side::A, true).free(Side::B, true);
        assert!((e.prob(&both) - 0.125).abs() < 1e-15);
        let contra = Event::new().free(Side::A, true).free(Side::A, false);
        assert_eq!(e.prob(&contra), 0.0);
        let same = Event::new().free(Side::A, true).free(Side::A, true);
        assert!((e.prob(&same) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn conflicting_settings_rejected() {
        let ev = Event::new().a(1, Sel::Detected);
        assert!(ev.try_with(Atom::Setting { side: Side::A, index: 2, sel: Sel::Plus }).is_err());
        let ok = Event::new().a(1, Sel::Detected).a(1, Sel::Plus);
        let e = Ensemble::new(vec![(st([-1, 0, 0, 0], 1.0, 1.0), 1.0)]).unwrap();
        assert_eq!(e.prob(&ok), 0.0);
    }

    #[test]
    fn zero_conditioning_is_error() {
        let e = Ensemble::new(vec![(st([0, 0, 0, 0], 0.0, 0.0), 1.0)]).unwrap();
        let r = e.conditional(&Event::new().a(1, Sel::Detected), &Event::new().b(1, Sel::Detected));
        assert!(matches!(r, Err(Error::ZeroProbability)));
    }

    #[test]
    fn weight_validation() {
        let s = st([0, 0, 0, 0], 0.0, 0.0);
        assert!(Ensemble::new(vec![(s, 0.5)]).is_err());
        assert!(Ensemble::new(vec![(s, 1.0 + 1e-13), (s, -1e-13)]).is_ok());
        assert!(Ensemble::new(vec![(s, 1.1), (s, -0.1)]).is_err());
        assert!(Ensemble::signed(vec![(s, 1.1), (s, -0.1)]).unwrap().is_signed());
        assert!(LhvState::new([Outcome::Plus; 4], 1.5, 0.0).is_err());
    }

    #[test]
    fn canonical_order() {
        let a = st([1, 1, 1, 1], 1.0, 1.0);
        let b = st([1, 1, 1, -1], 1.0, 1.0);
        let c = st([1, 1, 1, 0], 0.0, 1.0);
        let d = st([1, 1, 1, 0], 1.0, 1.0);
        let e = Ensemble::new(vec![(d, 0.25), (b, 0.25), (c, 0.25), (a, 0.125), (a, 0.125)]).unwrap();
        let states: Vec<_> = e.canonicalize().entries().iter().map(|x| x.0).collect();
        assert_eq!(states, vec![a, b, c, d]);
    }

    fn arb_state() -> impl Strategy<Value = LhvState> {
        (prop::array::uniform4(-1i8..=1), 0.0..=1.0f64, 0.0..=1.0f64)
            .prop_map(|(v, pa, pb)| st(v, pa, pb))
    }

    fn arb_ensemble() -> impl Strategy<Value = Ensemble> {
        prop::collection::vec((arb_state(), 0.01..1.0f64), 1..12).prop_map(|v| Ensemble::normalized(v).unwrap())
    }

    fn arb_sel() -> impl Strategy<Value = Sel> {
        prop_oneof![Just(Sel::Plus), Just(Sel::Minus), Just(Sel::Undetected), Just(Sel::Detected)]
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (
            prop::option::of((1usize..=2, arb_sel())),
            prop::option::of((1usize..=2, arb_sel())),
            prop::option::of(any::<bool>()),
            prop::option::of(any::<bool>()),
        )
            .prop_map(|(a, b, fa, fb)| {
                let mut ev = Event::new();
                if let Some((i, s)) = a {
                    ev = ev.a(i, s);
                }
                if let Some((j, s)) = b {
                    ev = ev.b(j, s);
                }
                if let Some(d) = fa {
                    ev = ev.free(Side::A, d);
                }
                if let Some(d) = fb {
                    ev = ev.free(Side::B, d);
                }
                ev
            })
    }

    proptest! {
        #[test]
        fn expansion_preserves_events(e in arb_ensemble(), ev in arb_event()) {
            let x = e.deterministic_expansion();
            prop_assert!((e.prob(&ev) - x.prob(&ev)).abs() < 1e-12);
        }

        #[test]
        fn canonicalize_preserves_events(e in arb_ensemble(), ev in arb_event()) {
            prop_assert!((e.prob(&ev) - e.canonicalize().prob(&ev)).abs() < 1e-12);
        }

        #[test]
        fn loss_scales_detection(e in arb_ensemble(), eta in 0.0..=1.0f64) {
            let l = e.with_detection_loss(eta).unwrap();
            let ev = Event::new().a(1, Sel::Detected).b(2, Sel::Detected);
            prop_assert!((l.prob(&ev) - eta * eta * e.prob(&ev)).abs() < 1e-12);
            let fa = Event::new().free(Side::A, true);
            prop_assert!((l.prob(&fa) - eta * e.prob(&fa)).abs() < 1e-12);
        }
    }
}
