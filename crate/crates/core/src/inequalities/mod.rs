//! CHSH, CH and Eberhard expressions on model probabilities, quantum
//! predictions or count tables.

mod coincidence;
mod counts;

pub use coincidence::{coincidence_correction, CoincidenceReport};
pub use counts::{ch_operational, ch_two_channel, eberhard_counts, eberhard_counts_report, Arm, Click, CountTable};

use crate::error::{Error, Result};
use crate::outcome::{Outcome, Side, Sign};
use crate::quantum::PredictionSet;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Joint outcome probabilities for the four setting pairs.
pub trait JointStatistics {
    /// P(A_i = a ∧ B_j = b), outcomes including non-detection.
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64;
}

/// Statistics that also define polarizer-free detections.
pub trait Statistics: JointStatistics {
    /// P(X_k = o ∧ other side detected (or not) with its polarizer removed).
    fn setting_free(&self, side: Side, k: usize, o: Outcome, other_detected: bool) -> f64;

    /// P(A detected? ∧ B detected?) with both polarizers removed.
    fn both_free(&self, a_detected: bool, b_detected: bool) -> f64;

    /// P(X_k = o).
    fn marginal(&self, side: Side, k: usize, o: Outcome) -> f64 {
        Outcome::ALL
            .iter()
            .map(|&x| match side {
                Side::A => self.joint(k, 1, o, x),
                Side::B => self.joint(1, k, x, o),
            })
            .sum()
    }

    /// P(detection on `side` with the polarizer removed).
    fn free(&self, side: Side) -> f64 {
        match side {
            Side::A => self.both_free(true, true) + self.both_free(true, false),
            Side::B => self.both_free(true, true) + self.both_free(false, true),
        }
    }
}

/// Quantum predictions read with perfect detectors.
impl JointStatistics for PredictionSet {
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64 {
        match (a.sign(), b.sign()) {
            (Some(x), Some(y)) => PredictionSet::joint(self, i, j, x, y),
            _ => 0.0,
        }
    }
}

/// Quantum predictions with independent detection losses η_A, η_B on the two
/// sides (the fair-sampling reading of a detection rate).
#[derive(Debug, Clone, Copy)]
pub struct Dressed<'a> {
    pub pred: &'a PredictionSet,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl<'a> Dressed<'a> {
    pub fn new(pred: &'a PredictionSet, eta: f64) -> Self {
        Dressed {
            pred,
            eta_a: eta,
            eta_b: eta,
        }
    }

    fn eta(&self, side: Side) -> f64 {
        match side {
            Side::A => self.eta_a,
            Side::B => self.eta_b,
        }
    }

    fn side_prob(&self, side: Side, k: usize, o: Outcome) -> f64 {
        let e = self.eta(side);
        match o.sign() {
            Some(s) => e * self.pred.marginal(side, k, s),
            None => 1.0 - e,
        }
    }

    fn free_prob(&self, side: Side, detected: bool) -> f64 {
        if detected {
            self.eta(side)
        } else {
            1.0 - self.eta(side)
        }
    }
}

impl JointStatistics for Dressed<'_> {
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64 {
        match (a.sign(), b.sign()) {
            (Some(x), Some(y)) => self.eta_a * self.eta_b * self.pred.joint(i, j, x, y),
            _ => self.side_prob(Side::A, i, a) * self.side_prob(Side::B, j, b),
        }
    }
}

impl Statistics for Dressed<'_> {
    fn setting_free(&self, side: Side, k: usize, o: Outcome, other_detected: bool) -> f64 {
        self.side_prob(side, k, o) * self.free_prob(side.other(), other_detected)
    }

    fn both_free(&self, a_detected: bool, b_detected: bool) -> f64 {
        self.free_prob(Side::A, a_detected) * self.free_prob(Side::B, b_detected)
    }

    fn marginal(&self, side: Side, k: usize, o: Outcome) -> f64 {
        self.side_prob(side, k, o)
    }
}

/// Sign convention of the four-term combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// C11 + C12 + C21 − C22, and P(A1,B1) + P(A1,B2) + P(A2,B1) − P(A2,B2)
    /// − P(A1) − P(B1).
    #[default]
    Paper,
    /// C11 − C12 + C21 + C22, and P(A1,B1) − P(A1,B2) + P(A2,B1) + P(A2,B2)
    /// − P(A2) − P(B1).
    Aspect,
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Convention::Paper),
            "aspect" => Ok(Convention::Aspect),
            _ => Err(Error::InvalidArgument(format!("unknown convention {s:?}"))),
        }
    }
}

impl Convention {
    /// Signs of the (1,1), (1,2), (2,1), (2,2) terms.
    pub fn signs(self) -> [[f64; 2]; 2] {
        match self {
            Convention::Paper => [[1.0, 1.0], [1.0, -1.0]],
            Convention::Aspect => [[1.0, -1.0], [1.0, 1.0]],
        }
    }

    /// A-side setting whose single-detection term enters CH.
    fn ch_a_setting(self) -> usize {
        match self {
            Convention::Paper => 1,
            Convention::Aspect => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Chsh,
    ChGen,
    ChNg,
    ChOp,
    Ch2ch,
    ChNorm,
    EberhardProb,
    EberhardCounts,
    EberhardEta,
}

/// Supplementary assumption a bound rests on (locality is always implied).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    Locality,
    FairSampling,
    NoEnhancement,
    NoCrossTalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bounds {
    const fn new(lower: Option<f64>, upper: Option<f64>) -> Self {
        Bounds { lower, upper }
    }

    /// Distance of `v` outside the bounds (0 inside).
    pub fn excess(&self, v: f64) -> f64 {
        let below = self.lower.map_or(0.0, |l| (l - v).max(0.0));
        let above = self.upper.map_or(0.0, |u| (v - u).max(0.0));
        below.max(above)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub value: f64,
    pub kind: BetaKind,
    pub convention: Option<Convention>,
    pub bounds: Bounds,
    pub violated: bool,
    /// Amount by which the value lies outside the bounds.
    pub excess: f64,
    pub assumptions: Vec<Assumption>,
}

impl BetaReport {
    fn new(value: f64, kind: BetaKind, convention: Option<Convention>) -> Self {
        use Assumption::*;
        let (bounds, assumptions) = match kind {
            BetaKind::Chsh => (Bounds::new(None, Some(2.0)), vec![Locality, FairSampling]),
            BetaKind::ChGen => (Bounds::new(Some(-1.0), Some(0.0)), vec![Locality]),
            BetaKind::ChNg | BetaKind::ChOp => (Bounds::new(None, Some(0.0)), vec![Locality, NoEnhancement]),
            BetaKind::ChNorm | BetaKind::Ch2ch => (Bounds::new(None, Some(0.0)), vec![Locality, FairSampling]),
            BetaKind::EberhardProb | BetaKind::EberhardCounts | BetaKind::EberhardEta => {
                (Bounds::new(Some(0.0), None), vec![Locality, NoCrossTalk])
            }
        };
        let excess = bounds.excess(value);
        BetaReport {
            value,
            kind,
            convention,
            bounds,
            violated: excess > 0.0,
            excess,
            assumptions,
        }
    }
}

/// Correlations C_ij indexed `[i-1][j-1]`.
pub type Correlations = [[f64; 2]; 2];

pub fn chsh(c: &Correlations, conv: Convention) -> BetaReport {
    let s = conv.signs();
    let v = s[0][0] * c[0][0] + s[0][1] * c[0][1] + s[1][0] * c[1][0] + s[1][1] * c[1][1];
    BetaReport::new(v.abs(), BetaKind::Chsh, Some(conv))
}

pub fn prediction_correlations(pred: &PredictionSet) -> Correlations {
    [[pred.correlation(1, 1), pred.correlation(1, 2)], [pred.correlation(2, 1), pred.correlation(2, 2)]]
}

/// ⟨A_iB_j⟩ on coincident detections only.
pub fn coincidence_correlations(stats: &impl JointStatistics) -> Result<Correlations> {
    let mut c = [[0.0; 2]; 2];
    for i in 1..=2 {
        for j in 1..=2 {
            let (mut num, mut den) = (0.0, 0.0);
            for a in Sign::BOTH {
                for b in Sign::BOTH {
                    let p = stats.joint(i, j, a.into(), b.into());
                    num += a.value() * b.value() * p;
                    den += p;
                }
            }
            if den <= 0.0 {
                return Err(Error::ZeroDenominator("coincidence correlation"));
            }
            c[i - 1][j - 1] = num / den;
        }
    }
    Ok(c)
}

fn plus_plus_terms(stats: &impl JointStatistics, conv: Convention) -> f64 {
    let s = conv.signs();
    let mut v = 0.0;
    for i in 1..=2 {
        for j in 1..=2 {
            v += s[i - 1][j - 1] * stats.joint(i, j, Outcome::Plus, Outcome::Plus);
        }
    }
    v
}

/// Genuine CH: joint terms minus P(A_k = +1) and P(B1 = +1), bounds [−1, 0].
pub fn ch_genuine(stats: &impl Statistics, conv: Convention) -> BetaReport {
    let v = plus_plus_terms(stats, conv)
        - stats.marginal(Side::A, conv.ch_a_setting(), Outcome::Plus)
        - stats.marginal(Side::B, 1, Outcome::Plus);
    BetaReport::new(v, BetaKind::ChGen, Some(conv))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside (0,1]")));
    }
    Ok(())
}

/// Non-genuine CH: (1/η²)[joint terms − P(A1=+1 ∧ B) − P(A ∧ B1=+1)], where
/// B, A denote polarizer-free detections. Bounded by 0 only under
/// no-enhancement.
pub fn ch_nongenuine(stats: &impl Statistics, eta: f64) -> Result<BetaReport> {
    check_eta(eta)?;
    let v = plus_plus_terms(stats, Convention::Paper)
        - stats.setting_free(Side::A, 1, Outcome::Plus, true)
        - stats.setting_free(Side::B, 1, Outcome::Plus, true);
    Ok(BetaReport::new(v / (eta * eta), BetaKind::ChNg, Some(Convention::Paper)))
}

/// The same expression written with conditional probabilities on the
/// subsample with a free detection on the other side:
/// (1/η²)[joint terms − η P(A1=+1 | B) − η P(B1=+1 | A)].
/// Agrees with [`ch_nongenuine`] when P(A) = P(B) = η.
pub fn ch_nongenuine_subsample(stats: &impl Statistics, eta: f64) -> Result<BetaReport> {
    check_eta(eta)?;
    let pb = stats.free(Side::B);
    let pa = stats.free(Side::A);
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::ZeroDenominator("free-detection subsample"));
    }
    let a1_given_b = stats.setting_free(Side::A, 1, Outcome::Plus, true) / pb;
    let b1_given_a = stats.setting_free(Side::B, 1, Outcome::Plus, true) / pa;
    let v = plus_plus_terms(stats, Convention::Paper) - eta * a1_given_b - eta * b1_given_a;
    Ok(BetaReport::new(v / (eta * eta), BetaKind::ChNg, Some(Convention::Paper)))
}

/// Probability form of the operational CH ratio: the count expression
/// divided by trials in every context.
pub fn ch_operational_probs(stats: &impl Statistics) -> Result<BetaReport> {
    let d = stats.both_free(true, true);
    if d <= 0.0 {
        return Err(Error::ZeroDenominator("N(inf,inf)"));
    }
    let v = plus_plus_terms(stats, Convention::Paper)
        - stats.setting_free(Side::A, 1, Outcome::Plus, true)
        - stats.setting_free(Side::B, 1, Outcome::Plus, true);
    Ok(BetaReport::new(v / d, BetaKind::ChOp, Some(Convention::Paper)))
}

/// (1/η²)[joint terms − η P(A1=+1) − η P(B1=+1)].
pub fn ch_normalized(stats: &impl Statistics, eta: f64) -> Result<BetaReport> {
    check_eta(eta)?;
    let v = plus_plus_terms(stats, Convention::Paper)
        - eta * stats.marginal(Side::A, 1, Outcome::Plus)
        - eta * stats.marginal(Side::B, 1, Outcome::Plus);
    Ok(BetaReport::new(v / (eta * eta), BetaKind::ChNorm, Some(Convention::Paper)))
}

/// Two-channel CH: each joint term over its coincidence total, each single
/// term over the detections of that setting.
pub fn ch_two_channel_probs(stats: &impl Statistics) -> Result<BetaReport> {
    let s = Convention::Paper.signs();
    let mut v = 0.0;
    for i in 1..=2 {
        for j in 1..=2 {
            let mut both = 0.0;
            for a in Sign::BOTH {
                for b in Sign::BOTH {
                    both += stats.joint(i, j, a.into(), b.into());
                }
            }
            if both <= 0.0 {
                return Err(Error::ZeroDenominator("two-channel coincidences"));
            }
            v += s[i - 1][j - 1] * stats.joint(i, j, Outcome::Plus, Outcome::Plus) / both;
        }
    }
    for side in [Side::A, Side::B] {
        let plus = stats.marginal(side, 1, Outcome::Plus);
        let det = plus + stats.marginal(side, 1, Outcome::Minus);
        if det <= 0.0 {
            return Err(Error::ZeroDenominator("two-channel singles"));
        }
        v -= plus / det;
    }
    Ok(BetaReport::new(v, BetaKind::Ch2ch, Some(Convention::Paper)))
}

/// −P11(+,+) + P12(+,−) + P12(+,0) + P21(−,+) + P21(0,+) + P22(+,+) ≥ 0.
pub fn eberhard_value(stats: &impl JointStatistics) -> f64 {
    use Outcome::*;
    -stats.joint(1, 1, Plus, Plus)
        + stats.joint(1, 2, Plus, Minus)
        + stats.joint(1, 2, Plus, Undetected)
        + stats.joint(2, 1, Minus, Plus)
        + stats.joint(2, 1, Undetected, Plus)
        + stats.joint(2, 2, Plus, Plus)
}

pub fn eberhard(stats: &impl JointStatistics) -> BetaReport {
    BetaReport::new(eberhard_value(stats), BetaKind::EberhardProb, None)
}

/// Expected Eberhard count for `n_pairs` emissions split evenly over the
/// four setting pairs, with independent detection losses η on both sides.
pub fn eberhard_qm(pred: &PredictionSet, eta: f64, n_pairs: u64) -> Result<BetaReport> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside [0,1]")));
    }
    let (o, e) = (Sign::Plus, Sign::Minus);
    let e2 = eta * eta;
    let loss = eta * (1.0 - eta);
    let v = -e2 * pred.joint(1, 1, o, o)
        + e2 * pred.joint(1, 2, o, e)
        + loss * pred.qa(1, o)
        + e2 * pred.joint(2, 1, e, o)
        + loss * pred.qb(1, o)
        + e2 * pred.joint(2, 2, o, o);
    Ok(BetaReport::new(n_pairs as f64 / 4.0 * v, BetaKind::EberhardEta, None))
}
