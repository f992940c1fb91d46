//! Diagnostics for experimental records: detection-rate estimates, Γ
//! consistency windows, Christensen ratios and the unfair-sampling table.

mod synth;

pub use synth::{expected_counts, expected_pair_counts, sampled_counts, synth_experiment_record};

use crate::error::{Error, Result};
use crate::inequalities::{Arm, Click, CountTable};
use crate::outcome::{Side, Sign};
use crate::quantum::PredictionSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// Singles and coincidences of a single-channel experiment. Counts are per
/// setting context, i.e. over a quarter of the emitted pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentRecord {
    pub singles: BTreeMap<(Side, usize, Click), u64>,
    pub coincidences: BTreeMap<(usize, usize, Click, Click), u64>,
    /// Reported Eberhard count J.
    pub j_value: Option<i64>,
    /// Total trials N over all four contexts.
    pub total_trials: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    kind: String,
    i: String,
    j: String,
    a: String,
    b: String,
    count: i64,
}

fn parse_index(s: &str, line: usize) -> Result<Option<usize>> {
    match s.trim() {
        "" => Ok(None),
        "1" => Ok(Some(1)),
        "2" => Ok(Some(2)),
        other => Err(Error::parse(line, format!("bad setting index {other:?}"))),
    }
}

fn parse_click(s: &str, line: usize) -> Result<Option<Click>> {
    match s.trim() {
        "" => Ok(None),
        other => {
            let c: Click = other.parse().map_err(|m| Error::parse(line, m))?;
            if c == Click::Inf {
                return Err(Error::parse(line, "inf is not an outcome of a setting"));
            }
            Ok(Some(c))
        }
    }
}

impl ExperimentRecord {
    pub fn single(&self, side: Side, k: usize, c: Click) -> u64 {
        self.singles.get(&(side, k, c)).copied().unwrap_or(0)
    }

    pub fn coinc(&self, i: usize, j: usize, a: Click, b: Click) -> u64 {
        self.coincidences.get(&(i, j, a, b)).copied().unwrap_or(0)
    }

    /// Coincidences may not exceed the singles they are part of.
    pub fn validate(&self) -> Result<()> {
        for (&(i, j, a, b), &n) in &self.coincidences {
            for (side, k, c) in [(Side::A, i, a), (Side::B, j, b)] {
                if let Some(&s) = self.singles.get(&(side, k, c)) {
                    if n > s {
                        return Err(Error::InvalidArgument(format!(
                            "coincidences ({i},{j},{a},{b}) = {n} exceed singles {s}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rows `kind,i,j,a,b,count` with kind in {single, coinc, j, trials}.
    pub fn read_csv<R: Read>(r: R) -> Result<ExperimentRecord> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut rec = ExperimentRecord::default();
        for (k, row) in rdr.deserialize::<RecordRow>().enumerate() {
            let line = k + 2;
            let row = row?;
            let (i, j) = (parse_index(&row.i, line)?, parse_index(&row.j, line)?);
            let (a, b) = (parse_click(&row.a, line)?, parse_click(&row.b, line)?);
            let nonneg = || u64::try_from(row.count).map_err(|_| Error::parse(line, "negative count"));
            match (row.kind.as_str(), i, j, a, b) {
                ("single", Some(i), None, Some(a), None) => {
                    *rec.singles.entry((Side::A, i, a)).or_insert(0) += nonneg()?;
                }
                ("single", None, Some(j), None, Some(b)) => {
                    *rec.singles.entry((Side::B, j, b)).or_insert(0) += nonneg()?;
                }
                ("coinc", Some(i), Some(j), Some(a), Some(b)) => {
                    *rec.coincidences.entry((i, j, a, b)).or_insert(0) += nonneg()?;
                }
                ("j", None, None, None, None) => rec.j_value = Some(row.count),
                ("trials", None, None, None, None) => rec.total_trials = Some(nonneg()?),
                _ => return Err(Error::parse(line, format!("malformed {:?} row", row.kind))),
            }
        }
        rec.validate()?;
        Ok(rec)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let row = |kind: &str, i: String, j: String, a: String, b: String, count: i64| RecordRow {
            kind: kind.into(),
            i,
            j,
            a,
            b,
            count,
        };
        let e = String::new;
        for (&(side, k, c), &n) in &self.singles {
            let r = match side {
                Side::A => row("single", k.to_string(), e(), c.to_string(), e(), n as i64),
                Side::B => row("single", e(), k.to_string(), e(), c.to_string(), n as i64),
            };
            wtr.serialize(r)?;
        }
        for (&(i, j, a, b), &n) in &self.coincidences {
            wtr.serialize(row("coinc", i.to_string(), j.to_string(), a.to_string(), b.to_string(), n as i64))?;
        }
        if let Some(jv) = self.j_value {
            wtr.serialize(row("j", e(), e(), e(), e(), jv))?;
        }
        if let Some(n) = self.total_trials {
            wtr.serialize(row("trials", e(), e(), e(), e(), n as i64))?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Every count multiplied by `k` (J and N included).
    pub fn scaled(&self, k: u64) -> ExperimentRecord {
        ExperimentRecord {
            singles: self.singles.iter().map(|(&key, &n)| (key, n * k)).collect(),
            coincidences: self.coincidences.iter().map(|(&key, &n)| (key, n * k)).collect(),
            j_value: self.j_value.map(|j| j * k as i64),
            total_trials: self.total_trials.map(|n| n * k),
        }
    }
}

fn exact_ratio(num: u64, den: u64, what: &'static str) -> Result<f64> {
    if den == 0 {
        return Err(Error::ZeroDenominator(what));
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den))
        .to_f64()
        .unwrap_or(f64::NAN))
}

/// η_A = [C_oo(α2,β1)/S^B_o(β1)] / Q(A2=o|B1=o) and
/// η_B = [C_oo(α1,β1)/S^A_o(α1)] / Q(B1=o|A1=o).
pub fn estimate_etas(rec: &ExperimentRecord, pred: &PredictionSet) -> Result<(f64, f64)> {
    let o = Sign::Plus;
    let qa = pred.conditional_a_given_b(2, o, 1, o)?;
    let qb = pred.conditional_b_given_a(1, o, 1, o)?;
    if qa <= 0.0 || qb <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let ra = exact_ratio(rec.coinc(2, 1, Click::O, Click::O), rec.single(Side::B, 1, Click::O), "S^B_o(beta1)")?;
    let rb = exact_ratio(rec.coinc(1, 1, Click::O, Click::O), rec.single(Side::A, 1, Click::O), "S^A_o(alpha1)")?;
    Ok((ra / qa, rb / qb))
}

/// A Γ value evaluated at the two ends of the η window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaWindow {
    pub at_low: f64,
    pub at_high: f64,
}

impl GammaWindow {
    pub fn lo(&self) -> f64 {
        self.at_low.min(self.at_high)
    }

    pub fn hi(&self) -> f64 {
        self.at_low.max(self.at_high)
    }

    pub fn overlaps(&self, other: &GammaWindow) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GammaId {
    A,
    B,
    Pair(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub gamma_a: GammaWindow,
    pub gamma_b: GammaWindow,
    /// Γ_{i,j} indexed `[i-1][j-1]`.
    pub gamma_ij: [[GammaWindow; 2]; 2],
    /// |J| / N when the record carries N.
    pub gamma_report: Option<f64>,
    /// Whether Γ_report is below the 0.0013 bound.
    pub report_bound_ok: Option<bool>,
    pub eta_window: (f64, f64),
}

impl GammaReport {
    pub fn windows(&self) -> Vec<(GammaId, GammaWindow)> {
        let mut v = vec![(GammaId::A, self.gamma_a), (GammaId::B, self.gamma_b)];
        for i in 1..=2 {
            for j in 1..=2 {
                v.push((GammaId::Pair(i, j), self.gamma_ij[i - 1][j - 1]));
            }
        }
        v
    }
}

pub const GAMMA_REPORT_BOUND: f64 = 0.0013;

/// Γ_A = η Q^A_1(o) J / (4 S^A_o(α1)), Γ_B likewise and
/// Γ_{i,j} = η² Q_{i,j}(o,o) J / (4 C_oo(α_i,β_j)), each at both ends of the
/// window. `background` is subtracted from the lower end to allow for
/// accidental counts.
pub fn gamma_bounds(
    rec: &ExperimentRecord,
    pred: &PredictionSet,
    window: (f64, f64),
    background: f64,
) -> Result<GammaReport> {
    let (lo, hi) = (window.0 - background, window.1);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidArgument(format!("bad eta window ({lo}, {hi})")));
    }
    let j = rec
        .j_value
        .ok_or_else(|| Error::InvalidArgument("record has no J value".into()))? as f64;
    let o = Sign::Plus;
    let single = |side, q: f64, n: u64| -> Result<GammaWindow> {
        if n == 0 {
            return Err(Error::ZeroDenominator(side));
        }
        let f = |eta: f64| eta * q * j / (4.0 * n as f64);
        Ok(GammaWindow { at_low: f(lo), at_high: f(hi) })
    };
    let gamma_a = single("S^A_o(alpha1)", pred.qa(1, o), rec.single(Side::A, 1, Click::O))?;
    let gamma_b = single("S^B_o(beta1)", pred.qb(1, o), rec.single(Side::B, 1, Click::O))?;
    let mut gamma_ij = [[gamma_a; 2]; 2];
    for i in 1..=2 {
        for jj in 1..=2 {
            let c = rec.coinc(i, jj, Click::O, Click::O);
            if c == 0 {
                return Err(Error::ZeroDenominator("C_oo"));
            }
            let q = pred.joint(i, jj, o, o);
            let f = |eta: f64| eta * eta * q * j / (4.0 * c as f64);
            gamma_ij[i - 1][jj - 1] = GammaWindow { at_low: f(lo), at_high: f(hi) };
        }
    }
    let gamma_report = rec.total_trials.filter(|&n| n > 0).map(|n| j.abs() / n as f64);
    Ok(GammaReport {
        gamma_a,
        gamma_b,
        gamma_ij,
        gamma_report,
        report_bound_ok: gamma_report.map(|g| g < GAMMA_REPORT_BOUND),
        eta_window: (lo, hi),
    })
}

/// Pairs of Γ windows that do not intersect.
pub fn consistency_flags(report: &GammaReport) -> Vec<(GammaId, GammaId)> {
    let w = report.windows();
    let mut out = Vec::new();
    for x in 0..w.len() {
        for y in x + 1..w.len() {
            if !w[x].1.overlaps(&w[y].1) {
                out.push((w[x].0, w[y].0));
            }
        }
    }
    out
}

/// p1 = s2b / c_ab, p2 = s2b / c_apb.
pub fn christensen_ratios(s2b: u64, c_ab: u64, c_apb: u64) -> Result<(f64, f64)> {
    Ok((exact_ratio(s2b, c_ab, "c_AB")?, exact_ratio(s2b, c_apb, "c_A'B")?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnfairEntry {
    /// Side whose detection rate is estimated.
    pub side: Side,
    /// Setting of that side.
    pub setting: usize,
    /// Outcome the remote side is conditioned on.
    pub conditioned: Sign,
    /// Setting of the remote side.
    pub remote: usize,
    /// None when the conditioning subsample is empty.
    pub rate: Option<f64>,
}

/// P(A_i detected | B_j = b) = Σ_{a∈{o,e}} n_ab / Σ_{a∈{o,e,u}} n_ab and the
/// side-swapped analogue, for every i, j, b.
pub fn unfair_sampling_table(t: &CountTable) -> Vec<UnfairEntry> {
    let det = |c: Click| matches!(c, Click::O | Click::E);
    let any = |c: Click| matches!(c, Click::O | Click::E | Click::U);
    let mut out = Vec::with_capacity(16);
    for side in [Side::A, Side::B] {
        for k in 1..=2 {
            for b in Sign::BOTH {
                let cb = Click::from(crate::outcome::Outcome::from(b));
                for r in 1..=2 {
                    let (arm_a, arm_b) = match side {
                        Side::A => (Arm::Setting(k), Arm::Setting(r)),
                        Side::B => (Arm::Setting(r), Arm::Setting(k)),
                    };
                    let pick = |x: Click, y: Click| if side == Side::A { (x, y) } else { (y, x) };
                    let num = t.sum_where(arm_a, arm_b, |x, y| {
                        let (mine, remote) = pick(x, y);
                        det(mine) && remote == cb
                    });
                    let den = t.sum_where(arm_a, arm_b, |x, y| {
                        let (mine, remote) = pick(x, y);
                        any(mine) && remote == cb
                    });
                    out.push(UnfairEntry {
                        side,
                        setting: k,
                        conditioned: b,
                        remote: r,
                        rate: exact_ratio(num, den, "").ok(),
                    });
                }
            }
        }
    }
    out
}
