//! Raw count tables and the estimators evaluated directly on counts.

use super::{BetaKind, BetaReport, Convention, JointStatistics, Statistics};
use crate::error::{Error, Result};
use crate::outcome::{slot, Outcome, Side};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

/// What one side measured in a run: a polarizer setting or no polarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Setting(usize),
    Free,
}

impl Arm {
    fn parse(s: &str) -> Option<Arm> {
        match s.trim() {
            "1" => Some(Arm::Setting(1)),
            "2" => Some(Arm::Setting(2)),
            "inf" => Some(Arm::Free),
            _ => None,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::Setting(k) => write!(f, "{k}"),
            Arm::Free => f.write_str("inf"),
        }
    }
}

/// Per-side outcome category of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Click {
    /// +1 channel.
    O,
    /// −1 channel.
    E,
    /// No detection.
    U,
    /// Both channels fired (local coincidence).
    G,
    /// Detection with the polarizer removed.
    Inf,
}

impl Click {
    pub const SETTING: [Click; 4] = [Click::O, Click::E, Click::U, Click::G];

    fn allowed(self, arm: Arm) -> bool {
        match arm {
            Arm::Setting(_) => self != Click::Inf,
            Arm::Free => matches!(self, Click::Inf | Click::U),
        }
    }
}

impl From<Outcome> for Click {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Plus => Click::O,
            Outcome::Minus => Click::E,
            Outcome::Undetected => Click::U,
        }
    }
}

impl FromStr for Click {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "o" => Ok(Click::O),
            "e" => Ok(Click::E),
            "u" => Ok(Click::U),
            "g" => Ok(Click::G),
            "inf" => Ok(Click::Inf),
            other => Err(format!("unknown outcome code {other:?}")),
        }
    }
}

impl fmt::Display for Click {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Click::O => "o",
            Click::E => "e",
            Click::U => "u",
            Click::G => "g",
            Click::Inf => "inf",
        })
    }
}

fn context_label(a: Arm, b: Arm) -> &'static str {
    match (a, b) {
        (Arm::Setting(_), Arm::Setting(_)) => "ab",
        (Arm::Setting(_), Arm::Free) => "a_only",
        (Arm::Free, Arm::Setting(_)) => "b_only",
        (Arm::Free, Arm::Free) => "none",
    }
}

/// Counts per context (A arm, B arm) and outcome pair. The trials of a
/// context are the sum of its counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    contexts: BTreeMap<(Arm, Arm), BTreeMap<(Click, Click), u64>>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CountRow {
    context: String,
    i: String,
    j: String,
    #[serde(rename = "outcomeA")]
    outcome_a: String,
    #[serde(rename = "outcomeB")]
    outcome_b: String,
    count: u64,
}

impl CountTable {
    pub fn new() -> Self {
        CountTable::default()
    }

    /// Adds `n` to a cell.
    pub fn add(&mut self, a: Arm, b: Arm, ca: Click, cb: Click, n: u64) -> Result<()> {
        for (arm, c) in [(a, ca), (b, cb)] {
            if let Arm::Setting(k) = arm {
                if k != 1 && k != 2 {
                    return Err(Error::InvalidArgument(format!("setting index {k}")));
                }
            }
            if !c.allowed(arm) {
                return Err(Error::InvalidArgument(format!("outcome {c} not possible with arm {arm}")));
            }
        }
        let cell = self.contexts.entry((a, b)).or_default().entry((ca, cb)).or_insert(0);
        *cell = cell
            .checked_add(n)
            .ok_or_else(|| Error::InvalidArgument("count overflow".into()))?;
        let total = self.contexts[&(a, b)].values().try_fold(0u64, |acc, &x| acc.checked_add(x));
        if total.is_none() {
            return Err(Error::InvalidArgument("context trials overflow".into()));
        }
        Ok(())
    }

    pub fn count(&self, a: Arm, b: Arm, ca: Click, cb: Click) -> u64 {
        self.contexts
            .get(&(a, b))
            .and_then(|m| m.get(&(ca, cb)))
            .copied()
            .unwrap_or(0)
    }

    pub fn trials(&self, a: Arm, b: Arm) -> u64 {
        self.contexts.get(&(a, b)).map_or(0, |m| m.values().sum())
    }

    pub fn contexts(&self) -> impl Iterator<Item = (Arm, Arm)> + '_ {
        self.contexts.keys().copied()
    }

    /// Sum of the cells of a context selected by `pred`.
    pub fn sum_where(&self, a: Arm, b: Arm, pred: impl Fn(Click, Click) -> bool) -> u64 {
        self.contexts
            .get(&(a, b))
            .map_or(0, |m| m.iter().filter(|((x, y), _)| pred(*x, *y)).map(|(_, n)| n).sum())
    }

    /// Exact frequency of the selected cells within their context.
    pub fn freq_where(&self, a: Arm, b: Arm, pred: impl Fn(Click, Click) -> bool) -> Option<BigRational> {
        ratio(self.sum_where(a, b, pred), self.trials(a, b))
    }

    pub fn freq(&self, a: Arm, b: Arm, ca: Click, cb: Click) -> Option<BigRational> {
        ratio(self.count(a, b, ca, cb), self.trials(a, b))
    }

    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Result<CountTable> {
        let mut out = CountTable::new();
        for (&(a, b), m) in &self.contexts {
            for (&(x, y), &n) in m {
                let v = n.checked_mul(k).ok_or_else(|| Error::InvalidArgument("count overflow".into()))?;
                out.add(a, b, x, y, v)?;
            }
        }
        Ok(out)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<CountTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut t = CountTable::new();
        for (k, row) in rdr.deserialize::<CountRow>().enumerate() {
            let line = k + 2;
            let row = row?;
            let a = Arm::parse(&row.i).ok_or_else(|| Error::parse(line, format!("bad i {:?}", row.i)))?;
            let b = Arm::parse(&row.j).ok_or_else(|| Error::parse(line, format!("bad j {:?}", row.j)))?;
            if row.context != context_label(a, b) {
                return Err(Error::parse(line, format!("context {:?} does not match arms {a},{b}", row.context)));
            }
            let ca: Click = row.outcome_a.parse().map_err(|m| Error::parse(line, m))?;
            let cb: Click = row.outcome_b.parse().map_err(|m| Error::parse(line, m))?;
            t.add(a, b, ca, cb, row.count).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(t)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (&(a, b), m) in &self.contexts {
            for (&(x, y), &n) in m {
                wtr.serialize(CountRow {
                    context: context_label(a, b).into(),
                    i: a.to_string(),
                    j: b.to_string(),
                    outcome_a: x.to_string(),
                    outcome_b: y.to_string(),
                    count: n,
                })?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> Option<BigRational> {
    if den == 0 {
        None
    } else {
        Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn freq_f64(t: &CountTable, a: Arm, b: Arm, pred: impl Fn(Click, Click) -> bool) -> f64 {
    t.freq_where(a, b, pred).map_or(f64::NAN, |r| to_f64(&r))
}

fn free_click(detected: bool) -> Click {
    if detected {
        Click::Inf
    } else {
        Click::U
    }
}

impl JointStatistics for CountTable {
    fn joint(&self, i: usize, j: usize, a: Outcome, b: Outcome) -> f64 {
        let (ca, cb) = (Click::from(a), Click::from(b));
        freq_f64(self, Arm::Setting(slot(i) + 1), Arm::Setting(slot(j) + 1), |x, y| x == ca && y == cb)
    }
}

impl Statistics for CountTable {
    fn setting_free(&self, side: Side, k: usize, o: Outcome, other_detected: bool) -> f64 {
        let c = Click::from(o);
        let f = free_click(other_detected);
        match side {
            Side::A => freq_f64(self, Arm::Setting(slot(k) + 1), Arm::Free, |x, y| x == c && y == f),
            Side::B => freq_f64(self, Arm::Free, Arm::Setting(slot(k) + 1), |x, y| x == f && y == c),
        }
    }

    fn both_free(&self, a_detected: bool, b_detected: bool) -> f64 {
        let (fa, fb) = (free_click(a_detected), free_click(b_detected));
        freq_f64(self, Arm::Free, Arm::Free, |x, y| x == fa && y == fb)
    }

    /// Pooled over the two coincidence contexts of the setting.
    fn marginal(&self, side: Side, k: usize, o: Outcome) -> f64 {
        let c = Click::from(o);
        let (mut n, mut t) = (0u64, 0u64);
        for l in 1..=2 {
            let (a, b) = match side {
                Side::A => (Arm::Setting(k), Arm::Setting(l)),
                Side::B => (Arm::Setting(l), Arm::Setting(k)),
            };
            n += self.sum_where(a, b, |x, y| if side == Side::A { x == c } else { y == c });
            t += self.trials(a, b);
        }
        ratio(n, t).map_or(f64::NAN, |r| to_f64(&r))
    }
}

fn required(r: Option<BigRational>, what: &'static str) -> Result<BigRational> {
    r.ok_or(Error::ZeroDenominator(what))
}

/// [N(a1,b1) + N(a1,b2) + N(a2,b1) − N(a2,b2) − N(a1,∞) − N(∞,b1)] / N(∞,∞),
/// with every count taken relative to the trials of its own context (the raw
/// formula when all contexts have equal trials).
pub fn ch_operational(t: &CountTable) -> Result<BetaReport> {
    let s = Convention::Paper.signs();
    let den = required(t.freq(Arm::Free, Arm::Free, Click::Inf, Click::Inf), "N(inf,inf)")?;
    if den.is_zero() {
        return Err(Error::ZeroDenominator("N(inf,inf)"));
    }
    let mut num = BigRational::zero();
    for i in 1..=2 {
        for j in 1..=2 {
            let f = required(t.freq(Arm::Setting(i), Arm::Setting(j), Click::O, Click::O), "coincidence context")?;
            if s[i - 1][j - 1] > 0.0 {
                num += f;
            } else {
                num -= f;
            }
        }
    }
    num -= required(t.freq(Arm::Setting(1), Arm::Free, Click::O, Click::Inf), "N(a1,inf) context")?;
    num -= required(t.freq(Arm::Free, Arm::Setting(1), Click::Inf, Click::O), "N(inf,b1) context")?;
    Ok(BetaReport::new(to_f64(&(num / den)), BetaKind::ChOp, Some(Convention::Paper)))
}

/// Two-channel CH on counts: N(A_i=B_j=+1)/N(A_i,B_j) terms minus
/// N(A1=+1)/[N(A1=+1) + N(A1=−1)] and the B analogue (singles pooled over the
/// coincidence contexts of that setting).
pub fn ch_two_channel(t: &CountTable) -> Result<BetaReport> {
    let s = Convention::Paper.signs();
    let det = |c: Click| matches!(c, Click::O | Click::E);
    let mut v = BigRational::zero();
    for i in 1..=2 {
        for j in 1..=2 {
            let (a, b) = (Arm::Setting(i), Arm::Setting(j));
            let pp = t.count(a, b, Click::O, Click::O);
            let both = t.sum_where(a, b, |x, y| det(x) && det(y));
            let f = required(ratio(pp, both), "two-channel coincidences")?;
            if s[i - 1][j - 1] > 0.0 {
                v += f;
            } else {
                v -= f;
            }
        }
    }
    for side in [Side::A, Side::B] {
        let (mut plus, mut all) = (0u64, 0u64);
        for l in 1..=2 {
            let (a, b) = match side {
                Side::A => (Arm::Setting(1), Arm::Setting(l)),
                Side::B => (Arm::Setting(l), Arm::Setting(1)),
            };
            let pick = |x: Click, y: Click| if side == Side::A { x } else { y };
            plus += t.sum_where(a, b, |x, y| pick(x, y) == Click::O);
            all += t.sum_where(a, b, |x, y| det(pick(x, y)));
        }
        v -= required(ratio(plus, all), "two-channel singles")?;
    }
    Ok(BetaReport::new(to_f64(&v), BetaKind::Ch2ch, Some(Convention::Paper)))
}

/// J = −n_oo(1,1) + n_oe(1,2) + n_ou(1,2) + n_eo(2,1) + n_uo(2,1) + n_oo(2,2).
pub fn eberhard_counts(t: &CountTable) -> i128 {
    let n = |i, j, a, b| t.count(Arm::Setting(i), Arm::Setting(j), a, b) as i128;
    use Click::*;
    -n(1, 1, O, O) + n(1, 2, O, E) + n(1, 2, O, U) + n(2, 1, E, O) + n(2, 1, U, O) + n(2, 2, O, O)
}

pub fn eberhard_counts_report(t: &CountTable) -> BetaReport {
    BetaReport::new(eberhard_counts(t) as f64, BetaKind::EberhardCounts, None)
}
