//! CSV formats for ensembles, prediction dumps and sweep traces.

use crate::error::{Error, Result};
use crate::lhv::{Ensemble, LhvState};
use crate::outcome::{Outcome, Sign};
use crate::quantum::PredictionSet;
use std::io::{Read, Write};

const ENSEMBLE_HEADER: [&str; 7] = ["instrA1", "instrA2", "instrB1", "instrB2", "pA", "pB", "weight"];

/// How imported weights are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Weights must already sum to 1 within 1e-12.
    Strict,
    /// Weights are rescaled to unit total (for rounded printed tables).
    Normalize,
}

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::parse(line, format!("bad {what} {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what}")));
    }
    Ok(v)
}

pub fn read_ensemble<R: Read>(r: R, mode: WeightMode) -> Result<Ensemble> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(ENSEMBLE_HEADER.iter().copied()) {
        return Err(Error::parse(1, format!("expected header {}", ENSEMBLE_HEADER.join(","))));
    }
    let mut entries = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != 7 {
            return Err(Error::parse(line, "expected 7 fields"));
        }
        let mut instr = [Outcome::Undetected; 4];
        for (o, cell) in instr.iter_mut().zip(rec.iter()) {
            *o = cell.parse().map_err(|m: String| Error::parse(line, m))?;
        }
        let pa = parse_f64(&rec[4], line, "pA")?;
        let pb = parse_f64(&rec[5], line, "pB")?;
        let w = parse_f64(&rec[6], line, "weight")?;
        let s = LhvState::new(instr, pa, pb).map_err(|e| Error::parse(line, e.to_string()))?;
        entries.push((s, w));
    }
    match mode {
        WeightMode::Strict => Ensemble::new(entries),
        WeightMode::Normalize => Ensemble::normalized(entries),
    }
}

pub fn write_ensemble<W: Write>(ens: &Ensemble, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ENSEMBLE_HEADER)?;
    for (s, weight) in ens.entries() {
        let mut rec: Vec<String> = s.instr.iter().map(|o| o.to_string()).collect();
        rec.push(fmt_f64(s.p_a));
        rec.push(fmt_f64(s.p_b));
        rec.push(fmt_f64(*weight));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn sign_label(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+1",
        Sign::Minus => "-1",
    }
}

/// Columns i,j,a,b,probability; marginal rows leave the other side blank.
pub fn write_predictions<W: Write>(p: &PredictionSet, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i", "j", "a", "b", "probability"])?;
    for i in 1..=2 {
        for j in 1..=2 {
            for a in Sign::BOTH {
                for b in Sign::BOTH {
                    let v = fmt_f64(p.joint(i, j, a, b));
                    wtr.write_record([&i.to_string(), &j.to_string(), sign_label(a), sign_label(b), &v])?;
                }
            }
        }
    }
    for k in 1..=2 {
        let ks = k.to_string();
        for s in Sign::BOTH {
            wtr.write_record([ks.as_str(), "", sign_label(s), "", &fmt_f64(p.qa(k, s))])?;
        }
    }
    for k in 1..=2 {
        let ks = k.to_string();
        for s in Sign::BOTH {
            wtr.write_record(["", ks.as_str(), "", sign_label(s), &fmt_f64(p.qb(k, s))])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
