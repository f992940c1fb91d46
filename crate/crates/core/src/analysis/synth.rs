//! Count synthesis from model or quantum statistics: exact expectations or
//! seeded multinomial samples.

use super::ExperimentRecord;
use crate::error::{Error, Result};
use crate::inequalities::{eberhard_value, Arm, Click, CountTable, Dressed, JointStatistics, Statistics};
use crate::outcome::{Outcome, Side, Sign};
use crate::quantum::PredictionSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

type Cells = Vec<(Arm, Arm, Click, Click, f64)>;

fn free_click(d: bool) -> Click {
    if d {
        Click::Inf
    } else {
        Click::U
    }
}

fn pair_cells(stats: &impl JointStatistics) -> Vec<Cells> {
    let mut out = Vec::new();
    for i in 1..=2 {
        for j in 1..=2 {
            let mut cells = Vec::new();
            for a in Outcome::ALL {
                for b in Outcome::ALL {
                    cells.push((Arm::Setting(i), Arm::Setting(j), a.into(), b.into(), stats.joint(i, j, a, b)));
                }
            }
            out.push(cells);
        }
    }
    out
}

fn free_cells(stats: &impl Statistics) -> Vec<Cells> {
    let mut out = Vec::new();
    for side in [Side::A, Side::B] {
        for k in 1..=2 {
            let mut cells = Vec::new();
            for o in Outcome::ALL {
                for d in [true, false] {
                    let p = stats.setting_free(side, k, o, d);
                    cells.push(match side {
                        Side::A => (Arm::Setting(k), Arm::Free, o.into(), free_click(d), p),
                        Side::B => (Arm::Free, Arm::Setting(k), free_click(d), o.into(), p),
                    });
                }
            }
            out.push(cells);
        }
    }
    let mut cells = Vec::new();
    for da in [true, false] {
        for db in [true, false] {
            cells.push((Arm::Free, Arm::Free, free_click(da), free_click(db), stats.both_free(da, db)));
        }
    }
    out.push(cells);
    out
}

fn round_cells(contexts: Vec<Cells>, trials: u64) -> Result<CountTable> {
    let mut t = CountTable::new();
    for cells in contexts {
        for (a, b, x, y, p) in cells {
            if !p.is_finite() || p < -1e-9 {
                return Err(Error::InvalidArgument(format!("cell probability {p}")));
            }
            t.add(a, b, x, y, (trials as f64 * p.max(0.0)).round() as u64)?;
        }
    }
    Ok(t)
}

/// Expected counts, rounded to integers, for `trials` runs of each of the
/// four coincidence contexts.
pub fn expected_pair_counts(stats: &impl JointStatistics, trials: u64) -> Result<CountTable> {
    round_cells(pair_cells(stats), trials)
}

/// Expected counts for all nine contexts (polarizers in or out).
pub fn expected_counts(stats: &impl Statistics, trials: u64) -> Result<CountTable> {
    let mut contexts = pair_cells(stats);
    contexts.extend(free_cells(stats));
    round_cells(contexts, trials)
}

/// Multinomial sample with `trials` runs per context.
pub fn sampled_counts(stats: &impl Statistics, trials: u64, seed: u64) -> Result<CountTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contexts = pair_cells(stats);
    contexts.extend(free_cells(stats));
    let mut t = CountTable::new();
    for cells in contexts {
        let mut left = trials;
        let mut mass = 1.0f64;
        let last = cells.len() - 1;
        for (k, (a, b, x, y, p)) in cells.into_iter().enumerate() {
            let p = p.max(0.0);
            let n = if k == last || mass <= 0.0 {
                left
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?
                    .sample(&mut rng)
            };
            t.add(a, b, x, y, n)?;
            left -= n;
            mass -= p;
        }
    }
    Ok(t)
}

/// Single-channel record for `n_pairs` emissions (a quarter per context)
/// with independent detection rates on the two sides; J is the expected
/// Eberhard count.
pub fn synth_experiment_record(pred: &PredictionSet, eta_a: f64, eta_b: f64, n_pairs: u64) -> Result<ExperimentRecord> {
    for e in [eta_a, eta_b] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidArgument(format!("eta {e} outside [0,1]")));
        }
    }
    let per = n_pairs as f64 / 4.0;
    let r = |x: f64| x.round() as u64;
    let o = Sign::Plus;
    let mut rec = ExperimentRecord::default();
    for k in 1..=2 {
        rec.singles.insert((Side::A, k, Click::O), r(per * eta_a * pred.qa(k, o)));
        rec.singles.insert((Side::B, k, Click::O), r(per * eta_b * pred.qb(k, o)));
        for l in 1..=2 {
            rec.coincidences
                .insert((k, l, Click::O, Click::O), r(per * eta_a * eta_b * pred.joint(k, l, o, o)));
        }
    }
    let d = Dressed { pred, eta_a, eta_b };
    rec.j_value = Some((per * eberhard_value(&d)).round() as i64);
    rec.total_trials = Some(n_pairs);
    Ok(rec)
}
