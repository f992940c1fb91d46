//! Figure and table data with the default grids.

use anyhow::Context;
use clap::{Args, ValueEnum};
use lhvkit::inequalities::{
    ch_genuine, ch_nongenuine, chsh, eberhard_qm, prediction_correlations, Convention, Dressed,
};
use lhvkit::io::fmt_f64;
use lhvkit::lhv::{m_double_prime_signed, m_prime_signed, sign_pair_rows, StateSpace};
use lhvkit::scenario::{Permutation, Scenario, StateSpec};
use lhvkit::solver::{find_eta_crit, sweep, ConditionKind, EtaCritResult, EtaSearch, SweepConfig, SweepPoint};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Record wall time in the provenance file (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    #[value(name = "tableI", alias = "table1")]
    TableI,
    #[value(name = "tableII", alias = "table2")]
    TableII,
}

impl Figure {
    fn id(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::TableI => "tableI",
            Figure::TableII => "tableII",
        }
    }
}

const TOL: f64 = 5e-5;
const STEP: f64 = 0.01;

/// `k·num/den` without accumulated rounding.
fn grid(k: usize, num: f64, den: f64) -> f64 {
    k as f64 * num / den
}

fn csv_line(w: &mut dyn Write, cells: &[String]) -> anyhow::Result<()> {
    writeln!(w, "{}", cells.join(","))?;
    Ok(())
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<String> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(name.to_string())
}

pub fn write_sweep(points: &[SweepPoint], w: &mut dyn Write) -> anyhow::Result<()> {
    csv_line(w, &["theta", "eta", "mu", "feasible", "etaCrit"].map(String::from))?;
    for p in points {
        for t in &p.result.trace {
            csv_line(
                w,
                &[
                    fmt_f64(p.theta),
                    fmt_f64(t.eta),
                    fmt_f64(t.mu),
                    (t.mu < TOL).to_string(),
                    fmt_f64(p.result.eta_crit),
                ],
            )?;
        }
    }
    Ok(())
}

pub fn run(a: &ReproduceArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let start = Instant::now();
    let (files, params) = match a.figure {
        Figure::Fig2 => fig2(&a.out)?,
        Figure::Fig3 => fig3(&a.out)?,
        Figure::Fig4 => correlation_curves(&a.out, "fig4", Convention::Paper)?,
        Figure::Fig5 => correlation_curves(&a.out, "fig5", Convention::Aspect)?,
        Figure::Fig6 => fig6(&a.out)?,
        Figure::TableI => table(&a.out, "tableI", StateSpec::Psi1)?,
        Figure::TableII => table(&a.out, "tableII", StateSpec::Psi2)?,
    };
    // serde_json's default map is ordered, so keys come out sorted.
    let mut prov = json!({
        "figure": a.figure.id(),
        "files": files,
        "parameters": params,
        "tool": "lhvkit",
        "version": env!("CARGO_PKG_VERSION"),
    });
    if a.timing {
        prov["wallTimeSeconds"] = json!(start.elapsed().as_secs_f64());
    }
    let name = format!("{}_provenance.json", a.figure.id());
    write_file(&a.out, &name, |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&prov)?)?;
        Ok(())
    })?;
    Ok(())
}

/// Genuine and non-genuine CH on the signed M′ and M″ families.
fn fig2(dir: &Path) -> anyhow::Result<(Vec<String>, Value)> {
    let etas: Vec<f64> = (1..=20).map(|k| grid(k, 5.0, 100.0)).collect();
    let f = write_file(dir, "fig2.csv", |w| {
        csv_line(w, &["eta", "genMPrime", "ngMPrime", "genMDoublePrime", "ngMDoublePrime"].map(String::from))?;
        for &eta in &etas {
            let m1 = m_prime_signed(eta)?;
            let m2 = m_double_prime_signed(eta)?;
            csv_line(
                w,
                &[
                    fmt_f64(eta),
                    fmt_f64(ch_genuine(&m1, Convention::Paper).value),
                    fmt_f64(ch_nongenuine(&m1, eta)?.value),
                    fmt_f64(ch_genuine(&m2, Convention::Paper).value),
                    fmt_f64(ch_nongenuine(&m2, eta)?.value),
                ],
            )?;
        }
        Ok(())
    })?;
    Ok((vec![f], json!({ "etaGrid": "0.05:0.05:1.00", "convention": "paper" })))
}

/// Critical rate vs θ for both states and all three condition sets.
fn fig3(dir: &Path) -> anyhow::Result<(Vec<String>, Value)> {
    let thetas: Vec<f64> = (1..=31).map(|k| grid(k, 5.0, 100.0)).collect();
    let f = write_file(dir, "fig3.csv", |w| {
        csv_line(w, &["state", "kind", "theta", "etaCrit", "fallback"].map(String::from))?;
        for (name, state) in [("psi1", StateSpec::Psi1), ("psi2", StateSpec::Psi2)] {
            for kind in [ConditionKind::Both, ConditionKind::Gen, ConditionKind::Ng] {
                let cfg = SweepConfig {
                    state: state.clone(),
                    theta_grid: thetas.clone(),
                    kind,
                    space: StateSpace::Reduced,
                    tol: TOL,
                    step: STEP,
                };
                for p in sweep(&cfg, None)? {
                    csv_line(
                        w,
                        &[
                            name.to_string(),
                            serde_json::to_value(kind)?.as_str().unwrap_or_default().to_string(),
                            fmt_f64(p.theta),
                            fmt_f64(p.result.eta_crit),
                            p.result.fallback.to_string(),
                        ],
                    )?;
                }
            }
        }
        Ok(())
    })?;
    Ok((
        vec![f],
        json!({ "thetaGrid": "0.05:0.05:1.55", "space": "reduced", "tol": TOL, "step": STEP }),
    ))
}

/// Signed CHSH and CH for ψ1 and ψ2 over θ ∈ [0, π] at η = 1.
fn correlation_curves(dir: &Path, id: &str, conv: Convention) -> anyhow::Result<(Vec<String>, Value)> {
    let n = 200;
    let f = write_file(dir, &format!("{id}.csv"), |w| {
        csv_line(
            w,
            &["state", "theta", "chsh", "ch", "chshUpper", "chLower", "chUpper"].map(String::from),
        )?;
        for (name, state) in [("psi1", StateSpec::Psi1), ("psi2", StateSpec::Psi2)] {
            for k in 0..=n {
                let theta = grid(k, PI, n as f64);
                let pred = Scenario::theta(state.clone(), theta).prediction_set()?;
                let c = chsh(&prediction_correlations(&pred), conv);
                let ch = ch_genuine(&Dressed::new(&pred, 1.0), conv);
                let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
                csv_line(
                    w,
                    &[
                        name.to_string(),
                        fmt_f64(theta),
                        fmt_f64(c.value),
                        fmt_f64(ch.value),
                        opt(c.bounds.upper),
                        opt(ch.bounds.lower),
                        opt(ch.bounds.upper),
                    ],
                )?;
            }
        }
        Ok(())
    })?;
    let conv_name = serde_json::to_value(conv)?;
    Ok((vec![f], json!({ "thetaGrid": format!("0:pi/{n}:pi"), "convention": conv_name, "eta": 1.0 })))
}

/// Eberhard expectation vs η for the Giustina scenario, with and without
/// the o↔e label swap.
fn fig6(dir: &Path) -> anyhow::Result<(Vec<String>, Value)> {
    let r = 3.0;
    let pairs = 4;
    let plain = Scenario::giustina(r, Permutation::None).prediction_set()?;
    let swapped = Scenario::giustina(r, Permutation::Labels).prediction_set()?;
    let f = write_file(dir, "fig6.csv", |w| {
        csv_line(w, &["eta", "identity", "labelsSwapped"].map(String::from))?;
        for k in 0..=100 {
            let eta = grid(k, 1.0, 100.0);
            csv_line(
                w,
                &[
                    fmt_f64(eta),
                    fmt_f64(eberhard_qm(&plain, eta, pairs)?.value / pairs as f64),
                    fmt_f64(eberhard_qm(&swapped, eta, pairs)?.value / pairs as f64),
                ],
            )?;
        }
        Ok(())
    })?;
    Ok((vec![f], json!({ "r": r, "etaGrid": "0:0.01:1", "perPair": true, "angles": "giustina" })))
}

/// Weights of the 41 sign-pair rows for θ = 0.1 … 1.1, plus per-column
/// critical rate and residual.
fn table(dir: &Path, id: &str, state: StateSpec) -> anyhow::Result<(Vec<String>, Value)> {
    let thetas: Vec<f64> = (1..=11).map(|k| grid(k, 1.0, 10.0)).collect();
    let opts = EtaSearch {
        tol: TOL,
        step: STEP,
        trace_floor: None,
    };
    let results: Vec<EtaCritResult> = thetas
        .par_iter()
        .map(|&theta| {
            let pred = Scenario::theta(state.clone(), theta).prediction_set()?;
            Ok(find_eta_crit(&pred, ConditionKind::Both, StateSpace::Reduced, opts)?)
        })
        .collect::<anyhow::Result<_>>()?;
    let rows = sign_pair_rows();
    let models: Vec<_> = results.iter().map(|r| r.model.symmetrize_flip()).collect();
    let weights = write_file(dir, &format!("{id}.csv"), |w| {
        let mut head: Vec<String> = ["A1", "A2", "B1", "B2", "pA", "pB"].map(String::from).to_vec();
        head.extend(thetas.iter().map(|t| format!("theta={t}")));
        csv_line(w, &head)?;
        for row in &rows {
            let mut cells: Vec<String> = row.labels().iter().map(|s| s.to_string()).collect();
            cells.push(fmt_f64(row.state.p_a));
            cells.push(fmt_f64(row.state.p_b));
            for m in &models {
                // Both members of a row carry the printed weight.
                cells.push(fmt_f64(m.weights_on(&[row.state])[0]));
            }
            csv_line(w, &cells)?;
        }
        Ok(())
    })?;
    let columns = write_file(dir, &format!("{id}_columns.csv"), |w| {
        csv_line(w, &["theta", "etaCrit", "mu", "fallback"].map(String::from))?;
        for (theta, r) in thetas.iter().zip(&results) {
            let mu = r.trace.iter().find(|t| t.eta == r.eta_crit).map_or(f64::NAN, |t| t.mu);
            csv_line(w, &[fmt_f64(*theta), fmt_f64(r.eta_crit), fmt_f64(mu), r.fallback.to_string()])?;
        }
        Ok(())
    })?;
    Ok((
        vec![weights, columns],
        json!({ "state": state, "thetaGrid": "0.1:0.1:1.1", "kind": "both", "space": "reduced", "tol": TOL, "step": STEP }),
    ))
}
