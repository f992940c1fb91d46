//! Linear feasibility systems for LHV models at fixed η, their nonnegative
//! least-squares solution, and the descent in η for critical rates.

mod nnls;

pub use nnls::{nnls, NnlsSolution};

use crate::error::{Error, Result};
use crate::lhv::{build_app_d_model, enumerate_states, Ensemble, Event, LhvState, StateSpace};
use crate::outcome::{Side, Sign};
use crate::quantum::PredictionSet;
use crate::scenario::StateSpec;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Which model restrictions are imposed besides the joint probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    /// Single-side marginals P(A_i=a) = ηQ^A.
    Gen,
    /// Free-detection rows P(A_i=a ∧ B) = η²Q^A and P(A) = P(B) = η.
    Ng,
    Both,
}

impl FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gen" => Ok(ConditionKind::Gen),
            "ng" => Ok(ConditionKind::Ng),
            "both" => Ok(ConditionKind::Both),
            _ => Err(Error::InvalidArgument(format!("unknown condition kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub event: Event,
    pub target: f64,
}

fn sign_label(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

/// Rows in order: normalization, 16 joint rows, then 8 marginal rows (GEN,
/// BOTH), then 8 free-detection rows and P(A) = P(B) = η (NG, BOTH).
pub fn constraint_rows(pred: &PredictionSet, eta: f64, kind: ConditionKind) -> Vec<Constraint> {
    let mut rows = vec![Constraint {
        label: "norm".into(),
        event: Event::new(),
        target: 1.0,
    }];
    let e2 = eta * eta;
    for i in 1..=2 {
        for j in 1..=2 {
            for a in Sign::BOTH {
                for b in Sign::BOTH {
                    rows.push(Constraint {
                        label: format!("A{i}{}B{j}{}", sign_label(a), sign_label(b)),
                        event: Event::new().a(i, a).b(j, b),
                        target: e2 * pred.joint(i, j, a, b),
                    });
                }
            }
        }
    }
    let sides = [Side::A, Side::B];
    let name = |s: Side| if s == Side::A { "A" } else { "B" };
    if kind != ConditionKind::Ng {
        for side in sides {
            for k in 1..=2 {
                for s in Sign::BOTH {
                    rows.push(Constraint {
                        label: format!("{}{k}{}", name(side), sign_label(s)),
                        event: Event::new().setting(side, k, s),
                        target: eta * pred.marginal(side, k, s),
                    });
                }
            }
        }
    }
    if kind != ConditionKind::Gen {
        for side in sides {
            for k in 1..=2 {
                for s in Sign::BOTH {
                    rows.push(Constraint {
                        label: format!("{}{k}{}&{}", name(side), sign_label(s), name(side.other())),
                        event: Event::new().setting(side, k, s).free(side.other(), true),
                        target: e2 * pred.marginal(side, k, s),
                    });
                }
            }
        }
        for side in sides {
            rows.push(Constraint {
                label: name(side).into(),
                event: Event::new().free(side, true),
                target: eta,
            });
        }
    }
    rows
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub matrix: DMatrix<f64>,
    pub target: DVector<f64>,
    pub states: Vec<LhvState>,
    pub rows: Vec<Constraint>,
    pub kind: ConditionKind,
    pub eta: f64,
}

pub fn assemble(pred: &PredictionSet, eta: f64, kind: ConditionKind, space: StateSpace) -> Result<ConstraintSystem> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside [0,1]")));
    }
    let rows = constraint_rows(pred, eta, kind);
    let states = enumerate_states(space);
    let matrix = DMatrix::from_fn(rows.len(), states.len(), |r, c| states[c].prob(&rows[r].event));
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.target.clamp(0.0, 1.0)));
    Ok(ConstraintSystem {
        matrix,
        target,
        states,
        rows,
        kind,
        eta,
    })
}

impl ConstraintSystem {
    /// |Ax − b| / |Ax|.
    pub fn mu(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.matrix * x;
        (&ax - &self.target).norm() / ax.norm()
    }

    /// Residuals of the rows evaluated on an arbitrary ensemble.
    pub fn residuals_of(&self, ens: &Ensemble) -> Vec<f64> {
        self.rows.iter().map(|r| ens.prob(&r.event) - r.target).collect()
    }

    /// μ of an arbitrary ensemble (its states need not be columns).
    pub fn mu_of(&self, ens: &Ensemble) -> f64 {
        let ax: Vec<f64> = self.rows.iter().map(|r| ens.prob(&r.event)).collect();
        let num: f64 = ax.iter().zip(self.target.iter()).map(|(p, t)| (p - t).powi(2)).sum();
        let den: f64 = ax.iter().map(|p| p * p).sum();
        (num / den).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub mu: f64,
    pub feasible: bool,
    pub eta: f64,
}

impl SolveReport {
    /// The weights as an ensemble over the system's columns, rescaled to
    /// unit total, zero weights dropped.
    pub fn ensemble(&self, sys: &ConstraintSystem) -> Result<Ensemble> {
        let entries = sys
            .states
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, &w)| (*s, w))
            .collect();
        Ensemble::normalized(entries)
    }
}

pub fn nnls_solve(sys: &ConstraintSystem, tol: f64) -> Result<SolveReport> {
    let sol = nnls(&sys.matrix, &sys.target, 10 * sys.matrix.ncols())?;
    let mu = sys.mu(&sol.x);
    Ok(SolveReport {
        weights: sol.x.iter().copied().collect(),
        residual_norm: sol.residual_norm,
        mu,
        feasible: mu < tol,
        eta: sys.eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSearch {
    pub tol: f64,
    pub step: f64,
    /// Keep descending to this η after the critical rate is found, to record
    /// the rest of the error curve.
    pub trace_floor: Option<f64>,
}

impl Default for EtaSearch {
    fn default() -> Self {
        EtaSearch {
            tol: 5e-5,
            step: 0.01,
            trace_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub eta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaCritResult {
    pub eta_crit: f64,
    pub model: Ensemble,
    pub trace: Vec<TracePoint>,
    /// True when no grid point was feasible and the closed-form model was
    /// returned instead.
    pub fallback: bool,
}

fn grid_eta(k: usize, step: f64) -> f64 {
    ((1.0 - k as f64 * step) * 1e12).round() / 1e12
}

/// Descends η from 1 in steps of `opts.step`; the first η with μ < tol is
/// the critical rate.
pub fn find_eta_crit(pred: &PredictionSet, kind: ConditionKind, space: StateSpace, opts: EtaSearch) -> Result<EtaCritResult> {
    if !(opts.tol > 0.0 && opts.step > 0.0 && opts.step <= 1.0) {
        return Err(Error::InvalidArgument("tol and step must be positive, step <= 1".into()));
    }
    let mut trace = Vec::new();
    let mut found: Option<(f64, Ensemble)> = None;
    let mut k = 0;
    loop {
        let eta = grid_eta(k, opts.step);
        if eta <= 0.0 {
            break;
        }
        if let Some((_, _)) = &found {
            match opts.trace_floor {
                Some(f) if eta >= f - 1e-12 => {}
                _ => break,
            }
        }
        let sys = assemble(pred, eta, kind, space)?;
        let rep = nnls_solve(&sys, opts.tol)?;
        trace.push(TracePoint { eta, mu: rep.mu });
        if found.is_none() && rep.feasible {
            found = Some((eta, rep.ensemble(&sys)?));
        }
        k += 1;
    }
    if let Some((eta_crit, model)) = found {
        return Ok(EtaCritResult {
            eta_crit,
            model,
            trace,
            fallback: false,
        });
    }
    let eta = opts.step * (0.5 / opts.step).floor();
    let model = build_app_d_model(pred, eta)?
        .ensemble()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("closed-form fallback infeasible".into()))?;
    Ok(EtaCritResult {
        eta_crit: 0.0,
        model,
        trace,
        fallback: true,
    })
}

/// Sweep configuration as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepConfig {
    pub state: StateSpec,
    pub theta_grid: Vec<f64>,
    pub kind: ConditionKind,
    #[serde(default)]
    pub space: StateSpace,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_tol() -> f64 {
    5e-5
}

fn default_step() -> f64 {
    0.01
}

impl SweepConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(s)?;
        if c.theta_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("theta grid must be finite".into()));
        }
        if !(c.tol > 0.0 && c.step > 0.0 && c.step <= 1.0) {
            return Err(Error::InvalidArgument("tol and step must be positive, step <= 1".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub result: EtaCritResult,
}

/// Critical rate for each θ of the grid (A1 = 0, A2 = 2θ, B1 = θ, B2 = 3θ),
/// computed in parallel; output order follows the grid.
pub fn sweep(cfg: &SweepConfig, trace_floor: Option<f64>) -> Result<Vec<SweepPoint>> {
    let opts = EtaSearch {
        tol: cfg.tol,
        step: cfg.step,
        trace_floor,
    };
    cfg.theta_grid
        .par_iter()
        .map(|&theta| {
            let pred = crate::scenario::Scenario::theta(cfg.state.clone(), theta).prediction_set()?;
            let result = find_eta_crit(&pred, cfg.kind, cfg.space, opts)?;
            Ok(SweepPoint { theta, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn psi1(theta: f64) -> PredictionSet {
        Scenario::theta(StateSpec::Psi1, theta).prediction_set().unwrap()
    }

    #[test]
    fn row_counts() {
        let p = psi1(0.3);
        assert_eq!(constraint_rows(&p, 0.9, ConditionKind::Gen).len(), 25);
        assert_eq!(constraint_rows(&p, 0.9, ConditionKind::Ng).len(), 27);
        assert_eq!(constraint_rows(&p, 0.9, ConditionKind::Both).len(), 35);
        let sys = assemble(&p, 0.9, ConditionKind::Both, StateSpace::Reduced).unwrap();
        assert_eq!(sys.matrix.shape(), (35, 81));
        assert!(sys.matrix.row(0).iter().all(|&v| v == 1.0));
        assert_eq!(sys.target[0], 1.0);
    }

    #[test]
    fn vacuum_at_eta_zero() {
        let p = psi1(0.5);
        let sys = assemble(&p, 0.0, ConditionKind::Both, StateSpace::Full).unwrap();
        assert!(sys.target.iter().skip(1).all(|&t| t == 0.0));
        let rep = nnls_solve(&sys, 5e-5).unwrap();
        assert!(rep.residual_norm < 1e-12);
        let e = rep.ensemble(&sys).unwrap();
        assert!(e.entries().iter().all(|(s, _)| s.instr.iter().all(|o| !o.is_detected())));
    }

    #[test]
    fn app_d_weights_solve_gen_rows() {
        let p = psi1(0.8);
        for eta in [0.1, 0.3, 0.5] {
            let m = build_app_d_model(&p, eta).unwrap();
            let sys = assemble(&p, eta, ConditionKind::Both, StateSpace::Reduced).unwrap();
            let r = sys.residuals_of(m.ensemble().unwrap());
            assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
        }
    }

    #[test]
    fn table_point_feasible() {
        let p = psi1(0.1);
        let sys = assemble(&p, 0.99, ConditionKind::Both, StateSpace::Reduced).unwrap();
        assert!(nnls_solve(&sys, 5e-5).unwrap().feasible);
    }

    #[test]
    fn sweep_config_parse() {
        let c = SweepConfig::from_json(r#"{"state":{"kind":"psi2"},"thetaGrid":[0.1,0.2],"kind":"ng"}"#).unwrap();
        assert_eq!(c.space, StateSpace::Reduced);
        assert_eq!(c.step, 0.01);
        assert!(SweepConfig::from_json(r#"{"state":{"kind":"psi2"},"thetaGrid":[0.1],"kind":"ng","step":0}"#).is_err());
    }

    #[test]
    fn bad_search_options() {
        let p = psi1(0.2);
        let o = EtaSearch { step: 0.0, ..EtaSearch::default() };
        assert!(find_eta_crit(&p, ConditionKind::Gen, StateSpace::Reduced, o).is_err());
    }
}
