//! Local-coincidence (γ) corrections to the genuine CH expression.

use super::counts::{ratio, to_f64, Arm, Click, CountTable};
use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    /// Δ_{i,j}(+1,+1) indexed `[i-1][j-1]`.
    pub delta: [[f64; 2]; 2],
    /// Δ^A_i(+1) from context (i,1).
    pub delta_a: [f64; 2],
    /// Δ^B_j(+1) from context (1,j).
    pub delta_b: [f64; 2],
    pub m: f64,
    /// Genuine CH with every γ counted as a click of the single channel.
    pub beta_ns: f64,
    /// Genuine CH after discarding every trial with a γ on either side.
    pub beta_sel: f64,
}

struct Ctx<'a> {
    t: &'a CountTable,
    a: Arm,
    b: Arm,
}

impl Ctx<'_> {
    fn f(&self, pred: impl Fn(Click, Click) -> bool) -> Result<BigRational> {
        let n = self.t.sum_where(self.a, self.b, pred);
        ratio(n, self.t.trials(self.a, self.b)).ok_or(Error::ZeroDenominator("empty coincidence context"))
    }
}

fn ctx(t: &CountTable, i: usize, j: usize) -> Ctx<'_> {
    Ctx {
        t,
        a: Arm::Setting(i),
        b: Arm::Setting(j),
    }
}

/// Δ_{ij}(o,o) = P(γ,o) + P(o,γ) + P(γ,γ).
fn delta_pair(c: &Ctx) -> Result<BigRational> {
    use Click::*;
    c.f(|x, y| matches!((x, y), (G, O) | (O, G) | (G, G)))
}

/// Δ^A_i(o) = Δ_{ij}(o,b) + P(γ,b̄) + P(γ,0): every A-side γ plus P(o,γ).
fn delta_a(c: &Ctx) -> Result<BigRational> {
    c.f(|x, y| x == Click::G || (x == Click::O && y == Click::G))
}

fn delta_b(c: &Ctx) -> Result<BigRational> {
    c.f(|x, y| y == Click::G || (y == Click::O && x == Click::G))
}

fn ch(pp: [[BigRational; 2]; 2], ma: BigRational, mb: BigRational) -> BigRational {
    let [[p11, p12], [p21, p22]] = pp;
    p11 + p12 + p21 - p22 - ma - mb
}

pub fn coincidence_correction(t: &CountTable) -> Result<CoincidenceReport> {
    use Click::*;
    let not_g = |c: Click| c != G;
    let mut d = [[BigRational::zero(), BigRational::zero()], [BigRational::zero(), BigRational::zero()]];
    let mut sel = d.clone();
    let mut ns = d.clone();
    for i in 1..=2 {
        for j in 1..=2 {
            let c = ctx(t, i, j);
            d[i - 1][j - 1] = delta_pair(&c)?;
            sel[i - 1][j - 1] = c.f(|x, y| x == O && y == O)?;
            ns[i - 1][j - 1] = c.f(|x, y| matches!(x, O | G) && matches!(y, O | G))?;
        }
    }
    let da = [delta_a(&ctx(t, 1, 1))?, delta_a(&ctx(t, 2, 1))?];
    let db = [delta_b(&ctx(t, 1, 1))?, delta_b(&ctx(t, 1, 2))?];
    let c11 = ctx(t, 1, 1);
    let sel_a = c11.f(|x, y| x == O && not_g(y))?;
    let sel_b = c11.f(|x, y| y == O && not_g(x))?;
    let ns_a = c11.f(|x, _| matches!(x, O | G))?;
    let ns_b = c11.f(|_, y| matches!(y, O | G))?;

    let m = ch(d.clone(), da[0].clone(), db[0].clone());
    let beta_sel = ch(sel, sel_a, sel_b);
    let beta_ns = ch(ns, ns_a, ns_b);
    debug_assert_eq!(beta_ns, &beta_sel + &m);
    let f = |x: &BigRational| to_f64(x);
    Ok(CoincidenceReport {
        delta: [[f(&d[0][0]), f(&d[0][1])], [f(&d[1][0]), f(&d[1][1])]],
        delta_a: [f(&da[0]), f(&da[1])],
        delta_b: [f(&db[0]), f(&db[1])],
        m: f(&m),
        beta_ns: f(&beta_ns),
        beta_sel: f(&beta_sel),
    })
}
