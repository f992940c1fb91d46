//! Two-qubit density operators and the probabilities of x–z plane
//! polarization measurements on them.
//!
//! Basis order is |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ with ↑ the +1 eigenvector of σz
//! (H polarization, the "o" channel at angle 0).

use crate::error::{Error, Result};
use crate::outcome::{slot, Side, Sign};
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    rho: Matrix4<Complex64>,
}

impl QuantumState {
    pub fn from_density(rho: Matrix4<Complex64>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = rho.symmetric_eigenvalues().min();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(QuantumState { rho })
    }

    /// Density operator of a pure state; the ket is normalized here.
    pub fn from_ket(ket: Vector4<Complex64>) -> Result<Self> {
        let n = ket.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidState("ket has zero or non-finite norm".into()));
        }
        let k = ket.unscale(n);
        let rho = k * k.adjoint();
        // Rounding can leave a ~1e-17 anti-Hermitian part; symmetrize it away.
        let rho = (rho + rho.adjoint()).scale(0.5);
        QuantumState::from_density(rho)
    }

    pub fn density(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// Expectation value tr(ρ·M).
    pub fn expect(&self, m: &Matrix4<Complex64>) -> f64 {
        (self.rho * m).trace().re
    }

    /// Reduced density operator of side A (trace over B).
    pub fn reduced_a(&self) -> Matrix2<Complex64> {
        let mut r = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                r[(i, j)] = self.rho[(2 * i, 2 * j)] + self.rho[(2 * i + 1, 2 * j + 1)];
            }
        }
        r
    }

    /// Von Neumann entropy (bits) of the reduced state of side A.
    pub fn entanglement_entropy(&self) -> f64 {
        self.reduced_a()
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&l| l > 1e-15)
            .map(|&l| -l * l.log2())
            .sum()
    }

    /// Exchanges H and V on both photons (conjugation by σx⊗σx).
    pub fn swap_directions(&self) -> QuantumState {
        let x = sigma_x().kronecker(&sigma_x());
        QuantumState {
            rho: x * self.rho * x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    Psi1,
    Psi2,
}

/// (|↑↓⟩ − |↓↑⟩)/√2 for `Psi1`, (|↑↓⟩ + |↓↑⟩)/√2 for `Psi2`.
pub fn bell_state(kind: BellKind) -> QuantumState {
    let s = match kind {
        BellKind::Psi1 => -1.0,
        BellKind::Psi2 => 1.0,
    };
    QuantumState::from_ket(Vector4::new(c(0.0), c(1.0), c(s), c(0.0))).expect("Bell ket is valid")
}

/// C(|HV⟩ + r|VH⟩) with C = 1/√(1+r²).
pub fn giustina_state(r: f64) -> Result<QuantumState> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("r must be finite and >= 0, got {r}")));
    }
    QuantumState::from_ket(Vector4::new(c(0.0), c(1.0), c(r), c(0.0)))
}

/// C{(1 − 2cos ξ)|00⟩ + sin ξ(|10⟩ + |01⟩)} with |0⟩ ≡ ↑.
pub fn larsson_state(xi: f64) -> Result<QuantumState> {
    if !(xi > 0.0 && xi < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("xi must lie in (0, pi/2), got {xi}")));
    }
    let (s, co) = xi.sin_cos();
    QuantumState::from_ket(Vector4::new(c(1.0 - 2.0 * co), c(s), c(s), c(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleConvention {
    /// Angle on the Bloch circle.
    #[default]
    Bloch,
    /// Physical polarizer angle; doubled before use.
    Polarizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub angle: f64,
    pub side: Side,
    #[serde(default)]
    pub convention: AngleConvention,
}

impl Setting {
    pub fn new(side: Side, angle: f64) -> Self {
        Setting {
            angle,
            side,
            convention: AngleConvention::Bloch,
        }
    }

    pub fn polarizer(side: Side, angle: f64) -> Self {
        Setting {
            angle,
            side,
            convention: AngleConvention::Polarizer,
        }
    }

    pub fn bloch_angle(&self) -> f64 {
        match self.convention {
            AngleConvention::Bloch => self.angle,
            AngleConvention::Polarizer => 2.0 * self.angle,
        }
    }

    /// sin φ σx + cos φ σz.
    pub fn observable(&self) -> Matrix2<Complex64> {
        let (s, co) = self.bloch_angle().sin_cos();
        sigma_x().scale(s) + sigma_z().scale(co)
    }

    /// Projector onto the eigenspace of the given sign.
    pub fn projector(&self, sign: Sign) -> Matrix2<Complex64> {
        (Matrix2::identity() + self.observable().scale(sign.value())).scale(0.5)
    }
}

fn sigma_x() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

fn sigma_z() -> Matrix2<Complex64> {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// ⟨A ⊗ B⟩ for one setting on each side (order of arguments is free).
pub fn correlation(state: &QuantumState, a: &Setting, b: &Setting) -> Result<f64> {
    let (a, b) = match (a.side, b.side) {
        (Side::A, Side::B) => (a, b),
        (Side::B, Side::A) => (b, a),
        _ => return Err(Error::SideMismatch),
    };
    Ok(state.expect(&a.observable().kronecker(&b.observable())))
}

/// Joint and marginal probabilities for two settings per side.
///
/// Indices are 1-based setting labels; `joint(i, j, a, b)` is Q^AB_{i,j;a,b}.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    joint: [[[[f64; 2]; 2]; 2]; 2],
    qa: [[f64; 2]; 2],
    qb: [[f64; 2]; 2],
}

impl PredictionSet {
    pub fn from_state(state: &QuantumState, a: [Setting; 2], b: [Setting; 2]) -> Result<Self> {
        if a.iter().any(|s| s.side != Side::A) || b.iter().any(|s| s.side != Side::B) {
            return Err(Error::SideMismatch);
        }
        let id = Matrix2::<Complex64>::identity();
        let mut p = PredictionSet {
            joint: [[[[0.0; 2]; 2]; 2]; 2],
            qa: [[0.0; 2]; 2],
            qb: [[0.0; 2]; 2],
        };
        for (i, sa) in a.iter().enumerate() {
            for x in Sign::BOTH {
                let pa = sa.projector(x);
                p.qa[i][x.index()] = state.expect(&pa.kronecker(&id));
                for (j, sb) in b.iter().enumerate() {
                    for y in Sign::BOTH {
                        let pb = sb.projector(y);
                        p.joint[i][j][x.index()][y.index()] = state.expect(&pa.kronecker(&pb));
                    }
                }
            }
        }
        for (j, sb) in b.iter().enumerate() {
            for y in Sign::BOTH {
                p.qb[j][y.index()] = state.expect(&id.kronecker(&sb.projector(y)));
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Builds a prediction set from raw joint tables; marginals are derived.
    pub fn from_joint(joint: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        let mut qa = [[0.0; 2]; 2];
        let mut qb = [[0.0; 2]; 2];
        for k in 0..2 {
            for x in 0..2 {
                qa[k][x] = joint[k][0][x][0] + joint[k][0][x][1];
                qb[k][x] = joint[0][k][0][x] + joint[0][k][1][x];
            }
        }
        let p = PredictionSet { joint, qa, qb };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let all = self.joint.iter().flatten().flatten().flatten();
        if all.clone().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return bad("probability outside [0, 1]".into());
        }
        for i in 0..2 {
            if (self.qa[i][0] + self.qa[i][1] - 1.0).abs() > 1e-12
                || (self.qb[i][0] + self.qb[i][1] - 1.0).abs() > 1e-12
            {
                return bad(format!("marginals of setting {} do not sum to 1", i + 1));
            }
            for j in 0..2 {
                let t = &self.joint[i][j];
                if (t[0][0] + t[0][1] + t[1][0] + t[1][1] - 1.0).abs() > 1e-12 {
                    return bad(format!("joint ({},{}) does not sum to 1", i + 1, j + 1));
                }
                for (x, row) in t.iter().enumerate() {
                    if (row[0] + row[1] - self.qa[i][x]).abs() > 1e-12
                        || (t[0][x] + t[1][x] - self.qb[j][x]).abs() > 1e-12
                    {
                        return bad(format!("joint ({},{}) inconsistent with marginals", i + 1, j + 1));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn joint(&self, i: usize, j: usize, a: Sign, b: Sign) -> f64 {
        self.joint[slot(i)][slot(j)][a.index()][b.index()]
    }

    pub fn qa(&self, i: usize, a: Sign) -> f64 {
        self.qa[slot(i)][a.index()]
    }

    pub fn qb(&self, j: usize, b: Sign) -> f64 {
        self.qb[slot(j)][b.index()]
    }

    pub fn marginal(&self, side: Side, k: usize, s: Sign) -> f64 {
        match side {
            Side::A => self.qa(k, s),
            Side::B => self.qb(k, s),
        }
    }

    /// ⟨A_i B_j⟩ = Σ ab Q^AB_{i,j;a,b}.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let mut e = 0.0;
        for a in Sign::BOTH {
            for b in Sign::BOTH {
                e += a.value() * b.value() * self.joint(i, j, a, b);
            }
        }
        e
    }

    /// Q(A_i = a | B_j = b).
    pub fn conditional_a_given_b(&self, i: usize, a: Sign, j: usize, b: Sign) -> Result<f64> {
        let d = self.qb(j, b);
        if d <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.joint(i, j, a, b) / d)
    }

    /// Q(B_j = b | A_i = a).
    pub fn conditional_b_given_a(&self, j: usize, b: Sign, i: usize, a: Sign) -> Result<f64> {
        let d = self.qa(i, a);
        if d <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.joint(i, j, a, b) / d)
    }

    /// o ↔ e relabeling on both sides.
    pub fn permute_labels(&self) -> PredictionSet {
        self.permute_labels_side(Side::A).permute_labels_side(Side::B)
    }

    /// o ↔ e relabeling on one side only.
    pub fn permute_labels_side(&self, side: Side) -> PredictionSet {
        let mut p = self.clone();
        for i in 0..2 {
            for j in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        let (sx, sy) = match side {
                            Side::A => (1 - x, y),
                            Side::B => (x, 1 - y),
                        };
                        p.joint[i][j][x][y] = self.joint[i][j][sx][sy];
                    }
                }
            }
            match side {
                Side::A => p.qa[i] = [self.qa[i][1], self.qa[i][0]],
                Side::B => p.qb[i] = [self.qb[i][1], self.qb[i][0]],
            }
        }
        p
    }

    /// Largest absolute entrywise difference to another prediction set.
    pub fn max_abs_diff(&self, other: &PredictionSet) -> f64 {
        let a = self.joint.iter().flatten().flatten().flatten();
        let b = other.joint.iter().flatten().flatten().flatten();
        a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// The four observables used throughout: A1 at 0, A2 at 2θ, B1 at θ, B2 at 3θ
/// (Bloch angles).
pub fn theta_settings(theta: f64) -> ([Setting; 2], [Setting; 2]) {
    (
        [Setting::new(Side::A, 0.0), Setting::new(Side::A, 2.0 * theta)],
        [Setting::new(Side::B, theta), Setting::new(Side::B, 3.0 * theta)],
    )
}

/// Polarizer angles α1 = 85.6°, α2 = 118.0°, β1 = −5.4°, β2 = 25.9°.
pub fn giustina_settings() -> ([Setting; 2], [Setting; 2]) {
    let d = |x: f64| x.to_radians();
    (
        [Setting::polarizer(Side::A, d(85.6)), Setting::polarizer(Side::A, d(118.0))],
        [Setting::polarizer(Side::B, d(-5.4)), Setting::polarizer(Side::B, d(25.9))],
    )
}
