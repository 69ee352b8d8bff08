//! Gaussian phase-space moments, passivity and the work released by
//! displacement and by unsqueezing.

use serde::Serialize;

use crate::error::{Result, WofError};

const HEISENBERG_TOL: f64 = 1e-9;

/// First and second moments of a single-mode state in quadrature form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
}

impl GaussianMoments {
    pub fn new(mean_x: f64, mean_p: f64, v11: f64, v22: f64, v12: f64) -> Result<Self> {
        let m = GaussianMoments { mean_x, mean_p, v11, v22, v12 };
        if ![mean_x, mean_p, v11, v22, v12].iter().all(|v| v.is_finite()) {
            return Err(crate::error::invalid("moments", "non-finite value"));
        }
        if v11 <= 0.0 || v22 <= 0.0 {
            return Err(crate::error::invalid("moments", format!("variances must be positive, got v11 = {v11}, v22 = {v22}")));
        }
        let det = m.determinant();
        if det < 0.25 - HEISENBERG_TOL {
            return Err(WofError::Unphysical { det });
        }
        Ok(m)
    }

    /// Coherent state with the given mean quadratures.
    pub fn coherent(mean_x: f64, mean_p: f64) -> Self {
        GaussianMoments { mean_x, mean_p, v11: 0.5, v22: 0.5, v12: 0.0 }
    }

    /// Thermal state of mean occupation `n`.
    pub fn thermal(n: f64) -> Self {
        GaussianMoments { mean_x: 0.0, mean_p: 0.0, v11: n + 0.5, v22: n + 0.5, v12: 0.0 }
    }

    pub fn determinant(&self) -> f64 {
        self.v11 * self.v22 - self.v12 * self.v12
    }

    /// Mean energy ⟨(x̂² + p̂²)/2⟩, vacuum included.
    pub fn energy(&self) -> f64 {
        0.5 * (self.mean_x * self.mean_x + self.mean_p * self.mean_p) + 0.5 * (self.v11 + self.v22)
    }

    /// Phase-space rotation by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        GaussianMoments {
            mean_x: c * self.mean_x - s * self.mean_p,
            mean_p: s * self.mean_x + c * self.mean_p,
            v11: c * c * self.v11 - 2.0 * s * c * self.v12 + s * s * self.v22,
            v22: s * s * self.v11 + 2.0 * s * c * self.v12 + c * c * self.v22,
            v12: s * c * (self.v11 - self.v22) + (c * c - s * s) * self.v12,
        }
    }
}

/// Eigenvalues of the variance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrincipalVariances {
    pub v_plus: f64,
    pub v_minus: f64,
}

/// Work released by displacing the state back to the origin.
pub fn displacement_work(state: &GaussianMoments) -> f64 {
    0.5 * (state.mean_x * state.mean_x + state.mean_p * state.mean_p)
}

/// Second moment ⟨W²⟩ of the displacement work operator
/// x₀x̂ + p₀p̂ − ½(x₀² + p₀²).
pub fn displacement_work_second_moment(state: &GaussianMoments) -> f64 {
    let w = displacement_work(state);
    let (x0, p0) = (state.mean_x, state.mean_p);
    w * w + x0 * x0 * state.v11 + p0 * p0 * state.v22 + 2.0 * x0 * p0 * state.v12
}

pub fn principal_variances(state: &GaussianMoments) -> PrincipalVariances {
    let half_sum = 0.5 * (state.v11 + state.v22);
    let half_gap = 0.5 * (state.v11 - state.v22).hypot(2.0 * state.v12);
    if half_gap == 0.0 {
        return PrincipalVariances { v_plus: state.v11, v_minus: state.v22 };
    }
    let v_plus = half_sum + half_gap;
    // the product form keeps v_plus * v_minus = det to rounding
    let v_minus = state.determinant() / v_plus;
    PrincipalVariances { v_plus, v_minus }
}

/// Work released by the symplectic map that equalizes the principal variances.
pub fn unsqueeze_work(state: &GaussianMoments) -> f64 {
    let pv = principal_variances(state);
    let d = pv.v_plus.sqrt() - pv.v_minus.sqrt();
    0.5 * d * d
}

/// Energy of the passive Gaussian state reachable by displacement and unsqueezing.
pub fn passive_energy(state: &GaussianMoments) -> f64 {
    state.determinant().sqrt()
}
