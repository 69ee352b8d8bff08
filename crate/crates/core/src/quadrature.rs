//! Gauss–Legendre rules and the polar grid used to integrate against the
//! thermal P-function.

use serde::Serialize;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Quadrature grid descriptor for the thermal prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub angles: usize,
    pub panels: usize,
    pub per_panel: usize,
}

/// Radial cutoff in s = r/√(2n̄); |α|² ≤ 36 n̄.
pub const RADIAL_CUTOFF: f64 = 6.0;

impl GridSpec {
    /// Refinement level: both node counts double per level.
    pub fn level(level: u32) -> Self {
        GridSpec { angles: 64 << level, panels: 8 << level, per_panel: 16 }
    }

    pub fn len(&self) -> usize {
        self.angles * self.panels * self.per_panel
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Nodes (x, p) and weights integrating f against P(x,p) = e^{-(x²+p²)/2n̄}/(2πn̄).
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub spec: GridSpec,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
}

impl PolarGrid {
    pub fn thermal(nbar: f64, spec: GridSpec) -> Self {
        let (gx, gw) = gauss_legendre(spec.per_panel);
        let h = RADIAL_CUTOFF / spec.panels as f64;
        let mut radial = Vec::with_capacity(spec.panels * spec.per_panel);
        for k in 0..spec.panels {
            let a = k as f64 * h;
            for (t, wt) in gx.iter().zip(&gw) {
                let s = a + 0.5 * h * (t + 1.0);
                radial.push((s, 0.5 * h * wt * 2.0 * s * (-s * s).exp()));
            }
        }
        let scale = (2.0 * nbar).sqrt();
        let n = spec.len();
        let (mut x, mut p, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let dtheta = 2.0 * std::f64::consts::PI / spec.angles as f64;
        for j in 0..spec.angles {
            let (sn, cs) = ((j as f64 + 0.5) * dtheta).sin_cos();
            for &(s, ws) in &radial {
                x.push(scale * s * cs);
                p.push(scale * s * sn);
                w.push(ws / spec.angles as f64);
            }
        }
        PolarGrid { spec, x, p, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Thermal P-function density of mean occupation `nbar`.
pub fn thermal_density(nbar: f64, x: f64, p: f64) -> f64 {
    (-(x * x + p * p) / (2.0 * nbar)).exp() / (2.0 * std::f64::consts::PI * nbar)
}
