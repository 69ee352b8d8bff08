//! Photon statistics of the four homodyne detectors: Poisson means, Skellam
//! laws of the count differences, outcome distributions for thermal input,
//! and outcome sampling.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, WofError};
use crate::quadrature::{GridSpec, PolarGrid};
use crate::special::skellam_row_into;

/// Coherent amplitude α = (x + ip)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentAmplitude {
    pub x: f64,
    pub p: f64,
}

impl CoherentAmplitude {
    pub fn new(x: f64, p: f64) -> Self {
        CoherentAmplitude { x, p }
    }

    /// |α|².
    pub fn intensity(&self) -> f64 {
        0.5 * (self.x * self.x + self.p * self.p)
    }
}

/// BS0 amplitude transmissivity κ and local-oscillator amplitude β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitterConfig {
    pub kappa: f64,
    pub beta: f64,
}

impl SplitterConfig {
    pub fn new(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(invalid("kappa", format!("must lie in (0, 1), got {kappa}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
        }
        Ok(SplitterConfig { kappa, beta })
    }

    /// Build from ε = 1 − κ² and ξ = 2β².
    pub fn from_eps_xi(epsilon: f64, xi: f64) -> Result<Self> {
        SplitterConfig::new((1.0 - epsilon).sqrt(), (0.5 * xi).sqrt())
    }

    /// Fraction ε = 1 − κ² sent to the detectors.
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.kappa) * (1.0 + self.kappa)
    }

    /// Invested LO energy ξ = 2β².
    pub fn xi(&self) -> f64 {
        2.0 * self.beta * self.beta
    }
}

/// Pair of photocount differences (Δn_x, Δn_p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Outcome {
    pub dnx: i64,
    pub dnp: i64,
}

impl Outcome {
    pub fn new(dnx: i64, dnp: i64) -> Self {
        Outcome { dnx, dnp }
    }

    pub fn within(&self, half_width: usize) -> bool {
        self.dnx.unsigned_abs() as usize <= half_width && self.dnp.unsigned_abs() as usize <= half_width
    }
}

/// Exact quadrature or closed-form Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateMode {
    Exact,
    Gaussian,
}

impl EstimateMode {
    pub fn name(&self) -> &'static str {
        match self {
            EstimateMode::Exact => "exact",
            EstimateMode::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for EstimateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateMode {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EstimateMode::Exact),
            "gaussian" => Ok(EstimateMode::Gaussian),
            _ => Err(WofError::UnknownName { kind: "estimate mode", name: s.to_string() }),
        }
    }
}

/// Probability table over the lattice {−N..N}², row-major in dnx.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub half_width: usize,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn zeros(half_width: usize) -> Self {
        let side = 2 * half_width + 1;
        OutcomeDistribution { half_width, probs: vec![0.0; side * side] }
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn index(&self, out: Outcome) -> Option<usize> {
        if !out.within(self.half_width) {
            return None;
        }
        let n = self.half_width as i64;
        Some(((out.dnx + n) as usize) * self.side() + (out.dnp + n) as usize)
    }

    pub fn outcome_at(&self, index: usize) -> Outcome {
        let n = self.half_width as i64;
        let side = self.side();
        Outcome::new((index / side) as i64 - n, (index % side) as i64 - n)
    }

    pub fn prob(&self, out: Outcome) -> f64 {
        self.index(out).map_or(0.0, |i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Outcome, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.outcome_at(i), p))
    }

    /// Mean and variance of (Δn_x, Δn_p) under the (unrenormalized) table.
    pub fn moments(&self) -> ((f64, f64), (f64, f64)) {
        let t = self.total();
        let (mut mx, mut mp) = (0.0, 0.0);
        for (o, p) in self.iter() {
            mx += p * o.dnx as f64;
            mp += p * o.dnp as f64;
        }
        mx /= t;
        mp /= t;
        let (mut vx, mut vp) = (0.0, 0.0);
        for (o, p) in self.iter() {
            vx += p * (o.dnx as f64 - mx).powi(2);
            vp += p * (o.dnp as f64 - mp).powi(2);
        }
        ((mx, mp), (vx / t, vp / t))
    }

    /// Total-variation distance, with outcomes missing from either table counted as zero.
    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        let n = self.half_width.max(other.half_width) as i64;
        let mut acc = 0.0;
        for dnx in -n..=n {
            for dnp in -n..=n {
                let o = Outcome::new(dnx, dnp);
                acc += (self.prob(o) - other.prob(o)).abs();
            }
        }
        0.5 * acc
    }
}

/// Mean photon numbers at the four detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorMeans {
    pub n_plus: f64,
    pub n_minus: f64,
    pub nt_plus: f64,
    pub nt_minus: f64,
}

pub fn detector_means(alpha: CoherentAmplitude, cfg: SplitterConfig) -> DetectorMeans {
    let eps = cfg.epsilon();
    let base = eps * (alpha.x * alpha.x + alpha.p * alpha.p) / 8.0 + 0.5 * cfg.beta * cfg.beta;
    let gain = 0.5 * eps.sqrt() * cfg.beta;
    let (dx, dp) = (gain * alpha.x, gain * alpha.p);
    DetectorMeans {
        n_plus: (base + dx).max(0.0),
        n_minus: (base - dx).max(0.0),
        nt_plus: (base + dp).max(0.0),
        nt_minus: (base - dp).max(0.0),
    }
}

pub fn outcome_pmf_given_alpha(out: Outcome, alpha: CoherentAmplitude, cfg: SplitterConfig) -> f64 {
    let m = detector_means(alpha, cfg);
    crate::special::skellam_pmf(out.dnx, m.n_plus, m.n_minus) * crate::special::skellam_pmf(out.dnp, m.nt_plus, m.nt_minus)
}

/// Variance σ²_Δn = β² + n̄ε(β² + ½) of each count difference for thermal input.
pub fn sigma2_delta_n(nbar: f64, cfg: SplitterConfig) -> f64 {
    let b2 = cfg.beta * cfg.beta;
    b2 + nbar * cfg.epsilon() * (b2 + 0.5)
}

/// Lattice half-width N = ⌈6σ⌉ + 4 for count-difference variance `sigma2`.
pub fn half_width_for(sigma2: f64) -> usize {
    (6.0 * sigma2.sqrt()).ceil() as usize + 4
}

pub fn lattice_half_width(nbar: f64, cfg: SplitterConfig) -> usize {
    half_width_for(sigma2_delta_n(nbar, cfg))
}

/// n̄ must be finite and positive.
pub fn check_nbar(nbar: f64) -> Result<()> {
    if nbar > 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(invalid("nbar", format!("must be finite and > 0, got {nbar}")))
    }
}

/// Thermal-prior integrals over the outcome lattice:
/// P(out) = ∫ P(out|α) P(α) and, optionally, ∫ f(x,p) P(out|α) P(α) for
/// f ∈ {x, p, x², p², xp}. Tables are row-major in dnx.
#[derive(Debug, Clone)]
pub struct ThermalIntegrals {
    pub half_width: usize,
    pub spec: GridSpec,
    pub prob: Array2<f64>,
    pub moments: Option<LatticeMoments>,
}

#[derive(Debug, Clone)]
pub struct LatticeMoments {
    pub x: Array2<f64>,
    pub p: Array2<f64>,
    pub xx: Array2<f64>,
    pub pp: Array2<f64>,
    pub xp: Array2<f64>,
}

/// Tolerances for refinement and truncation.
pub const QUADRATURE_TOL: f64 = 1e-6;
pub const TRUNCATION_TOL: f64 = 1e-6;
const MAX_LEVEL: u32 = 3;
const BLOCK: usize = 2048;

impl ThermalIntegrals {
    /// Integrate on a fixed grid and lattice.
    pub fn at(nbar: f64, cfg: SplitterConfig, spec: GridSpec, half_width: usize, with_moments: bool) -> Self {
        let grid = PolarGrid::thermal(nbar, spec);
        let starts: Vec<usize> = (0..grid.len()).step_by(BLOCK).collect();
        let parts: Vec<Vec<Array2<f64>>> = starts
            .par_iter()
            .map(|&s| integrate_block(&grid, s, (s + BLOCK).min(grid.len()), cfg, half_width, with_moments))
            .collect();
        let mut acc = parts[0].clone();
        for part in &parts[1..] {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += b;
            }
        }
        let mut it = acc.into_iter();
        let prob = it.next().unwrap();
        let moments = if with_moments {
            Some(LatticeMoments {
                x: it.next().unwrap(),
                p: it.next().unwrap(),
                xx: it.next().unwrap(),
                pp: it.next().unwrap(),
                xp: it.next().unwrap(),
            })
        } else {
            None
        };
        ThermalIntegrals { half_width, spec, prob, moments }
    }

    /// Integrate on grid level `level`, doubling the lattice once if the
    /// truncated mass exceeds [`TRUNCATION_TOL`].
    pub fn at_level(nbar: f64, cfg: SplitterConfig, level: u32, with_moments: bool) -> Result<Self> {
        check_nbar(nbar)?;
        let half_width = lattice_half_width(nbar, cfg);
        let t = ThermalIntegrals::at(nbar, cfg, GridSpec::level(level), half_width, with_moments);
        if t.truncation_residual() <= TRUNCATION_TOL {
            return Ok(t);
        }
        let t = ThermalIntegrals::at(nbar, cfg, GridSpec::level(level), 2 * half_width, with_moments);
        let residual = t.truncation_residual();
        if residual > TRUNCATION_TOL {
            return Err(WofError::Truncation { residual, half_width: 2 * half_width });
        }
        Ok(t)
    }

    /// Integrate with grid refinement until the tables change by less than
    /// [`QUADRATURE_TOL`] between consecutive levels.
    pub fn converged(nbar: f64, cfg: SplitterConfig, with_moments: bool) -> Result<Self> {
        let mut coarse = ThermalIntegrals::at_level(nbar, cfg, 0, with_moments)?;
        let mut change = f64::INFINITY;
        for level in 1..=MAX_LEVEL {
            let fine = ThermalIntegrals::at(nbar, cfg, GridSpec::level(level), coarse.half_width, with_moments);
            change = coarse.relative_change(&fine);
            if change <= QUADRATURE_TOL {
                log::debug!("thermal integrals converged at level {level} (change {change:e})");
                return Ok(fine);
            }
            coarse = fine;
        }
        Err(WofError::QuadratureNonConvergence { residual: change })
    }

    /// Probability mass lost outside the lattice.
    pub fn truncation_residual(&self) -> f64 {
        1.0 - self.prob.sum()
    }

    /// Largest relative change of any table against a refined evaluation.
    /// Moment tables are measured against their natural magnitude, so tables
    /// that vanish by symmetry do not amplify rounding noise.
    pub fn relative_change(&self, finer: &ThermalIntegrals) -> f64 {
        let amax = |a: &Array2<f64>| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = |a: &Array2<f64>, b: &Array2<f64>| a.iter().zip(b.iter()).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        let rel = |a: &Array2<f64>, b: &Array2<f64>, natural: f64| {
            let scale = amax(b).max(natural);
            if scale < 1e-300 { 0.0 } else { diff(a, b) / scale }
        };
        let mut change = rel(&self.prob, &finer.prob, 0.0);
        if let (Some(a), Some(b)) = (&self.moments, &finer.moments) {
            let s2 = amax(&b.xx).max(amax(&b.pp));
            let s1 = (s2 * amax(&finer.prob)).sqrt();
            for (u, v, natural) in [(&a.x, &b.x, s1), (&a.p, &b.p, s1), (&a.xx, &b.xx, s2), (&a.pp, &b.pp, s2), (&a.xp, &b.xp, s2)] {
                change = change.max(rel(u, v, natural));
            }
        }
        change
    }

    pub fn distribution(&self) -> OutcomeDistribution {
        OutcomeDistribution { half_width: self.half_width, probs: self.prob.iter().cloned().collect() }
    }
}

fn integrate_block(
    grid: &PolarGrid,
    start: usize,
    end: usize,
    cfg: SplitterConfig,
    n: usize,
    with_moments: bool,
) -> Vec<Array2<f64>> {
    let len = end - start;
    let side = 2 * n + 1;
    let mut sx = Array2::<f64>::zeros((len, side));
    let mut sp = Array2::<f64>::zeros((len, side));
    for (i, (mut rx, mut rp)) in sx.axis_iter_mut(Axis(0)).zip(sp.axis_iter_mut(Axis(0))).enumerate() {
        let k = start + i;
        let m = detector_means(CoherentAmplitude::new(grid.x[k], grid.p[k]), cfg);
        skellam_row_into(m.n_plus, m.n_minus, n, rx.as_slice_mut().unwrap());
        skellam_row_into(m.nt_plus, m.nt_minus, n, rp.as_slice_mut().unwrap());
    }
    let w = &grid.w[start..end];
    let x = &grid.x[start..end];
    let p = &grid.p[start..end];
    let weighted = |f: &dyn Fn(usize) -> f64| {
        let mut a = sx.clone();
        for (i, mut row) in a.axis_iter_mut(Axis(0)).enumerate() {
            row *= w[i] * f(i);
        }
        a.t().dot(&sp)
    };
    let mut out = vec![weighted(&|_| 1.0)];
    if with_moments {
        out.push(weighted(&|i| x[i]));
        out.push(weighted(&|i| p[i]));
        out.push(weighted(&|i| x[i] * x[i]));
        out.push(weighted(&|i| p[i] * p[i]));
        out.push(weighted(&|i| x[i] * p[i]));
    }
    out
}

pub fn outcome_distribution_thermal(nbar: f64, cfg: SplitterConfig, mode: EstimateMode) -> Result<OutcomeDistribution> {
    check_nbar(nbar)?;
    match mode {
        EstimateMode::Exact => Ok(ThermalIntegrals::converged(nbar, cfg, false)?.distribution()),
        EstimateMode::Gaussian => Ok(gaussian_lattice(sigma2_delta_n(nbar, cfg), lattice_half_width(nbar, cfg))),
    }
}

/// Isotropic Gaussian of variance `sigma2` per axis on the integer lattice, renormalized.
pub fn gaussian_lattice(sigma2: f64, half_width: usize) -> OutcomeDistribution {
    let mut d = OutcomeDistribution::zeros(half_width);
    let n = half_width as i64;
    let marginal: Vec<f64> = (-n..=n)
        .map(|k| if sigma2 > 0.0 { (-(k * k) as f64 / (2.0 * sigma2)).exp() } else if k == 0 { 1.0 } else { 0.0 })
        .collect();
    let z: f64 = marginal.iter().sum();
    let side = d.side();
    for i in 0..side {
        for j in 0..side {
            d.probs[i * side + j] = marginal[i] * marginal[j] / (z * z);
        }
    }
    d
}

/// Draw a Poisson count; a zero mean yields zero.
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> i64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive poisson mean").sample(rng) as i64
}

/// Simulate one homodyne measurement of a coherent input.
pub fn sample_outcome<R: Rng + ?Sized>(alpha: CoherentAmplitude, cfg: SplitterConfig, rng: &mut R) -> Outcome {
    let m = detector_means(alpha, cfg);
    let a = poisson_draw(m.n_plus, rng);
    let b = poisson_draw(m.n_minus, rng);
    let c = poisson_draw(m.nt_plus, rng);
    let d = poisson_draw(m.nt_minus, rng);
    Outcome::new(a - b, c - d)
}
