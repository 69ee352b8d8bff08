//! Bayesian inversion of the homodyne record and the outcome-conditioned
//! state and work of the transmitted mode.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WofError};
use crate::phase_space::{displacement_work, unsqueeze_work, GaussianMoments};
use crate::photostatistics::{
    check_nbar, detector_means, gaussian_lattice, lattice_half_width, outcome_pmf_given_alpha, sigma2_delta_n,
    CoherentAmplitude, EstimateMode, Outcome, SplitterConfig, ThermalIntegrals, QUADRATURE_TOL,
};
use crate::quadrature::{thermal_density, GridSpec, PolarGrid};
use crate::special::skellam_pmf;

/// Probabilities below this are treated as impossible outcomes.
pub const IMPROBABLE: f64 = 1e-300;

/// Linear gain c of the gaussian estimator x̄ = c·Δn_x, equal to
/// 1/(β√ε[1 + 1/(n̄ε) + 1/(2β²)]).
pub fn gaussian_gain(nbar: f64, cfg: SplitterConfig) -> f64 {
    cfg.epsilon().sqrt() * cfg.beta * nbar / sigma2_delta_n(nbar, cfg)
}

/// Posterior quadrature variance σ_x² of the gaussian approximation.
pub fn sigma_x2(nbar: f64, cfg: SplitterConfig) -> f64 {
    let xi = cfg.xi();
    let en = nbar * cfg.epsilon();
    if xi + en == 0.0 {
        return nbar;
    }
    nbar / (1.0 + xi * en / (xi + en))
}

/// P-function posterior of the input amplitude given an outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Posterior {
    pub outcome: Outcome,
    pub nbar: f64,
    pub cfg: SplitterConfig,
    pub norm: f64,
    pub grid: GridSpec,
}

impl Posterior {
    pub fn unnormalized(&self, x: f64, p: f64) -> f64 {
        outcome_pmf_given_alpha(self.outcome, CoherentAmplitude::new(x, p), self.cfg) * thermal_density(self.nbar, x, p)
    }

    pub fn density(&self, x: f64, p: f64) -> f64 {
        self.unnormalized(x, p) / self.norm
    }

    /// Posterior mass on its own quadrature grid.
    pub fn grid_mass(&self) -> f64 {
        single_outcome_integrals(self.nbar, self.cfg, self.outcome, self.grid)[0] / self.norm
    }
}

/// ∫ f P(out|α) P(α) for f ∈ {1, x, p, x², p², xp} on one grid.
fn single_outcome_integrals(nbar: f64, cfg: SplitterConfig, out: Outcome, spec: GridSpec) -> [f64; 6] {
    let g = PolarGrid::thermal(nbar, spec);
    let mut acc = [0.0; 6];
    for i in 0..g.len() {
        let m = detector_means(CoherentAmplitude::new(g.x[i], g.p[i]), cfg);
        let f = g.w[i] * skellam_pmf(out.dnx, m.n_plus, m.n_minus) * skellam_pmf(out.dnp, m.nt_plus, m.nt_minus);
        let (x, p) = (g.x[i], g.p[i]);
        for (a, v) in acc.iter_mut().zip([1.0, x, p, x * x, p * p, x * p]) {
            *a += f * v;
        }
    }
    acc
}

fn converged_single(nbar: f64, cfg: SplitterConfig, out: Outcome) -> Result<([f64; 6], GridSpec)> {
    let scale = [0.0, nbar.sqrt(), nbar.sqrt(), nbar, nbar, nbar];
    let mut spec = GridSpec::level(0);
    let mut coarse = single_outcome_integrals(nbar, cfg, out, spec);
    let mut change = f64::INFINITY;
    for level in 1..=3 {
        let next = GridSpec::level(level);
        let fine = single_outcome_integrals(nbar, cfg, out, next);
        change = (0..6)
            .map(|i| {
                let d = (coarse[i] - fine[i]).abs();
                let s = fine[i].abs() + fine[0] * scale[i];
                if s == 0.0 { 0.0 } else { d / s }
            })
            .fold(0.0, f64::max);
        spec = next;
        coarse = fine;
        if change <= QUADRATURE_TOL {
            return Ok((coarse, spec));
        }
    }
    Err(WofError::QuadratureNonConvergence { residual: change })
}

fn check_lattice(out: Outcome, nbar: f64, cfg: SplitterConfig) -> Result<()> {
    let half_width = lattice_half_width(nbar, cfg);
    if out.within(half_width) {
        Ok(())
    } else {
        Err(WofError::OutsideLattice { dnx: out.dnx, dnp: out.dnp, half_width })
    }
}

pub fn posterior(out: Outcome, nbar: f64, cfg: SplitterConfig) -> Result<Posterior> {
    check_nbar(nbar)?;
    check_lattice(out, nbar, cfg)?;
    let (acc, grid) = converged_single(nbar, cfg, out)?;
    if acc[0] < IMPROBABLE {
        return Err(WofError::ImprobableOutcome { dnx: out.dnx, dnp: out.dnp, prob: acc[0] });
    }
    Ok(Posterior { outcome: out, nbar, cfg, norm: acc[0], grid })
}

/// Moments of the transmitted mode conditioned on an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalState {
    pub moments: GaussianMoments,
}

/// Assemble transmitted-mode moments from P-function integrals.
fn moments_from_integrals(kappa: f64, acc: [f64; 6]) -> Result<GaussianMoments> {
    let p = acc[0];
    let (ex, ep) = (acc[1] / p, acc[2] / p);
    let vx = (acc[3] / p - ex * ex).max(0.0);
    let vp = (acc[4] / p - ep * ep).max(0.0);
    let cxp = acc[5] / p - ex * ep;
    let k2 = kappa * kappa;
    GaussianMoments::new(kappa * ex, kappa * ep, k2 * vx + 0.5, k2 * vp + 0.5, k2 * cxp)
}

fn gaussian_state(out: Outcome, nbar: f64, cfg: SplitterConfig) -> GaussianMoments {
    let g = cfg.kappa * gaussian_gain(nbar, cfg);
    let v = cfg.kappa * cfg.kappa * sigma_x2(nbar, cfg) + 0.5;
    GaussianMoments { mean_x: g * out.dnx as f64, mean_p: g * out.dnp as f64, v11: v, v22: v, v12: 0.0 }
}

pub fn conditional_state(out: Outcome, nbar: f64, cfg: SplitterConfig, mode: EstimateMode) -> Result<ConditionalState> {
    check_nbar(nbar)?;
    check_lattice(out, nbar, cfg)?;
    let moments = match mode {
        EstimateMode::Gaussian => gaussian_state(out, nbar, cfg),
        EstimateMode::Exact => {
            let (acc, _) = converged_single(nbar, cfg, out)?;
            if acc[0] < IMPROBABLE {
                return Err(WofError::ImprobableOutcome { dnx: out.dnx, dnp: out.dnp, prob: acc[0] });
            }
            moments_from_integrals(cfg.kappa, acc)?
        }
    };
    Ok(ConditionalState { moments })
}

pub fn outcome_work(out: Outcome, nbar: f64, cfg: SplitterConfig, mode: EstimateMode, with_unsqueeze: bool) -> Result<f64> {
    let s = conditional_state(out, nbar, cfg, mode)?.moments;
    let w = displacement_work(&s);
    Ok(if with_unsqueeze { w + unsqueeze_work(&s) } else { w })
}

/// Per-outcome probability, conditional means and work over the lattice.
#[derive(Debug, Clone, Serialize)]
pub struct WorkTable {
    pub half_width: usize,
    pub mode: EstimateMode,
    pub prob: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub w_disp: Vec<f64>,
    pub w_us: Vec<f64>,
}

impl WorkTable {
    pub fn build(nbar: f64, cfg: SplitterConfig, mode: EstimateMode) -> Result<Self> {
        check_nbar(nbar)?;
        match mode {
            EstimateMode::Gaussian => Ok(WorkTable::gaussian(nbar, cfg)),
            EstimateMode::Exact => Ok(WorkTable::from_integrals(&ThermalIntegrals::converged(nbar, cfg, true)?, cfg)),
        }
    }

    pub fn gaussian(nbar: f64, cfg: SplitterConfig) -> Self {
        let dist = gaussian_lattice(sigma2_delta_n(nbar, cfg), lattice_half_width(nbar, cfg));
        let g = cfg.kappa * gaussian_gain(nbar, cfg);
        let mut t = WorkTable::empty(dist.half_width, EstimateMode::Gaussian);
        for (i, (o, p)) in dist.iter().enumerate() {
            t.prob[i] = p;
            t.mean_x[i] = g * o.dnx as f64;
            t.mean_p[i] = g * o.dnp as f64;
            t.w_disp[i] = 0.5 * (t.mean_x[i].powi(2) + t.mean_p[i].powi(2));
        }
        t
    }

    /// Exact table from lattice integrals computed with moments.
    pub fn from_integrals(ti: &ThermalIntegrals, cfg: SplitterConfig) -> Self {
        let m = ti.moments.as_ref().expect("lattice integrals computed with moments");
        let mut t = WorkTable::empty(ti.half_width, EstimateMode::Exact);
        let rows: Vec<_> = (0..t.prob.len())
            .into_par_iter()
            .map(|i| {
                let (a, b) = (i / t.side(), i % t.side());
                let p = ti.prob[[a, b]];
                if p < IMPROBABLE {
                    return (p.max(0.0), 0.0, 0.0, 0.0, 0.0);
                }
                let acc = [p, m.x[[a, b]], m.p[[a, b]], m.xx[[a, b]], m.pp[[a, b]], m.xp[[a, b]]];
                match moments_from_integrals(cfg.kappa, acc) {
                    Ok(s) => (p, s.mean_x, s.mean_p, displacement_work(&s), unsqueeze_work(&s)),
                    Err(_) => (p, 0.0, 0.0, 0.0, 0.0),
                }
            })
            .collect();
        for (i, r) in rows.into_iter().enumerate() {
            (t.prob[i], t.mean_x[i], t.mean_p[i], t.w_disp[i], t.w_us[i]) = r;
        }
        t
    }

    fn empty(half_width: usize, mode: EstimateMode) -> Self {
        let len = (2 * half_width + 1).pow(2);
        WorkTable {
            half_width,
            mode,
            prob: vec![0.0; len],
            mean_x: vec![0.0; len],
            mean_p: vec![0.0; len],
            w_disp: vec![0.0; len],
            w_us: vec![0.0; len],
        }
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn outcome_at(&self, i: usize) -> Outcome {
        let n = self.half_width as i64;
        Outcome::new((i / self.side()) as i64 - n, (i % self.side()) as i64 - n)
    }

    pub fn index(&self, out: Outcome) -> Option<usize> {
        let n = self.half_width as i64;
        out.within(self.half_width).then(|| ((out.dnx + n) as usize) * self.side() + (out.dnp + n) as usize)
    }

    /// Work of outcome `i`, optionally including unsqueezing.
    pub fn work(&self, i: usize, with_unsqueeze: bool) -> f64 {
        if with_unsqueeze { self.w_disp[i] + self.w_us[i] } else { self.w_disp[i] }
    }

    /// Σ P(out) W(out): mean gross work before subtracting the LO energy.
    pub fn mean_gross(&self, with_unsqueeze: bool) -> f64 {
        (0..self.prob.len()).map(|i| self.prob[i] * self.work(i, with_unsqueeze)).sum()
    }

    /// √(Σ P W² − (Σ P W)²).
    pub fn work_std(&self, with_unsqueeze: bool) -> f64 {
        let m = self.mean_gross(with_unsqueeze);
        let m2: f64 = (0..self.prob.len()).map(|i| self.prob[i] * self.work(i, with_unsqueeze).powi(2)).sum();
        (m2 - m * m).max(0.0).sqrt()
    }

    pub fn feedforward_table(&self) -> FeedforwardTable {
        FeedforwardTable { half_width: self.half_width, mean_x: self.mean_x.clone(), mean_p: self.mean_p.clone() }
    }
}

/// Target displacement (⟨x⟩, ⟨p⟩) for every lattice outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedforwardTable {
    pub half_width: usize,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
}

impl FeedforwardTable {
    pub fn zero(half_width: usize) -> Self {
        let len = (2 * half_width + 1).pow(2);
        FeedforwardTable { half_width, mean_x: vec![0.0; len], mean_p: vec![0.0; len] }
    }

    /// Displacement linear in the outcome: (g·Δn_x, g·Δn_p).
    pub fn linear(half_width: usize, gain: f64) -> Self {
        let mut t = FeedforwardTable::zero(half_width);
        let n = half_width as i64;
        let side = 2 * half_width + 1;
        for i in 0..t.mean_x.len() {
            t.mean_x[i] = gain * ((i / side) as i64 - n) as f64;
            t.mean_p[i] = gain * ((i % side) as i64 - n) as f64;
        }
        t
    }

    pub fn lookup(&self, out: Outcome) -> Option<(f64, f64)> {
        let n = self.half_width as i64;
        out.within(self.half_width).then(|| {
            let i = ((out.dnx + n) as usize) * (2 * self.half_width + 1) + (out.dnp + n) as usize;
            (self.mean_x[i], self.mean_p[i])
        })
    }
}
