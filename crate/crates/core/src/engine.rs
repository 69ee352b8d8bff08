//! Mean extractable work (exact lattice sum and closed-form approximations),
//! analytic optima and limits, energy budget, and remainder iteration.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, WofError};
use crate::feedforward::{sigma_x2, WorkTable};
use crate::photostatistics::{check_nbar, SplitterConfig, ThermalIntegrals};

/// Which estimate of the mean work to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WorkMode {
    Exact,
    Gaussian,
    LowExcitation,
}

impl WorkMode {
    pub const ALL: [WorkMode; 3] = [WorkMode::Exact, WorkMode::Gaussian, WorkMode::LowExcitation];

    pub fn name(&self) -> &'static str {
        match self {
            WorkMode::Exact => "exact",
            WorkMode::Gaussian => "gaussian",
            WorkMode::LowExcitation => "low_excitation",
        }
    }
}

impl fmt::Display for WorkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkMode {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        WorkMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| WofError::UnknownName { kind: "work mode", name: s.to_string() })
    }
}

/// Mean net work, its fluctuation ΔW, and the energy left in the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkEstimate {
    pub w_mean: f64,
    pub w_rms: f64,
    pub e_rem: f64,
    pub mode: WorkMode,
}

/// Gaussian-approximation net work ξκ²εn̄²/(ξ + ε(1+ξ)n̄) − ξ with κ² = 1 − ε.
pub fn gaussian_work(nbar: f64, epsilon: f64, xi: f64) -> f64 {
    let den = xi + epsilon * (1.0 + xi) * nbar;
    if den == 0.0 {
        return -xi;
    }
    xi * (1.0 - epsilon) * epsilon * nbar * nbar / den - xi
}

/// Low-excitation net work ξκ²εn̄²/(ξ + εn̄) − ξ.
pub fn low_excitation_work(nbar: f64, epsilon: f64, xi: f64) -> f64 {
    let den = xi + epsilon * nbar;
    if den == 0.0 {
        return -xi;
    }
    xi * (1.0 - epsilon) * epsilon * nbar * nbar / den - xi
}

/// ΔW of the low-excitation model: four outcomes (±1, 0), (0, ±1), each with
/// probability q = ξ/4 + εn̄/4 and work a, the rest with zero work.
pub fn low_excitation_rms(nbar: f64, epsilon: f64, xi: f64) -> f64 {
    let den = xi + epsilon * nbar;
    if den == 0.0 {
        return 0.0;
    }
    let q = 0.25 * den;
    let mean = 2.0 * (0.5 * xi).sqrt() * (1.0 - epsilon).sqrt() * epsilon.sqrt() * nbar / den;
    let a = 0.5 * mean * mean;
    a * (4.0 * q * (1.0 - 4.0 * q)).max(0.0).sqrt()
}

/// A strategy for evaluating the mean work at one configuration.
pub trait WorkModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn mode(&self) -> WorkMode;
    fn mean_work(&self, nbar: f64, cfg: SplitterConfig, with_unsqueeze: bool) -> Result<WorkEstimate>;
}

/// Exact lattice sum over the photocount-difference outcomes.
/// `level: None` refines the quadrature to convergence; `Some(l)` fixes the grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactLattice {
    pub level: Option<u32>,
}

impl ExactLattice {
    pub fn table(&self, nbar: f64, cfg: SplitterConfig) -> Result<WorkTable> {
        check_nbar(nbar)?;
        let ti = match self.level {
            None => ThermalIntegrals::converged(nbar, cfg, true)?,
            Some(l) => ThermalIntegrals::at_level(nbar, cfg, l, true)?,
        };
        Ok(WorkTable::from_integrals(&ti, cfg))
    }
}

impl WorkModel for ExactLattice {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn mode(&self) -> WorkMode {
        WorkMode::Exact
    }

    fn mean_work(&self, nbar: f64, cfg: SplitterConfig, with_unsqueeze: bool) -> Result<WorkEstimate> {
        let t = self.table(nbar, cfg)?;
        Ok(WorkEstimate {
            w_mean: t.mean_gross(with_unsqueeze) - cfg.xi(),
            w_rms: t.work_std(with_unsqueeze),
            e_rem: cfg.kappa * cfg.kappa * sigma_x2(nbar, cfg),
            mode: WorkMode::Exact,
        })
    }
}

/// Closed form of the gaussian approximation; unsqueezing contributes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianClosedForm;

impl WorkModel for GaussianClosedForm {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn mode(&self) -> WorkMode {
        WorkMode::Gaussian
    }

    fn mean_work(&self, nbar: f64, cfg: SplitterConfig, _with_unsqueeze: bool) -> Result<WorkEstimate> {
        check_nbar(nbar)?;
        let w = gaussian_work(nbar, cfg.epsilon(), cfg.xi());
        Ok(WorkEstimate {
            w_mean: w,
            w_rms: w + cfg.xi(),
            e_rem: cfg.kappa * cfg.kappa * sigma_x2(nbar, cfg),
            mode: WorkMode::Gaussian,
        })
    }
}

/// Closed form of the low-excitation (0/1 photon) approximation.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowExcitation;

impl WorkModel for LowExcitation {
    fn name(&self) -> &'static str {
        "low_excitation"
    }

    fn mode(&self) -> WorkMode {
        WorkMode::LowExcitation
    }

    fn mean_work(&self, nbar: f64, cfg: SplitterConfig, _with_unsqueeze: bool) -> Result<WorkEstimate> {
        check_nbar(nbar)?;
        let (e, xi) = (cfg.epsilon(), cfg.xi());
        Ok(WorkEstimate {
            w_mean: low_excitation_work(nbar, e, xi),
            w_rms: low_excitation_rms(nbar, e, xi),
            e_rem: cfg.kappa * cfg.kappa * sigma_x2(nbar, cfg),
            mode: WorkMode::LowExcitation,
        })
    }
}

/// Work models selectable by name.
pub struct WorkModelRegistry {
    models: Vec<Box<dyn WorkModel>>,
}

impl WorkModelRegistry {
    pub fn empty() -> Self {
        WorkModelRegistry { models: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = WorkModelRegistry::empty();
        r.register(Box::new(ExactLattice::default()));
        r.register(Box::new(GaussianClosedForm));
        r.register(Box::new(LowExcitation));
        r
    }

    /// Add a model, replacing any model registered under the same name.
    pub fn register(&mut self, model: Box<dyn WorkModel>) {
        self.models.retain(|m| m.name() != model.name());
        self.models.push(model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn WorkModel> {
        self.models
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| WofError::UnknownName { kind: "work model", name: name.to_string() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name()).collect()
    }
}

pub fn model_for(mode: WorkMode) -> Box<dyn WorkModel> {
    match mode {
        WorkMode::Exact => Box::new(ExactLattice::default()),
        WorkMode::Gaussian => Box::new(GaussianClosedForm),
        WorkMode::LowExcitation => Box::new(LowExcitation),
    }
}

pub fn mean_work(nbar: f64, cfg: SplitterConfig, mode: WorkMode, with_unsqueeze: bool) -> Result<WorkEstimate> {
    model_for(mode).mean_work(nbar, cfg, with_unsqueeze)
}

/// Optimal protocol parameters and the resulting work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPoint {
    pub kappa: f64,
    pub beta: f64,
    pub w_max: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub extractable: bool,
}

impl OptimalPoint {
    pub fn from_eps_xi(epsilon: f64, xi: f64, w_max: f64) -> Self {
        OptimalPoint {
            kappa: (1.0 - epsilon).sqrt(),
            beta: (0.5 * xi).sqrt(),
            w_max,
            epsilon,
            xi,
            extractable: w_max > 0.0,
        }
    }

    pub fn config(&self) -> Result<SplitterConfig> {
        SplitterConfig::new(self.kappa, self.beta)
    }
}

/// Analytic optimal split-off fraction ε = (√(n̄ − √n̄ + 1) − 1)/n̄.
pub fn analytic_epsilon(nbar: f64) -> f64 {
    ((nbar - nbar.sqrt() + 1.0).sqrt() - 1.0) / nbar
}

/// Analytic optimal LO energy ξ = (√(n̄(1−ε)) − 1)/(1 + 1/(εn̄)).
pub fn analytic_xi(nbar: f64, epsilon: f64) -> f64 {
    let en = epsilon * nbar;
    ((nbar * (1.0 - epsilon)).sqrt() - 1.0) * en / (en + 1.0)
}

/// W_max ≈ (√(n̄ − √n̄ + 1) − 1)²(1 − 1/√n̄).
pub fn w_max_formula(nbar: f64) -> f64 {
    let s = (nbar - nbar.sqrt() + 1.0).sqrt() - 1.0;
    s * s * (1.0 - 1.0 / nbar.sqrt())
}

/// Analytic optimum. Below the threshold n̄ ≤ 1 the raw (non-positive) W is
/// reported with ε and ξ clamped to the no-measurement point (0, 0).
pub fn w_max_analytic(nbar: f64) -> Result<OptimalPoint> {
    check_nbar(nbar)?;
    let w = w_max_formula(nbar);
    if nbar <= 1.0 {
        return Ok(OptimalPoint::from_eps_xi(0.0, 0.0, w));
    }
    let e = analytic_epsilon(nbar);
    Ok(OptimalPoint::from_eps_xi(e, analytic_xi(nbar, e), w))
}

/// Low-temperature optimum of the exact work in closed form:
/// W = ((n̄ − √n̄)/2)(√((n̄ + √n̄)/2) − 1)² at ε = (1 − 1/√n̄)/2.
/// This is not the stationary point of [`low_excitation_work`].
pub fn low_excitation_optimum(nbar: f64) -> Result<OptimalPoint> {
    check_nbar(nbar)?;
    if nbar <= 1.0 {
        return Ok(OptimalPoint::from_eps_xi(0.0, 0.0, 0.0));
    }
    let s = nbar.sqrt();
    let a = 0.5 * (nbar - s);
    let b = (0.5 * (nbar + s)).sqrt() - 1.0;
    Ok(OptimalPoint::from_eps_xi(0.5 * (1.0 - 1.0 / s), a * b, a * b * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitRegime {
    HighT,
    LowTGaussian,
    LowTExact,
}

impl FromStr for LimitRegime {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high_T" => Ok(LimitRegime::HighT),
            "low_T_gaussian" => Ok(LimitRegime::LowTGaussian),
            "low_T_exact" => Ok(LimitRegime::LowTExact),
            _ => Err(WofError::UnknownName { kind: "limit regime", name: s.to_string() }),
        }
    }
}

pub fn w_max_limits(nbar: f64, regime: LimitRegime) -> f64 {
    match regime {
        LimitRegime::HighT => nbar - 4.0 * nbar.sqrt() + 6.0,
        LimitRegime::LowTGaussian => (nbar - 1.0).powi(3) / 32.0,
        LimitRegime::LowTExact => 9.0 / 256.0 * (nbar - 1.0).powi(3),
    }
}

/// Energy flows of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBudget {
    pub e_in: f64,
    pub e_lo: f64,
    pub e_det: f64,
    pub e_rem: f64,
    pub w: f64,
    /// E_in + E_LO − E_det − W − E_rem.
    pub residual: f64,
}

impl EnergyBudget {
    fn new(e_in: f64, e_lo: f64, e_det: f64, e_rem: f64, w: f64) -> Self {
        EnergyBudget { e_in, e_lo, e_det, e_rem, w, residual: e_in + e_lo - e_det - w - e_rem }
    }
}

/// Large-n̄ expressions at the optimum: E_LO ≈ √n̄ − 5/2, E_det ≈ 2√n̄ − 4,
/// E_rem ≈ 2√n̄ − 2, W ≈ n̄ − 4√n̄ + 6. The residual equals E_LO.
pub fn energy_budget(nbar: f64) -> EnergyBudget {
    if nbar < 16.0 {
        log::warn!("asymptotic energy budget evaluated at nbar = {nbar} < 16");
    }
    let s = nbar.sqrt();
    EnergyBudget::new(nbar, s - 2.5, 2.0 * s - 4.0, 2.0 * s - 2.0, nbar - 4.0 * s + 6.0)
}

/// Non-asymptotic budget at a configuration. `w` is the net work
/// (LO energy already subtracted) and `gross` holds W + 2β².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetCheck {
    pub budget: EnergyBudget,
    pub gross: EnergyBudget,
}

pub fn energy_balance(nbar: f64, cfg: SplitterConfig, model: &dyn WorkModel) -> Result<BudgetCheck> {
    let est = model.mean_work(nbar, cfg, false)?;
    let (e_lo, e_det) = (cfg.xi(), cfg.epsilon() * nbar + cfg.xi());
    Ok(BudgetCheck {
        budget: EnergyBudget::new(nbar, e_lo, e_det, est.e_rem, est.w_mean),
        gross: EnergyBudget::new(nbar, e_lo, e_det, est.e_rem, est.w_mean + cfg.xi()),
    })
}

/// One pass of the remainder scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderStep {
    pub nbar: f64,
    pub w: f64,
}

/// Feed the remaining energy E_rem = 2√n̄ back as input: n̄_k = 2√n̄_{k−1},
/// W_k = W_max(n̄_k). Stops at n̄_k ≤ 1 + 1e−3 or after `max_steps` steps.
pub fn iterate_remainder(nbar0: f64, max_steps: usize) -> Result<Vec<RemainderStep>> {
    if !(nbar0 > 1.0) {
        return Err(crate::error::invalid("nbar0", format!("must exceed 1, got {nbar0}")));
    }
    let mut out = Vec::new();
    let mut n = nbar0;
    for _ in 0..max_steps {
        n = 2.0 * n.sqrt();
        out.push(RemainderStep { nbar: n, w: w_max_formula(n) });
        if n <= 1.0 + 1e-3 {
            break;
        }
    }
    Ok(out)
}
