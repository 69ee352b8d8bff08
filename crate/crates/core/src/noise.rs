//! Extractable work under detector inefficiency, dark counts and spurious
//! thermal noise in the unused ports.

use serde::Serialize;

use crate::engine::gaussian_work;
use crate::error::{invalid, Result, WofError};
use crate::feedforward::FeedforwardTable;
use crate::photostatistics::{half_width_for, SplitterConfig};

/// Detector amplitude efficiency and thermal occupations of the unused ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseConfig {
    pub kappa_d: f64,
    pub n_tau: f64,
    pub n_h: f64,
    pub n_lo: f64,
    pub n_d: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::IDEAL
    }
}

impl NoiseConfig {
    pub const IDEAL: NoiseConfig = NoiseConfig { kappa_d: 1.0, n_tau: 0.0, n_h: 0.0, n_lo: 0.0, n_d: 0.0 };

    pub fn new(kappa_d: f64, n_tau: f64, n_h: f64, n_lo: f64, n_d: f64) -> Result<Self> {
        if !(kappa_d > 0.0 && kappa_d <= 1.0) {
            return Err(invalid("kappa_d", format!("must lie in (0, 1], got {kappa_d}")));
        }
        for (name, v) in [("n_tau", n_tau), ("n_h", n_h), ("n_lo", n_lo), ("n_d", n_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("occupation must be finite and >= 0, got {v}")));
            }
        }
        Ok(NoiseConfig { kappa_d, n_tau, n_h, n_lo, n_d })
    }

    /// Power transmissivity κ_D².
    pub fn kd2(&self) -> f64 {
        self.kappa_d * self.kappa_d
    }

    /// Power lost before detection, 1 − κ_D², computed without cancellation.
    pub fn loss(&self) -> f64 {
        (1.0 - self.kappa_d) * (1.0 + self.kappa_d)
    }

    /// Mean dark-count contribution N̄_D = (1 − κ_D²) n̄_D.
    pub fn dark(&self) -> f64 {
        self.loss() * self.n_d
    }

    pub fn is_ideal(&self) -> bool {
        *self == NoiseConfig::IDEAL
    }
}

/// Signal mean ⟨x̃² + p̃²⟩ reaching the homodyne stage, εn̄ + κ²n̄_τ.
fn signal_power(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    cfg.epsilon() * nbar + cfg.kappa * cfg.kappa * noise.n_tau
}

/// Gaussian width D² of the count-difference likelihood.
pub fn gaussian_width_d2(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    let kd2 = noise.kd2();
    let dark = noise.dark();
    let b2 = cfg.beta * cfg.beta;
    let (nh, nlo) = (noise.n_h, noise.n_lo);
    kd2 * kd2 * nh * nlo
        + 0.5 * kd2 * (nh + 2.0 * nlo) * dark
        + 2.0 * dark * dark
        + kd2 * (1.0 + 2.0 * dark) * b2
        + 0.5 * kd2 * (kd2 * (nh + 2.0 * nlo) + 2.0 * dark + 1.0) * signal_power(nbar, cfg, noise)
        + 0.5 * kd2 * nh
        + kd2 * nlo
        + 2.0 * dark
}

/// Denominator κ_D⁴β²[εn̄ + κ²n̄_τ] + D² shared by the work and the estimator.
fn noisy_denominator(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    let kd2 = noise.kd2();
    kd2 * kd2 * cfg.beta * cfg.beta * signal_power(nbar, cfg, noise) + gaussian_width_d2(nbar, cfg, noise)
}

pub fn work_with_noise(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    let kd2 = noise.kd2();
    let b2 = cfg.beta * cfg.beta;
    let imbalance = nbar - noise.n_tau;
    let num = kd2 * kd2 * b2 * cfg.kappa * cfg.kappa * cfg.epsilon() * imbalance * imbalance;
    let den = noisy_denominator(nbar, cfg, noise);
    if den == 0.0 {
        return -2.0 * b2;
    }
    num / den - 2.0 * b2
}

/// Gain g of the posterior mean ⟨x⟩ = g Δn_x (transmitted mode, κ included).
pub fn noisy_gain(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    let den = noisy_denominator(nbar, cfg, noise);
    if den == 0.0 {
        return 0.0;
    }
    noise.kd2() * cfg.beta * cfg.kappa * cfg.epsilon().sqrt() * (nbar - noise.n_tau) / den
}

/// Linear feedforward table for the noisy detector, on a lattice sized by D².
pub fn noisy_feedforward_table(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> FeedforwardTable {
    let hw = half_width_for(gaussian_width_d2(nbar, cfg, noise));
    FeedforwardTable::linear(hw, noisy_gain(nbar, cfg, noise))
}

/// One of the analyzed single-imperfection models.
pub trait NoiseCase: Send + Sync {
    fn name(&self) -> &'static str;
    /// General noise configuration that reproduces this case.
    fn embed(&self, param: f64) -> Result<NoiseConfig>;
    /// Closed-form net work of this case.
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, param: f64) -> f64;
}

fn ideal_parts(nbar: f64, cfg: SplitterConfig) -> (f64, f64, f64) {
    (cfg.xi(), cfg.kappa * cfg.kappa, cfg.epsilon() * nbar)
}

pub struct ImperfectDetector;
pub struct TauNoise;
pub struct HomodyneNoise;
pub struct LoNoise;
pub struct DarkCounts;

impl NoiseCase for ImperfectDetector {
    fn name(&self) -> &'static str {
        "imperfect_detector"
    }
    fn embed(&self, kappa_d: f64) -> Result<NoiseConfig> {
        NoiseConfig::new(kappa_d, 0.0, 0.0, 0.0, 0.0)
    }
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, kappa_d: f64) -> f64 {
        let (xi, k2, en) = ideal_parts(nbar, cfg);
        let kd2 = kappa_d * kappa_d;
        kd2 * xi * k2 * en * nbar / (xi + en * (1.0 + xi * kd2)) - xi
    }
}

impl NoiseCase for TauNoise {
    fn name(&self) -> &'static str {
        "tau_noise"
    }
    fn embed(&self, n_tau: f64) -> Result<NoiseConfig> {
        NoiseConfig::new(1.0, n_tau, 0.0, 0.0, 0.0)
    }
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, n_tau: f64) -> f64 {
        let (xi, k2, _) = ideal_parts(nbar, cfg);
        let e = cfg.epsilon();
        let d = nbar - n_tau;
        xi * k2 * e * d * d / (xi + (1.0 + xi) * (e * nbar + k2 * n_tau)) - xi
    }
}

impl NoiseCase for HomodyneNoise {
    fn name(&self) -> &'static str {
        "homodyne_noise"
    }
    fn embed(&self, n_h: f64) -> Result<NoiseConfig> {
        NoiseConfig::new(1.0, 0.0, n_h, 0.0, 0.0)
    }
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, n_h: f64) -> f64 {
        let (xi, k2, en) = ideal_parts(nbar, cfg);
        xi * k2 * en * nbar / (xi + en * (1.0 + xi + n_h) + n_h) - xi
    }
}

impl NoiseCase for LoNoise {
    fn name(&self) -> &'static str {
        "lo_noise"
    }
    fn embed(&self, n_lo: f64) -> Result<NoiseConfig> {
        NoiseConfig::new(1.0, 0.0, 0.0, n_lo, 0.0)
    }
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, n_lo: f64) -> f64 {
        let (xi, k2, en) = ideal_parts(nbar, cfg);
        xi * k2 * en * nbar / (xi + en * (1.0 + xi + 2.0 * n_lo) + 2.0 * n_lo) - xi
    }
}

/// κ_D one ulp below 1 with the loss carried by n̄_D, so (1 − κ_D²)n̄_D = N̄_D.
pub const DARK_KAPPA_D: f64 = 1.0 - f64::EPSILON / 2.0;

impl NoiseCase for DarkCounts {
    fn name(&self) -> &'static str {
        "dark_counts"
    }
    fn embed(&self, dark: f64) -> Result<NoiseConfig> {
        let loss = (1.0 - DARK_KAPPA_D) * (1.0 + DARK_KAPPA_D);
        NoiseConfig::new(DARK_KAPPA_D, 0.0, 0.0, 0.0, dark / loss)
    }
    fn closed_form(&self, nbar: f64, cfg: SplitterConfig, dark: f64) -> f64 {
        let (xi, k2, en) = ideal_parts(nbar, cfg);
        let b2 = cfg.beta * cfg.beta;
        xi * k2 * en * nbar / (xi + en * (1.0 + xi + 2.0 * dark) + 4.0 * dark * (1.0 + b2 + dark)) - xi
    }
}

/// Noise cases selectable by name.
pub struct NoiseCaseRegistry {
    cases: Vec<Box<dyn NoiseCase>>,
}

impl NoiseCaseRegistry {
    pub fn standard() -> Self {
        NoiseCaseRegistry {
            cases: vec![
                Box::new(ImperfectDetector),
                Box::new(TauNoise),
                Box::new(HomodyneNoise),
                Box::new(LoNoise),
                Box::new(DarkCounts),
            ],
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn NoiseCase> {
        self.cases
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
            .ok_or_else(|| WofError::UnknownName { kind: "noise case", name: name.to_string() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.cases.iter().map(|c| c.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn NoiseCase> {
        self.cases.iter().map(|c| c.as_ref())
    }
}

pub fn work_special_case(case: &str, nbar: f64, cfg: SplitterConfig, param: f64) -> Result<f64> {
    Ok(NoiseCaseRegistry::standard().get(case)?.closed_form(nbar, cfg, param))
}

/// Ideal-limit work for comparison in sweeps.
pub fn ideal_work(nbar: f64, cfg: SplitterConfig) -> f64 {
    gaussian_work(nbar, cfg.epsilon(), cfg.xi())
}
