//! Landauer resetting cost of the detectors, net work and efficiency, and
//! comparator engines.

use std::str::FromStr;

use serde::Serialize;

use crate::engine::{w_max_analytic, w_max_formula};
use crate::error::{invalid, Result, WofError};
use crate::noise::{work_with_noise, NoiseConfig};
use crate::photostatistics::{check_nbar, SplitterConfig};

/// Detector occupation before the measurement and its temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorThermalState {
    pub n_d0: f64,
    pub t_d: f64,
}

impl DetectorThermalState {
    pub fn new(n_d0: f64, t_d: f64) -> Result<Self> {
        if !(n_d0 >= 0.0 && n_d0.is_finite()) {
            return Err(invalid("n_d0", format!("must be finite and >= 0, got {n_d0}")));
        }
        if !(t_d >= 0.0 && t_d.is_finite()) {
            return Err(invalid("t_d", format!("must be finite and >= 0, got {t_d}")));
        }
        Ok(DetectorThermalState { n_d0, t_d })
    }

    /// Detector in equilibrium at temperature `t_d`: n_d0 = 1/(e^{1/T} − 1).
    pub fn from_temperature(t_d: f64) -> Result<Self> {
        let n = if t_d == 0.0 { 0.0 } else { 1.0 / (1.0 / t_d).exp_m1() };
        DetectorThermalState::new(n, t_d)
    }
}

/// Mean photon increase per detector.
pub fn detector_load(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig) -> f64 {
    let signal = 0.25 * cfg.epsilon() * nbar + 0.25 * cfg.kappa * cfg.kappa * noise.n_tau;
    noise.kd2() * (signal + 0.25 * noise.n_h + 0.5 * cfg.beta * cfg.beta + 0.5 * noise.n_lo) + noise.dark()
}

/// Entropy (n+1)ln(n+1) − n ln n of a thermal mode, in nats.
pub fn bose_entropy(n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    n.ln_1p() + n * (1.0 / n).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResetCost {
    pub i_bits: f64,
    pub q_reset: f64,
}

/// Information written into the four detectors and the heat needed to erase it.
pub fn reset_cost(load: f64, det: &DetectorThermalState) -> Result<ResetCost> {
    if !(load >= 0.0) {
        return Err(invalid("load", format!("must be >= 0, got {load}")));
    }
    let ds = 4.0 * (bose_entropy(load + det.n_d0) - bose_entropy(det.n_d0));
    let i_bits = ds / std::f64::consts::LN_2;
    Ok(ResetCost { i_bits, q_reset: i_bits * det.t_d * std::f64::consts::LN_2 })
}

/// The large-n̄ shorthand I ≈ ½ ln(n̄/4) quoted alongside the exact cost.
pub fn info_bits_shorthand(nbar: f64) -> f64 {
    0.5 * (nbar / 4.0).ln()
}

/// Large-n̄ limit of the exact cost at the optimum: 4S(√n̄/2)/ln 2 ≈ (4 + 2 ln(n̄/4))/ln 2.
pub fn info_bits_asymptotic(nbar: f64) -> f64 {
    (4.0 + 2.0 * (nbar / 4.0).ln()) / std::f64::consts::LN_2
}

/// Energy flows entering the efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetInputs {
    pub w_displacement: f64,
    pub w_unsqueeze: f64,
    pub e_lo: f64,
    pub e_det: f64,
    pub e_rem: f64,
    pub q_reset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkBudget {
    pub w_displacement: f64,
    pub w_unsqueeze: f64,
    pub e_lo: f64,
    pub e_det: f64,
    pub e_rem: f64,
    pub q_reset: f64,
    pub w_net: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub budget: WorkBudget,
    /// W_max/E_in from the analytic optimum.
    pub eta_max1: f64,
    /// 1 − E_rem/E_in.
    pub eta_reverse: f64,
}

pub fn efficiency(nbar: f64, inputs: BudgetInputs) -> Result<Efficiency> {
    check_nbar(nbar)?;
    let w_net = inputs.w_displacement + inputs.w_unsqueeze - inputs.q_reset;
    let budget = WorkBudget {
        w_displacement: inputs.w_displacement,
        w_unsqueeze: inputs.w_unsqueeze,
        e_lo: inputs.e_lo,
        e_det: inputs.e_det,
        e_rem: inputs.e_rem,
        q_reset: inputs.q_reset,
        w_net,
        eta: w_net / nbar,
    };
    Ok(Efficiency { budget, eta_max1: w_max_formula(nbar) / nbar, eta_reverse: 1.0 - inputs.e_rem / nbar })
}

/// Budget of a noisy engine run at `cfg`, in the gaussian approximation.
/// E_det counts everything absorbed by the four detectors, E_rem is the
/// transmitted energy minus the gross extracted work.
pub fn budget_inputs(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig, det: &DetectorThermalState) -> Result<BudgetInputs> {
    let w = work_with_noise(nbar, cfg, noise);
    let load = detector_load(nbar, cfg, noise);
    let xi = cfg.xi();
    let transmitted = cfg.kappa * cfg.kappa * nbar + cfg.epsilon() * noise.n_tau;
    Ok(BudgetInputs {
        w_displacement: w,
        w_unsqueeze: 0.0,
        e_lo: xi,
        e_det: 4.0 * load,
        e_rem: transmitted - (w + xi),
        q_reset: reset_cost(load, det)?.q_reset,
    })
}

/// Detector efficiency, temperature and spurious occupations of one efficiency curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyFamily {
    pub kappa_d2: f64,
    pub t_d: f64,
    pub n_lo: f64,
    pub n_d: f64,
}

impl EfficiencyFamily {
    pub const IDEAL: EfficiencyFamily = EfficiencyFamily { kappa_d2: 1.0, t_d: 0.0, n_lo: 0.0, n_d: 0.0 };

    pub fn label(&self) -> String {
        format!("kd2={}_td={}_nlo={}_nd={}", self.kappa_d2, self.t_d, self.n_lo, self.n_d)
    }

    pub fn noise(&self) -> Result<NoiseConfig> {
        if !(self.kappa_d2 > 0.0 && self.kappa_d2 <= 1.0) {
            return Err(invalid("kappa_d2", format!("must be in (0, 1], got {}", self.kappa_d2)));
        }
        NoiseConfig::new(self.kappa_d2.sqrt(), 0.0, 0.0, self.n_lo, self.n_d)
    }

    /// Efficiency at the ideal analytic optimum (κ, β) for this n̄.
    pub fn evaluate(&self, nbar: f64) -> Result<Efficiency> {
        check_nbar(nbar)?;
        if nbar <= 1.0 {
            return Err(invalid("nbar", format!("no extractable work at nbar = {nbar} <= 1")));
        }
        let cfg = w_max_analytic(nbar)?.config()?;
        let det = DetectorThermalState::from_temperature(self.t_d)?;
        efficiency(nbar, budget_inputs(nbar, cfg, &self.noise()?, &det)?)
    }
}

/// κ_D² ∈ {0.8, 0.9, 1.0} × T_D ∈ {0.01, 0.1} with n̄_LO = n̄_D = 0.05.
pub fn standard_families() -> Vec<EfficiencyFamily> {
    let mut v = Vec::new();
    for kappa_d2 in [0.8, 0.9, 1.0] {
        for t_d in [0.01, 0.1] {
            v.push(EfficiencyFamily { kappa_d2, t_d, n_lo: 0.05, n_d: 0.05 });
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OttoRegime {
    Frictionless,
    Sudden,
}

impl FromStr for OttoRegime {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frictionless" => Ok(OttoRegime::Frictionless),
            "sudden" => Ok(OttoRegime::Sudden),
            _ => Err(WofError::UnknownName { kind: "otto regime", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OttoBound {
    pub eta: f64,
    /// Work bound per reset window 1/Γ_c, in units of Γ_c.
    pub w_bound: f64,
    /// Power bound in units of Γ_c.
    pub p_bound: f64,
}

/// Otto engine comparator with bath rates in ratio Γ_h/Γ_c = `gamma_ratio`.
pub fn otto_comparator(t_h: f64, t_c: f64, gamma_ratio: f64, regime: OttoRegime) -> Result<OttoBound> {
    if !(t_h > t_c && t_c > 0.0) {
        return Err(invalid("temperatures", format!("need t_h > t_c > 0, got t_h = {t_h}, t_c = {t_c}")));
    }
    if !(gamma_ratio > 0.0) {
        return Err(invalid("gamma_ratio", format!("must be > 0, got {gamma_ratio}")));
    }
    let r = (t_c / t_h).sqrt();
    let eta = match regime {
        OttoRegime::Frictionless => 1.0 - r,
        OttoRegime::Sudden => (1.0 - r) / (2.0 + r),
    };
    let rate = gamma_ratio / (1.0 + gamma_ratio.sqrt()).powi(2);
    Ok(OttoBound { eta, w_bound: t_h * rate, p_bound: t_h * rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SzilardVariant {
    Unbiased,
    Optimized,
}

impl FromStr for SzilardVariant {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(SzilardVariant::Unbiased),
            "optimized" => Ok(SzilardVariant::Optimized),
            _ => Err(WofError::UnknownName { kind: "szilard variant", name: s.to_string() }),
        }
    }
}

/// Efficiency bound of the photodetection Szilard engine.
pub fn szilard_comparator(variant: SzilardVariant) -> f64 {
    match variant {
        SzilardVariant::Unbiased => 0.25,
        SzilardVariant::Optimized => 8.0 / 27.0,
    }
}
