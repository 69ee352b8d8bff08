//! Monte Carlo oracle: thermal amplitudes drawn from the P-function, counts
//! simulated at field level through the detector network, outcome-conditioned
//! displacement applied to the true transmitted amplitude.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{gaussian_work, w_max_analytic};
use crate::error::{Result, WofError};
use crate::feedforward::{gaussian_gain, FeedforwardTable};
use crate::noise::{noisy_feedforward_table, work_with_noise, NoiseConfig};
use crate::photostatistics::{check_nbar, lattice_half_width, poisson_draw, CoherentAmplitude, Outcome, OutcomeDistribution, SplitterConfig};

const BLOCK: u64 = 4096;

/// Random stream of one trial: the master key with the trial index as stream id.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub alpha_true: CoherentAmplitude,
    /// Energy removed from the true transmitted field by the displacement.
    pub work_extracted: f64,
    /// Energy left in the transmitted field afterwards.
    pub post_energy: f64,
    /// ½(⟨x⟩² + ⟨p⟩²) of the looked-up displacement.
    pub table_work: f64,
    /// Energy entering all ports: signal, unused ports, local oscillators.
    pub energy_in: f64,
    /// Energy absorbed or diverted at the detectors.
    pub energy_detectors: f64,
    pub in_lattice: bool,
}

impl TrialResult {
    /// energy_in − (energy_detectors + work_extracted + post_energy).
    pub fn energy_residual(&self) -> f64 {
        self.energy_in - (self.energy_detectors + self.work_extracted + self.post_energy)
    }
}

type Complex = (f64, f64);

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex amplitude of a thermal field with mean occupation `n`.
fn thermal_field(n: f64, rng: &mut ChaCha8Rng) -> Complex {
    if n <= 0.0 {
        return (0.0, 0.0);
    }
    let s = (0.5 * n).sqrt();
    (s * normal(rng), s * normal(rng))
}

fn norm2(z: Complex) -> f64 {
    z.0 * z.0 + z.1 * z.1
}

pub fn simulate_trial(nbar: f64, cfg: SplitterConfig, noise: &NoiseConfig, table: &FeedforwardTable, rng: &mut ChaCha8Rng) -> TrialResult {
    let sd = nbar.sqrt();
    let (x, p) = (sd * normal(rng), sd * normal(rng));
    let (tx, tp) = if noise.n_tau > 0.0 {
        let s = noise.n_tau.sqrt();
        (s * normal(rng), s * normal(rng))
    } else {
        (0.0, 0.0)
    };
    let (k, e) = (cfg.kappa, cfg.epsilon().sqrt());
    let (sx, sp) = (e * x - k * tx, e * p - k * tp);
    let (ux, up) = (k * x + e * tx, k * p + e * tp);

    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let a = (r2 * sx, r2 * sp);
    let h = thermal_field(noise.n_h, rng);
    let arm_x = (r2 * (a.0 + h.0), r2 * (a.1 + h.1));
    let arm_p = (r2 * (a.0 - h.0), r2 * (a.1 - h.1));
    let lx = thermal_field(noise.n_lo, rng);
    let lp = thermal_field(noise.n_lo, rng);
    let lo_x = (cfg.beta + lx.0, lx.1);
    let lo_p = (-lp.1, cfg.beta + lp.0);
    let fields = [
        (r2 * (arm_x.0 + lo_x.0), r2 * (arm_x.1 + lo_x.1)),
        (r2 * (arm_x.0 - lo_x.0), r2 * (arm_x.1 - lo_x.1)),
        (r2 * (arm_p.0 + lo_p.0), r2 * (arm_p.1 + lo_p.1)),
        (r2 * (arm_p.0 - lo_p.0), r2 * (arm_p.1 - lo_p.1)),
    ];
    let (kd, ql) = (noise.kappa_d, noise.loss().sqrt());
    let mut counts = [0i64; 4];
    let mut e_det = 0.0;
    let mut e_dark = 0.0;
    for (j, f) in fields.iter().enumerate() {
        let d = thermal_field(noise.n_d, rng);
        e_dark += norm2(d);
        let detected = (kd * f.0 + ql * d.0, kd * f.1 + ql * d.1);
        let diverted = (ql * f.0 - kd * d.0, ql * f.1 - kd * d.1);
        e_det += norm2(detected) + norm2(diverted);
        counts[j] = poisson_draw(norm2(detected), rng);
    }
    let outcome = Outcome::new(counts[0] - counts[1], counts[2] - counts[3]);
    let (in_lattice, (dx, dp)) = match table.lookup(outcome) {
        Some(d) => (true, d),
        None => (false, (0.0, 0.0)),
    };
    let table_work = 0.5 * (dx * dx + dp * dp);
    let work = ux * dx + up * dp - table_work;
    let post = 0.5 * ((ux - dx).powi(2) + (up - dp).powi(2));
    let energy_in = 0.5 * (x * x + p * p) + 0.5 * (tx * tx + tp * tp) + norm2(h) + norm2(lo_x) + norm2(lo_p) + e_dark;
    TrialResult {
        outcome,
        alpha_true: CoherentAmplitude::new(x, p),
        work_extracted: work,
        post_energy: post,
        table_work,
        energy_in,
        energy_detectors: e_det,
        in_lattice,
    }
}

/// Run trials `start..end` and return every realization.
pub fn simulate_trials(
    nbar: f64,
    cfg: SplitterConfig,
    noise: &NoiseConfig,
    table: &FeedforwardTable,
    seed: u64,
    start: u64,
    end: u64,
) -> Vec<TrialResult> {
    (start..end).map(|i| simulate_trial(nbar, cfg, noise, table, &mut trial_rng(seed, i))).collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

#[derive(Debug, Clone)]
struct Partial {
    n: u64,
    table: [Sum; 4],
    ledger: [Sum; 2],
    diff2: Sum,
    outside: u64,
    max_residual: f64,
    histogram: Vec<u64>,
}

impl Partial {
    fn new(bins: usize) -> Self {
        Partial {
            n: 0,
            table: [Sum::default(); 4],
            ledger: [Sum::default(); 2],
            diff2: Sum::default(),
            outside: 0,
            max_residual: 0.0,
            histogram: vec![0; bins],
        }
    }

    fn merge(&mut self, o: &Partial) {
        self.n += o.n;
        for (a, b) in self.table.iter_mut().zip(&o.table) {
            a.add(b.value());
        }
        for (a, b) in self.ledger.iter_mut().zip(&o.ledger) {
            a.add(b.value());
        }
        self.diff2.add(o.diff2.value());
        self.outside += o.outside;
        self.max_residual = self.max_residual.max(o.max_residual);
        for (a, b) in self.histogram.iter_mut().zip(&o.histogram) {
            *a += b;
        }
    }
}

/// Ensemble estimates from a Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub n_trials: u64,
    /// Table-lookup average of ½(⟨x⟩²+⟨p⟩²) minus 2β².
    pub w_mean: f64,
    pub w_stderr: f64,
    /// Standard deviation ΔW of the table-lookup work.
    pub w_rms: f64,
    pub w_rms_stderr: f64,
    /// Per-trial energy-ledger average minus 2β².
    pub ledger_mean: f64,
    pub ledger_stderr: f64,
    /// Standard error of (ledger − table) per-trial differences.
    pub ledger_table_stderr: f64,
    pub out_of_lattice: u64,
    pub max_energy_residual: f64,
    pub histogram: OutcomeDistribution,
}

impl McSummary {
    pub fn out_of_lattice_fraction(&self) -> f64 {
        self.out_of_lattice as f64 / self.n_trials as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

pub fn run_trials(
    nbar: f64,
    cfg: SplitterConfig,
    noise: &NoiseConfig,
    table: &FeedforwardTable,
    n_trials: u64,
    seed: u64,
) -> Result<McSummary> {
    check_nbar(nbar)?;
    if n_trials == 0 {
        return Err(crate::error::invalid("n_trials", "must be >= 1"));
    }
    let side = 2 * table.half_width + 1;
    let blocks: Vec<u64> = (0..n_trials.div_ceil(BLOCK)).collect();
    let partials: Vec<Partial> = blocks
        .par_iter()
        .map(|&b| {
            let mut part = Partial::new(side * side);
            let n = table.half_width as i64;
            for i in b * BLOCK..((b + 1) * BLOCK).min(n_trials) {
                let t = simulate_trial(nbar, cfg, noise, table, &mut trial_rng(seed, i));
                part.n += 1;
                let g = t.table_work;
                part.table[0].add(g);
                part.table[1].add(g * g);
                part.table[2].add(g * g * g);
                part.table[3].add(g * g * g * g);
                part.ledger[0].add(t.work_extracted);
                part.ledger[1].add(t.work_extracted * t.work_extracted);
                part.diff2.add((t.work_extracted - g).powi(2));
                if t.in_lattice {
                    let idx = ((t.outcome.dnx + n) as usize) * side + (t.outcome.dnp + n) as usize;
                    part.histogram[idx] += 1;
                } else {
                    part.outside += 1;
                }
                part.max_residual = part.max_residual.max(t.energy_residual().abs());
            }
            part
        })
        .collect();
    let mut total = Partial::new(side * side);
    for p in &partials {
        total.merge(p);
    }
    let nf = total.n as f64;
    let m1 = total.table[0].value() / nf;
    let m2 = total.table[1].value() / nf;
    let m3 = total.table[2].value() / nf;
    let m4 = total.table[3].value() / nf;
    let var = (m2 - m1 * m1).max(0.0);
    let central4 = (m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4)).max(0.0);
    let bessel = if total.n > 1 { nf / (nf - 1.0) } else { 1.0 };
    let sd = (var * bessel).sqrt();
    let l1 = total.ledger[0].value() / nf;
    let lvar = (total.ledger[1].value() / nf - l1 * l1).max(0.0) * bessel;
    let dmean = l1 - m1;
    let dvar = (total.diff2.value() / nf - dmean * dmean).max(0.0) * bessel;
    let xi = cfg.xi();
    let histogram = OutcomeDistribution {
        half_width: table.half_width,
        probs: total.histogram.iter().map(|&c| c as f64 / nf).collect(),
    };
    Ok(McSummary {
        n_trials: total.n,
        w_mean: m1 - xi,
        w_stderr: sd / nf.sqrt(),
        w_rms: sd,
        w_rms_stderr: if var > 0.0 { ((central4 - var * var).max(0.0) / (4.0 * var * nf)).sqrt() } else { 0.0 },
        ledger_mean: l1 - xi,
        ledger_stderr: (lvar / nf).sqrt(),
        ledger_table_stderr: (dvar / nf).sqrt(),
        out_of_lattice: total.outside,
        max_energy_residual: total.max_residual,
        histogram,
    })
}

/// Parameters of a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationParams {
    pub nbar: f64,
    pub cfg: SplitterConfig,
    pub noise: NoiseConfig,
}

impl ValidationParams {
    /// Analytic optimum at n̄ with ideal detection.
    pub fn ideal_optimum(nbar: f64) -> Result<Self> {
        Ok(ValidationParams { nbar, cfg: w_max_analytic(nbar)?.config()?, noise: NoiseConfig::IDEAL })
    }

    /// Analytic optimum at n̄ = 10 with κ_D² = 0.9 and n̄_LO = n̄_D = 0.05.
    pub fn noisy_detector_point() -> Result<Self> {
        let mut p = ValidationParams::ideal_optimum(10.0)?;
        p.noise = NoiseConfig::new(0.9f64.sqrt(), 0.0, 0.0, 0.05, 0.05)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub target: String,
    pub estimate: f64,
    pub analytic: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub rel_dev: f64,
    pub out_of_lattice_fraction: f64,
    pub pass: bool,
    pub n_trials: u64,
    pub seed: u64,
}

/// Maximum tolerated fraction of outcomes outside the feedforward lattice.
pub const MAX_OUTSIDE: f64 = 1e-4;

impl ValidationReport {
    fn new(target: &str, estimate: f64, analytic: f64, stderr: f64, s: &McSummary, seed: u64) -> Self {
        let z = if stderr > 0.0 { (estimate - analytic) / stderr } else if estimate == analytic { 0.0 } else { f64::INFINITY };
        let rel = if analytic != 0.0 { (estimate - analytic).abs() / analytic.abs() } else { (estimate - analytic).abs() };
        let outside = s.out_of_lattice_fraction();
        ValidationReport {
            target: target.to_string(),
            estimate,
            analytic,
            stderr,
            z_score: z,
            rel_dev: rel,
            out_of_lattice_fraction: outside,
            pass: z.abs() < 3.0 && rel < 0.05 && outside < MAX_OUTSIDE,
            n_trials: s.n_trials,
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<20} estimate {:.6} analytic {:.6} stderr {:.2e} z {:+.2} rel {:.2e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.target,
            self.estimate,
            self.analytic,
            self.stderr,
            self.z_score,
            self.rel_dev
        )
    }
}

/// A closed-form result checked against the Monte Carlo.
pub trait ValidationTarget: Send + Sync {
    fn name(&self) -> &'static str;
    fn default_params(&self) -> Result<ValidationParams>;
    fn run(&self, params: &ValidationParams, n_trials: u64, seed: u64) -> Result<ValidationReport>;
}

fn gaussian_table(params: &ValidationParams) -> FeedforwardTable {
    let hw = lattice_half_width(params.nbar, params.cfg);
    FeedforwardTable::linear(hw, params.cfg.kappa * gaussian_gain(params.nbar, params.cfg))
}

/// Mean work of the gaussian approximation.
pub struct MeanWorkGaussian;
/// Mean work of the general noise model.
pub struct WorkWithNoise;
/// ΔW = W + 2β².
pub struct WRmsIdentity;

impl ValidationTarget for MeanWorkGaussian {
    fn name(&self) -> &'static str {
        "mean_work_gaussian"
    }
    fn default_params(&self) -> Result<ValidationParams> {
        ValidationParams::ideal_optimum(10.0)
    }
    fn run(&self, params: &ValidationParams, n_trials: u64, seed: u64) -> Result<ValidationReport> {
        let s = run_trials(params.nbar, params.cfg, &params.noise, &gaussian_table(params), n_trials, seed)?;
        let analytic = gaussian_work(params.nbar, params.cfg.epsilon(), params.cfg.xi());
        Ok(ValidationReport::new(self.name(), s.w_mean, analytic, s.w_stderr, &s, seed))
    }
}

impl ValidationTarget for WorkWithNoise {
    fn name(&self) -> &'static str {
        "work_with_noise"
    }
    fn default_params(&self) -> Result<ValidationParams> {
        ValidationParams::noisy_detector_point()
    }
    fn run(&self, params: &ValidationParams, n_trials: u64, seed: u64) -> Result<ValidationReport> {
        let table = noisy_feedforward_table(params.nbar, params.cfg, &params.noise);
        let s = run_trials(params.nbar, params.cfg, &params.noise, &table, n_trials, seed)?;
        let analytic = work_with_noise(params.nbar, params.cfg, &params.noise);
        Ok(ValidationReport::new(self.name(), s.w_mean, analytic, s.w_stderr, &s, seed))
    }
}

impl ValidationTarget for WRmsIdentity {
    fn name(&self) -> &'static str {
        "w_rms_identity"
    }
    fn default_params(&self) -> Result<ValidationParams> {
        ValidationParams::ideal_optimum(10.0)
    }
    fn run(&self, params: &ValidationParams, n_trials: u64, seed: u64) -> Result<ValidationReport> {
        let s = run_trials(params.nbar, params.cfg, &params.noise, &gaussian_table(params), n_trials, seed)?;
        let analytic = gaussian_work(params.nbar, params.cfg.epsilon(), params.cfg.xi()) + params.cfg.xi();
        Ok(ValidationReport::new(self.name(), s.w_rms, analytic, s.w_rms_stderr, &s, seed))
    }
}

pub struct ValidationRegistry {
    targets: Vec<Box<dyn ValidationTarget>>,
}

impl ValidationRegistry {
    pub fn standard() -> Self {
        ValidationRegistry { targets: vec![Box::new(MeanWorkGaussian), Box::new(WorkWithNoise), Box::new(WRmsIdentity)] }
    }

    pub fn get(&self, name: &str) -> Result<&dyn ValidationTarget> {
        self.targets
            .iter()
            .find(|t| t.name() == name)
            .map(|t| t.as_ref())
            .ok_or_else(|| WofError::UnknownName { kind: "validation target", name: name.to_string() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.targets.iter().map(|t| t.name()).collect()
    }
}

/// Validate a named target at its default parameters.
pub fn validate_formula(target: &str, params: Option<ValidationParams>, n_trials: u64, seed: u64) -> Result<ValidationReport> {
    let reg = ValidationRegistry::standard();
    let t = reg.get(target)?;
    let params = match params {
        Some(p) => p,
        None => t.default_params()?,
    };
    t.run(&params, n_trials, seed)
}

/// Validation matrix presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValidationSuite {
    Quick,
    Standard,
    Deep,
}

impl std::str::FromStr for ValidationSuite {
    type Err = WofError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(ValidationSuite::Quick),
            "standard" => Ok(ValidationSuite::Standard),
            "deep" => Ok(ValidationSuite::Deep),
            _ => Err(WofError::UnknownName { kind: "validation suite", name: s.to_string() }),
        }
    }
}

impl ValidationSuite {
    pub const ALL: [ValidationSuite; 3] = [ValidationSuite::Quick, ValidationSuite::Standard, ValidationSuite::Deep];

    pub fn name(&self) -> &'static str {
        match self {
            ValidationSuite::Quick => "quick",
            ValidationSuite::Standard => "standard",
            ValidationSuite::Deep => "deep",
        }
    }

    pub fn n_trials(&self) -> u64 {
        match self {
            ValidationSuite::Quick => 10_000,
            ValidationSuite::Standard => 1_000_000,
            ValidationSuite::Deep => 100_000_000,
        }
    }

    /// Quick is a smoke test on the mean-work targets; the fluctuation
    /// identity needs the larger samples.
    pub fn targets(&self) -> Vec<&'static str> {
        let all = ValidationRegistry::standard().names();
        match self {
            ValidationSuite::Quick => all.into_iter().filter(|n| *n != "w_rms_identity").collect(),
            _ => all,
        }
    }

    /// Run every target of the suite at its default parameters; trials default to the preset.
    pub fn run(&self, n_trials: Option<u64>, seed: u64) -> Result<Vec<ValidationReport>> {
        let n = n_trials.unwrap_or(self.n_trials());
        self.targets().into_iter().map(|t| validate_formula(t, None, n, seed)).collect()
    }
}
