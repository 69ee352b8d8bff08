//! Bounded Nelder–Mead and the numeric maximization of the mean work over
//! (ε, ξ) = (1 − κ², 2β²).

use serde::Serialize;

use crate::engine::{gaussian_work, low_excitation_work, ExactLattice, OptimalPoint, WorkMode, WorkModel};
use crate::error::{Result, WofError};
use crate::photostatistics::{check_nbar, SplitterConfig, ThermalIntegrals, QUADRATURE_TOL};
use crate::quadrature::GridSpec;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Stop once every vertex lies within this max-norm distance of the best.
    pub xtol: f64,
    pub max_evals: usize,
    /// Initial simplex offsets per coordinate.
    pub step: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub diameter: f64,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Minimize `f` over the box [lo, hi]; trial points are projected onto the box.
pub fn nelder_mead_bounded<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start, lo, hi);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += opts.step[i];
        if v[i] > hi[i] {
            v[i] = start[i] - opts.step[i];
        }
        clamp(&mut v, lo, hi);
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let diameter = |s: &[Vec<f64>]| -> f64 {
        s[1..].iter().map(|v| v.iter().zip(&s[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max)
    };

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();
        let d = diameter(&simplex);
        if d < opts.xtol || evals >= opts.max_evals {
            return NelderMeadResult { x: simplex[0].clone(), f: fv[0], evaluations: evals, diameter: d, converged: d < opts.xtol };
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clamp(&mut v, lo, hi);
            v
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            let v: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
            simplex[i] = v;
            fv[i] = eval(&simplex[i], &mut evals);
        }
    }
}

/// Bounds on (ε, ξ).
pub const EPS_BOUNDS: (f64, f64) = (1e-6, 1.0 - 1e-6);
pub const XI_FLOOR: f64 = 1e-12;
pub const SIMPLEX_TOL: f64 = 1e-6;
const SEED_GRID: usize = 32;
const MAX_EVALS: usize = 4000;

/// Numeric optimum together with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    pub point: OptimalPoint,
    pub evaluations: usize,
    pub simplex_diameter: f64,
    /// ‖(ε ∂W/∂ε, ξ ∂W/∂ξ)‖ relative to the gross work W + ξ, with components
    /// at an active bound dropped when the gradient points outward.
    pub gradient_norm: f64,
    pub grid_level: Option<u32>,
}

/// Seed point from a log-spaced grid over (ε, ξ) on a cheap closed form.
fn grid_seed(nbar: f64, objective: &dyn Fn(f64, f64) -> f64) -> (f64, f64) {
    let xi_hi = nbar;
    let xi_lo = (nbar * 1e-5).max(1e-8).min(xi_hi * 0.5);
    let (e_lo, e_hi) = (1e-4, 0.999);
    let logspace = |a: f64, b: f64, i: usize| (a.ln() + (b.ln() - a.ln()) * i as f64 / (SEED_GRID - 1) as f64).exp();
    let mut best = (f64::NEG_INFINITY, 0.5, xi_lo);
    for i in 0..SEED_GRID {
        let e = logspace(e_lo, e_hi, i);
        for j in 0..SEED_GRID {
            let xi = logspace(xi_lo, xi_hi, j);
            let w = objective(e, xi);
            if w > best.0 {
                best = (w, e, xi);
            }
        }
    }
    (best.1, best.2)
}

/// Grid level whose tables already agree with the next level to tolerance.
pub fn sufficient_level(nbar: f64, cfg: SplitterConfig) -> Result<u32> {
    let mut coarse = ThermalIntegrals::at_level(nbar, cfg, 0, true)?;
    for level in 0..3 {
        let fine = ThermalIntegrals::at(nbar, cfg, GridSpec::level(level + 1), coarse.half_width, true);
        if coarse.relative_change(&fine) <= QUADRATURE_TOL {
            return Ok(level);
        }
        coarse = fine;
    }
    Err(WofError::QuadratureNonConvergence { residual: f64::NAN })
}

/// Maximize the mean work of `mode` over (κ, β).
pub fn optimize_numeric(nbar: f64, mode: WorkMode, with_unsqueeze: bool) -> Result<OptimalPoint> {
    Ok(optimize_report(nbar, mode, with_unsqueeze)?.point)
}

pub fn optimize_report(nbar: f64, mode: WorkMode, with_unsqueeze: bool) -> Result<OptimizationReport> {
    check_nbar(nbar)?;
    let seed_fn: Box<dyn Fn(f64, f64) -> f64> = match mode {
        WorkMode::LowExcitation => Box::new(move |e, x| low_excitation_work(nbar, e, x)),
        _ => Box::new(move |e, x| gaussian_work(nbar, e, x)),
    };
    let (e0, x0) = grid_seed(nbar, seed_fn.as_ref());
    let (model, level): (Box<dyn WorkModel>, Option<u32>) = match mode {
        WorkMode::Exact => {
            let level = sufficient_level(nbar, SplitterConfig::from_eps_xi(e0, x0)?)?;
            (Box::new(ExactLattice { level: Some(level) }), Some(level))
        }
        m => (crate::engine::model_for(m), None),
    };
    let failure = std::cell::Cell::new(None::<WofError>);
    let objective = |e: f64, xi: f64| -> f64 {
        let cfg = match SplitterConfig::from_eps_xi(e, xi) {
            Ok(c) => c,
            Err(_) => return f64::NEG_INFINITY,
        };
        match model.mean_work(nbar, cfg, with_unsqueeze) {
            Ok(w) => w.w_mean,
            Err(err) => {
                failure.set(Some(err));
                f64::NEG_INFINITY
            }
        }
    };
    let lo = [EPS_BOUNDS.0, XI_FLOOR];
    let hi = [EPS_BOUNDS.1, nbar];
    let opts = NelderMeadOptions {
        xtol: SIMPLEX_TOL,
        max_evals: MAX_EVALS,
        step: vec![0.1 * e0.max(1e-4), 0.1 * x0.max(1e-6)],
    };
    let nm = nelder_mead_bounded(|v| -objective(v[0], v[1]), &[e0, x0], &lo, &hi, &opts);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    let (e, xi) = (nm.x[0], nm.x[1]);
    let point = OptimalPoint::from_eps_xi(e, xi, -nm.f);
    if !nm.converged {
        return Err(WofError::NonConvergence {
            evaluations: nm.evaluations,
            best_w: point.w_max,
            best_kappa: point.kappa,
            best_beta: point.beta,
        });
    }
    let gradient_norm = stationarity(&objective, e, xi, point.w_max, &lo, &hi);
    Ok(OptimizationReport { point, evaluations: nm.evaluations, simplex_diameter: nm.diameter, gradient_norm, grid_level: level })
}

fn stationarity(objective: &dyn Fn(f64, f64) -> f64, e: f64, xi: f64, w: f64, lo: &[f64; 2], hi: &[f64; 2]) -> f64 {
    let at = [e, xi];
    let mut g = [0.0; 2];
    for i in 0..2 {
        let h = 1e-4 * at[i];
        let (mut up, mut dn) = (at, at);
        up[i] += h;
        dn[i] -= h;
        let d = (objective(up[0], up[1]) - objective(dn[0], dn[1])) / (2.0 * h) * at[i];
        let at_lower = at[i] <= lo[i] * (1.0 + 1e-9) && d < 0.0;
        let at_upper = at[i] >= hi[i] * (1.0 - 1e-9) && d > 0.0;
        g[i] = if at_lower || at_upper { 0.0 } else { d };
    }
    g[0].hypot(g[1]) / (w + xi).abs().max(1e-300)
}
