//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wof_core::engine::*;
use wof_core::feedforward::{gaussian_gain, posterior, FeedforwardTable};
use wof_core::montecarlo::{run_trials, validate_formula};
use wof_core::noise::*;
use wof_core::optimize::optimize_numeric;
use wof_core::phase_space::{unsqueeze_work, GaussianMoments};
use wof_core::photostatistics::*;
use wof_core::quadrature::thermal_density;
use wof_core::special::skellam_pmf;
use wof_core::thermo::*;

const SEED: u64 = 2024;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn all(parts: Vec<Verdict>) -> Verdict {
    let pass = parts.iter().all(|v| v.pass);
    let detail = parts.iter().map(|v| format!("{}{}", if v.pass { "" } else { "[x] " }, v.detail)).collect::<Vec<_>>().join("; ");
    Verdict { pass, detail }
}

fn cfg(k: f64, b: f64) -> SplitterConfig {
    SplitterConfig::new(k, b).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn criterion_1() -> Verdict {
    let mut parts = Vec::new();
    for (nbar, k, b, want, tol) in [(1.55, 0.9424, 0.113, 0.00447, 0.05), (10.0, 0.902, 0.780, 2.31, 0.03)] {
        let (w, t) = timed(|| mean_work(nbar, cfg(k, b), WorkMode::Exact, false).unwrap().w_mean);
        let rel = (w / want - 1.0).abs();
        parts.push(Verdict::new(rel <= tol && t.as_secs_f64() < 60.0, format!("W({nbar}) = {w:.6} vs {want} (rel {rel:.2e}, {:.2}s)", t.as_secs_f64())));
    }
    all(parts)
}

fn criterion_2() -> Verdict {
    let mut parts = Vec::new();
    for nbar in [2.0, 5.0, 10.0, 50.0, 100.0] {
        let num = optimize_numeric(nbar, WorkMode::Gaussian, false).unwrap();
        let ana = w_max_analytic(nbar).unwrap();
        let r = |a: f64, b: f64| (a / b - 1.0).abs();
        let (de, dx, dw) = (r(num.epsilon, ana.epsilon), r(num.xi, ana.xi), r(num.w_max, ana.w_max));
        let worst = de.max(dx).max(dw);
        parts.push(Verdict::new(worst <= 0.02, format!("n={nbar}: dε {:.2}% dξ {:.2}% dW {:.2}%", 100.0 * de, 100.0 * dx, 100.0 * dw)));
    }
    all(parts)
}

fn criterion_3() -> Verdict {
    let mut parts = vec![Verdict::new(w_max_analytic(1.0).unwrap().w_max == 0.0, "W_max(1) = 0")];
    for nbar in [0.5, 1.0] {
        let w = optimize_numeric(nbar, WorkMode::Exact, false).unwrap().w_max;
        parts.push(Verdict::new(w <= 1e-3, format!("exact opt W({nbar}) = {w:.2e}")));
    }
    let grid_ok = (0..=200).map(|i| 1.2 * 10f64.powf(i as f64 / 50.0)).all(|n| w_max_formula(n) > 0.0);
    parts.push(Verdict::new(grid_ok, "closed-form W_max > 0 on [1.2, 1.2e4]"));
    let w12 = optimize_numeric(1.2, WorkMode::Exact, false).unwrap().w_max;
    parts.push(Verdict::new(w12 > 0.0, format!("exact opt W(1.2) = {w12:.3e}")));
    all(parts)
}

fn criterion_4() -> Verdict {
    let n = 1e4;
    let rel = (w_max_formula(n) - w_max_limits(n, LimitRegime::HighT)).abs() / n;
    Verdict::new(rel < 0.01, format!("|W_max − (n − 4√n + 6)|/n = {rel:.2e} at n = 1e4"))
}

fn criterion_5() -> Verdict {
    let (parts, t) = timed(|| {
        let mut parts = Vec::new();
        for (nbar, want) in [(2.0, 0.18), (5.0, 0.12)] {
            let p = optimize_numeric(nbar, WorkMode::Exact, false).unwrap();
            let c = p.config().unwrap();
            let model = ExactLattice::default();
            let w = model.mean_work(nbar, c, false).unwrap().w_mean;
            let wus = model.mean_work(nbar, c, true).unwrap().w_mean - w;
            let gain = wus / w;
            parts.push(Verdict::new((gain - want).abs() <= 0.03, format!("n={nbar}: W_US/W = {:.2}%", 100.0 * gain)));
        }
        parts
    });
    let mut parts = parts;
    parts.push(Verdict::new(t.as_secs_f64() < 600.0, format!("{:.1}s", t.as_secs_f64())));
    all(parts)
}

fn criterion_6() -> Verdict {
    let parts = ["mean_work_gaussian", "work_with_noise", "w_rms_identity"]
        .iter()
        .map(|t| {
            let r = validate_formula(t, None, 1_000_000, SEED).unwrap();
            Verdict::new(r.pass, format!("{} est {:.4} vs {:.4} z {:+.2} rel {:.2}%", r.target, r.estimate, r.analytic, r.z_score, 100.0 * r.rel_dev))
        })
        .collect();
    all(parts)
}

fn criterion_7() -> Verdict {
    let reg = NoiseCaseRegistry::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let case = reg.get(reg.names()[i % 5]).unwrap();
        let nbar = rng.random_range(0.1..100.0);
        let c = cfg(rng.random_range(0.01..0.99), rng.random_range(0.0..5.0));
        let param = if case.name() == "imperfect_detector" { rng.random_range(0.05..1.0) } else { rng.random_range(0.0..3.0) };
        let g = work_with_noise(nbar, c, &case.embed(param).unwrap()) + c.xi();
        let f = case.closed_form(nbar, c, param) + c.xi();
        worst = worst.max((g - f).abs() / g.abs().max(f.abs()).max(f64::MIN_POSITIVE));
    }
    let mut balanced = true;
    for _ in 0..100 {
        let nbar = rng.random_range(0.1..100.0);
        let c = cfg(rng.random_range(0.01..0.99), rng.random_range(0.0..5.0));
        let noise = NoiseConfig::new(rng.random_range(0.1..1.0), nbar, rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)).unwrap();
        balanced &= work_with_noise(nbar, c, &noise) == -c.xi();
    }
    all(vec![
        Verdict::new(worst <= 1e-12, format!("max rel dev {worst:.1e} over 1000 draws")),
        Verdict::new(balanced, "W(n_tau = n) = −2β² exactly"),
    ])
}

fn criterion_8() -> Verdict {
    let fl = otto_comparator(4.0, 1.0, 1.0, OttoRegime::Frictionless).unwrap().eta;
    let sudden_ok = (1..=60).all(|i| otto_comparator(1.0 + 10f64.powf(i as f64 / 5.0 - 4.0), 1.0, 1.0, OttoRegime::Sudden).unwrap().eta <= 0.5);
    let sz = (szilard_comparator(SzilardVariant::Unbiased), szilard_comparator(SzilardVariant::Optimized));
    let eta100 = w_max_formula(100.0) / 100.0;
    all(vec![
        Verdict::new((fl - 0.5).abs() < 1e-15, format!("Otto FL η = {fl}")),
        Verdict::new(sudden_ok, "Otto sudden η ≤ 0.5"),
        Verdict::new(sz == (0.25, 8.0 / 27.0), format!("Szilard {:.4}/{:.4}", sz.0, sz.1)),
        Verdict::new(eta100 > 8.0 / 27.0, format!("η_max1(100) = {eta100:.4}")),
    ])
}

fn criterion_9() -> Verdict {
    let grid: Vec<f64> = (0..=30).map(|i| 10f64.powf(1.0 + i as f64 / 10.0)).collect();
    let fams = standard_families();
    let curves: Vec<Vec<Efficiency>> = fams.iter().map(|f| grid.iter().map(|&n| f.evaluate(n).unwrap()).collect()).collect();
    let increasing = curves.iter().all(|c| c.windows(2).all(|w| w[1].budget.eta > w[0].budget.eta));
    let q_falls = curves
        .iter()
        .all(|c| (0..grid.len() - 1).filter(|&k| grid[k] >= 100.0).all(|k| c[k + 1].budget.q_reset / grid[k + 1] < c[k].budget.q_reset / grid[k]));
    let mut ordered = true;
    for t_d in [0.01, 0.1] {
        let idx: Vec<usize> = (0..fams.len()).filter(|&i| fams[i].t_d == t_d).collect();
        for k in 0..grid.len() {
            ordered &= idx.windows(2).all(|w| curves[w[1]][k].budget.eta > curves[w[0]][k].budget.eta);
        }
    }
    all(vec![
        Verdict::new(increasing, "η increasing in n"),
        Verdict::new(q_falls, "Q_reset/E_in decreasing for n ≥ 100"),
        Verdict::new(ordered, "η ordered by κ_D²"),
    ])
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    // Skellam normalization and moments
    let mut skellam = true;
    for _ in 0..200 {
        let (m1, m2) = (rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
        let n = (10.0 * f64::sqrt(m1 + m2) + 30.0) as i64;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for k in -n..=n {
            let p = skellam_pmf(k, m1, m2);
            s0 += p;
            s1 += k as f64 * p;
            s2 += (k * k) as f64 * p;
        }
        skellam &= (s0 - 1.0).abs() < 1e-9 && (s1 - (m1 - m2)).abs() < 1e-8 * (1.0 + m1 + m2) && (s2 - s1 * s1 - (m1 + m2)).abs() < 1e-7 * (1.0 + m1 + m2);
    }
    // outcome-distribution normalization
    let mut normalized = true;
    for (nbar, k, b) in [(0.3, 0.95, 0.1), (1.55, 0.9424, 0.113), (10.0, 0.902, 0.78), (40.0, 0.95, 1.5)] {
        for mode in [EstimateMode::Exact, EstimateMode::Gaussian] {
            let t = outcome_distribution_thermal(nbar, cfg(k, b), mode).unwrap().total();
            normalized &= t <= 1.0 + 1e-12 && t >= 1.0 - 1e-6;
        }
    }
    // Bayes consistency
    let (nbar, c) = (1.55, cfg(0.9424, 0.113));
    let dist = outcome_distribution_thermal(nbar, c, EstimateMode::Exact).unwrap();
    let posts: Vec<_> = dist.iter().filter(|&(_, p)| p > 1e-12).map(|(o, p)| (p, posterior(o, nbar, c).unwrap())).collect();
    let mut bayes: f64 = 0.0;
    for _ in 0..20 {
        let (x, p) = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
        let mix: f64 = posts.iter().map(|(w, post)| w * post.density(x, p)).sum();
        bayes = bayes.max((mix / thermal_density(nbar, x, p) - 1.0).abs());
    }
    // rotation invariance of the unsqueezing work
    let mut rot: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, d) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let s = GaussianMoments::new(0.0, 0.0, a * a + 0.5, b * b + d * d + 0.5, a * b).unwrap();
        let w = unsqueeze_work(&s);
        rot = rot.max((unsqueeze_work(&s.rotated(rng.random_range(0.0..std::f64::consts::TAU))) - w).abs() / (1.0 + w));
    }
    // MC energy ledger
    let c10 = cfg(0.902, 0.78);
    let noise = NoiseConfig::new(0.9f64.sqrt(), 0.0, 0.0, 0.05, 0.05).unwrap();
    let s = run_trials(10.0, c10, &noise, &noisy_feedforward_table(10.0, c10, &noise), 100_000, SEED).unwrap();
    let ideal = run_trials(10.0, c10, &NoiseConfig::IDEAL, &FeedforwardTable::linear(lattice_half_width(10.0, c10), c10.kappa * gaussian_gain(10.0, c10)), 100_000, SEED).unwrap();
    let ledger = s.max_energy_residual.max(ideal.max_energy_residual);
    all(vec![
        Verdict::new(skellam, "Skellam normalization/moments"),
        Verdict::new(normalized, "outcome distributions normalized"),
        Verdict::new(bayes < 1e-4, format!("Bayes consistency {bayes:.1e}")),
        Verdict::new(rot < 1e-10, format!("rotation invariance {rot:.1e}")),
        Verdict::new(ledger < 1e-9, format!("MC energy ledger {ledger:.1e}")),
    ])
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "reference values", criterion_1),
        (2, "optimum consistency", criterion_2),
        (3, "threshold", criterion_3),
        (4, "high-T expansion", criterion_4),
        (5, "unsqueezing gain", criterion_5),
        (6, "Monte Carlo oracle", criterion_6),
        (7, "noise algebra", criterion_7),
        (8, "comparators", criterion_8),
        (9, "efficiency curves", criterion_9),
        (10, "property suites", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let v = f();
        println!("{} criterion {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
