use wof_core::engine::*;
use wof_core::optimize::*;
use wof_core::SplitterConfig;

fn cfg(k: f64, b: f64) -> SplitterConfig {
    SplitterConfig::new(k, b).unwrap()
}

#[test]
fn trivial_limits() {
    let c = cfg(0.9, 0.0);
    assert_eq!(mean_work(10.0, c, WorkMode::Gaussian, false).unwrap().w_mean, 0.0);
    let w = gaussian_work(10.0, 0.0, 0.5);
    assert_eq!(w, -0.5);
    let e = mean_work(3.0, cfg(0.9, 0.0), WorkMode::Exact, false).unwrap();
    assert!(e.w_mean.abs() < 1e-15);
    assert!(mean_work(0.0, c, WorkMode::Gaussian, false).is_err());
    assert!(mean_work(f64::NAN, c, WorkMode::Gaussian, false).is_err());
}

#[test]
fn fluctuation_identity_in_gaussian_mode() {
    for &(n, k, b) in &[(2.0, 0.92, 0.19), (10.0, 0.902, 0.78), (500.0, 0.97, 3.1)] {
        let c = cfg(k, b);
        let e = mean_work(n, c, WorkMode::Gaussian, false).unwrap();
        assert!((e.w_rms - e.w_mean - c.xi()).abs() < 1e-12 * e.w_rms.max(1.0));
        assert!(e.e_rem >= 0.0 && e.w_rms >= 0.0);
    }
}

#[test]
fn analytic_optimum_examples() {
    assert_eq!(w_max_analytic(1.0).unwrap().w_max, 0.0);
    let p = w_max_analytic(10.0).unwrap();
    assert!((p.w_max - 2.215).abs() < 1e-3 && (p.kappa - 0.906).abs() < 1e-3, "{p:?}");
    assert!((p.kappa * p.kappa + p.epsilon - 1.0).abs() < 1e-12);
    assert!((2.0 * p.beta * p.beta - p.xi).abs() < 1e-12);
    let p = w_max_analytic(100.0).unwrap();
    assert!((p.w_max - 65.6).abs() < 0.05);
    assert!((p.w_max / w_max_limits(100.0, LimitRegime::HighT) - 1.0).abs() < 0.01);
    assert!(w_max_analytic(0.7).unwrap().w_max <= 0.0 && !w_max_analytic(0.7).unwrap().extractable);
    assert!(w_max_analytic(1.01).unwrap().w_max > 0.0);
}

#[test]
fn analytic_optimum_is_monotone() {
    let mut last = 0.0;
    for i in 1..=400 {
        let n = 1.0 + 0.05 * i as f64;
        let w = w_max_analytic(n).unwrap().w_max;
        assert!(w > last, "{n}");
        last = w;
    }
}

#[test]
fn exact_never_far_above_gaussian() {
    // compared on the gross work W + 2β², which stays positive
    for n in [1.55, 5.0, 10.0] {
        for k in [0.7, 0.9, 0.98] {
            for b in [0.05, 0.5, 1.0] {
                let c = cfg(k, b);
                let e = mean_work(n, c, WorkMode::Exact, false).unwrap().w_mean + c.xi();
                let g = gaussian_work(n, c.epsilon(), c.xi()) + c.xi();
                assert!(e <= 1.1 * g, "{n} {k} {b}: {e} vs {g}");
            }
        }
    }
}

#[test]
fn exact_mode_second_moment() {
    let c = cfg(0.902, 0.78);
    let e = mean_work(10.0, c, WorkMode::Exact, false).unwrap();
    let t = ExactLattice::default().table(10.0, c).unwrap();
    assert_eq!(e.w_rms, t.work_std(false));
    let m1: f64 = t.prob.iter().zip(&t.w_disp).map(|(p, w)| p * w).sum();
    let m2: f64 = t.prob.iter().zip(&t.w_disp).map(|(p, w)| p * w * w).sum();
    assert!((e.w_rms - (m2 - m1 * m1).sqrt()).abs() < 1e-12 * e.w_rms);
    // heavier tails than the gaussian identity ΔW = W + 2β² predicts
    assert!(e.w_rms > 1.05 * (e.w_mean + c.xi()));
}

#[test]
fn exact_optimum_at_low_occupation() {
    let r = optimize_report(1.55, WorkMode::Exact, false).unwrap();
    assert!((r.point.kappa / 0.9424 - 1.0).abs() < 0.1);
    assert!((r.point.beta / 0.113 - 1.0).abs() < 0.1);
    assert!(r.point.w_max > 0.0 && r.gradient_norm < 1e-5);
}

#[test]
fn numeric_exact_curve_tracks_analytic_formula() {
    for n in [2.0, 3.0, 5.0, 10.0, 20.0] {
        let r = optimize_report(n, WorkMode::Exact, false).unwrap();
        let a = w_max_formula(n);
        assert!(r.point.w_max >= 0.0);
        assert!(((r.point.w_max - a) / r.point.w_max).abs() < 0.10, "{n}: {} vs {a}", r.point.w_max);
    }
}

#[test]
fn asymptotic_and_numeric_energy_balance() {
    let b = energy_budget(100.0);
    assert_eq!(b.residual, b.e_lo);
    let b = energy_budget(1e4);
    assert_eq!((b.e_lo, b.e_det, b.e_rem), (97.5, 196.0, 198.0));

    let c = w_max_analytic(100.0).unwrap().config().unwrap();
    let g = energy_balance(100.0, c, &GaussianClosedForm).unwrap();
    assert!(g.gross.residual.abs() < 1e-12 * 100.0);
    assert!((g.budget.residual - c.xi()).abs() < 1e-12 * 100.0);
    let e = energy_balance(100.0, c, &ExactLattice::default()).unwrap();
    assert!(e.gross.residual.abs() / 100.0 < 0.05, "{:?}", e.gross);
    assert!((e.budget.residual - e.gross.residual - c.xi()).abs() < 1e-12 * 100.0);
}

#[test]
fn remainder_iteration() {
    let s = iterate_remainder(4.0, 5).unwrap();
    assert!(s.iter().all(|st| st.nbar == 4.0));
    let s = iterate_remainder(100.0, 30).unwrap();
    let want = [20.0, 2.0 * 20f64.sqrt(), 2.0 * (2.0 * 20f64.sqrt()).sqrt()];
    for (st, w) in s.iter().zip(want) {
        assert!((st.nbar - w).abs() < 1e-12);
    }
    assert!((s.last().unwrap().nbar - 4.0).abs() < 1e-6);
    for pair in s.windows(2) {
        assert!(pair[1].w <= pair[0].w);
    }
    assert!((s.last().unwrap().w - w_max_formula(4.0)).abs() < 1e-5);
    let first = s[0].w / w_max_formula(100.0);
    assert!((first - 0.111).abs() < 1e-3, "{first}");
    assert!(iterate_remainder(1.0, 5).is_err());
}

#[test]
fn low_temperature_expansions() {
    for d in [1e-2, 1e-3] {
        let n = 1.0 + d;
        assert!((w_max_formula(n) / w_max_limits(n, LimitRegime::LowTGaussian) - 1.0).abs() < 10.0 * d);
        assert!((low_excitation_optimum(n).unwrap().w_max / w_max_limits(n, LimitRegime::LowTExact) - 1.0).abs() < 10.0 * d);
    }
    assert_eq!(w_max_limits(1e4, LimitRegime::HighT), 9606.0);
}

#[test]
fn closed_forms_agree_at_weak_excitation() {
    for &(n, k, b) in &[(1.2, 0.95, 0.05), (2.0, 0.97, 0.03), (1.5, 0.99, 0.1)] {
        let c = cfg(k, b);
        let g = gaussian_work(n, c.epsilon(), c.xi()) + c.xi();
        let l = low_excitation_work(n, c.epsilon(), c.xi()) + c.xi();
        // the denominators differ by εξn̄, so the relative gap is at most ξ
        assert!((g / l - 1.0).abs() <= c.xi(), "{n} {g} {l}");
    }
}

#[test]
fn registry_selects_models_by_name() {
    let r = WorkModelRegistry::standard();
    let c = cfg(0.9, 0.5);
    for name in r.names() {
        let m = r.get(name).unwrap();
        assert_eq!(m.name(), name);
        assert_eq!(m.mean_work(4.0, c, false).unwrap().mode, m.mode());
    }
    assert!(r.get("fourier").is_err());
}
