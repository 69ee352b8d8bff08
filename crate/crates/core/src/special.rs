//! Exponentially scaled modified Bessel functions and the Poisson/Skellam
//! probability mass functions built on them.

/// ln(e^{-z} I_k(z)) for k = 0..=kmax.
///
/// The ratios r_k = I_k/I_{k-1} come from the backward continued fraction
/// r_k = 1/(2k/z + r_{k+1}), and the normalization from
/// e^{-z}(I_0 + 2 Σ_{k≥1} I_k) = 1. All intermediate quantities lie in [0, 1],
/// so the evaluation is overflow-free for any argument.
pub fn ln_scaled_bessel_i(z: f64, kmax: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "bessel argument must be finite and non-negative");
    let mut out = vec![f64::NEG_INFINITY; kmax + 1];
    if z == 0.0 {
        out[0] = 0.0;
        return out;
    }
    let top = kmax + (10.0 * z.sqrt()).ceil() as usize + 30;
    let mut ln_ratio = vec![0.0; top + 1];
    let mut r = 0.0;
    for k in (1..=top).rev() {
        r = 1.0 / (2.0 * k as f64 / z + r);
        ln_ratio[k] = r.ln();
    }
    let mut cum = 0.0;
    let mut tail = 0.0;
    for (k, lr) in ln_ratio.iter().enumerate().skip(1) {
        cum += lr;
        if k <= kmax {
            out[k] = cum;
        }
        tail += cum.exp();
    }
    let ln_i0 = -(2.0 * tail).ln_1p();
    out[0] = ln_i0;
    for v in out.iter_mut().skip(1) {
        *v += ln_i0;
    }
    out
}

/// ln k! for k = 0..=kmax.
pub fn ln_factorials(kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=kmax {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

pub fn poisson_pmf(k: i64, mean: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let lnf: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    (k as f64 * mean.ln() - mean - lnf).exp()
}

/// Probability that the difference of independent Poisson(m1) and Poisson(m2)
/// counts equals `dn`.
pub fn skellam_pmf(dn: i64, m1: f64, m2: f64) -> f64 {
    assert!(m1 >= 0.0 && m2 >= 0.0, "skellam means must be non-negative");
    if m1 == 0.0 || m2 == 0.0 || m1 * m2 == 0.0 {
        return skellam_one_sided(dn, m1, m2);
    }
    let k = dn.unsigned_abs() as usize;
    let z = 2.0 * (m1 * m2).sqrt();
    let lib = ln_scaled_bessel_i(z, k);
    let d = m1.sqrt() - m2.sqrt();
    (-d * d + 0.5 * dn as f64 * (m1.ln() - m2.ln()) + lib[k]).exp()
}

fn skellam_one_sided(dn: i64, m1: f64, m2: f64) -> f64 {
    if m1 >= m2 {
        poisson_pmf(dn, m1) * (-m2).exp()
    } else {
        poisson_pmf(-dn, m2) * (-m1).exp()
    }
}

/// Skellam probabilities for dn = -n..=n, stored at index dn + n.
pub fn skellam_row(m1: f64, m2: f64, n: usize) -> Vec<f64> {
    let mut row = vec![0.0; 2 * n + 1];
    skellam_row_into(m1, m2, n, &mut row);
    row
}

pub fn skellam_row_into(m1: f64, m2: f64, n: usize, row: &mut [f64]) {
    debug_assert_eq!(row.len(), 2 * n + 1);
    if m1 * m2 == 0.0 {
        let (mean, sign, other) = if m1 >= m2 { (m1, 1i64, m2) } else { (m2, -1i64, m1) };
        let damp = (-other).exp();
        row.iter_mut().for_each(|v| *v = 0.0);
        if mean == 0.0 {
            row[n] = damp;
            return;
        }
        let ln_m = mean.ln();
        let mut lnf = 0.0;
        for k in 0..=n {
            if k > 0 {
                lnf += (k as f64).ln();
            }
            let idx = (n as i64 + sign * k as i64) as usize;
            row[idx] = (k as f64 * ln_m - mean - lnf).exp() * damp;
        }
        return;
    }
    let z = 2.0 * (m1 * m2).sqrt();
    let lib = ln_scaled_bessel_i(z, n);
    let d = m1.sqrt() - m2.sqrt();
    let prefix = -d * d;
    let half_ln = 0.5 * (m1.ln() - m2.ln());
    for (i, v) in row.iter_mut().enumerate() {
        let dn = i as i64 - n as i64;
        *v = (prefix + dn as f64 * half_ln + lib[dn.unsigned_abs() as usize]).exp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // log-space power series for ln I_k(z), independent of the recurrence
    fn ln_bessel_series(k: usize, z: f64) -> f64 {
        let lh = (z / 2.0).ln();
        let lnf = ln_factorials(k + 400);
        let terms: Vec<f64> = (0..300).map(|m| (2 * m + k) as f64 * lh - lnf[m] - lnf[m + k]).collect();
        let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
    }

    #[test]
    fn scaled_bessel_matches_series() {
        for &z in &[1e-3, 0.1, 1.0, 2.0, 7.5, 30.0, 120.0] {
            let got = ln_scaled_bessel_i(z, 12);
            for (k, g) in got.iter().enumerate() {
                let want = ln_bessel_series(k, z) - z;
                assert!((g - want).abs() < 1e-12 * want.abs().max(1.0), "z={z} k={k} got {g} want {want}");
            }
        }
    }

    #[test]
    fn scaled_bessel_large_argument_is_finite() {
        let v = ln_scaled_bessel_i(1e7, 5);
        // e^{-z} I_0(z) ~ 1/sqrt(2 pi z)
        let asym = -(2.0 * std::f64::consts::PI * 1e7).ln() / 2.0;
        assert!((v[0] - asym).abs() < 1e-7);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn skellam_reference_value() {
        let want: f64 = (0..60).map(|k| poisson_pmf(k, 1.0).powi(2)).sum();
        assert!((skellam_pmf(0, 1.0, 1.0) - want).abs() < 1e-15);
        assert!((want - 0.308_508).abs() < 1e-6);
    }

    #[test]
    fn skellam_degenerate_cases() {
        assert_eq!(skellam_pmf(0, 0.0, 0.0), 1.0);
        assert_eq!(skellam_pmf(2, 0.0, 0.0), 0.0);
        for dn in 0..10 {
            assert!((skellam_pmf(dn, 2.5, 0.0) - poisson_pmf(dn, 2.5)).abs() < 1e-16);
            assert_eq!(skellam_pmf(-dn - 1, 2.5, 0.0), 0.0);
        }
        assert!((skellam_pmf(-3, 2.0, 5.0) - skellam_pmf(3, 5.0, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn row_matches_pointwise() {
        for &(m1, m2) in &[(0.3, 1.7), (5.0, 0.0), (0.0, 0.2), (40.0, 38.0), (1e-9, 2.0)] {
            let row = skellam_row(m1, m2, 15);
            for (i, v) in row.iter().enumerate() {
                let p = skellam_pmf(i as i64 - 15, m1, m2);
                assert!((v - p).abs() <= 1e-14 * p.max(1e-300), "{m1} {m2} {i}");
            }
        }
    }
}
