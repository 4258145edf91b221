use super::gamma::ln_gamma;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 1000;

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn reg_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(1.0 - x, b, a) / b
    }
}

fn beta_cont_frac(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Survival function of the χ² distribution with `k` degrees of freedom.
pub fn chi2_sf(x: f64, k: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_gamma_q(0.5 * k as f64, 0.5 * x)
}

/// Survival function of the F(d1, d2) distribution.
pub fn f_sf(x: f64, d1: u32, d2: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2)
    reg_beta(d2 / (d2 + d1 * x), 0.5 * d2, 0.5 * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_two_dof_closed_form() {
        for &x in &[0.0_f64, 0.3, 1.0, 2.5, 10.0, 40.0] {
            let e = (-x / 2.0).exp();
            assert!((chi2_sf(x, 2) - e).abs() < 1e-13, "x={x}");
        }
        assert_eq!(chi2_sf(0.0, 7), 1.0);
    }

    #[test]
    fn chi2_one_dof_known_quantiles() {
        // 3.841458820694124 is the 95% quantile of χ²₁
        assert!((chi2_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-12);
        // 5.991464547107979 is the 95% quantile of χ²₂
        assert!((chi2_sf(5.991_464_547_107_979, 2) - 0.05).abs() < 1e-13);
    }

    #[test]
    fn f_one_one_median() {
        assert!((f_sf(1.0, 1, 1) - 0.5).abs() < 1e-13);
        // F(d,d) has median 1 by symmetry of 1/F
        for d in [2, 5, 13] {
            assert!((f_sf(1.0, d, d) - 0.5).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn beta_symmetry_and_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        assert!((reg_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        assert!((reg_beta(0.6, 2.5, 1.0) - 0.6_f64.powf(2.5)).abs() < 1e-13);
        let (a, b, x) = (3.2, 1.7, 0.41);
        assert!((reg_beta(x, a, b) + reg_beta(1.0 - x, b, a) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_p_plus_q() {
        for &(a, x) in &[(0.5, 0.2), (3.0, 2.0), (3.0, 9.0), (12.5, 11.0)] {
            assert!((reg_gamma_p(a, x) + reg_gamma_q(a, x) - 1.0).abs() < 1e-14);
        }
        // P(1, x) = 1 − e^{−x}
        assert!((reg_gamma_p(1.0, 0.7) - (1.0 - (-0.7_f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn survival_functions_are_monotone() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
        for k in [1, 2, 3, 7] {
            for w in xs.windows(2) {
                assert!(chi2_sf(w[1], k) <= chi2_sf(w[0], k));
            }
        }
        for w in xs.windows(2) {
            assert!(f_sf(w[1], 7, 182) <= f_sf(w[0], 7, 182));
        }
    }

    #[test]
    fn f_tail_tiny_but_finite() {
        let p = f_sf(2073.0, 7, 182);
        assert!(p > 0.0 && p < 1e-150, "p={p}");
    }
}
