use std::f64::consts::PI;

use super::{SeriesAccuracy, SpecFunError};

/// Above this argument the asymptotic expansion is used.
const ASYMPTOTIC_SWITCH: f64 = 30.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Power series `Σ (z/2)^{2m} / (m!)²` for `|z| ≤ 30`, Hankel asymptotic
/// expansion beyond. Even in `z`.
pub fn bessel_i0(z: f64) -> f64 {
    bessel_i(0, z)
}

/// [`bessel_i0`] with explicit truncation control; reports non-convergence
/// instead of switching to the asymptotic branch.
pub fn bessel_i0_with(z: f64, acc: &SeriesAccuracy) -> Result<f64, SpecFunError> {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..=acc.max_terms {
        let mf = m as f64;
        term *= q / (mf * mf);
        sum += term;
        if term <= acc.rel_tol * sum {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NonConvergence {
        function: "bessel_i0",
        terms: acc.max_terms,
    })
}

/// Exponentially scaled I₀: `e^{-|z|} I₀(z)`.
pub fn bessel_i0e(z: f64) -> f64 {
    bessel_ie(0, z)
}

/// ln I₀(z), accurate for large arguments where I₀ overflows.
pub fn ln_bessel_i0(z: f64) -> f64 {
    let a = z.abs();
    a + bessel_ie(0, a).ln()
}

/// Modified Bessel function of the first kind of integer order `n`.
pub fn bessel_i(n: u32, z: f64) -> f64 {
    let a = z.abs();
    let v = if a <= ASYMPTOTIC_SWITCH {
        series_in(n, a)
    } else {
        a.exp() * asymptotic_ine(n, a)
    };
    if z < 0.0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Exponentially scaled `e^{-|z|} Iₙ(z)`.
pub fn bessel_ie(n: u32, z: f64) -> f64 {
    let a = z.abs();
    let v = if a <= ASYMPTOTIC_SWITCH {
        series_in(n, a) * (-a).exp()
    } else {
        asymptotic_ine(n, a)
    };
    if z < 0.0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

fn series_in(n: u32, a: f64) -> f64 {
    // (a/2)^n / n! · Σ_m (a²/4)^m / (m! (m+1)_n...)
    let half = 0.5 * a;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / k as f64;
    }
    if lead == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let nf = n as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..500 {
        let mf = m as f64;
        term *= q / (mf * (mf + nf));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    lead * sum
}

fn asymptotic_ine(n: u32, a: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * a);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * a).sqrt()
}
