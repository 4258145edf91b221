use super::{SeriesAccuracy, SpecFunError};

/// Kummer's confluent hypergeometric function ₁F₁(a; b; z).
///
/// Direct series `Σ (a)_r z^r / ((b)_r r!)` for `z ≥ 0`; for `z < 0` the
/// Kummer transformation `e^z ₁F₁(b−a; b; −z)` keeps all terms of one sign
/// when `b > a`.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64, SpecFunError> {
    hyp1f1_with(a, b, z, &SeriesAccuracy::default())
}

pub fn hyp1f1_with(a: f64, b: f64, z: f64, acc: &SeriesAccuracy) -> Result<f64, SpecFunError> {
    if b <= 0.0 && b == b.round() {
        return Err(SpecFunError::Domain { function: "hyp1f1" });
    }
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(SpecFunError::Domain { function: "hyp1f1" });
    }
    if z < 0.0 && !(a <= 0.0 && a == a.round()) {
        return Ok(z.exp() * series(b - a, b, -z, acc)?);
    }
    series(a, b, z, acc)
}

fn series(a: f64, b: f64, z: f64, acc: &SeriesAccuracy) -> Result<f64, SpecFunError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    if z == 0.0 {
        return Ok(1.0);
    }
    for r in 0..acc.max_terms {
        let rf = r as f64;
        term *= (a + rf) * z / ((b + rf) * (rf + 1.0));
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Only stop once the terms are shrinking, i.e. past the peak r ≈ z.
        let shrinking = ((a + rf + 1.0) * z / ((b + rf + 1.0) * (rf + 2.0))).abs() < 1.0;
        if shrinking && term.abs() <= acc.rel_tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NonConvergence {
        function: "hyp1f1",
        terms: acc.max_terms,
    })
}
