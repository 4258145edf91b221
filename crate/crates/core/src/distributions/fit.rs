use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::cone::{cone_expectations, cone_norm_const, ConeDensityParams, Domain, NormMethod};
use super::DistError;

/// Gradient tolerance on the per-observation score in each natural parameter.
pub const GRADIENT_TOL: f64 = 1e-6;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeFit {
    pub params: ConeDensityParams,
    pub loglik: f64,
    pub n: usize,
    pub iterations: usize,
    /// Max-abs per-observation score at the optimum.
    pub gradient: f64,
    /// Standard errors of `(κ₁, κ₂, κ₃ cos μ, κ₃ sin μ)` from the inverse
    /// Fisher information.
    pub natural_se: [f64; 4],
}

/// Model mean and covariance of `T = (−r², r, r cos θ, r sin θ)` and `ln c`.
fn model_moments(p: &ConeDensityParams) -> (f64, Vector4<f64>, Matrix4<f64>) {
    let (log_c, e) = cone_expectations(p, |r, t| {
        let (s, c) = t.sin_cos();
        let v = [-r * r, r, r * c, r * s];
        let mut out = [0.0; 14];
        out[..4].copy_from_slice(&v);
        let mut k = 4;
        for i in 0..4 {
            for j in i..4 {
                out[k] = v[i] * v[j];
                k += 1;
            }
        }
        out
    });
    let mean = Vector4::new(e[0], e[1], e[2], e[3]);
    let mut cov = Matrix4::zeros();
    let mut k = 4;
    for i in 0..4 {
        for j in i..4 {
            let v = e[k] - mean[i] * mean[j];
            cov[(i, j)] = v;
            cov[(j, i)] = v;
            k += 1;
        }
    }
    (log_c, mean, cov)
}

fn validate(data: &[(f64, f64)], domain: Domain) -> Result<(), DistError> {
    if data.len() < 4 {
        return Err(DistError::DegenerateData(format!("need at least 4 points, got {}", data.len())));
    }
    for &(r, t) in data {
        if !(r > 0.0 && r.is_finite() && t.is_finite()) {
            return Err(DistError::OutOfDomain);
        }
        if domain == Domain::HalfCircle && !(0.0..=PI).contains(&t) {
            return Err(DistError::OutOfDomain);
        }
    }
    let r0 = data[0].0;
    if data.iter().all(|&(r, _)| r == r0) {
        return Err(DistError::DegenerateData("all radii are equal".into()));
    }
    Ok(())
}

/// Approximate inverse of `I₁/I₀`.
fn bessel_ratio_inverse(rbar: f64) -> f64 {
    if rbar < 0.53 {
        2.0 * rbar + rbar.powi(3) + 5.0 * rbar.powi(5) / 6.0
    } else if rbar < 0.85 {
        -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar)
    } else {
        1.0 / (rbar.powi(3) - 4.0 * rbar * rbar + 3.0 * rbar)
    }
}

/// Moment start: `μ` from the mean direction of `θ`, `κ₁` from `var(r)`,
/// `κ₂` from `r̄` (stationarity of `ln r − κ₁r² + κ₂r` at `r̄`), `κ₃` from
/// the circular resultant at radius `r̄`.
fn moment_start(data: &[(f64, f64)]) -> [f64; 4] {
    let n = data.len() as f64;
    let rbar = data.iter().map(|d| d.0).sum::<f64>() / n;
    let var = data.iter().map(|d| (d.0 - rbar).powi(2)).sum::<f64>() / (n - 1.0);
    let k1 = 1.0 / (2.0 * var);
    let k2 = 2.0 * k1 * rbar - 1.0 / rbar;
    let (c, s) = data.iter().fold((0.0, 0.0), |(c, s), d| (c + d.1.cos(), s + d.1.sin()));
    let res = (c * c + s * s).sqrt() / n;
    let mu = s.atan2(c);
    let k3 = bessel_ratio_inverse(res.min(0.999)) / rbar;
    [k1, k2, k3 * mu.cos(), k3 * mu.sin()]
}

/// Maximum likelihood fit of the cone density by Newton's method in the
/// natural parameters with backtracking.
pub fn cone_fit(data: &[(f64, f64)], domain: Domain) -> Result<ConeFit, DistError> {
    validate(data, domain)?;
    let n = data.len() as f64;
    let mut tbar = Vector4::zeros();
    let mut sum_log_r = 0.0;
    for &(r, t) in data {
        tbar += Vector4::new(-r * r, r, r * t.cos(), r * t.sin());
        sum_log_r += r.ln();
    }
    tbar /= n;
    let params_of = |eta: &Vector4<f64>| ConeDensityParams::from_natural([eta[0], eta[1], eta[2], eta[3]], domain);
    // mean log-likelihood without the Σ ln r term
    let objective = |eta: &Vector4<f64>, log_c: f64| eta.dot(&tbar) - log_c;

    let mut eta = Vector4::from(moment_start(data));
    let (mut log_c, mut mean, mut cov) = model_moments(&params_of(&eta)?);
    let mut iterations = 0;
    loop {
        let grad = tbar - mean;
        let gmax = grad.amax();
        if gmax < GRADIENT_TOL {
            break;
        }
        if iterations == MAX_ITER {
            return Err(DistError::NonConvergence(format!("cone fit: score {gmax:.2e} after {MAX_ITER} iterations")));
        }
        iterations += 1;
        let step = cov
            .cholesky()
            .map(|c| c.solve(&grad))
            .unwrap_or_else(|| grad * (1.0 / cov.diagonal().amax().max(1e-12)));
        let f0 = objective(&eta, log_c);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = eta + step * t;
            if trial[0] > 0.0 {
                let p = params_of(&trial)?;
                let (lc, m, c) = model_moments(&p);
                if lc.is_finite() && objective(&trial, lc) >= f0 + 1e-4 * t * slope {
                    eta = trial;
                    log_c = lc;
                    mean = m;
                    cov = c;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // no ascent at machine precision: accept if the score is already small
            if gmax < 1e3 * GRADIENT_TOL {
                break;
            }
            return Err(DistError::NonConvergence(format!("cone fit line search stalled at score {gmax:.2e}")));
        }
    }
    let params = params_of(&eta)?;
    let series = cone_norm_const(&params, NormMethod::Series)?.log_value;
    let inv = cov.try_inverse().unwrap_or_else(Matrix4::zeros);
    let natural_se = [0, 1, 2, 3].map(|i| (inv[(i, i)].max(0.0) / n).sqrt());
    Ok(ConeFit {
        loglik: sum_log_r + n * (eta.dot(&tbar) - series),
        n: data.len(),
        iterations,
        gradient: (tbar - mean).amax(),
        natural_se,
        params,
    })
}
