use std::f64::consts::{LN_2, PI, TAU};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DistError;
use crate::dirstats::{directional_summary, DirStatsError, SphericalSample};
use crate::specfun::chi2_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherParams {
    pub mu: Vector3<f64>,
    pub kappa: f64,
}

impl FisherParams {
    pub fn new(mu: Vector3<f64>, kappa: f64) -> Result<Self, DistError> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(DistError::InvalidParams(format!("kappa must be non-negative, got {kappa}")));
        }
        if !((mu.norm() - 1.0).abs() <= 1e-10) {
            return Err(DistError::InvalidParams("mean direction must be a unit vector".into()));
        }
        Ok(Self { mu, kappa })
    }

    /// `ln(κ / (4π sinh κ))`.
    pub fn log_norm(&self) -> f64 {
        let k = self.kappa;
        let ln_k_over_sinh = if k < 1e-3 {
            let k2 = k * k;
            -k2 / 6.0 + k2 * k2 / 180.0
        } else {
            // sinh κ = e^κ (1 − e^{−2κ}) / 2
            k.ln() + LN_2 - k - (-(-2.0 * k).exp_m1()).ln()
        };
        ln_k_over_sinh - (4.0 * PI).ln()
    }
}

/// `ln f(x) = ln(κ/(4π sinh κ)) + κμᵀx` with respect to surface measure.
pub fn fisher_log_density(x: &Vector3<f64>, p: &FisherParams) -> Result<f64, DistError> {
    if !((x.norm() - 1.0).abs() <= 1e-10) {
        return Err(DistError::OutOfDomain);
    }
    Ok(p.log_norm() + p.kappa * p.mu.dot(x))
}

/// `A(κ) = coth κ − 1/κ`.
fn langevin(k: f64) -> f64 {
    if k < 1e-4 {
        return k / 3.0 - k * k * k / 45.0;
    }
    1.0 / k.tanh() - 1.0 / k
}

fn langevin_deriv(k: f64) -> f64 {
    if k < 1e-4 {
        return 1.0 / 3.0 - k * k / 15.0;
    }
    let s = k.sinh();
    if s.is_infinite() {
        return 1.0 / (k * k);
    }
    1.0 / (k * k) - 1.0 / (s * s)
}

/// Solves `coth κ − 1/κ = R̄` for `R̄ ∈ [0, 1)` by Newton steps kept inside a
/// shrinking bracket.
pub fn langevin_inverse(rbar: f64) -> Result<f64, DistError> {
    if !(0.0..1.0).contains(&rbar) {
        return Err(DistError::DegenerateData(format!("resultant {rbar} outside [0, 1)")));
    }
    if rbar == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0 / (1.0 - rbar) + 1.0);
    let mut k = if rbar < 0.5 { 3.0 * rbar } else { 1.0 / (1.0 - rbar) };
    for _ in 0..200 {
        let g = langevin(k) - rbar;
        if g > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        let step = g / langevin_deriv(k);
        let mut next = k - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 1e-15 * next.max(1e-300) {
            return Ok(next);
        }
        k = next;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherFit {
    pub params: FisherParams,
    pub resultant: f64,
    pub n: usize,
    /// `3nR̄²`, asymptotically χ²₃ under uniformity.
    pub rayleigh: f64,
    pub rayleigh_p: f64,
}

pub fn fisher_fit(s: &SphericalSample) -> Result<FisherFit, DistError> {
    let d = directional_summary(s).map_err(|e| match e {
        DirStatsError::ZeroResultant => DistError::ZeroResultant,
        other => DistError::DegenerateData(other.to_string()),
    })?;
    let n = s.len();
    let kappa = langevin_inverse(d.resultant)?;
    let rayleigh = 3.0 * n as f64 * d.resultant * d.resultant;
    Ok(FisherFit {
        params: FisherParams { mu: d.mean_direction, kappa },
        resultant: d.resultant,
        n,
        rayleigh,
        rayleigh_p: chi2_sf(rayleigh, 3),
    })
}

fn orthonormal_pair(mu: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = if mu.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a = (axis - mu * mu.dot(&axis)).normalize();
    (a, mu.cross(&a))
}

/// Exact draws via the inverse CDF of `w = μᵀx`,
/// `w = 1 + ln(u + (1 − u)e^{−2κ})/κ`.
pub fn fisher_sample<R: Rng + ?Sized>(rng: &mut R, p: &FisherParams, n: usize) -> Vec<Vector3<f64>> {
    let (a, b) = orthonormal_pair(&p.mu);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let w = if p.kappa < 1e-8 {
                2.0 * u - 1.0
            } else {
                let e = (-2.0 * p.kappa).exp();
                (1.0 + (u + (1.0 - u) * e).ln() / p.kappa).clamp(-1.0, 1.0)
            };
            let psi = TAU * rng.random::<f64>();
            let s = (1.0 - w * w).max(0.0).sqrt();
            p.mu * w + (a * psi.cos() + b * psi.sin()) * s
        })
        .collect()
}

/// Seeded convenience wrapper around [`fisher_sample`].
pub fn fisher_sample_seeded(p: &FisherParams, n: usize, seed: u64) -> Vec<Vector3<f64>> {
    fisher_sample(&mut ChaCha8Rng::seed_from_u64(seed), p, n)
}
