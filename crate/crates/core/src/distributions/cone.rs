use std::f64::consts::{LN_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::DistError;
use crate::specfun::quad::{integrate, kronrod15, QuadOptions};
use crate::specfun::{bessel_i0e, hyp1f1, ln_factorial, ln_gamma, CompensatedSum, SeriesAccuracy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    FullCircle,
    /// `θ ∈ [0, π]`.
    HalfCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeDensityParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// In `[0, 2π)`.
    pub mu: f64,
    pub domain: Domain,
}

impl ConeDensityParams {
    pub fn new(kappa1: f64, kappa2: f64, kappa3: f64, mu: f64, domain: Domain) -> Result<Self, DistError> {
        if !(kappa1 > 0.0 && kappa1.is_finite()) {
            return Err(DistError::InvalidParams(format!("kappa1 must be positive, got {kappa1}")));
        }
        if !(kappa2.is_finite() && kappa3.is_finite() && mu.is_finite()) {
            return Err(DistError::InvalidParams("non-finite parameter".into()));
        }
        Ok(Self { kappa1, kappa2, kappa3, mu: mu.rem_euclid(TAU), domain })
    }

    /// `(κ₁, κ₂, κ₃ cos μ, κ₃ sin μ)`.
    pub fn natural(&self) -> [f64; 4] {
        [self.kappa1, self.kappa2, self.kappa3 * self.mu.cos(), self.kappa3 * self.mu.sin()]
    }

    /// Inverse of [`natural`](Self::natural) with `κ₃ ≥ 0`.
    pub fn from_natural(eta: [f64; 4], domain: Domain) -> Result<Self, DistError> {
        let k3 = eta[2].hypot(eta[3]);
        let mu = if k3 > 0.0 { eta[3].atan2(eta[2]) } else { 0.0 };
        Self::new(eta[0], eta[1], k3, mu, domain)
    }

    fn angular_range(&self) -> (f64, f64) {
        match self.domain {
            Domain::FullCircle => (0.0, TAU),
            Domain::HalfCircle => (0.0, PI),
        }
    }

    /// `|κ₃|` and the matching mean direction.
    pub(crate) fn polar_kappa3(&self) -> (f64, f64) {
        if self.kappa3 >= 0.0 {
            (self.kappa3, self.mu)
        } else {
            (-self.kappa3, (self.mu + PI).rem_euclid(TAU))
        }
    }

    /// `max_θ κ₃ cos(θ − μ)` over the domain.
    pub(crate) fn angular_peak(&self) -> f64 {
        let (k3, mu) = self.polar_kappa3();
        match self.domain {
            Domain::FullCircle => k3,
            Domain::HalfCircle if mu <= PI => k3,
            Domain::HalfCircle => k3 * mu.cos().abs(),
        }
    }

    /// Interval outside which `r·exp{−κ₁r² + (κ₂ + peak)r}` is below
    /// `e^{−100}` of its maximum (strong log-concavity bounds the tails).
    pub(crate) fn radial_window(&self) -> (f64, f64) {
        let mode = self.radial_mode();
        let half = 10.0 / self.kappa1.sqrt();
        ((mode - half).max(0.0), mode + half)
    }

    pub(crate) fn radial_mode(&self) -> f64 {
        let beta = self.kappa2 + self.angular_peak();
        (beta + (beta * beta + 8.0 * self.kappa1).sqrt()) / (4.0 * self.kappa1)
    }

    /// `max_r (−κ₁r² + (κ₂ + peak)r)`, used to scale integrands.
    pub(crate) fn exponent_shift(&self) -> f64 {
        let beta = self.kappa2 + self.angular_peak();
        if beta > 0.0 {
            beta * beta / (4.0 * self.kappa1)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Series,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConst {
    pub log_value: f64,
    /// Method that produced the value.
    pub method: NormMethod,
    /// Set when the series was requested but quadrature was used.
    pub fallback: bool,
}

impl NormConst {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Largest tolerated `Σ|terms| / |Σ terms|` before the alternating series is
/// abandoned (cancellation beyond 1e−10 at double precision).
const MAX_CANCELLATION: f64 = 1e6;

pub fn cone_norm_const(p: &ConeDensityParams, method: NormMethod) -> Result<NormConst, DistError> {
    match method {
        NormMethod::Series => match log_c_series(p) {
            Some(log_value) => Ok(NormConst { log_value, method: NormMethod::Series, fallback: false }),
            None => Ok(NormConst { log_value: log_c_quadrature(p)?, method: NormMethod::Quadrature, fallback: true }),
        },
        NormMethod::Quadrature => Ok(NormConst { log_value: log_c_quadrature(p)?, method: NormMethod::Quadrature, fallback: false }),
    }
}

/// `ln ∫₀^∞ r^{m+1} e^{−κ₁r²} I_n(|κ₃|r) dr`.
fn ln_g(m: usize, n: usize, k1: f64, k3: f64) -> Option<f64> {
    let a = (n + m) as f64 / 2.0 + 1.0;
    let z = k3 * k3 / (4.0 * k1);
    let f = hyp1f1(a, n as f64 + 1.0, z).ok()?;
    let ln_k3 = if n == 0 { 0.0 } else { k3.ln() };
    Some(n as f64 * ln_k3 + ln_gamma(a) - (n + 1) as f64 * LN_2 - a * k1.ln() - ln_factorial(n) + f.ln())
}

/// `ln(π + 4 Σ_{n odd} sin(nμ)/n · G_{m,n}/G_{m,0})`, the half-circle
/// angular factor at radial order `m`.
fn ln_half_bracket(m: usize, k1: f64, k3: f64, mu: f64, g0: f64, acc: &SeriesAccuracy) -> Option<f64> {
    let mut sum = CompensatedSum::new();
    sum.add(PI);
    if k3 == 0.0 {
        return Some(PI.ln());
    }
    let mut prev = f64::INFINITY;
    let mut n = 1;
    loop {
        if n > 2 * acc.max_terms {
            return None;
        }
        let ratio = (ln_g(m, n, k1, k3)? - g0).exp();
        let term = 4.0 * (n as f64 * mu).sin() / n as f64 * ratio;
        sum.add(term);
        let mag = ratio * 4.0 / n as f64;
        if mag <= acc.rel_tol * 1e-2 * sum.value().abs() && mag < prev {
            break;
        }
        prev = mag;
        n += 2;
    }
    let v = sum.value();
    (v > 0.0).then(|| v.ln())
}

/// Series for `ln c`, `None` when it cannot be trusted.
fn log_c_series(p: &ConeDensityParams) -> Option<f64> {
    let acc = SeriesAccuracy::default();
    let (k3, mu) = p.polar_kappa3();
    let k1 = p.kappa1;
    let k2 = p.kappa2;
    let mut logs = Vec::new();
    let mut signs = Vec::new();
    let mut lmax = f64::NEG_INFINITY;
    for m in 0..acc.max_terms {
        let g0 = ln_g(m, 0, k1, k3)?;
        let angular = match p.domain {
            Domain::FullCircle => TAU.ln(),
            Domain::HalfCircle => ln_half_bracket(m, k1, k3, mu, g0, &acc)?,
        };
        let lk2 = if m == 0 { 0.0 } else { m as f64 * k2.abs().ln() };
        let l = lk2 - ln_factorial(m) + g0 + angular;
        if !l.is_finite() && m == 0 {
            return None;
        }
        let sign = if k2 < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        logs.push(l);
        signs.push(sign);
        lmax = lmax.max(l);
        if k2 == 0.0 {
            break;
        }
        let prev = logs[logs.len().saturating_sub(2)];
        if m >= 1 && l < prev && l <= lmax + acc.rel_tol.ln() {
            let mut sum = CompensatedSum::new();
            for (l, s) in logs.iter().zip(&signs) {
                sum.add(s * (l - lmax).exp());
            }
            let v = sum.value();
            if v <= 0.0 || sum.abs_sum() / v > MAX_CANCELLATION {
                return None;
            }
            return Some(lmax + v.ln());
        }
    }
    if k2 == 0.0 {
        return Some(logs[0]);
    }
    None
}

/// `∫₀^π exp{x(cos(θ − μ) − peak)} dθ` for `x ≥ 0`.
fn half_angular_scaled(x: f64, mu: f64, peak: f64) -> f64 {
    if x == 0.0 {
        return PI;
    }
    integrate(|t| (x * ((t - mu).cos() - peak)).exp(), 0.0, PI, &QuadOptions::default()).value
}

/// Adaptive quadrature of the radial form of `c`.
fn log_c_quadrature(p: &ConeDensityParams) -> Result<f64, DistError> {
    let (k3, mu) = p.polar_kappa3();
    let shift = p.exponent_shift();
    let peak = p.angular_peak();
    let beta = p.kappa2 + peak;
    let (rlo, rmax) = p.radial_window();
    let mode = p.radial_mode();
    let radial = |r: f64| r * (-p.kappa1 * r * r + beta * r - shift).exp();
    let opts = QuadOptions::tight();
    let (value, ok) = match p.domain {
        Domain::FullCircle => {
            let f = |r: f64| radial(r) * bessel_i0e(k3 * r);
            let a = integrate(f, rlo, mode, &opts);
            let b = integrate(f, mode, rmax, &opts);
            (TAU * (a.value + b.value), a.converged && b.converged)
        }
        Domain::HalfCircle => {
            let f = |r: f64| radial(r) * half_angular_scaled(k3 * r, mu, if k3 > 0.0 { peak / k3 } else { 1.0 });
            let opts = QuadOptions::default();
            let a = integrate(f, rlo, mode, &opts);
            let b = integrate(f, mode, rmax, &opts);
            (a.value + b.value, a.converged && b.converged)
        }
    };
    if !ok || !(value > 0.0) || !value.is_finite() {
        return Err(DistError::NonConvergence("quadrature for the cone normalizing constant".into()));
    }
    Ok(value.ln() + shift)
}

/// Cone density with its normalizing constant evaluated once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDensity {
    pub params: ConeDensityParams,
    pub norm: NormConst,
}

impl ConeDensity {
    pub fn new(params: ConeDensityParams) -> Result<Self, DistError> {
        Ok(Self { norm: cone_norm_const(&params, NormMethod::Series)?, params })
    }

    pub fn log_density(&self, r: f64, theta: f64) -> Result<f64, DistError> {
        let p = &self.params;
        if !(r > 0.0 && r.is_finite() && theta.is_finite()) {
            return Err(DistError::OutOfDomain);
        }
        if p.domain == Domain::HalfCircle && !(0.0..=PI).contains(&theta) {
            return Err(DistError::OutOfDomain);
        }
        Ok(r.ln() - p.kappa1 * r * r + p.kappa2 * r + p.kappa3 * r * (theta - p.mu).cos() - self.norm.log_value)
    }
}

pub fn cone_log_density(r: f64, theta: f64, p: &ConeDensityParams) -> Result<f64, DistError> {
    ConeDensity::new(*p)?.log_density(r, theta)
}

const R_PANELS: usize = 32;
const THETA_PANELS_FULL: usize = 32;
const THETA_PANELS_HALF: usize = 16;

/// Product Gauss–Kronrod integral of `w(r, θ)·f(r, θ)` over the support, with
/// `w` the unnormalized density scaled by `exp(−shift)`. Returns `ln ∫w`
/// (so `ln c` when `w` is the bare kernel) and the expectations of `f`.
pub fn cone_expectations<const N: usize, F: Fn(f64, f64) -> [f64; N]>(p: &ConeDensityParams, f: F) -> (f64, [f64; N]) {
    let shift = p.exponent_shift();
    let (rlo, rhi) = p.radial_window();
    let (lo, hi) = p.angular_range();
    let panels = match p.domain {
        Domain::FullCircle => THETA_PANELS_FULL,
        Domain::HalfCircle => THETA_PANELS_HALF,
    };
    let rule = kronrod15();
    let mut total = 0.0;
    let mut sums = [0.0; N];
    let rw = (rhi - rlo) / R_PANELS as f64;
    let tw = (hi - lo) / panels as f64;
    for pr in 0..R_PANELS {
        let rc = rlo + (pr as f64 + 0.5) * rw;
        for &(xr, wr) in &rule {
            let r = rc + 0.5 * rw * xr;
            if r <= 0.0 {
                continue;
            }
            let base = r.ln() - p.kappa1 * r * r + p.kappa2 * r - shift;
            let wr = wr * 0.5 * rw;
            for pt in 0..panels {
                let tc = lo + (pt as f64 + 0.5) * tw;
                for &(xt, wt) in &rule {
                    let t = tc + 0.5 * tw * xt;
                    let w = wr * wt * 0.5 * tw * (base + p.kappa3 * r * (t - p.mu).cos()).exp();
                    total += w;
                    let v = f(r, t);
                    for k in 0..N {
                        sums[k] += w * v[k];
                    }
                }
            }
        }
    }
    for s in sums.iter_mut() {
        *s /= total;
    }
    (total.ln() + shift, sums)
}

/// `E[r]`, `E[r²]` and `E[cos(θ − μ)]` under the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeMoments {
    pub mean_r: f64,
    pub mean_r2: f64,
    pub mean_cos: f64,
}

pub fn cone_moments(p: &ConeDensityParams) -> ConeMoments {
    let (_, m) = cone_expectations(p, |r, t| [r, r * r, (t - p.mu).cos()]);
    ConeMoments { mean_r: m[0], mean_r2: m[1], mean_cos: m[2] }
}
