use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cone::{cone_norm_const, ConeDensityParams, Domain, NormMethod};
use super::DistError;
use crate::specfun::bessel_i0e;

/// Minimum expected acceptance rate of the cone sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// Three-piece rejection envelope for the log-concave radial kernel
/// `ψ(r) = ln r − κ₁r² + βr`: flat between the points where `ψ` is one below
/// its maximum, tangent exponentials outside.
#[derive(Debug, Clone, Copy)]
struct RadialEnvelope {
    k1: f64,
    beta: f64,
    psi_max: f64,
    left: f64,
    right: f64,
    slope_left: f64,
    slope_right: f64,
    mass_left: f64,
    mass_centre: f64,
    mass_right: f64,
}

impl RadialEnvelope {
    fn new(k1: f64, beta: f64) -> Self {
        let psi = |r: f64| r.ln() - k1 * r * r + beta * r;
        let dpsi = |r: f64| 1.0 / r - 2.0 * k1 * r + beta;
        let mode = (beta + (beta * beta + 8.0 * k1).sqrt()) / (4.0 * k1);
        let psi_max = psi(mode);
        let target = psi_max - 1.0;
        let bisect = |mut lo: f64, mut hi: f64, increasing: bool| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (psi(mid) < target) == increasing {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        let left = bisect(0.0, mode, true);
        let mut hi = mode + 1.0 / k1.sqrt();
        while psi(hi) > target {
            hi = mode + 2.0 * (hi - mode);
        }
        let right = bisect(mode, hi, false);
        let slope_left = dpsi(left);
        let slope_right = -dpsi(right);
        let e1 = (-1.0f64).exp();
        Self {
            k1,
            beta,
            psi_max,
            left,
            right,
            slope_left,
            slope_right,
            mass_left: e1 * (-(-slope_left * left).exp_m1()) / slope_left,
            mass_centre: right - left,
            mass_right: e1 / slope_right,
        }
    }

    fn total(&self) -> f64 {
        self.mass_left + self.mass_centre + self.mass_right
    }

    /// `ln` of the envelope relative to `exp(ψ_max)`.
    fn log_env(&self, r: f64) -> f64 {
        if r < self.left {
            -1.0 + self.slope_left * (r - self.left)
        } else if r > self.right {
            -1.0 - self.slope_right * (r - self.right)
        } else {
            0.0
        }
    }

    /// `ψ(r) − ψ_max − log_env(r) ≤ 0`.
    fn log_ratio(&self, r: f64) -> f64 {
        r.ln() - self.k1 * r * r + self.beta * r - self.psi_max - self.log_env(r)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>() * self.total();
        let v: f64 = rng.random();
        if u < self.mass_left {
            let floor = (-self.slope_left * self.left).exp();
            (self.left + (floor + v * (1.0 - floor)).ln() / self.slope_left).max(0.0)
        } else if u < self.mass_left + self.mass_centre {
            self.left + v * self.mass_centre
        } else {
            self.right - (1.0 - v).ln() / self.slope_right
        }
    }
}

/// Von Mises draw by the Best–Fisher algorithm, in `[0, 2π)`.
pub fn von_mises_sample<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-2 {
        // rejection from the uniform; acceptance ≥ e^{−2κ}
        loop {
            let t = rng.random::<f64>() * TAU;
            if rng.random::<f64>().ln() <= kappa * ((t - mu).cos() - 1.0) {
                return t;
            }
        }
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let s = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let z = (PI * rng.random::<f64>()).cos();
        let f = (1.0 + s * z) / (s + z);
        let c = kappa * (s - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 >= c {
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            return (mu + sign * f.clamp(-1.0, 1.0).acos()).rem_euclid(TAU);
        }
    }
}

/// Exact rejection sampler for the cone density.
///
/// Full circle: `r` from the envelope of `r·exp{−κ₁r² + (κ₂ + |κ₃|)r}`,
/// accepted with probability `I₀(|κ₃|r)e^{−|κ₃|r}`, then `θ | r` von Mises
/// with concentration `|κ₃|r`. Half circle: `(r, θ)` proposed jointly with
/// `θ` uniform on `[0, π]` and accepted with probability
/// `exp{κ₃r cos(θ − μ) − κ₃r·max cos}`, the maximum taken over the
/// half circle.
#[derive(Debug, Clone, Copy)]
pub struct ConeSampler {
    params: ConeDensityParams,
    envelope: RadialEnvelope,
    kappa: f64,
    mu: f64,
    /// `max cos(θ − μ)` over the domain.
    cos_peak: f64,
    /// Expected acceptance probability per proposal.
    pub acceptance: f64,
}

impl ConeSampler {
    pub fn new(params: ConeDensityParams) -> Result<Self, DistError> {
        let (kappa, mu) = params.polar_kappa3();
        let peak = params.angular_peak();
        let cos_peak = if kappa > 0.0 { peak / kappa } else { 1.0 };
        let envelope = RadialEnvelope::new(params.kappa1, params.kappa2 + peak);
        let log_c = cone_norm_const(&params, NormMethod::Series)?.log_value;
        let angular = match params.domain {
            Domain::FullCircle => TAU,
            Domain::HalfCircle => PI,
        };
        let acceptance = (log_c - angular.ln() - envelope.psi_max - envelope.total().ln()).exp();
        if !(acceptance >= MIN_ACCEPTANCE) {
            return Err(DistError::EnvelopeFailure { rate: acceptance });
        }
        Ok(Self { params, envelope, kappa, mu, cos_peak, acceptance })
    }

    pub fn params(&self) -> &ConeDensityParams {
        &self.params
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let env = &self.envelope;
        loop {
            let r = env.draw(rng);
            if r <= 0.0 {
                continue;
            }
            let ln_u = rng.random::<f64>().ln();
            match self.params.domain {
                Domain::FullCircle => {
                    if ln_u <= env.log_ratio(r) + bessel_i0e(self.kappa * r).ln() {
                        return (r, von_mises_sample(rng, self.mu, self.kappa * r));
                    }
                }
                Domain::HalfCircle => {
                    let t = PI * rng.random::<f64>();
                    if ln_u <= env.log_ratio(r) + self.kappa * r * ((t - self.mu).cos() - self.cos_peak) {
                        return (r, t);
                    }
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// `n` draws `(r, θ)` from a generator seeded with `seed`.
pub fn cone_sample(p: &ConeDensityParams, n: usize, seed: u64) -> Result<Vec<(f64, f64)>, DistError> {
    let sampler = ConeSampler::new(*p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng, n))
}
