use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cone::{ConeDensity, ConeDensityParams, Domain};
use super::fisher::{fisher_log_density, fisher_sample, FisherParams};
use super::sample::ConeSampler;
use super::DistError;

/// Half-circle cone density times an independent Fisher density on 𝕊².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConeFisher {
    pub cone: ConeDensity,
    pub fisher: FisherParams,
}

impl JointConeFisher {
    pub fn new(cone: ConeDensityParams, fisher: FisherParams) -> Result<Self, DistError> {
        if cone.domain != Domain::HalfCircle {
            return Err(DistError::InvalidParams("joint model uses the half-circle cone density".into()));
        }
        Ok(Self { cone: ConeDensity::new(cone)?, fisher })
    }

    pub fn log_density(&self, r: f64, theta: f64, l: &Vector3<f64>) -> Result<f64, DistError> {
        Ok(self.cone.log_density(r, theta)? + fisher_log_density(l, &self.fisher)?)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(f64, f64, Vector3<f64>)>, DistError> {
        let cone = ConeSampler::new(self.cone.params)?.sample(rng, n);
        let dirs = fisher_sample(rng, &self.fisher, n);
        Ok(cone.into_iter().zip(dirs).map(|((r, t), l)| (r, t, l)).collect())
    }
}

pub fn joint_cone_fisher_log_density(
    r: f64,
    theta: f64,
    l: &Vector3<f64>,
    cone: &ConeDensityParams,
    fisher: &FisherParams,
) -> Result<f64, DistError> {
    JointConeFisher::new(*cone, *fisher)?.log_density(r, theta, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub mu: f64,
}

impl HalfPlaneParams {
    pub fn new(kappa1: f64, kappa2: f64, mu: f64) -> Result<Self, DistError> {
        ConeDensityParams::new(kappa1, 0.0, kappa2, mu, Domain::HalfCircle)?;
        Ok(Self { kappa1, kappa2, mu })
    }

    /// The same density as a cone density with `κ₂ = 0`, `κ₃ = κ₂(half-plane)`.
    pub fn as_cone(&self) -> Result<ConeDensityParams, DistError> {
        ConeDensityParams::new(self.kappa1, 0.0, self.kappa2, self.mu, Domain::HalfCircle)
    }
}

/// `ln r − κ₁r² + κ₂r cos(θ − μ) − ln c` on `θ ∈ [0, π]`.
pub fn half_plane_log_density(r: f64, theta: f64, p: &HalfPlaneParams) -> Result<f64, DistError> {
    ConeDensity::new(p.as_cone()?)?.log_density(r, theta)
}
