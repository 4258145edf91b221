//! Cone, half-plane and Fisher densities with their normalizing constants,
//! samplers and maximum likelihood fits.
//!
//! The cone density on `(r, θ)` is
//! `r·exp{−κ₁r² + κ₂r + κ₃r cos(θ − μ)} / c`, on the full circle or on the
//! half circle `θ ∈ [0, π]`. The half-plane density is its `κ₂ = 0` special
//! case on the half circle, and the joint model multiplies a half-circle cone
//! density by a Fisher density on 𝕊².

mod cone;
mod fisher;
mod fit;
mod joint;
mod sample;

pub use cone::{
    cone_expectations, cone_log_density, cone_moments, cone_norm_const, ConeDensity, ConeDensityParams,
    ConeMoments, Domain, NormConst, NormMethod,
};
pub use fisher::{fisher_fit, fisher_log_density, fisher_sample, fisher_sample_seeded, langevin_inverse, FisherFit, FisherParams};
pub use fit::{cone_fit, ConeFit};
pub use joint::{half_plane_log_density, joint_cone_fisher_log_density, HalfPlaneParams, JointConeFisher};
pub use sample::{cone_sample, von_mises_sample, ConeSampler};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point outside the support")]
    OutOfDomain,
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("sampler acceptance rate {rate:.2e} is below 1e-4")]
    EnvelopeFailure { rate: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("mean resultant is zero")]
    ZeroResultant,
}
