//! Special functions used by the distribution and testing code.
//!
//! Everything here is evaluated from series, continued fractions or
//! asymptotic expansions with fixed switchover points, and is cross-checked
//! in the tests against [`quad`], the adaptive Gauss–Kronrod integrator.
//!
//! | Function | Description |
//! |----------|-------------|
//! | [`ln_gamma`] | ln Γ(x), x > 0 |
//! | [`bessel_i0`] | modified Bessel I₀(z) |
//! | [`bessel_i`] | modified Bessel Iₙ(z), integer n |
//! | [`hyp1f1`] | Kummer's confluent hypergeometric ₁F₁(a; b; z) |
//! | [`reg_gamma_p`], [`reg_gamma_q`] | regularized incomplete gamma |
//! | [`reg_beta`] | regularized incomplete beta I_x(a, b) |
//! | [`chi2_sf`], [`f_sf`] | χ² and F survival functions |

mod bessel;
mod gamma;
mod hyper;
mod incomplete;
pub mod quad;

pub use bessel::{bessel_i, bessel_i0, bessel_i0_with, bessel_i0e, bessel_ie, ln_bessel_i0};
pub use gamma::{gamma, ln_gamma, ln_factorial};
pub use hyper::{hyp1f1, hyp1f1_with};
pub use incomplete::{chi2_sf, f_sf, reg_beta, reg_gamma_p, reg_gamma_q};

use thiserror::Error;

/// Errors from special function evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{function}: series did not converge within {terms} terms")]
    NonConvergence { function: &'static str, terms: usize },
    #[error("{function}: argument outside domain")]
    Domain { function: &'static str },
}

/// Truncation control for power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesAccuracy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 500,
        }
    }
}

impl SeriesAccuracy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Option<Self> {
        (rel_tol > 0.0 && max_terms >= 1).then_some(Self { rel_tol, max_terms })
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of absolute values of all added terms; `abs_sum / |value|` bounds
    /// the loss of relative precision to cancellation.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }
}
