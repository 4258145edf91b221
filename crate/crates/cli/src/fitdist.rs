use std::path::Path;

use formkit::dirstats::SphericalSample;
use formkit::distributions::{cone_fit, fisher_fit, DistError, Domain};
use nalgebra::Vector3;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::io::{write_json, Table, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitModel {
    /// Cone density on `(r, theta)`, full circle.
    Cone,
    /// Cone density with `theta` in `[0, pi]`.
    #[value(alias = "cone_half")]
    ConeHalf,
    /// Fisher distribution on unit vectors `(x, y, z)`.
    Fisher,
}

fn dist_error(e: DistError) -> CliError {
    match e {
        DistError::NonConvergence(_) | DistError::EnvelopeFailure { .. } => CliError::Numeric(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

pub fn run(input: &Path, model: FitModel, degrees: bool, output: Option<&Path>) -> Result<()> {
    let t = Table::read(input)?;
    if t.is_empty_file() {
        return Err(CliError::Data(format!("{}: empty input", input.display())));
    }
    let report = match model {
        FitModel::Cone | FitModel::ConeHalf => {
            let (rc, tc) = (t.require("r")?, t.require("theta")?);
            let data: Vec<(f64, f64)> = t
                .rows
                .iter()
                .map(|row| {
                    let theta = t.number(row, tc)?;
                    Ok((t.number(row, rc)?, if degrees { theta.to_radians() } else { theta }))
                })
                .collect::<Result<_>>()?;
            let domain = if model == FitModel::Cone { Domain::FullCircle } else { Domain::HalfCircle };
            let fit = cone_fit(&data, domain).map_err(dist_error)?;
            json!({
                "schema_version": SCHEMA_VERSION,
                "model": "cone",
                "domain": domain,
                "n": fit.n,
                "kappa1": fit.params.kappa1,
                "kappa2": fit.params.kappa2,
                "kappa3": fit.params.kappa3,
                "mu": fit.params.mu,
                "loglik": fit.loglik,
                "iterations": fit.iterations,
                "gradient": fit.gradient,
                "natural_se": fit.natural_se,
            })
        }
        FitModel::Fisher => {
            let cols = [t.require("x")?, t.require("y")?, t.require("z")?];
            let v: Vec<Vector3<f64>> = t
                .rows
                .iter()
                .map(|row| {
                    let x = Vector3::new(t.number(row, cols[0])?, t.number(row, cols[1])?, t.number(row, cols[2])?);
                    let norm = x.norm();
                    if !(norm > 0.0) {
                        return Err(t.error(row, None, "zero vector"));
                    }
                    Ok(x / norm)
                })
                .collect::<Result<_>>()?;
            let s = SphericalSample::from_vectors(&v).map_err(|e| CliError::Data(e.to_string()))?;
            let fit = fisher_fit(&s).map_err(dist_error)?;
            json!({
                "schema_version": SCHEMA_VERSION,
                "model": "fisher",
                "n": fit.n,
                "mean_direction": fit.params.mu.as_slice(),
                "kappa": fit.params.kappa,
                "resultant": fit.resultant,
                "rayleigh": fit.rayleigh,
                "rayleigh_p": fit.rayleigh_p,
            })
        }
    };
    write_json(output, &report)
}
