use std::f64::consts::{PI, TAU};
use std::path::Path;

use formkit::dirstats::{
    correlation_from_covariance, covariance, hotelling_five_point, hotelling_from_d2, pca, tangent_seven,
    DirStatsError, RotationConvention, TwoSampleResult,
};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::coords::read_five_point;
use crate::error::{CliError, Result};
use crate::io::{matrix_rows, write_json, SCHEMA_VERSION};

const VARIABLES: [&str; 7] = ["d1", "d2", "alpha", "theta1", "phi1", "theta2", "phi2"];

fn numeric(e: DirStatsError) -> CliError {
    match e {
        DirStatsError::SingularPooled(_) | DirStatsError::DegenerateVariance(_) => CliError::Numeric(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

pub fn run_stats(input: &Path, convention: RotationConvention, degrees: bool, output: Option<&Path>) -> Result<()> {
    let (_, w) = read_five_point(input, degrees)?;
    if w.len() < 2 {
        return Err(CliError::Data(format!("{}: need at least 2 records, found {}", input.display(), w.len())));
    }
    let raw = DMatrix::from_fn(w.len(), 7, |i, j| w[i].to_array()[j]);
    let (mut raw_mean, raw_cov) = covariance(&raw).map_err(numeric)?;
    let mut variances: Vec<f64> = raw_cov.diagonal().iter().copied().collect();
    for j in [4, 6] {
        let (m, v) = circular_mean_var(raw.column(j).iter().copied());
        raw_mean[j] = m;
        variances[j] = v;
    }
    let tangent = tangent_seven(&w, convention).map_err(numeric)?;
    let (mean, cov) = covariance(&tangent.data).map_err(numeric)?;
    let eig = pca(&cov).map_err(numeric)?;
    let mut warnings = Vec::new();
    let (correlation, correlation_det, cor_pca) = match correlation_from_covariance(&cov) {
        Ok(r) => {
            let p = pca(&r).map_err(numeric)?;
            let det = r.clone().lu().determinant();
            (
                json!(matrix_rows(&r)),
                json!(det),
                json!({ "eigenvalues": p.eigenvalues, "percentages": p.percentages }),
            )
        }
        Err(e) => {
            warnings.push(format!("correlation unavailable: {e}"));
            (Value::Null, Value::Null, Value::Null)
        }
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "n": w.len(),
        "variables": VARIABLES,
        "rotation_convention": convention.to_string(),
        "mean": raw_mean.as_slice(),
        "variances": variances,
        "spherical": tangent.summaries.iter().map(|s| json!({
            "resultant": s.resultant,
            "mean_direction": s.mean_direction.as_slice(),
        })).collect::<Vec<_>>(),
        "tangent": {
            "mean": mean.as_slice(),
            "covariance": matrix_rows(&cov),
            "covariance_det": cov.clone().lu().determinant(),
            "covariance_eigenvalues": eig.eigenvalues,
            "correlation": correlation,
            "correlation_det": correlation_det,
        },
        "pca": cor_pca,
        "warnings": warnings,
    });
    write_json(output, &report)
}

/// Mean direction in `(−π, π]` and the unbiased variance of residuals wrapped
/// about it.
fn circular_mean_var(x: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (s, c) = x.clone().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let m = s.atan2(c);
    let n = x.clone().count() as f64;
    let ss: f64 = x.map(|a| (a - m + PI).rem_euclid(TAU) - PI).map(|d| d * d).sum();
    (m, ss / (n - 1.0))
}

fn test_report(r: &TwoSampleResult, n1: usize, n2: usize, p: usize) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "n1": n1,
        "n2": n2,
        "p": p,
        "d2": r.d2,
        "t2": r.t2,
        "f": r.f,
        "dof": [r.dof.0, r.dof.1],
        "p_value": r.p_value,
        "p_underflow": r.p_underflow,
        "mean_difference": r.mean_difference.as_ref().map(|d| d.as_slice().to_vec()),
        "pooled": r.pooled.as_ref().map(matrix_rows),
    })
}

pub struct Injected {
    pub d2: f64,
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
}

pub fn run_test(
    files: Option<(&Path, &Path)>,
    injected: Option<Injected>,
    convention: RotationConvention,
    degrees: bool,
    output: Option<&Path>,
) -> Result<()> {
    let report = match (files, injected) {
        (_, Some(i)) => test_report(&hotelling_from_d2(i.d2, i.n1, i.n2, i.p).map_err(numeric)?, i.n1, i.n2, i.p),
        (Some((a, b)), None) => {
            let (_, wa) = read_five_point(a, degrees)?;
            let (_, wb) = read_five_point(b, degrees)?;
            let r = hotelling_five_point(&wa, &wb, convention).map_err(numeric)?;
            test_report(&r, wa.len(), wb.len(), 7)
        }
        (None, None) => return Err(CliError::Usage("give two coordinate files or --d2/--n1/--n2/--p".into())),
    };
    write_json(output, &report)
}
