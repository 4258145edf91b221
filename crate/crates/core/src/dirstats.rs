//! Directional summaries, rotation to the pole, Lambert equal-area
//! projection, covariance/correlation summaries, PCA and the two-sample
//! Hotelling test.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{spherical_point, FivePointVector};
use crate::specfun::f_sf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirStatsError {
    #[error("row {0} is not a unit vector")]
    NotUnit(usize),
    #[error("expected {expected} columns, found {found}")]
    BadShape { expected: usize, found: usize },
    #[error("empty sample")]
    Empty,
    #[error("mean resultant is zero; mean direction undefined")]
    ZeroResultant,
    #[error("column {0} has zero variance")]
    DegenerateVariance(usize),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("pooled covariance is singular (condition {0:.3e})")]
    SingularPooled(f64),
    #[error("too few samples: n1 + n2 = {total} needs to exceed p + 1 = {needed}")]
    TooFewSamples { total: usize, needed: usize },
    #[error("non-finite input")]
    NonFinite,
}

const UNIT_TOL: f64 = 1e-10;
const SYM_TOL: f64 = 1e-12;
/// Condition number beyond which the pooled covariance is treated as singular.
pub const POOLED_CONDITION_LIMIT: f64 = 1e13;
/// p-values below this are reported as zero with `p_underflow` set.
pub const P_UNDERFLOW: f64 = 1e-300;

/// `n × 3` matrix of unit row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSample {
    x: DMatrix<f64>,
}

impl SphericalSample {
    pub fn new(x: DMatrix<f64>) -> Result<Self, DirStatsError> {
        if x.ncols() != 3 {
            return Err(DirStatsError::BadShape { expected: 3, found: x.ncols() });
        }
        if x.nrows() == 0 {
            return Err(DirStatsError::Empty);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DirStatsError::NonFinite);
        }
        for i in 0..x.nrows() {
            if (x.row(i).norm() - 1.0).abs() > UNIT_TOL {
                return Err(DirStatsError::NotUnit(i));
            }
        }
        Ok(Self { x })
    }

    /// Normalizes each vector; zero vectors are rejected.
    pub fn from_vectors(v: &[Vector3<f64>]) -> Result<Self, DirStatsError> {
        let mut x = DMatrix::zeros(v.len(), 3);
        for (i, p) in v.iter().enumerate() {
            let n = p.norm();
            if n == 0.0 || !n.is_finite() {
                return Err(DirStatsError::NotUnit(i));
            }
            x.set_row(i, &(p / n).transpose());
        }
        Self::new(x)
    }

    pub fn from_angles(angles: &[(f64, f64)]) -> Result<Self, DirStatsError> {
        let v: Vec<_> = angles.iter().map(|&(t, p)| spherical_point(t, p)).collect();
        Self::from_vectors(&v)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.x[(i, 0)], self.x[(i, 1)], self.x[(i, 2)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSummary {
    pub mean_vector: Vector3<f64>,
    pub mean_direction: Vector3<f64>,
    pub resultant: f64,
}

pub fn directional_summary(s: &SphericalSample) -> Result<DirectionalSummary, DirStatsError> {
    let n = s.len() as f64;
    let mut sum = Vector3::zeros();
    for i in 0..s.len() {
        sum += s.point(i);
    }
    let mean_vector = sum / n;
    let resultant = mean_vector.norm();
    if resultant <= 1e-14 {
        return Err(DirStatsError::ZeroResultant);
    }
    Ok(DirectionalSummary {
        mean_vector,
        mean_direction: mean_vector / resultant,
        resultant: resultant.min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationConvention {
    PoleRotationA,
    #[default]
    EigenframeB,
}

impl FromStr for RotationConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "a" | "A" | "pole_rotation_a" | "pole" => Ok(Self::PoleRotationA),
            "b" | "B" | "eigenframe_b" | "eigenframe" => Ok(Self::EigenframeB),
            other => Err(format!("unknown rotation convention '{other}'")),
        }
    }
}

impl fmt::Display for RotationConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PoleRotationA => "pole_rotation_a",
            Self::EigenframeB => "eigenframe_b",
        })
    }
}

/// Sample after rotation, `y_i = R x_i`, with the mean direction sent to `e_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedSample {
    pub y: DMatrix<f64>,
    pub rotation: Matrix3<f64>,
    pub convention: RotationConvention,
    /// `acos(y_1)`, angle from the mean direction.
    pub theta: Vec<f64>,
    /// `atan2(y_3, y_2)`.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSample {
    pub points: DMatrix<f64>,
    pub rotation: Matrix3<f64>,
    pub det: f64,
    pub convention: RotationConvention,
}

/// Rotation taking the unit vector `m` to `e_1`.
pub fn pole_rotation(m: &Vector3<f64>, convention: RotationConvention) -> Matrix3<f64> {
    match convention {
        RotationConvention::PoleRotationA => {
            let a = m.z.clamp(-1.0, 1.0).acos();
            let b = m.y.atan2(m.x);
            let (sa, ca) = a.sin_cos();
            let (sb, cb) = b.sin_cos();
            Matrix3::new(sa * cb, sa * sb, ca, sb, -cb, 0.0, ca * cb, ca * sb, -sa)
        }
        RotationConvention::EigenframeB => {
            let b1 = *m;
            // first standard axis (near-)least aligned with b1; the slack keeps
            // the choice stable for means already on e1
            let least = b1.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
            let axis = (0..3).find(|&i| b1[i].abs() <= least + 1e-8).unwrap_or(0);
            let e = Vector3::ith(axis, 1.0);
            let b2 = (e - b1 * b1.dot(&e)).normalize();
            let b3 = b1.cross(&b2);
            Matrix3::from_columns(&[b1, b2, b3]).transpose()
        }
    }
}

pub fn rotate_to_pole(s: &SphericalSample, convention: RotationConvention) -> Result<RotatedSample, DirStatsError> {
    let summary = directional_summary(s)?;
    let rotation = pole_rotation(&summary.mean_direction, convention);
    let n = s.len();
    let mut y = DMatrix::zeros(n, 3);
    let mut theta = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let yi = rotation * s.point(i);
        y.set_row(i, &yi.transpose());
        theta.push(yi.x.clamp(-1.0, 1.0).acos());
        phi.push(yi.z.atan2(yi.y));
    }
    Ok(RotatedSample { y, rotation, convention, theta, phi })
}

pub fn lambert_point(theta: f64, phi: f64) -> (f64, f64) {
    let r = 2.0 * (theta / 2.0).sin();
    (r * phi.cos(), r * phi.sin())
}

pub fn lambert_project(r: &RotatedSample) -> TangentSample {
    let n = r.theta.len();
    let mut points = DMatrix::zeros(n, 2);
    for i in 0..n {
        let (x, y) = lambert_point(r.theta[i], r.phi[i]);
        points[(i, 0)] = x;
        points[(i, 1)] = y;
    }
    TangentSample {
        points,
        rotation: r.rotation,
        det: r.rotation.determinant(),
        convention: r.convention,
    }
}

/// Mean, unbiased covariance, correlation and derived quantities of an
/// `n × p` data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSummary {
    pub n: usize,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub correlation: DMatrix<f64>,
    pub covariance_det: f64,
    pub correlation_det: f64,
    /// Descending.
    pub covariance_eigenvalues: Vec<f64>,
}

fn column_means(data: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(data.ncols(), |j, _| data.column(j).mean())
}

fn scatter(data: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let c = DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| data[(i, j)] - mean[j]);
    c.transpose() * c
}

pub fn covariance(data: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), DirStatsError> {
    if data.nrows() < 2 {
        return Err(DirStatsError::Empty);
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(DirStatsError::NonFinite);
    }
    let mean = column_means(data);
    let s = scatter(data, &mean) / (data.nrows() - 1) as f64;
    Ok((mean, s))
}

pub fn correlation_from_covariance(s: &DMatrix<f64>) -> Result<DMatrix<f64>, DirStatsError> {
    let p = s.nrows();
    let sd: Vec<f64> = (0..p).map(|j| s[(j, j)].max(0.0).sqrt()).collect();
    for (j, &d) in sd.iter().enumerate() {
        if d <= 1e-300 {
            return Err(DirStatsError::DegenerateVariance(j));
        }
    }
    Ok(DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            (s[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
        }
    }))
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.nrows());
    for (c, &i) in idx.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // largest-magnitude entry positive, for reproducible signs
        let k = v.iamax();
        if v[k] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(c, &v);
    }
    (values, vectors)
}

pub fn summarize(data: &DMatrix<f64>) -> Result<MultivariateSummary, DirStatsError> {
    let (mean, covariance) = covariance(data)?;
    let correlation = correlation_from_covariance(&covariance)?;
    let (covariance_eigenvalues, _) = sorted_eigen(&covariance);
    Ok(MultivariateSummary {
        n: data.nrows(),
        covariance_det: covariance.clone().lu().determinant(),
        correlation_det: correlation.clone().lu().determinant(),
        mean,
        covariance,
        correlation,
        covariance_eigenvalues,
    })
}

/// [`summarize`] restricted to the seven-column `(d₁, d₂, α, tangent₁, tangent₂)` layout.
pub fn summarize7(data: &DMatrix<f64>) -> Result<MultivariateSummary, DirStatsError> {
    if data.ncols() != 7 {
        return Err(DirStatsError::BadShape { expected: 7, found: data.ncols() });
    }
    summarize(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub eigenvalues: Vec<f64>,
    pub percentages: Vec<f64>,
    /// Columns are the principal directions.
    pub loadings: DMatrix<f64>,
}

pub fn percent_contributions(eigenvalues: &[f64]) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().sum();
    eigenvalues.iter().map(|l| 100.0 * l / total).collect()
}

pub fn pca(m: &DMatrix<f64>) -> Result<Pca, DirStatsError> {
    if !m.is_square() {
        return Err(DirStatsError::NotSymmetric);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(DirStatsError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > SYM_TOL * scale {
        return Err(DirStatsError::NotSymmetric);
    }
    let (eigenvalues, loadings) = sorted_eigen(m);
    Ok(Pca {
        percentages: percent_contributions(&eigenvalues),
        eigenvalues,
        loadings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub d2: f64,
    pub t2: f64,
    pub f: f64,
    pub dof: (u32, u32),
    pub p_value: f64,
    pub p_underflow: bool,
    pub pooled: Option<DMatrix<f64>>,
    pub mean_difference: Option<DVector<f64>>,
}

/// `T² = n₁n₂/(n₁+n₂)·d²`, `F = T²(n₁+n₂−p−1)/((n₁+n₂−2)p)` and the `F` tail.
pub fn hotelling_from_d2(d2: f64, n1: usize, n2: usize, p: usize) -> Result<TwoSampleResult, DirStatsError> {
    let total = n1 + n2;
    if n1 == 0 || n2 == 0 || p == 0 || total <= p + 1 {
        return Err(DirStatsError::TooFewSamples { total, needed: p + 1 });
    }
    if !d2.is_finite() || d2 < 0.0 {
        return Err(DirStatsError::NonFinite);
    }
    let (n1f, n2f, pf, nf) = (n1 as f64, n2 as f64, p as f64, total as f64);
    let t2 = n1f * n2f / nf * d2;
    let f = t2 * (nf - pf - 1.0) / ((nf - 2.0) * pf);
    let dof = (p as u32, (total - p - 1) as u32);
    let raw = f_sf(f, dof.0, dof.1);
    let p_underflow = raw < P_UNDERFLOW;
    Ok(TwoSampleResult {
        d2,
        t2,
        f,
        dof,
        p_value: if p_underflow { 0.0 } else { raw },
        p_underflow,
        pooled: None,
        mean_difference: None,
    })
}

/// Hotelling test from printed means and pooled covariance.
pub fn hotelling_from_summary(
    mean1: &DVector<f64>,
    mean2: &DVector<f64>,
    pooled: &DMatrix<f64>,
    n1: usize,
    n2: usize,
) -> Result<TwoSampleResult, DirStatsError> {
    let p = mean1.len();
    if mean2.len() != p || pooled.nrows() != p || pooled.ncols() != p {
        return Err(DirStatsError::BadShape { expected: p, found: mean2.len() });
    }
    let diff = mean1 - mean2;
    let sv = pooled.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < POOLED_CONDITION_LIMIT) {
        return Err(DirStatsError::SingularPooled(cond));
    }
    let sol = pooled.clone().lu().solve(&diff).ok_or(DirStatsError::SingularPooled(cond))?;
    let d2 = diff.dot(&sol).max(0.0);
    let mut r = hotelling_from_d2(d2, n1, n2, p)?;
    r.pooled = Some(pooled.clone());
    r.mean_difference = Some(diff);
    Ok(r)
}

pub fn pooled_covariance(y1: &DMatrix<f64>, y2: &DMatrix<f64>) -> DMatrix<f64> {
    let w = scatter(y1, &column_means(y1)) + scatter(y2, &column_means(y2));
    w / (y1.nrows() + y2.nrows() - 2) as f64
}

pub fn hotelling_two_sample(y1: &DMatrix<f64>, y2: &DMatrix<f64>) -> Result<TwoSampleResult, DirStatsError> {
    let p = y1.ncols();
    if y2.ncols() != p {
        return Err(DirStatsError::BadShape { expected: p, found: y2.ncols() });
    }
    let (n1, n2) = (y1.nrows(), y2.nrows());
    if n1 == 0 || n2 == 0 || n1 + n2 <= p + 1 {
        return Err(DirStatsError::TooFewSamples { total: n1 + n2, needed: p + 1 });
    }
    if y1.iter().chain(y2.iter()).any(|v| !v.is_finite()) {
        return Err(DirStatsError::NonFinite);
    }
    let s = pooled_covariance(y1, y2);
    hotelling_from_summary(&column_means(y1), &column_means(y2), &s, n1, n2)
}

/// Seven-variable tangent coordinates of five-point vectors: `d₁, d₂, α`
/// unchanged, each `(θ, φ)` block rotated about its own mean direction and
/// Lambert-projected.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSeven {
    pub data: DMatrix<f64>,
    pub summaries: [DirectionalSummary; 2],
    pub rotations: [Matrix3<f64>; 2],
}

pub fn tangent_seven(w: &[FivePointVector], convention: RotationConvention) -> Result<TangentSeven, DirStatsError> {
    if w.is_empty() {
        return Err(DirStatsError::Empty);
    }
    let n = w.len();
    let mut data = DMatrix::zeros(n, 7);
    for (i, v) in w.iter().enumerate() {
        data[(i, 0)] = v.d1;
        data[(i, 1)] = v.d2;
        data[(i, 2)] = v.alpha;
    }
    let mut summaries = Vec::with_capacity(2);
    let mut rotations = Vec::with_capacity(2);
    for block in 0..2 {
        let angles: Vec<(f64, f64)> = w
            .iter()
            .map(|v| if block == 0 { (v.theta1, v.phi1) } else { (v.theta2, v.phi2) })
            .collect();
        let s = SphericalSample::from_angles(&angles)?;
        summaries.push(directional_summary(&s)?);
        let r = rotate_to_pole(&s, convention)?;
        let t = lambert_project(&r);
        data.set_column(3 + 2 * block, &t.points.column(0));
        data.set_column(4 + 2 * block, &t.points.column(1));
        rotations.push(r.rotation);
    }
    Ok(TangentSeven {
        data,
        summaries: [summaries[0], summaries[1]],
        rotations: [rotations[0], rotations[1]],
    })
}

/// Hotelling test of two five-point samples in a joint tangent frame fitted
/// to the pooled data.
pub fn hotelling_five_point(
    a: &[FivePointVector],
    b: &[FivePointVector],
    convention: RotationConvention,
) -> Result<TwoSampleResult, DirStatsError> {
    let pooled: Vec<FivePointVector> = a.iter().chain(b).copied().collect();
    let t = tangent_seven(&pooled, convention)?;
    let y1 = t.data.rows(0, a.len()).into_owned();
    let y2 = t.data.rows(a.len(), b.len()).into_owned();
    hotelling_two_sample(&y1, &y2)
}
