//! Simplex frames and simplex MPP coordinates.
//!
//! The first `m` multicentred columns span a tower of simplices
//! `{z_1} ⊂ [z_1, z_2] ⊂ …`. Each level fixes one axis of a rotation `U`
//! orthogonal to that simplex, together with its height `h_j`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mucen::{multicentre, preset_scheme, Configuration, MulticentredConfig, PresetKind};

/// Condition number of `[z_1 .. z_m]` above which the frame is rejected.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("frame columns are (nearly) linearly dependent")]
    DegenerateSimplex,
    #[error("multicentred column {0} is zero")]
    ZeroLandmark(usize),
    #[error("need at least {needed} columns, got {found}")]
    TooFewColumns { needed: usize, found: usize },
    #[error("value out of range: {0}")]
    RangeViolation(String),
    #[error("expected a 3x5 configuration")]
    NotFivePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    /// `u_m` orthogonal to the full simplex `Δ^{m−1}`, `h_m > 0`.
    Type1,
    /// `u_m` orthogonal to `z_1 .. z_{m−1}`, `h_m = 0`.
    Type2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFrame {
    pub u: DMatrix<f64>,
    pub h: DVector<f64>,
    pub frame_type: FrameType,
}

impl SimplexFrame {
    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// `U_j = (u_1, …, u_j, 0, …, 0)`.
    pub fn u_j(&self, j: usize) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        out.columns_mut(0, j).copy_from(&self.u.columns(0, j));
        out
    }
}

fn solve(rows: &[DVector<f64>], rhs: &[f64]) -> Result<DVector<f64>, SimplexError> {
    let m = rows.len();
    let a = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    a.lu().solve(&b).ok_or(SimplexError::DegenerateSimplex)
}

/// Construct the simplex frame from `z_1 .. z_m` (the columns of `z`).
pub fn simplex_frame(z: &DMatrix<f64>, frame_type: FrameType) -> Result<SimplexFrame, SimplexError> {
    let m = z.nrows();
    if z.ncols() != m || m < 2 {
        return Err(SimplexError::TooFewColumns {
            needed: m,
            found: z.ncols(),
        });
    }
    let sv = z.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 0.0) || smax / smin > CONDITION_LIMIT {
        return Err(SimplexError::DegenerateSimplex);
    }
    let zc: Vec<DVector<f64>> = (0..m).map(|i| z.column(i).into_owned()).collect();
    let mut u: Vec<Option<DVector<f64>>> = vec![None; m];
    let mut h = DVector::zeros(m);

    match frame_type {
        FrameType::Type1 => {
            let w = solve(&zc, &vec![1.0; m])?;
            let n = w.norm();
            u[m - 1] = Some(w / n);
            h[m - 1] = 1.0 / n;
        }
        FrameType::Type2 => {
            let mut rhs = vec![0.0; m];
            rhs[m - 1] = 1.0;
            let w = solve(&zc, &rhs)?;
            u[m - 1] = Some(w.normalize());
        }
    }

    let lowest = match frame_type {
        FrameType::Type1 => 2,
        FrameType::Type2 => 1,
    };
    for j in (lowest..m).rev() {
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for zi in zc.iter().take(j) {
            rows.push(zi.clone());
            rhs.push(1.0);
        }
        for ui in u.iter().skip(j) {
            rows.push(ui.clone().expect("filled from the top"));
            rhs.push(0.0);
        }
        let w = solve(&rows, &rhs)?;
        let n = w.norm();
        u[j - 1] = Some(w / n);
        h[j - 1] = 1.0 / n;
    }

    let mut cols: Vec<DVector<f64>> = match frame_type {
        FrameType::Type1 => {
            let rest: Vec<DVector<f64>> = u[1..].iter().map(|c| c.clone().unwrap()).collect();
            let mut all = vec![complete_first_axis(&rest, m)];
            all.extend(rest);
            all
        }
        FrameType::Type2 => u.into_iter().map(Option::unwrap).collect(),
    };
    let mut umat = DMatrix::from_columns(&cols);
    if umat.determinant() < 0.0 {
        match frame_type {
            FrameType::Type1 => cols[0].neg_mut(),
            FrameType::Type2 => cols[m - 1].neg_mut(),
        }
        umat = DMatrix::from_columns(&cols);
    }
    if frame_type == FrameType::Type1 {
        h[0] = cols[0].dot(&zc[0]);
    }
    Ok(SimplexFrame {
        u: umat,
        h,
        frame_type,
    })
}

// Unit vector orthogonal to `others`, from the standard axis least covered.
fn complete_first_axis(others: &[DVector<f64>], m: usize) -> DVector<f64> {
    let mut best = DVector::zeros(m);
    let mut best_norm = -1.0;
    for i in 0..m {
        let mut e = DVector::zeros(m);
        e[i] = 1.0;
        for _ in 0..2 {
            for o in others {
                let d = o.dot(&e);
                e -= o * d;
            }
        }
        let n = e.norm();
        if n > best_norm {
            best_norm = n;
            best = e / n;
        }
    }
    best
}

/// Which sphere a simplex MPP direction lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SphereKind {
    /// `𝕊^j_+`: entry `j+1` positive, later entries zero.
    Half(usize),
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMppCoordinates {
    pub frame: SimplexFrame,
    pub h1: f64,
    /// `s_1 .. s_{k−2}`.
    pub s: Vec<f64>,
    /// `ζ_1 .. ζ_{k−2}` as `m`-vectors, zero-padded on half-spheres.
    pub zeta: Vec<DVector<f64>>,
    pub sphere: Vec<SphereKind>,
}

impl SimplexMppCoordinates {
    pub fn frame_type(&self) -> FrameType {
        self.frame.frame_type
    }

    /// `ζ_i` truncated to its intrinsic dimension.
    pub fn zeta_intrinsic(&self, i: usize) -> DVector<f64> {
        match self.sphere[i - 1] {
            SphereKind::Half(j) => self.zeta[i - 1].rows(0, j + 1).into_owned(),
            SphereKind::Full => self.zeta[i - 1].clone(),
        }
    }
}

/// Simplex MPP coordinates of the given type.
pub fn simplex_mpp(z: &MulticentredConfig, frame_type: FrameType) -> Result<SimplexMppCoordinates, SimplexError> {
    let m = z.dim();
    let n = z.len();
    if n < m {
        return Err(SimplexError::TooFewColumns { needed: m, found: n });
    }
    let norms: Vec<f64> = (0..n).map(|j| z.z.column(j).norm()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    if let Some(j) = norms.iter().position(|&r| r <= 1e-14 * scale || r == 0.0) {
        return Err(SimplexError::ZeroLandmark(j + 1));
    }
    let frame = simplex_frame(&z.z.columns(0, m).into_owned(), frame_type)?;
    // last one-based j using the truncated frame U_j
    let last_truncated = match frame_type {
        FrameType::Type1 => m,
        FrameType::Type2 => m - 1,
    };
    let ut = frame.u.transpose();
    let mut s = Vec::with_capacity(n - 1);
    let mut zeta = Vec::with_capacity(n - 1);
    let mut sphere = Vec::with_capacity(n - 1);
    for j in 2..=n {
        let zj = z.z.column(j - 1);
        let mut proj = &ut * zj;
        if j <= last_truncated {
            for i in j..m {
                proj[i] = 0.0;
            }
            let r = proj.norm();
            s.push(r);
            zeta.push(proj / r);
            sphere.push(SphereKind::Half(j - 1));
        } else {
            let r = norms[j - 1];
            s.push(r);
            zeta.push(proj / r);
            sphere.push(SphereKind::Full);
        }
    }
    let h1 = frame.h[0];
    Ok(SimplexMppCoordinates {
        frame,
        h1,
        s,
        zeta,
        sphere,
    })
}

/// The seven RNA suite variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FivePointVector {
    pub d1: f64,
    pub d2: f64,
    pub alpha: f64,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

impl FivePointVector {
    pub fn to_array(&self) -> [f64; 7] {
        [self.d1, self.d2, self.alpha, self.theta1, self.phi1, self.theta2, self.phi2]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            d1: a[0],
            d2: a[1],
            alpha: a[2],
            theta1: a[3],
            phi1: a[4],
            theta2: a[5],
            phi2: a[6],
        }
    }

    pub fn validate(&self) -> Result<(), SimplexError> {
        let bad = |what: &str| Err(SimplexError::RangeViolation(what.to_string()));
        if !(self.d1 > 0.0 && self.d1.is_finite()) {
            return bad("d1 must be positive");
        }
        if !(self.d2 > 0.0 && self.d2.is_finite()) {
            return bad("d2 must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < PI) {
            return bad("alpha must lie in (0, pi)");
        }
        for t in [self.theta1, self.theta2] {
            if !(0.0..=PI).contains(&t) {
                return bad("theta must lie in [0, pi]");
            }
        }
        for p in [self.phi1, self.phi2] {
            if !p.is_finite() {
                return bad("phi must be finite");
            }
        }
        Ok(())
    }
}

/// `(θ, φ)` with `x = (sin θ cos φ, sin θ sin φ, cos θ)`, `φ ∈ [0, 2π)`.
pub fn spherical_angles(x: &[f64]) -> (f64, f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]).rem_euclid(TAU);
    (theta, phi)
}

pub fn spherical_point(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Type 2 simplex coordinates of a 3 × 5 suite, as `W`.
pub fn five_point_coordinates(x: &Configuration) -> Result<FivePointVector, SimplexError> {
    if x.dim() != 3 || x.count() != 5 {
        return Err(SimplexError::NotFivePoint);
    }
    let scheme = preset_scheme(PresetKind::FivePoint, 5).expect("preset is valid");
    let z = multicentre(x, &scheme).expect("arity checked");
    let c = simplex_mpp(&z, FrameType::Type2)?;
    let zeta1 = &c.zeta[0];
    let (theta1, phi1) = spherical_angles(c.zeta[1].as_slice());
    let (theta2, phi2) = spherical_angles(c.zeta[2].as_slice());
    Ok(FivePointVector {
        d1: c.h1,
        d2: c.s[0],
        alpha: zeta1[1].atan2(zeta1[0]),
        theta1,
        phi1,
        theta2,
        phi2,
    })
}

/// Canonical 3 × 5 configuration (P at the origin, `U = I`) with the given
/// `W` and fixed lengths `‖x_1 − x_2‖ = ℓ_12`, `‖x_5 − x_4‖ = ℓ_45`.
pub fn five_point_reconstruct(w: &FivePointVector, fixed_lengths: (f64, f64)) -> Result<Configuration, SimplexError> {
    w.validate()?;
    let (l12, l45) = fixed_lengths;
    if !(l12 > 0.0 && l45 > 0.0) {
        return Err(SimplexError::RangeViolation("fixed lengths must be positive".into()));
    }
    let (sa, ca) = w.alpha.sin_cos();
    let z1 = Vector3::new(w.d1, w.d2 * sa, 0.0);
    let z2 = Vector3::new(w.d2 * ca, w.d2 * sa, 0.0);
    let z3 = spherical_point(w.theta1, w.phi1) * l12;
    let z4 = spherical_point(w.theta2, w.phi2) * l45;
    let x3 = Vector3::zeros();
    let x2 = z1;
    let x4 = z2;
    let x1 = z3 + x2;
    let x5 = z4 + x4;
    let m = DMatrix::from_columns(&[x1, x2, x3, x4, x5].map(|v| DVector::from_column_slice(v.as_slice())));
    Configuration::new(m).map_err(|e| SimplexError::RangeViolation(e.to_string()))
}
