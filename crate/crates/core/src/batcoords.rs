//! Bookstein-type form coordinates in 3-D and their bond-angle-torsion
//! (polar) representation.
//!
//! Landmark 1 goes to the origin, landmark 2 onto the positive `z` axis and
//! landmark 3 into the `xz` half-plane with positive `x`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

use crate::mucen::Configuration;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatError {
    #[error("landmarks 1, 2, 3 do not fix a frame")]
    DegenerateFrame,
    #[error("expected a 3-D configuration")]
    NotThreeD,
}

/// `|v|`, colatitude and longitude of one landmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatCoordinate {
    pub length: f64,
    pub theta: f64,
    /// In `[0, 2π)`; zero when `pole` is set.
    pub phi: f64,
    /// `θ ∈ {0, π}` (or zero length): longitude undefined.
    pub pole: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BooksteinForm3D {
    pub v: DMatrix<f64>,
    pub theta2: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub polar: Vec<BatCoordinate>,
}

/// `R(θ, φ)`, taking the direction `(θ, φ)` onto `e_3`.
pub fn rot_r(theta: f64, phi: f64) -> Matrix3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Matrix3::new(ct * cp, ct * sp, -st, -sp, cp, 0.0, st * cp, st * sp, ct)
}

/// `S(φ)`, rotation by `−φ` about `e_3`.
pub fn rot_s(phi: f64) -> Matrix3<f64> {
    let (sp, cp) = phi.sin_cos();
    Matrix3::new(cp, sp, 0.0, -sp, cp, 0.0, 0.0, 0.0, 1.0)
}

const POLE_TOL: f64 = 1e-12;

fn polar(v: &Vector3<f64>) -> BatCoordinate {
    let length = v.norm();
    let rho = v.x.hypot(v.y);
    if length == 0.0 || rho <= POLE_TOL * length {
        return BatCoordinate {
            length,
            theta: if v.z < 0.0 { std::f64::consts::PI } else { 0.0 },
            phi: 0.0,
            pole: true,
        };
    }
    BatCoordinate {
        length,
        theta: rho.atan2(v.z),
        phi: v.y.atan2(v.x).rem_euclid(TAU),
        pole: false,
    }
}

pub fn bookstein3d(x: &Configuration) -> Result<BooksteinForm3D, BatError> {
    if x.dim() != 3 {
        return Err(BatError::NotThreeD);
    }
    let k = x.count();
    let lm = x.landmarks();
    let x1 = Vector3::new(lm[(0, 0)], lm[(1, 0)], lm[(2, 0)]);
    let y: Vec<Vector3<f64>> = (0..k)
        .map(|i| Vector3::new(lm[(0, i)], lm[(1, i)], lm[(2, i)]) - x1)
        .collect();
    let p2 = polar(&y[1]);
    if p2.length == 0.0 {
        return Err(BatError::DegenerateFrame);
    }
    let r = rot_r(p2.theta, p2.phi);
    let u3 = r * y[2];
    let p3 = polar(&u3);
    if p3.pole {
        return Err(BatError::DegenerateFrame);
    }
    let sr = rot_s(p3.phi) * r;
    let mut v = DMatrix::zeros(3, k);
    for (i, yi) in y.iter().enumerate() {
        v.set_column(i, &(sr * yi));
    }
    // exact zeros where the construction guarantees them
    v.column_mut(0).fill(0.0);
    v[(0, 1)] = 0.0;
    v[(1, 1)] = 0.0;
    v[(2, 1)] = p2.length;
    v[(1, 2)] = 0.0;
    let polar = (0..k)
        .map(|i| polar(&Vector3::new(v[(0, i)], v[(1, i)], v[(2, i)])))
        .collect();
    Ok(BooksteinForm3D {
        v,
        theta2: p2.theta,
        phi2: p2.phi,
        phi3: p3.phi,
        polar,
    })
}

pub fn bat_representation(x: &Configuration) -> Result<Vec<BatCoordinate>, BatError> {
    bookstein3d(x).map(|b| b.polar)
}

/// Cartesian `v_i` from their polar representation.
pub fn bat_to_cartesian(coords: &[BatCoordinate]) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(3, coords.len());
    for (i, c) in coords.iter().enumerate() {
        let (st, ct) = c.theta.sin_cos();
        let (sp, cp) = c.phi.sin_cos();
        v[(0, i)] = c.length * st * cp;
        v[(1, i)] = c.length * st * sp;
        v[(2, i)] = c.length * ct;
    }
    v
}
