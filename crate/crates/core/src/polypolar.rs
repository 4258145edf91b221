//! Multicentred polypolar (MPP) coordinates and dihedral chains.
//!
//! `Z = V T` with `V ∈ SO(m)` and `T` upper triangular; each column `t_j` of
//! `T` splits into a radius `r_j = ‖t_j‖` and a direction `ζ_j = t_j / r_j`.
//! For `j < m` the direction lies on the nested half-sphere with positive
//! `j`-th entry and zeros below; from `j = m` on it is a full-sphere point.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

use crate::mucen::{Configuration, MulticentredConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolypolarError {
    #[error("first m multicentred columns are (nearly) linearly dependent")]
    DegenerateFrame,
    #[error("multicentred column {0} is zero")]
    ZeroLandmark(usize),
    #[error("need at least m = {m} multicentred columns, got {found}")]
    TooFewColumns { m: usize, found: usize },
    #[error("fixed radius {index}: observed {observed}, declared {fixed}")]
    ConstraintViolation {
        index: usize,
        observed: f64,
        fixed: f64,
    },
    #[error("constraint index {0} out of range")]
    BadIndex(usize),
    #[error("bond {0} is collinear with its successor")]
    CollinearBond(usize),
    #[error("dihedral chains need m = 3 and at least 4 landmarks")]
    BadChain,
    #[error("invalid coordinate vector: {0}")]
    Invalid(String),
}

/// Relative threshold on `|t_jj|` below which the frame is degenerate.
const FRAME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MppCoordinates {
    pub m: usize,
    pub v: DMatrix<f64>,
    pub radii: Vec<f64>,
    /// `ζ_j` of length `min(j, m)` (one-based `j`).
    pub directions: Vec<DVector<f64>>,
}

impl MppCoordinates {
    /// Number of multicentred columns `k − 1`.
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Whether `ζ_j` (one-based) lives on a half-sphere.
    pub fn is_half_sphere(&self, j: usize) -> bool {
        j < self.m
    }

    /// Column `t_j` padded to length `m`.
    pub fn t_column(&self, j: usize) -> DVector<f64> {
        let mut t = DVector::zeros(self.m);
        let d = &self.directions[j - 1];
        t.rows_mut(0, d.len()).copy_from(&(d * self.radii[j - 1]));
        t
    }
}

/// QR of `Z` with sign fixing: `t_jj > 0` for `j < m` and `det V = +1`.
pub fn mpp_coordinates(z: &MulticentredConfig) -> Result<MppCoordinates, PolypolarError> {
    let m = z.dim();
    let n = z.len();
    if n < m {
        return Err(PolypolarError::TooFewColumns { m, found: n });
    }
    let norms: Vec<f64> = (0..n).map(|j| z.z.column(j).norm()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    if let Some(j) = norms.iter().position(|&r| r <= 1e-14 * scale || r == 0.0) {
        return Err(PolypolarError::ZeroLandmark(j + 1));
    }

    let qr = z.z.clone().qr();
    let mut v = qr.q();
    let mut t = qr.r();
    for j in 0..m {
        if t[(j, j)].abs() <= FRAME_TOL * scale {
            return Err(PolypolarError::DegenerateFrame);
        }
    }
    for j in 0..m - 1 {
        if t[(j, j)] < 0.0 {
            v.column_mut(j).neg_mut();
            t.row_mut(j).neg_mut();
        }
    }
    if v.determinant() < 0.0 {
        v.column_mut(m - 1).neg_mut();
        t.row_mut(m - 1).neg_mut();
    }

    let mut radii = Vec::with_capacity(n);
    let mut directions = Vec::with_capacity(n);
    for j in 0..n {
        let d = (j + 1).min(m);
        let col: DVector<f64> = t.column(j).rows(0, d).into_owned();
        let r = col.norm();
        radii.push(r);
        directions.push(col / r);
    }
    Ok(MppCoordinates {
        m,
        v,
        radii,
        directions,
    })
}

/// Fixed radii and directions, one-based indices into `1 ..= k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMask {
    pub fixed_radii: BTreeMap<usize, f64>,
    pub fixed_directions: BTreeMap<usize, DVector<f64>>,
    /// Allowed relative deviation of an observed radius from its fixed value.
    pub tolerance: f64,
}

impl Default for ConstraintMask {
    fn default() -> Self {
        Self {
            fixed_radii: BTreeMap::new(),
            fixed_directions: BTreeMap::new(),
            tolerance: 0.05,
        }
    }
}

impl ConstraintMask {
    pub fn with_radius(mut self, j: usize, r: f64) -> Self {
        self.fixed_radii.insert(j, r);
        self
    }

    pub fn with_direction(mut self, j: usize, zeta: DVector<f64>) -> Self {
        self.fixed_directions.insert(j, zeta);
        self
    }
}

/// Free radii and directions left after removing constrained parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedCoordinates {
    pub m: usize,
    pub len: usize,
    pub radii: Vec<(usize, f64)>,
    pub directions: Vec<(usize, DVector<f64>)>,
}

impl ConstrainedCoordinates {
    /// Flatten into `(r..., ζ...)` for downstream statistics.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.radii.iter().map(|&(_, r)| r).collect();
        for (_, d) in &self.directions {
            out.extend(d.iter());
        }
        out
    }

    /// Put fixed values back, giving full coordinates with `V = I`.
    pub fn reinsert(&self, mask: &ConstraintMask) -> Result<MppCoordinates, PolypolarError> {
        let mut radii = vec![f64::NAN; self.len];
        let mut directions: Vec<Option<DVector<f64>>> = vec![None; self.len];
        for &(j, r) in &self.radii {
            radii[j - 1] = r;
        }
        for (&j, &r) in &mask.fixed_radii {
            radii[j - 1] = r;
        }
        for (j, d) in &self.directions {
            directions[j - 1] = Some(d.clone());
        }
        for (&j, d) in &mask.fixed_directions {
            directions[j - 1] = Some(d.clone());
        }
        directions[0].get_or_insert_with(|| DVector::from_element(1, 1.0));
        if let Some(j) = radii.iter().position(|r| !r.is_finite()) {
            return Err(PolypolarError::Invalid(format!("radius {} missing", j + 1)));
        }
        let directions = directions
            .into_iter()
            .enumerate()
            .map(|(j, d)| d.ok_or_else(|| PolypolarError::Invalid(format!("direction {} missing", j + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MppCoordinates {
            m: self.m,
            v: DMatrix::identity(self.m, self.m),
            radii,
            directions,
        })
    }
}

/// Drop constrained parts; `ζ_1 = e_1` is always dropped.
pub fn apply_constraints(
    c: &MppCoordinates,
    mask: &ConstraintMask,
) -> Result<ConstrainedCoordinates, PolypolarError> {
    let n = c.len();
    for &j in mask.fixed_radii.keys().chain(mask.fixed_directions.keys()) {
        if j == 0 || j > n {
            return Err(PolypolarError::BadIndex(j));
        }
    }
    for (&j, &fixed) in &mask.fixed_radii {
        if !(fixed > 0.0) {
            return Err(PolypolarError::Invalid(format!("fixed radius {j} must be positive")));
        }
        let observed = c.radii[j - 1];
        if ((observed - fixed) / fixed).abs() > mask.tolerance {
            return Err(PolypolarError::ConstraintViolation {
                index: j,
                observed,
                fixed,
            });
        }
    }
    let radii = (1..=n)
        .filter(|j| !mask.fixed_radii.contains_key(j))
        .map(|j| (j, c.radii[j - 1]))
        .collect();
    let directions = (2..=n)
        .filter(|j| !mask.fixed_directions.contains_key(j))
        .map(|j| (j, c.directions[j - 1].clone()))
        .collect();
    Ok(ConstrainedCoordinates {
        m: c.m,
        len: n,
        radii,
        directions,
    })
}

/// Canonical representative `Z := T` (the `V = I` member of the orbit).
pub fn mpp_representative(c: &MppCoordinates) -> Result<MulticentredConfig, PolypolarError> {
    let m = c.m;
    let n = c.len();
    if c.directions.len() != n || n < m {
        return Err(PolypolarError::Invalid("length mismatch".into()));
    }
    let mut t = DMatrix::zeros(m, n);
    for j in 0..n {
        let d = &c.directions[j];
        if d.len() != (j + 1).min(m) || (d.norm() - 1.0).abs() > 1e-9 || !(c.radii[j] > 0.0) {
            return Err(PolypolarError::Invalid(format!("column {}", j + 1)));
        }
        t.view_mut((0, j), (d.len(), 1)).copy_from(&(d * c.radii[j]));
    }
    Ok(MulticentredConfig::new(t))
}

/// Bond lengths, bond angles and dihedral angles of a 3-D chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DihedralRepresentation {
    /// `r_1 .. r_{k−1}`.
    pub bond_lengths: Vec<f64>,
    /// `θ_1 .. θ_{k−2}`, angle from `z_j` to `z_{j+1}`.
    pub bond_angles: Vec<f64>,
    /// `φ_2 .. φ_{k−2}` in `[0, 2π)`.
    pub dihedrals: Vec<f64>,
}

/// Local frames along a backbone chain and the torsions between them.
///
/// `v_j^z` follows bond `j`, `v_j^y` is the unit part of `v_{j−1}^z`
/// orthogonal to it and `v_j^x = v_j^y × v_j^z`. The torsion about bond `j`
/// is measured from the preceding atom so that trans is `π` and cis is `0`.
pub fn dihedral_chain(x: &Configuration) -> Result<DihedralRepresentation, PolypolarError> {
    let k = x.count();
    if x.dim() != 3 || k < 4 {
        return Err(PolypolarError::BadChain);
    }
    let p = |j: usize| -> Vector3<f64> {
        let c = x.landmarks().column(j);
        Vector3::new(c[0], c[1], c[2])
    };
    let bonds: Vec<Vector3<f64>> = (0..k - 1).map(|j| p(j + 1) - p(j)).collect();
    let bond_lengths: Vec<f64> = bonds.iter().map(|b| b.norm()).collect();
    if let Some(j) = bond_lengths.iter().position(|&r| r == 0.0) {
        return Err(PolypolarError::ZeroLandmark(j + 1));
    }
    let vz: Vec<Vector3<f64>> = bonds.iter().zip(&bond_lengths).map(|(b, r)| b / *r).collect();

    let mut bond_angles = Vec::with_capacity(k - 2);
    for j in 0..k - 2 {
        let c = vz[j].dot(&vz[j + 1]).clamp(-1.0, 1.0);
        let s = vz[j].cross(&vz[j + 1]).norm();
        if s < 1e-8 {
            return Err(PolypolarError::CollinearBond(j + 1));
        }
        bond_angles.push(s.atan2(c));
    }

    let mut dihedrals = Vec::with_capacity(k.saturating_sub(3));
    for j in 1..k - 2 {
        let cos_prev = bond_angles[j - 1].cos();
        let vy = (vz[j - 1] - vz[j] * cos_prev).normalize();
        let vx = vy.cross(&vz[j]);
        let next = vz[j + 1];
        let phi = (-vx.dot(&next)).atan2(-vy.dot(&next));
        dihedrals.push(phi.rem_euclid(TAU));
    }
    Ok(DihedralRepresentation {
        bond_lengths,
        bond_angles,
        dihedrals,
    })
}
