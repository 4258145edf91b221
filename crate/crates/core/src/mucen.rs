//! Multicentring: removing translation from landmark configurations.
//!
//! A scheme is a permutation `π` of the landmarks together with a binary
//! pattern `ε` saying which landmark is subtracted from which. With
//! `Y = X P` (column `j` of `Y` is `x_{π(j)}`) and `A = I − E`, the product
//! `Y A` has a zero first column and the remaining `k − 1` columns are the
//! multicentred coordinates `z_1 .. z_{k−1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Singular values below this multiple of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MucenError {
    #[error("epsilon pattern violation: {0}")]
    PatternViolation(String),
    #[error("multicentring matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("permutation is not a bijection on 1..{k}")]
    BadPermutation { k: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("A + u_k v_k^T is numerically singular")]
    SingularRecovery,
    #[error("{kind} scheme requires k = {required}, got {k}")]
    BadArity {
        kind: &'static str,
        required: usize,
        k: usize,
    },
    #[error("configuration needs at least m + 1 = {needed} landmarks, got {k}")]
    TooFewLandmarks { needed: usize, k: usize },
    #[error("configuration has non-finite entries")]
    NonFinite,
}

/// An `m × k` landmark matrix, one landmark per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    landmarks: DMatrix<f64>,
}

impl Configuration {
    pub fn new(landmarks: DMatrix<f64>) -> Result<Self, MucenError> {
        let (m, k) = landmarks.shape();
        if m < 2 {
            return Err(MucenError::DimensionMismatch {
                expected: 2,
                found: m,
            });
        }
        if k < m + 1 {
            return Err(MucenError::TooFewLandmarks { needed: m + 1, k });
        }
        if landmarks.iter().any(|v| !v.is_finite()) {
            return Err(MucenError::NonFinite);
        }
        Ok(Self { landmarks })
    }

    /// Build from landmark points given as rows (`k` rows of length `m`).
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, MucenError> {
        let k = points.len();
        let m = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != m) {
            return Err(MucenError::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(m, k, |i, j| points[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.landmarks.nrows()
    }

    pub fn count(&self) -> usize {
        self.landmarks.ncols()
    }

    pub fn landmarks(&self) -> &DMatrix<f64> {
        &self.landmarks
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.landmarks
    }
}

/// Multicentred coordinates `z_1 .. z_{k−1}` as the columns of an
/// `m × (k−1)` matrix. The implicit origin `z_0 = 0` is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticentredConfig {
    pub z: DMatrix<f64>,
}

impl MulticentredConfig {
    pub fn new(z: DMatrix<f64>) -> Self {
        Self { z }
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// Number of columns, `k − 1`.
    pub fn len(&self) -> usize {
        self.z.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.z.column(j).into_owned()
    }
}

/// Built-in schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// Subtract the first landmark from every other one.
    GmType1,
    /// The RNA suite scheme on five landmarks.
    FivePoint,
    /// Consecutive differences `x_{j+1} − x_j`.
    ChainDifference,
}

impl std::str::FromStr for PresetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gm_type1" => Ok(Self::GmType1),
            "five_point" => Ok(Self::FivePoint),
            "chain_difference" => Ok(Self::ChainDifference),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

/// Serialized form: 1-based permutation and the raw `ε` pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub k: usize,
    pub permutation: Vec<usize>,
    pub epsilon: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeSpec", into = "SchemeSpec")]
pub struct MulticentringScheme {
    k: usize,
    // perm[j] = π(j), zero-based
    perm: Vec<usize>,
    epsilon: Vec<Vec<u8>>,
    a: DMatrix<f64>,
    u_k: DVector<f64>,
    v_k: DVector<f64>,
    recovery_inv: DMatrix<f64>,
}

impl TryFrom<SchemeSpec> for MulticentringScheme {
    type Error = MucenError;

    fn try_from(spec: SchemeSpec) -> Result<Self, Self::Error> {
        build_scheme(spec.k, &spec.permutation, &spec.epsilon)
    }
}

impl From<MulticentringScheme> for SchemeSpec {
    fn from(s: MulticentringScheme) -> Self {
        SchemeSpec {
            k: s.k,
            permutation: s.perm.iter().map(|p| p + 1).collect(),
            epsilon: s.epsilon,
        }
    }
}

impl MulticentringScheme {
    pub fn k(&self) -> usize {
        self.k
    }

    /// One-based permutation `π(1) .. π(k)`.
    pub fn permutation(&self) -> Vec<usize> {
        self.perm.iter().map(|p| p + 1).collect()
    }

    pub fn epsilon(&self) -> &[Vec<u8>] {
        &self.epsilon
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Permutation matrix with `P[π(j), j] = 1`.
    pub fn p(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.k, self.k);
        for (j, &pj) in self.perm.iter().enumerate() {
            p[(pj, j)] = 1.0;
        }
        p
    }

    /// Left singular vector of `A` for its zero singular value.
    pub fn u_k(&self) -> &DVector<f64> {
        &self.u_k
    }

    pub fn v_k(&self) -> &DVector<f64> {
        &self.v_k
    }

    /// `Y = X P`.
    pub fn permute(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.k, |i, j| x[(i, self.perm[j])])
    }

    fn unpermute(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(y.nrows(), self.k);
        for (j, &pj) in self.perm.iter().enumerate() {
            x.set_column(pj, &y.column(j));
        }
        x
    }

    /// The location information `Y u_k` that multicentring discards.
    pub fn location(&self, config: &Configuration) -> Result<DVector<f64>, MucenError> {
        self.check_k(config.count())?;
        Ok(self.permute(config.landmarks()) * &self.u_k)
    }

    fn check_k(&self, k: usize) -> Result<(), MucenError> {
        if k != self.k {
            return Err(MucenError::DimensionMismatch {
                expected: self.k,
                found: k,
            });
        }
        Ok(())
    }
}

/// Validate a permutation and `ε` pattern and derive `A`.
///
/// `permutation` is one-based. `epsilon[i][j] = 1` means landmark `i` (after
/// permutation) is subtracted from landmark `j`. Every column of `ε` must
/// hold exactly one 1 so that translations cancel, the first landmark centres
/// itself, and no other landmark does.
pub fn build_scheme(
    k: usize,
    permutation: &[usize],
    epsilon: &[Vec<u8>],
) -> Result<MulticentringScheme, MucenError> {
    if k < 2 {
        return Err(MucenError::DimensionMismatch {
            expected: 2,
            found: k,
        });
    }
    if permutation.len() != k {
        return Err(MucenError::BadPermutation { k });
    }
    let mut seen = vec![false; k];
    for &p in permutation {
        if p == 0 || p > k || seen[p - 1] {
            return Err(MucenError::BadPermutation { k });
        }
        seen[p - 1] = true;
    }
    if epsilon.len() != k || epsilon.iter().any(|r| r.len() != k) {
        return Err(MucenError::PatternViolation(format!(
            "epsilon must be {k}x{k}"
        )));
    }
    if epsilon.iter().flatten().any(|&e| e > 1) {
        return Err(MucenError::PatternViolation(
            "epsilon entries must be 0 or 1".into(),
        ));
    }
    if epsilon[0][0] != 1 {
        return Err(MucenError::PatternViolation("epsilon_11 must be 1".into()));
    }
    if let Some(j) = (1..k).find(|&j| epsilon[j][j] != 0) {
        return Err(MucenError::PatternViolation(format!(
            "epsilon_{0}{0} must be 0",
            j + 1
        )));
    }
    for j in 0..k {
        let col: u32 = epsilon.iter().map(|r| r[j] as u32).sum();
        if col != 1 {
            return Err(MucenError::PatternViolation(format!(
                "column {} of epsilon has {col} centres, expected exactly 1",
                j + 1
            )));
        }
    }

    let a = DMatrix::from_fn(k, k, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - epsilon[i][j] as f64
    });

    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s >= RANK_TOL * smax).count();
    if rank != k - 1 {
        return Err(MucenError::RankDeficient {
            rank,
            expected: k - 1,
        });
    }
    let idx = sv.imin();
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut u_k: DVector<f64> = u.column(idx).into_owned();
    let mut v_k: DVector<f64> = vt.row(idx).transpose();
    if u_k.sum() < 0.0 {
        u_k.neg_mut();
    }
    if v_k[v_k.iamax()] < 0.0 {
        v_k.neg_mut();
    }

    let shifted = &a + &u_k * v_k.transpose();
    let recovery_inv = shifted
        .clone()
        .try_inverse()
        .ok_or(MucenError::SingularRecovery)?;
    let cond = shifted.norm() * recovery_inv.norm();
    if !cond.is_finite() || cond > 1e12 {
        return Err(MucenError::SingularRecovery);
    }

    Ok(MulticentringScheme {
        k,
        perm: permutation.iter().map(|p| p - 1).collect(),
        epsilon: epsilon.to_vec(),
        a,
        u_k,
        v_k,
        recovery_inv,
    })
}

/// One of the built-in schemes for `k` landmarks.
pub fn preset_scheme(kind: PresetKind, k: usize) -> Result<MulticentringScheme, MucenError> {
    let mut eps = vec![vec![0u8; k]; k];
    let perm: Vec<usize>;
    match kind {
        PresetKind::GmType1 => {
            if k < 2 {
                return Err(MucenError::BadArity {
                    kind: "gm_type1",
                    required: 2,
                    k,
                });
            }
            perm = (1..=k).collect();
            eps[0].iter_mut().for_each(|e| *e = 1);
        }
        PresetKind::FivePoint => {
            if k != 5 {
                return Err(MucenError::BadArity {
                    kind: "five_point",
                    required: 5,
                    k,
                });
            }
            perm = vec![3, 2, 4, 1, 5];
            eps[0][0] = 1;
            eps[0][1] = 1;
            eps[0][2] = 1;
            eps[1][3] = 1;
            eps[2][4] = 1;
        }
        PresetKind::ChainDifference => {
            if k < 2 {
                return Err(MucenError::BadArity {
                    kind: "chain_difference",
                    required: 2,
                    k,
                });
            }
            perm = (1..=k).collect();
            eps[0][0] = 1;
            for j in 0..k - 1 {
                eps[j][j + 1] = 1;
            }
        }
    }
    build_scheme(k, &perm, &eps)
}

/// Multicentred coordinates: the last `k − 1` columns of `X P A`.
pub fn multicentre(
    config: &Configuration,
    scheme: &MulticentringScheme,
) -> Result<MulticentredConfig, MucenError> {
    scheme.check_k(config.count())?;
    let y = scheme.permute(config.landmarks());
    let mut z = DMatrix::zeros(config.dim(), scheme.k - 1);
    // (Y A)_j = y_j − y_{c(j)}: accumulate exactly rather than multiply by A
    for j in 1..scheme.k {
        let c = (0..scheme.k)
            .find(|&i| scheme.epsilon[i][j] == 1)
            .expect("validated pattern");
        let col = y.column(j) - y.column(c);
        z.set_column(j - 1, &col);
    }
    Ok(MulticentredConfig { z })
}

/// Invert [`multicentre`] given the location `Y u_k`.
///
/// Solves `Y (A + u_k v_kᵀ) = W + location · v_kᵀ` with `W = [0 | Z]`,
/// then undoes the permutation.
pub fn reconstruct(
    mc: &MulticentredConfig,
    location: &DVector<f64>,
    scheme: &MulticentringScheme,
) -> Result<Configuration, MucenError> {
    scheme.check_k(mc.len() + 1)?;
    if location.len() != mc.dim() {
        return Err(MucenError::DimensionMismatch {
            expected: mc.dim(),
            found: location.len(),
        });
    }
    let m = mc.dim();
    let mut w = DMatrix::zeros(m, scheme.k);
    w.columns_mut(1, scheme.k - 1).copy_from(&mc.z);
    let rhs = w + location * scheme.v_k.transpose();
    let y = rhs * &scheme.recovery_inv;
    let x = scheme.unpermute(&y);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MucenError::SingularRecovery);
    }
    Ok(Configuration { landmarks: x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn config(m: usize, k: usize, vals: &[f64]) -> Configuration {
        Configuration::new(DMatrix::from_column_slice(m, k, vals)).unwrap()
    }

    #[test]
    fn gm_type1_matrix() {
        let s = preset_scheme(PresetKind::GmType1, 3).unwrap();
        let expect = mat(&[&[0.0, -1.0, -1.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(s.a(), &expect);
        let s4 = preset_scheme(PresetKind::GmType1, 4).unwrap();
        assert_eq!(s4.permutation(), vec![1, 2, 3, 4]);
        // u_k = 1/√k for this scheme
        for v in s4.u_k().iter() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn five_point_matrix_and_columns() {
        let s = preset_scheme(PresetKind::FivePoint, 5).unwrap();
        let mut expect = DMatrix::<f64>::identity(5, 5);
        for j in 0..3 {
            expect[(0, j)] -= 1.0;
        }
        expect[(1, 3)] -= 1.0;
        expect[(2, 4)] -= 1.0;
        assert_eq!(s.a(), &expect);
        assert_eq!(s.permutation(), vec![3, 2, 4, 1, 5]);

        let pts: Vec<Vec<f64>> = (0..5)
            .map(|j| vec![j as f64 * 1.3 - 0.2, (j * j) as f64 * 0.7, (j as f64).sin()])
            .collect();
        let c = Configuration::from_points(&pts).unwrap();
        let z = multicentre(&c, &s).unwrap().z;
        let x = |j: usize| DVector::from_vec(pts[j - 1].clone());
        let expected = [x(2) - x(3), x(4) - x(3), x(1) - x(2), x(5) - x(4)];
        for (j, e) in expected.iter().enumerate() {
            assert!((z.column(j) - e).norm() < 1e-15);
        }
    }

    #[test]
    fn chain_rank_and_differences() {
        let s = preset_scheme(PresetKind::ChainDifference, 4).unwrap();
        let rank = s.a().clone().svd(false, false).rank(1e-10);
        assert_eq!(rank, 3);
        let c = config(3, 5, &(0..15).map(|i| (i * i) as f64).collect::<Vec<_>>());
        let s5 = preset_scheme(PresetKind::ChainDifference, 5).unwrap();
        let z = multicentre(&c, &s5).unwrap().z;
        for j in 0..4 {
            let d = c.landmarks().column(j + 1) - c.landmarks().column(j);
            assert_eq!(z.column(j), d);
        }
    }

    #[test]
    fn gm_type1_triangle() {
        let c = config(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let s = preset_scheme(PresetKind::GmType1, 3).unwrap();
        let z = multicentre(&c, &s).unwrap().z;
        assert_eq!(z, DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn constant_config_gives_zero_and_reconstructs() {
        let c = config(2, 4, &[1.5, -2.0, 1.5, -2.0, 1.5, -2.0, 1.5, -2.0]);
        for kind in [PresetKind::GmType1, PresetKind::ChainDifference] {
            let s = preset_scheme(kind, 4).unwrap();
            let mc = multicentre(&c, &s).unwrap();
            assert!(mc.z.iter().all(|&v| v == 0.0));
            let loc = s.location(&c).unwrap();
            let back = reconstruct(&mc, &loc, &s).unwrap();
            assert!((back.landmarks() - c.landmarks()).amax() < 1e-12);
        }
    }

    #[test]
    fn gm_type1_inverse_matches_direct_formula() {
        let c = config(3, 4, &[0.3, 1.0, -2.0, 4.0, 0.5, 0.5, -1.0, 2.0, 7.0, 0.0, 0.1, -0.2]);
        let s = preset_scheme(PresetKind::GmType1, 4).unwrap();
        let mc = multicentre(&c, &s).unwrap();
        let loc = s.location(&c).unwrap();
        // location = √k · mean, so x₁ = (loc/√k) − mean of z's weighted by 1/k
        let k = 4.0_f64;
        let zsum = mc.z.column_sum();
        let x1 = &loc / k.sqrt() - zsum / k;
        assert!((x1 - c.landmarks().column(0)).norm() < 1e-12);
        let back = reconstruct(&mc, &loc, &s).unwrap();
        for j in 1..4 {
            let direct = c.landmarks().column(0) + mc.z.column(j - 1);
            assert!((back.landmarks().column(j) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn pattern_errors() {
        let mut eps = vec![vec![0u8; 3]; 3];
        eps[0] = vec![0, 1, 1];
        assert!(matches!(
            build_scheme(3, &[1, 2, 3], &eps),
            Err(MucenError::PatternViolation(_))
        ));
        eps[0][0] = 1;
        eps[1][1] = 1;
        assert!(matches!(
            build_scheme(3, &[1, 2, 3], &eps),
            Err(MucenError::PatternViolation(_))
        ));
        assert!(matches!(
            build_scheme(3, &[1, 1, 3], &[vec![1, 1, 1], vec![0; 3], vec![0; 3]]),
            Err(MucenError::BadPermutation { .. })
        ));
        assert!(matches!(
            preset_scheme(PresetKind::FivePoint, 4),
            Err(MucenError::BadArity { .. })
        ));
    }

    #[test]
    fn cyclic_pattern_is_rank_deficient() {
        // landmarks 2 and 3 centre on each other: translation is not anchored to 1
        let eps = vec![vec![1, 0, 0, 1], vec![0, 0, 1, 0], vec![0, 1, 0, 0], vec![0, 0, 0, 0]];
        let eps: Vec<Vec<u8>> = eps;
        assert!(matches!(
            build_scheme(4, &[1, 2, 3, 4], &eps),
            Err(MucenError::RankDeficient { rank: 2, expected: 3 })
        ));
    }

    #[test]
    fn json_roundtrip() {
        let s = preset_scheme(PresetKind::FivePoint, 5).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"permutation\":[3,2,4,1,5]"));
        let back: MulticentringScheme = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"k":3,"permutation":[1,2,3],"epsilon":[[0,1,1],[0,0,0],[0,0,0]]}"#;
        assert!(serde_json::from_str::<MulticentringScheme>(bad).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let c = config(2, 3, &[0.0; 6]);
        let s = preset_scheme(PresetKind::GmType1, 4).unwrap();
        assert!(matches!(
            multicentre(&c, &s),
            Err(MucenError::DimensionMismatch { .. })
        ));
    }

    fn rotation3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        let r = nalgebra::Rotation3::from_euler_angles(a, b, c);
        let m: Matrix3<f64> = r.into_inner();
        DMatrix::from_column_slice(3, 3, m.as_slice())
    }

    proptest! {
        #[test]
        fn translation_kill_and_roundtrip(
            vals in prop::collection::vec(-5.0..5.0f64, 15),
            shift in prop::collection::vec(-100.0..100.0f64, 3),
            kind in prop::sample::select(vec![PresetKind::GmType1, PresetKind::FivePoint, PresetKind::ChainDifference]),
        ) {
            let c = config(3, 5, &vals);
            let s = preset_scheme(kind, 5).unwrap();
            let z = multicentre(&c, &s).unwrap();
            let shifted = DMatrix::from_fn(3, 5, |i, j| c.landmarks()[(i, j)] + shift[i]);
            let zs = multicentre(&Configuration::new(shifted).unwrap(), &s).unwrap();
            prop_assert!((z.z.clone() - zs.z).amax() < 1e-12);

            // first column of X P A vanishes
            let full = s.permute(c.landmarks()) * s.a();
            prop_assert!(full.column(0).amax() < 1e-14);
            prop_assert!((full.columns(1, 4) - &z.z).amax() < 1e-12);

            let back = reconstruct(&z, &s.location(&c).unwrap(), &s).unwrap();
            prop_assert!((back.landmarks() - c.landmarks()).amax() < 1e-10);
        }

        #[test]
        fn rotation_equivariance(
            vals in prop::collection::vec(-5.0..5.0f64, 15),
            a in -3.0..3.0f64, b in -1.5..1.5f64, g in -3.0..3.0f64,
        ) {
            let c = config(3, 5, &vals);
            let r = rotation3(a, b, g);
            let s = preset_scheme(PresetKind::FivePoint, 5).unwrap();
            let z = multicentre(&c, &s).unwrap().z;
            let rc = Configuration::new(&r * c.landmarks()).unwrap();
            let rz = multicentre(&rc, &s).unwrap().z;
            prop_assert!((&r * z - rz).amax() < 1e-12);
        }
    }
}
