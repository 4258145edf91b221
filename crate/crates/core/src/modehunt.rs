//! Parametric mode hunting on the circle for small clusters.
//!
//! A single wrapped normal (Model I) and a two-component wrapped normal
//! mixture (Model II) are fitted by EM, compared with a likelihood ratio
//! test, and the data are split recursively while the test rejects and both
//! parts keep at least `kappa_min` points.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::chi2_sf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeHuntError {
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("mean resultant is zero; mean direction undefined")]
    ZeroResultant,
    #[error("non-finite angle")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Lower bound on fitted standard deviations (radians).
pub const SIGMA_FLOOR: f64 = 1e-4;
/// Upper bound on fitted standard deviations; beyond it the wrapped normal
/// is uniform to within `e^{−50}`.
pub const SIGMA_CAP: f64 = 10.0;
pub const EM_TOL: f64 = 1e-9;
pub const EM_MAX_ITER: usize = 500;
const LRT_TOL: f64 = 1e-9;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrappedNormalParams {
    /// In `[0, 2π)`.
    pub mu: f64,
    pub sigma: f64,
}

impl WrappedNormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, ModeHuntError> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(ModeHuntError::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { mu: mu.rem_euclid(TAU), sigma })
    }
}

/// `θ − μ` reduced to `(−π, π]`.
fn centred(theta: f64, mu: f64) -> f64 {
    let d = (theta - mu).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Σ_w φ((θ − μ + 2πw)/σ)/σ`.
///
/// Wrapped sum with `W ≥ 3`, extended until a new pair of terms adds less
/// than 1e−15 of the total; for `σ ≥ 3` the Fourier series
/// `(1 + 2Σ e^{−p²σ²/2} cos p(θ − μ))/2π` is used instead.
pub fn wrapped_normal_logpdf(theta: f64, p: &WrappedNormalParams) -> f64 {
    let d = centred(theta, p.mu);
    if p.sigma >= 3.0 {
        let mut s = 1.0;
        for k in 1..=50 {
            let kf = k as f64;
            let a = (-0.5 * kf * kf * p.sigma * p.sigma).exp();
            s += 2.0 * a * (kf * d).cos();
            if a < 1e-17 {
                break;
            }
        }
        return s.ln() - TAU.ln();
    }
    let term = |w: i64| {
        let x = (d + TAU * w as f64) / p.sigma;
        -0.5 * x * x
    };
    let lead = term(0);
    let mut sum: f64 = (-3..=3).map(|w| (term(w) - lead).exp()).sum();
    let mut w = 4;
    loop {
        let add = (term(w) - lead).exp() + (term(-w) - lead).exp();
        sum += add;
        if add < 1e-15 * sum || w > 10_000 {
            break;
        }
        w += 1;
    }
    lead + sum.ln() - p.sigma.ln() - LN_SQRT_2PI
}

fn windings(sigma: f64) -> i64 {
    (((PI + 8.5 * sigma) / TAU).ceil() as i64).max(3)
}

/// Per-point component log-density and winding-averaged first and second
/// moments of the unwrapped residual `θ − μ + 2πw`.
fn component_pass(data: &[f64], p: &WrappedNormalParams) -> Vec<(f64, f64, f64)> {
    let big_w = windings(p.sigma);
    let mut t = Vec::with_capacity((2 * big_w + 1) as usize);
    data.iter()
        .map(|&theta| {
            let d = centred(theta, p.mu);
            t.clear();
            for w in -big_w..=big_w {
                let x = (d + TAU * w as f64) / p.sigma;
                t.push(-0.5 * x * x);
            }
            let lse = log_sum_exp(&t);
            let (mut m1, mut m2) = (0.0, 0.0);
            for (j, w) in (-big_w..=big_w).enumerate() {
                let q = (t[j] - lse).exp();
                let x = d + TAU * w as f64;
                m1 += q * x;
                m2 += q * x * x;
            }
            (lse - p.sigma.ln() - LN_SQRT_2PI, m1, m2)
        })
        .collect()
}

/// M-step from responsibilities `g` and component pass output.
fn m_step(p: &WrappedNormalParams, pass: &[(f64, f64, f64)], g: impl Fn(usize) -> f64) -> (WrappedNormalParams, f64) {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, &(_, m1, m2)) in pass.iter().enumerate() {
        let gi = g(i);
        s0 += gi;
        s1 += gi * m1;
        s2 += gi * m2;
    }
    if s0 <= 0.0 {
        return (*p, 0.0);
    }
    let delta = s1 / s0;
    let var = (s2 / s0 - delta * delta).max(0.0);
    let floored = var.sqrt() <= SIGMA_FLOOR;
    let sigma = var.sqrt().clamp(SIGMA_FLOOR, SIGMA_CAP);
    (
        WrappedNormalParams { mu: (p.mu + delta).rem_euclid(TAU), sigma },
        if floored { 1.0 } else { s0 },
    )
}

fn check(data: &[f64]) -> Result<(), ModeHuntError> {
    if data.iter().any(|t| !t.is_finite()) {
        return Err(ModeHuntError::NonFinite);
    }
    Ok(())
}

fn resultant(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let (c, s) = data.iter().fold((0.0, 0.0), |(c, s), t| (c + t.cos(), s + t.sin()));
    ((c * c + s * s).sqrt() / n, s.atan2(c))
}

fn moment_params(data: &[f64]) -> Option<WrappedNormalParams> {
    let (rbar, mu) = resultant(data);
    if rbar < 1e-12 {
        return None;
    }
    let sigma = (-2.0 * rbar.min(1.0).ln()).max(0.0).sqrt().clamp(SIGMA_FLOOR, SIGMA_CAP);
    Some(WrappedNormalParams { mu: mu.rem_euclid(TAU), sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleFit {
    pub params: WrappedNormalParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `σ` hit [`SIGMA_FLOOR`].
    pub floored: bool,
}

fn refine_single(data: &[f64], start: WrappedNormalParams) -> SingleFit {
    let mut p = start;
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut floored = false;
    while iterations < EM_MAX_ITER {
        let pass = component_pass(data, &p);
        let ll: f64 = pass.iter().map(|x| x.0).sum();
        if (ll - prev).abs() < EM_TOL {
            converged = true;
            break;
        }
        prev = ll;
        let (next, _) = m_step(&p, &pass, |_| 1.0);
        floored = next.sigma <= SIGMA_FLOOR;
        p = next;
        iterations += 1;
    }
    let loglik = data.iter().map(|&t| wrapped_normal_logpdf(t, &p)).sum();
    SingleFit { params: p, loglik, iterations, converged, floored }
}

/// Model I: moment start (`μ̂` mean direction, `σ̂² = −2 ln R̄`) refined by EM.
pub fn fit_single(data: &[f64]) -> Result<SingleFit, ModeHuntError> {
    check(data)?;
    if data.len() < 2 {
        return Err(ModeHuntError::TooFewPoints { needed: 2, found: data.len() });
    }
    let start = moment_params(data).ok_or(ModeHuntError::ZeroResultant)?;
    Ok(refine_single(data, start))
}

/// [`fit_single`] that falls back to a multi-start search when the mean
/// resultant vanishes.
fn fit_single_robust(data: &[f64]) -> Result<SingleFit, ModeHuntError> {
    match fit_single(data) {
        Err(ModeHuntError::ZeroResultant) => {
            let step = (data.len() / 16).max(1);
            data.iter()
                .step_by(step)
                .map(|&t| refine_single(data, WrappedNormalParams { mu: t.rem_euclid(TAU), sigma: 1.5 }))
                .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
                .ok_or(ModeHuntError::ZeroResultant)
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    FixedHalf,
    Free,
}

impl WeightMode {
    /// Extra parameters of Model II over Model I.
    pub fn dof(self) -> u32 {
        match self {
            Self::FixedHalf => 2,
            Self::Free => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub components: [WrappedNormalParams; 2],
    pub weights: [f64; 2],
    pub responsibilities: Vec<[f64; 2]>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MixtureFit {
    /// Component with the higher density at each point.
    pub fn labels(&self, data: &[f64]) -> Vec<usize> {
        data.iter()
            .map(|&t| {
                let a = wrapped_normal_logpdf(t, &self.components[0]);
                let b = wrapped_normal_logpdf(t, &self.components[1]);
                usize::from(b > a)
            })
            .collect()
    }
}

fn mixture_loglik(data: &[f64], comps: &[WrappedNormalParams; 2], weights: [f64; 2]) -> f64 {
    let lw = [weights[0].ln(), weights[1].ln()];
    data.iter()
        .map(|&t| log_sum_exp(&[lw[0] + wrapped_normal_logpdf(t, &comps[0]), lw[1] + wrapped_normal_logpdf(t, &comps[1])]))
        .sum()
}

fn run_em(data: &[f64], start: [WrappedNormalParams; 2], mode: WeightMode) -> MixtureFit {
    let n = data.len();
    let mut comps = start;
    let mut weights = [0.5f64, 0.5];
    let mut resp = vec![[0.5, 0.5]; n];
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations <= EM_MAX_ITER {
        let pa = component_pass(data, &comps[0]);
        let pb = component_pass(data, &comps[1]);
        let (la, lb) = (weights[0].ln(), weights[1].ln());
        let mut ll = 0.0;
        for i in 0..n {
            let (a, b) = (la + pa[i].0, lb + pb[i].0);
            let l = log_sum_exp(&[a, b]);
            ll += l;
            resp[i] = [(a - l).exp(), (b - l).exp()];
        }
        if (ll - prev).abs() < EM_TOL {
            converged = true;
            break;
        }
        if iterations == EM_MAX_ITER {
            break;
        }
        prev = ll;
        comps[0] = m_step(&comps[0], &pa, |i| resp[i][0]).0;
        comps[1] = m_step(&comps[1], &pb, |i| resp[i][1]).0;
        if mode == WeightMode::Free {
            let w0 = resp.iter().map(|r| r[0]).sum::<f64>() / n as f64;
            let w0 = w0.clamp(1e-6, 1.0 - 1e-6);
            weights = [w0, 1.0 - w0];
        }
        iterations += 1;
    }
    MixtureFit {
        loglik: mixture_loglik(data, &comps, weights),
        components: comps,
        weights,
        responsibilities: resp,
        iterations,
        converged,
    }
}

fn part_params(data: &[f64], idx: &[usize]) -> Option<WrappedNormalParams> {
    if idx.is_empty() {
        return None;
    }
    let part: Vec<f64> = idx.iter().map(|&i| data[i]).collect();
    let (rbar, mu) = resultant(&part);
    let sigma = if rbar < 1e-12 { 1.5 } else { (-2.0 * rbar.min(1.0).ln()).max(0.0).sqrt().clamp(0.05, SIGMA_CAP) };
    Some(WrappedNormalParams { mu: mu.rem_euclid(TAU), sigma })
}

/// Deterministic starting partitions: the diameter perpendicular to the mean
/// direction, the two largest circular gaps, and median / lower-quartile /
/// upper-quartile cuts of the circle opened at its largest gap.
fn initial_partitions(data: &[f64]) -> Vec<Vec<usize>> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data[a].rem_euclid(TAU).total_cmp(&data[b].rem_euclid(TAU)));
    let angle = |k: usize| data[order[k % n]].rem_euclid(TAU);
    // gap after sorted position k
    let gap = |k: usize| {
        let g = angle(k + 1) - angle(k);
        if k + 1 == n {
            g + TAU
        } else {
            g
        }
    };
    let mut gaps: Vec<usize> = (0..n).collect();
    gaps.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)).then(a.cmp(&b)));
    // sorted positions starting just after the largest gap
    let start = (gaps[0] + 1) % n;
    let linear: Vec<usize> = (0..n).map(|k| order[(start + k) % n]).collect();

    let mut parts = Vec::new();
    let (rbar, mu) = resultant(data);
    if rbar >= 1e-12 {
        parts.push((0..n).filter(|&i| (data[i] - mu).sin() >= 0.0).collect());
    }
    if n >= 2 {
        let (g1, g2) = (gaps[0].min(gaps[1]), gaps[0].max(gaps[1]));
        parts.push((g1 + 1..=g2).map(|k| order[k]).collect());
    }
    for q in [n / 2, n / 4, (3 * n) / 4] {
        if q > 0 && q < n {
            parts.push(linear[..q].to_vec());
        }
    }
    parts
}

/// Model II by EM, best of the deterministic starts and the collapsed
/// single fit by final log-likelihood.
pub fn fit_mixture2(data: &[f64], mode: WeightMode) -> Result<MixtureFit, ModeHuntError> {
    check(data)?;
    if data.len() < 2 {
        return Err(ModeHuntError::TooFewPoints { needed: 2, found: data.len() });
    }
    let n = data.len();
    let mut starts: Vec<[WrappedNormalParams; 2]> = Vec::new();
    for part in initial_partitions(data) {
        let mut inside = vec![false; n];
        for &i in &part {
            inside[i] = true;
        }
        let rest: Vec<usize> = (0..n).filter(|&i| !inside[i]).collect();
        if let (Some(a), Some(b)) = (part_params(data, &part), part_params(data, &rest)) {
            starts.push([a, b]);
        }
    }
    if let Ok(single) = fit_single_robust(data) {
        starts.push([single.params, single.params]);
    }
    starts
        .into_iter()
        .map(|s| run_em(data, s, mode))
        .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
        .ok_or(ModeHuntError::ZeroResultant)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: u32,
    pub split: bool,
}

/// `2(ℓ_II − ℓ_I)` against `χ²_dof`; small negative differences are clamped.
pub fn lrt_split(loglik_single: f64, loglik_mixture: f64, dof: u32, alpha: f64) -> LrtResult {
    let mut statistic = 2.0 * (loglik_mixture - loglik_single);
    if statistic < 0.0 && statistic > -2.0 * LRT_TOL * loglik_single.abs().max(1.0) {
        statistic = 0.0;
    }
    let statistic = statistic.max(0.0);
    let p_value = chi2_sf(statistic, dof);
    LrtResult { statistic, p_value, dof, split: p_value < alpha }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeHuntOptions {
    pub alpha: f64,
    pub kappa_min: usize,
    pub weight_mode: WeightMode,
}

impl Default for ModeHuntOptions {
    fn default() -> Self {
        Self { alpha: 0.05, kappa_min: 3, weight_mode: WeightMode::FixedHalf }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Split,
    NotSignificant,
    /// A candidate part would have fewer than `kappa_min` points.
    TooSmall,
    /// Model I could not be fitted.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub indices: Vec<usize>,
    pub loglik_single: Option<f64>,
    pub loglik_mixture: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub decision: Decision,
    pub single: Option<WrappedNormalParams>,
    pub children: Vec<ClusterTree>,
}

impl ClusterTree {
    pub fn leaves(&self) -> Vec<&ClusterTree> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    /// Leaf number of every input point, leaves taken depth first.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (k, leaf) in self.leaves().into_iter().enumerate() {
            for &i in &leaf.indices {
                out[i] = k;
            }
        }
        out
    }

    pub fn is_split(&self) -> bool {
        !self.children.is_empty()
    }
}

fn hunt(data: &[f64], indices: Vec<usize>, opts: &ModeHuntOptions) -> ClusterTree {
    let sub: Vec<f64> = indices.iter().map(|&i| data[i]).collect();
    let leaf = |decision, single: Option<&SingleFit>| ClusterTree {
        indices: indices.clone(),
        loglik_single: single.map(|s| s.loglik),
        loglik_mixture: None,
        statistic: None,
        p_value: None,
        decision,
        single: single.map(|s| s.params),
        children: Vec::new(),
    };
    let Ok(single) = fit_single_robust(&sub) else {
        return leaf(if sub.len() < 2 { Decision::TooSmall } else { Decision::Degenerate }, None);
    };
    if sub.len() < 2 * opts.kappa_min {
        return leaf(Decision::TooSmall, Some(&single));
    }
    let Ok(mix) = fit_mixture2(&sub, opts.weight_mode) else {
        return leaf(Decision::Degenerate, Some(&single));
    };
    let labels = mix.labels(&sub);
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let lrt = lrt_split(single.loglik, mix.loglik, opts.weight_mode.dof(), opts.alpha);
    let mut node = leaf(Decision::NotSignificant, Some(&single));
    node.loglik_mixture = Some(mix.loglik);
    node.statistic = Some(lrt.statistic);
    node.p_value = Some(lrt.p_value);
    if ones < opts.kappa_min || sub.len() - ones < opts.kappa_min {
        node.decision = Decision::TooSmall;
        return node;
    }
    if !lrt.split {
        return node;
    }
    let mut parts: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (k, &l) in labels.iter().enumerate() {
        parts[l].push(indices[k]);
    }
    parts.sort_by_key(|p| p[0]);
    node.decision = Decision::Split;
    node.children = parts.into_iter().map(|p| hunt(data, p, opts)).collect();
    node
}

/// Recursive splitting of `data` (angles in radians).
pub fn mode_hunt(data: &[f64], opts: &ModeHuntOptions) -> Result<ClusterTree, ModeHuntError> {
    check(data)?;
    if data.is_empty() {
        return Err(ModeHuntError::TooFewPoints { needed: 1, found: 0 });
    }
    if opts.kappa_min == 0 || !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(ModeHuntError::InvalidParams("kappa_min ≥ 1 and alpha ∈ (0, 1] required".into()));
    }
    Ok(hunt(data, (0..data.len()).collect(), opts))
}

/// Wrapped normal draws from a seeded generator.
pub fn wrapped_normal_sample<R: rand::Rng + ?Sized>(rng: &mut R, p: &WrappedNormalParams, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(p.mu, p.sigma).expect("sigma validated positive");
    (0..n).map(|_| normal.sample(rng).rem_euclid(TAU)).collect()
}
