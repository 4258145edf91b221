use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use formkit::distributions::{cone_sample, fisher_sample, langevin_inverse, ConeDensityParams, Domain, FisherParams};
use formkit::simplex::{five_point_reconstruct, spherical_angles, spherical_point, FivePointVector};
use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{CliError, Result};
use crate::io::{csv_line, fmt, landmark_headers, open_output, write_all};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimModel {
    Cone,
    Fisher,
    #[value(alias = "five_point")]
    FivePoint,
    #[value(alias = "wn_mixture")]
    WnMixture,
}

/// Means of `(d1, d2, alpha, theta1, phi1, theta2, phi2)` used by `five_point`.
pub const FIVE_POINT_MEANS: [f64; 7] = [4.77, 5.54, 1.06, 1.15, 0.61, 1.55, 0.20];
/// Standard deviations of `d1, d2, alpha`.
pub const FIVE_POINT_SD: [f64; 3] = [0.055, 0.21, 0.055];
/// Target mean resultant lengths of the two direction blocks.
pub const FIVE_POINT_RESULTANTS: [f64; 2] = [0.960, 0.973];

struct Params {
    values: BTreeMap<String, String>,
    allowed: &'static [&'static str],
}

impl Params {
    fn parse(raw: &[String], allowed: &'static [&'static str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for item in raw {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--param expects key=value, got '{item}'")))?;
            if !allowed.contains(&k) {
                return Err(CliError::Usage(format!("unknown parameter '{k}'; expected one of {}", allowed.join(", "))));
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Self { values, allowed })
    }

    fn get(&self, key: &str, default: f64) -> Result<f64> {
        debug_assert!(self.allowed.contains(&key));
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("parameter {key}: not a number: '{s}'"))),
        }
    }

    fn text(&self, key: &str, default: &str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| default.to_string())
    }
}

fn range(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("range violation: {msg}"))
}

fn random_rotation<R: Rng>(rng: &mut R) -> UnitQuaternion<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

fn five_point(rng: &mut ChaCha8Rng, p: &Params, n: usize) -> Result<String> {
    let mut kappa = [0.0; 2];
    for (b, key) in ["kappa1", "kappa2"].iter().enumerate() {
        let default = langevin_inverse(FIVE_POINT_RESULTANTS[b]).expect("resultant in [0, 1)");
        kappa[b] = p.get(key, default)?;
    }
    let lengths = (p.get("l12", 1.47)?, p.get("l45", 1.47)?);
    if !(lengths.0 > 0.0 && lengths.1 > 0.0) {
        return Err(range("fixed lengths must be positive"));
    }
    let mut m = FIVE_POINT_MEANS;
    for (j, key) in ["d1", "d2", "alpha", "theta1", "phi1", "theta2", "phi2"].iter().enumerate() {
        m[j] = p.get(key, m[j])?;
    }
    let mut fisher = Vec::new();
    for b in 0..2 {
        let mu = spherical_point(m[3 + 2 * b], m[4 + 2 * b]);
        fisher.push(FisherParams::new(mu, kappa[b]).map_err(range)?);
    }
    let normals: Vec<Normal<f64>> = (0..3).map(|j| Normal::new(m[j], FIVE_POINT_SD[j]).expect("positive sd")).collect();
    let mut text = String::from("id,");
    text.push_str(&csv_line(&landmark_headers(5, 3)));
    let mut i = 0;
    while i < n {
        let d1 = normals[0].sample(rng);
        let d2 = normals[1].sample(rng);
        let alpha = normals[2].sample(rng);
        let a = fisher_sample(rng, &fisher[0], 1)[0];
        let b = fisher_sample(rng, &fisher[1], 1)[0];
        let (theta1, phi1) = spherical_angles(a.as_slice());
        let (theta2, phi2) = spherical_angles(b.as_slice());
        let w = FivePointVector { d1, d2, alpha, theta1, phi1, theta2, phi2 };
        let rot = random_rotation(rng);
        let shift = Vector3::from_fn(|_, _| rng.random_range(-10.0..10.0));
        // redraw the rare out-of-range vector
        let Ok(x) = five_point_reconstruct(&w, lengths) else { continue };
        let moved = DMatrix::from_fn(3, 5, |r, c| {
            let v = rot * Vector3::new(x.landmarks()[(0, c)], x.landmarks()[(1, c)], x.landmarks()[(2, c)]) + shift;
            v[r]
        });
        let mut fields = vec![format!("s{}", i + 1)];
        for c in 0..5 {
            fields.extend((0..3).map(|r| fmt(moved[(r, c)])));
        }
        text.push_str(&csv_line(&fields));
        i += 1;
    }
    Ok(text)
}

pub fn run(model: SimModel, raw: &[String], n: usize, seed: u64, output: Option<&Path>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = match model {
        SimModel::Cone => {
            let p = Params::parse(raw, &["kappa1", "kappa2", "kappa3", "mu", "domain"])?;
            let domain = match p.text("domain", "full").as_str() {
                "full" => Domain::FullCircle,
                "half" => Domain::HalfCircle,
                other => return Err(CliError::Usage(format!("domain must be full or half, got '{other}'"))),
            };
            let params = ConeDensityParams::new(
                p.get("kappa1", 1.0)?,
                p.get("kappa2", 0.0)?,
                p.get("kappa3", 1.0)?,
                p.get("mu", 0.0)?,
                domain,
            )
            .map_err(range)?;
            let draws = cone_sample(&params, n, seed).map_err(|e| CliError::Numeric(e.to_string()))?;
            let mut text = String::from("id,r,theta\n");
            for (i, (r, t)) in draws.into_iter().enumerate() {
                text.push_str(&csv_line(&[(i + 1).to_string(), fmt(r), fmt(t)]));
            }
            text
        }
        SimModel::Fisher => {
            let p = Params::parse(raw, &["kappa", "theta", "phi"])?;
            let mu = spherical_point(p.get("theta", 0.0)?, p.get("phi", 0.0)?);
            let params = FisherParams::new(mu, p.get("kappa", 25.0)?).map_err(range)?;
            let mut text = String::from("id,x,y,z\n");
            for (i, v) in fisher_sample(&mut rng, &params, n).into_iter().enumerate() {
                text.push_str(&csv_line(&[(i + 1).to_string(), fmt(v.x), fmt(v.y), fmt(v.z)]));
            }
            text
        }
        SimModel::FivePoint => {
            let p = Params::parse(
                raw,
                &["kappa1", "kappa2", "l12", "l45", "d1", "d2", "alpha", "theta1", "phi1", "theta2", "phi2"],
            )?;
            five_point(&mut rng, &p, n)?
        }
        SimModel::WnMixture => {
            let p = Params::parse(raw, &["mu1", "sigma1", "mu2", "sigma2", "weight"])?;
            let w = p.get("weight", 0.5)?;
            if !(0.0..=1.0).contains(&w) {
                return Err(range("weight must lie in [0, 1]"));
            }
            let comps = [
                (p.get("mu1", 0.0)?, p.get("sigma1", 0.1)?),
                (p.get("mu2", PI)?, p.get("sigma2", 0.1)?),
            ];
            let normals: Vec<Normal<f64>> = comps
                .iter()
                .map(|&(mu, s)| Normal::new(mu, s).ok().filter(|_| s > 0.0).ok_or_else(|| range("sigma must be positive")))
                .collect::<Result<_>>()?;
            let mut text = String::from("id,angle,component\n");
            for i in 0..n {
                let k = usize::from(rng.random::<f64>() >= w);
                let a = normals[k].sample(&mut rng).rem_euclid(2.0 * PI);
                text.push_str(&csv_line(&[(i + 1).to_string(), fmt(a), (k + 1).to_string()]));
            }
            text
        }
    };
    write_all(open_output(output)?.as_mut(), &text)
}
