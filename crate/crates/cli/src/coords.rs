use std::path::Path;

use formkit::mucen::{multicentre, preset_scheme, Configuration, PresetKind};
use formkit::simplex::{five_point_coordinates, simplex_mpp, FivePointVector, FrameType};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::io::{csv_line, fmt, landmark_headers, open_output, write_all, Row, Table};

pub const FIVE_POINT_HEADER: [&str; 8] = ["id", "d1", "d2", "alpha", "theta1", "phi1", "theta2", "phi2"];

/// Number of landmarks declared by an `id,l1_x,..` header.
fn landmark_count(t: &Table, dim: usize) -> Result<usize> {
    let fail = |msg: String| CliError::Data(format!("{}:1: {msg}", t.path.display()));
    if t.headers.first().map(String::as_str) != Some("id") {
        return Err(fail("first column must be 'id'".into()));
    }
    let rest = t.headers.len() - 1;
    if rest == 0 || rest % dim != 0 {
        return Err(fail(format!("{rest} landmark columns do not fit dimension {dim}")));
    }
    let k = rest / dim;
    for (c, (got, want)) in t.headers[1..].iter().zip(landmark_headers(k, dim)).enumerate() {
        if *got != want {
            return Err(CliError::Data(format!(
                "{}:1:{}: expected column '{want}', found '{got}'",
                t.path.display(),
                c + 2
            )));
        }
    }
    Ok(k)
}

fn configuration(t: &Table, row: &Row, k: usize, dim: usize) -> Result<Configuration> {
    if row.fields.len() != 1 + k * dim {
        return Err(t.error(row, None, format!("expected {} fields, found {}", 1 + k * dim, row.fields.len())));
    }
    let mut m = DMatrix::zeros(dim, k);
    for j in 0..k {
        for a in 0..dim {
            m[(a, j)] = t.number(row, 1 + j * dim + a)?;
        }
    }
    Configuration::new(m).map_err(|e| t.error(row, None, e))
}

pub struct CoordsArgs<'a> {
    pub input: &'a Path,
    pub scheme: PresetKind,
    pub frame_type: FrameType,
    pub dim: usize,
    pub output: Option<&'a Path>,
}

pub fn run(args: &CoordsArgs) -> Result<()> {
    if !(2..=3).contains(&args.dim) {
        return Err(CliError::Usage(format!("--dim must be 2 or 3, got {}", args.dim)));
    }
    let t = Table::read(args.input)?;
    let mut out = open_output(args.output)?;
    if t.is_empty_file() {
        return write_all(out.as_mut(), "");
    }
    let k = landmark_count(&t, args.dim)?;
    let header: Vec<String> = if args.scheme == PresetKind::FivePoint {
        if args.dim != 3 || k != 5 {
            return Err(CliError::Usage(format!("five_point needs 5 landmarks in 3-D, found {k} in {}-D", args.dim)));
        }
        if args.frame_type != FrameType::Type2 {
            return Err(CliError::Usage("five_point coordinates use the type 2 frame".into()));
        }
        FIVE_POINT_HEADER.iter().map(|s| s.to_string()).collect()
    } else {
        if k < args.dim + 1 {
            return Err(CliError::Usage(format!("need at least {} landmarks in {}-D, found {k}", args.dim + 1, args.dim)));
        }
        let mut h = vec!["id".to_string(), "h1".to_string()];
        h.extend((1..=k - 2).map(|i| format!("s{i}")));
        for i in 1..=k - 2 {
            h.extend((1..=args.dim).map(|j| format!("zeta{i}_{j}")));
        }
        h
    };
    let scheme = preset_scheme(args.scheme, k).map_err(|e| CliError::Usage(e.to_string()))?;

    // parse serially for ordered diagnostics, compute in parallel
    let parsed: Vec<(String, &Row, Configuration)> = t
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| Ok((t.id(row, i), row, configuration(&t, row, k, args.dim)?)))
        .collect::<Result<_>>()?;
    let lines: Vec<std::result::Result<String, String>> = parsed
        .par_iter()
        .map(|(id, _, x)| {
            let values: Vec<f64> = if args.scheme == PresetKind::FivePoint {
                five_point_coordinates(x).map_err(|e| e.to_string())?.to_array().to_vec()
            } else {
                let z = multicentre(x, &scheme).map_err(|e| e.to_string())?;
                let c = simplex_mpp(&z, args.frame_type).map_err(|e| e.to_string())?;
                let mut v = vec![c.h1];
                v.extend(&c.s);
                for zeta in &c.zeta {
                    v.extend(zeta.iter());
                }
                v
            };
            let mut fields = vec![id.clone()];
            fields.extend(values.into_iter().map(fmt));
            Ok(csv_line(&fields))
        })
        .collect();

    let mut text = csv_line(&header);
    let mut skipped = 0;
    for ((id, row, _), line) in parsed.iter().zip(lines) {
        match line {
            Ok(l) => text.push_str(&l),
            Err(e) => {
                skipped += 1;
                eprintln!("warning: {}:{}: record '{id}' skipped: {e}", t.path.display(), row.line);
            }
        }
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} of {} records", parsed.len());
    }
    write_all(out.as_mut(), &text)
}

/// Reads a five-point coordinates table.
pub fn read_five_point(path: &Path, degrees: bool) -> Result<(Vec<String>, Vec<FivePointVector>)> {
    let t = Table::read(path)?;
    if t.is_empty_file() {
        return Ok((Vec::new(), Vec::new()));
    }
    let cols: Vec<usize> = FIVE_POINT_HEADER[1..].iter().map(|h| t.require(h)).collect::<Result<_>>()?;
    let mut ids = Vec::with_capacity(t.rows.len());
    let mut w = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        let mut a = [0.0; 7];
        for (j, &c) in cols.iter().enumerate() {
            a[j] = t.number(row, c)?;
            if degrees && j >= 2 {
                a[j] = a[j].to_radians();
            }
        }
        let v = FivePointVector::from_array(a);
        v.validate().map_err(|e| t.error(row, None, e))?;
        ids.push(t.id(row, i));
        w.push(v);
    }
    Ok((ids, w))
}
