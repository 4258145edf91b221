use std::path::Path;

use formkit::modehunt::{mode_hunt, ModeHuntOptions, WeightMode};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::io::{csv_line, open_output, write_all, write_json, Table, SCHEMA_VERSION};

pub struct HuntArgs<'a> {
    pub input: &'a Path,
    pub column: &'a str,
    pub alpha: f64,
    pub min_cluster: usize,
    pub weights: WeightMode,
    pub degrees: bool,
    pub labels: Option<&'a Path>,
    pub output: Option<&'a Path>,
}

pub fn run(args: &HuntArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if args.min_cluster == 0 {
        return Err(CliError::Usage("--min-cluster must be at least 1".into()));
    }
    let t = Table::read(args.input)?;
    if t.is_empty_file() || t.rows.is_empty() {
        return Err(CliError::Data(format!("{}: no angles", args.input.display())));
    }
    let col = t.require(args.column)?;
    let angles: Vec<f64> = t
        .rows
        .iter()
        .map(|row| t.number(row, col).map(|v| if args.degrees { v.to_radians() } else { v }))
        .collect::<Result<_>>()?;
    let opts = ModeHuntOptions { alpha: args.alpha, kappa_min: args.min_cluster, weight_mode: args.weights };
    let tree = mode_hunt(&angles, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    let labels = tree.labels(angles.len());

    if let Some(path) = args.labels {
        let mut header = t.headers.clone();
        header.push("label".into());
        let mut text = csv_line(&header);
        for (row, l) in t.rows.iter().zip(&labels) {
            let mut fields = row.fields.clone();
            fields.push(l.to_string());
            text.push_str(&csv_line(&fields));
        }
        write_all(open_output(Some(path))?.as_mut(), &text)?;
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "n": angles.len(),
        "alpha": args.alpha,
        "min_cluster": args.min_cluster,
        "weight_mode": args.weights,
        "leaves": tree.leaves().len(),
        "tree": tree,
    });
    write_json(args.output, &report)
}
