use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 17-significant-digit formatting for CSV tables.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Row {
    pub line: u64,
    pub fields: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::Data(format!("{}:{line}: {e}", path.display()))
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push(Row { line, fields: rec.iter().map(str::to_string).collect() });
        }
        Ok(Self { path: path.to_path_buf(), headers, rows })
    }

    pub fn is_empty_file(&self) -> bool {
        self.headers.is_empty() || (self.headers.len() == 1 && self.headers[0].is_empty())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| CliError::Data(format!("{}:1: missing column '{name}'", self.path.display())))
    }

    pub fn error(&self, row: &Row, col: Option<usize>, msg: impl std::fmt::Display) -> CliError {
        match col {
            Some(c) => CliError::Data(format!("{}:{}:{}: {msg}", self.path.display(), row.line, c + 1)),
            None => CliError::Data(format!("{}:{}: {msg}", self.path.display(), row.line)),
        }
    }

    pub fn number(&self, row: &Row, col: usize) -> Result<f64> {
        let s = row.fields.get(col).ok_or_else(|| self.error(row, Some(col), "missing field"))?;
        let v: f64 = s.parse().map_err(|_| self.error(row, Some(col), format!("not a number: '{s}'")))?;
        if !v.is_finite() {
            return Err(self.error(row, Some(col), "non-finite value"));
        }
        Ok(v)
    }

    pub fn id(&self, row: &Row, index: usize) -> String {
        match self.column("id") {
            Some(c) => row.fields.get(c).cloned().unwrap_or_default(),
            None => index.to_string(),
        }
    }
}

pub const AXES: [&str; 3] = ["x", "y", "z"];

/// Landmark column names `l{j}_{x|y|z}` for `k` landmarks in `dim` dimensions.
pub fn landmark_headers(k: usize, dim: usize) -> Vec<String> {
    (1..=k).flat_map(|j| AXES[..dim].iter().map(move |a| format!("l{j}_{a}"))).collect()
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

pub fn write_all(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("write failed: {e}")))
}

pub fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_all(open_output(path)?.as_mut(), &text)
}

pub fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
