//! `formkit`: landmark coordinates, summaries, tests, fits and cluster trees.

mod coords;
mod error;
mod fitdist;
mod hunt;
mod io;
mod simulate;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use formkit::dirstats::RotationConvention;
use formkit::mucen::PresetKind;
use formkit::modehunt::WeightMode;
use formkit::simplex::FrameType;

use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "formkit", version, about = "Constrained size-and-shape analysis of landmark data")]
struct Cli {
    /// Angles in input files are in degrees.
    #[arg(long, global = true)]
    degrees: bool,
    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    #[value(alias = "five_point")]
    FivePoint,
    #[value(alias = "gm_type1")]
    GmType1,
    #[value(alias = "chain_difference")]
    ChainDifference,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Fixed,
    Free,
}

#[derive(Subcommand)]
enum Command {
    /// Simplex polypolar coordinates of every record in a landmark CSV.
    Coords {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "five-point")]
        scheme: Scheme,
        /// Simplex frame type.
        #[arg(long = "type", default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        frame_type: u8,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Summary report of a five-point coordinates file.
    Stats {
        input: PathBuf,
        /// Rotation taking each spherical mean to the pole.
        #[arg(long, value_enum, default_value = "b")]
        rotation: Convention,
    },
    /// Two-sample Hotelling test on coordinates files, or on an injected d².
    Test {
        files: Vec<PathBuf>,
        #[arg(long, requires_all = ["n1", "n2", "p"])]
        d2: Option<f64>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, value_enum, default_value = "b")]
        rotation: Convention,
    },
    /// Maximum likelihood fit of the cone or Fisher distribution.
    Fitdist {
        input: PathBuf,
        #[arg(long, value_enum)]
        model: fitdist::FitModel,
    },
    /// Recursive wrapped-normal mode hunting on a column of angles.
    Modehunt {
        input: PathBuf,
        #[arg(long, default_value = "angle")]
        column: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        min_cluster: usize,
        #[arg(long, value_enum, default_value = "fixed")]
        weights: Weights,
        /// Write the input table with a label column appended.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Synthetic data generator.
    Simulate {
        #[arg(value_enum)]
        model: simulate::SimModel,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model parameter as key=value; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
    },
}

fn convention(c: Convention) -> RotationConvention {
    match c {
        Convention::A => RotationConvention::PoleRotationA,
        Convention::B => RotationConvention::EigenframeB,
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FORMKIT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("FORMKIT_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    let output = cli.output.as_deref();
    match cli.command {
        Command::Coords { input, scheme, frame_type, dim } => coords::run(&coords::CoordsArgs {
            input: &input,
            scheme: match scheme {
                Scheme::FivePoint => PresetKind::FivePoint,
                Scheme::GmType1 => PresetKind::GmType1,
                Scheme::ChainDifference => PresetKind::ChainDifference,
            },
            frame_type: if frame_type == 1 { FrameType::Type1 } else { FrameType::Type2 },
            dim,
            output,
        }),
        Command::Stats { input, rotation } => stats::run_stats(&input, convention(rotation), cli.degrees, output),
        Command::Test { files, d2, n1, n2, p, rotation } => {
            let injected = d2.map(|d2| stats::Injected {
                d2,
                n1: n1.unwrap_or_default(),
                n2: n2.unwrap_or_default(),
                p: p.unwrap_or_default(),
            });
            let pair = match (files.as_slice(), &injected) {
                ([a, b], None) => Some((a.as_path(), b.as_path())),
                ([], Some(_)) => None,
                _ => return Err(CliError::Usage("give exactly two coordinate files, or --d2 without files".into())),
            };
            stats::run_test(pair, injected, convention(rotation), cli.degrees, output)
        }
        Command::Fitdist { input, model } => fitdist::run(&input, model, cli.degrees, output),
        Command::Modehunt { input, column, alpha, min_cluster, weights, labels } => hunt::run(&hunt::HuntArgs {
            input: &input,
            column: &column,
            alpha,
            min_cluster,
            weights: match weights {
                Weights::Fixed => WeightMode::FixedHalf,
                Weights::Free => WeightMode::Free,
            },
            degrees: cli.degrees,
            labels: labels.as_deref(),
            output,
        }),
        Command::Simulate { model, n, seed, params } => simulate::run(model, &params, n, seed, output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
