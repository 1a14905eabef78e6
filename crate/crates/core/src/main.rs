use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jes::bench::{run_experiment, ExperimentConfig, Problem, RunOptions};
use jes::metrics::{self, WeightDistribution};
use jes::{pareto, Error, Result};

#[derive(Parser)]
#[command(name = "jes", version, about = "Joint entropy search for multi-objective Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock phase timings (makes the CSV non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Use the `1 - ...` form of g in ZDT2.
        #[arg(long)]
        zdt2_paper_sign: bool,
    },
    /// Exact hypervolume of a point set.
    Hv {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        r#ref: Vec<f64>,
    },
    /// Monte Carlo generalized hypervolume.
    Ghv {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        r#ref: Vec<f64>,
        /// uniform | beta:a,b | box:lo,hi
        #[arg(long, default_value = "uniform")]
        dist: String,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Box decomposition of the region dominated by a front.
    Decompose {
        #[arg(long)]
        points: PathBuf,
    },
    /// True Pareto front of a benchmark problem (maximization convention).
    Front {
        #[arg(long, default_value = "zdt2")]
        problem: String,
        #[arg(long, default_value_t = 6)]
        d: usize,
        #[arg(long)]
        zdt2_paper_sign: bool,
    },
}

/// Reads a point CSV with a header row (`f1,...,fM`).
fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number `{v}` in {}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

fn check_reference(points: &[Vec<f64>], reference: &[f64]) -> Result<()> {
    for p in points {
        if p.len() != reference.len() {
            return Err(Error::DimensionMismatch { expected: reference.len(), got: p.len() });
        }
    }
    Ok(())
}

fn fmt_bound(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run { config, out: dir, timing, zdt2_paper_sign } => {
            let cfg = ExperimentConfig::load(&config)?;
            let record = run_experiment(&cfg, &RunOptions { timing, zdt2_paper_sign }, Some(&dir))?;
            writeln!(out, "{}", record.final_log_hv_disc())?;
        }
        Command::Hv { points, r#ref } => {
            let pts = read_points(&points)?;
            check_reference(&pts, &r#ref)?;
            writeln!(out, "{}", pareto::hypervolume(&pts, &r#ref))?;
        }
        Command::Ghv { points, r#ref, dist, n, seed } => {
            let pts = read_points(&points)?;
            check_reference(&pts, &r#ref)?;
            let dist: WeightDistribution = dist.parse()?;
            let est = metrics::generalized_hypervolume(&pts, &r#ref, &dist, n, seed)?;
            writeln!(out, "{}", est.value)?;
        }
        Command::Decompose { points } => {
            let pts = read_points(&points)?;
            let front = pareto::pareto_filter(&pts);
            let decomposition = front.decompose()?;
            let m = pts.first().map_or(0, |p| p.len());
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<String> = (1..=m).map(|k| format!("l{k}")).collect();
            header.extend((1..=m).map(|k| format!("u{k}")));
            w.write_record(&header)?;
            for b in decomposition.boxes() {
                w.write_record(b.lower.iter().chain(&b.upper).map(|v| fmt_bound(*v)))?;
            }
            w.flush()?;
        }
        Command::Front { problem, d, zdt2_paper_sign } => {
            let id = if problem.contains(':') { problem } else { format!("{problem}:{d}") };
            let p = Problem::parse(&id, zdt2_paper_sign)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record((1..=p.num_objectives).map(|k| format!("f{k}")))?;
            for y in p.true_front() {
                w.write_record(y.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
