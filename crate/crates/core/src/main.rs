use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irs_dps::codebook::design_codebook;
use irs_dps::harness::validate::run_validation;
use irs_dps::harness::{run_sweep, write_csv, write_pdf_csv, ExperimentSpec};
use irs_dps::{DesignConfig, Error, Execution, Start, Weighting};

#[derive(Parser)]
#[command(
    name = "irs-dps",
    version,
    about = "Discrete phase-shift design and IRS rate simulation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per cell.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// JSON experiment spec.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Design a codebook and print it as JSON.
    Design {
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        weighting: Option<Weighting>,
        /// uniform-grid or best-of-grids.
        #[arg(long)]
        start: Option<Start>,
    },
    /// Run the sweep described by --config and write CSV.
    Sweep,
    /// Run the self-check suite.
    Validate,
    /// Sample the phase densities for plotting.
    Pdf {
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long, default_value_t = 361)]
        points: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                Failure::Runtime(format!("{}: {e}", p.display()))
            })?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn write_err(path: Option<&Path>, e: io::Error) -> Failure {
    let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
    Failure::Runtime(format!("{target}: {e}"))
}

fn load_spec(common: &Common) -> Result<Option<ExperimentSpec>, Failure> {
    common
        .config
        .as_deref()
        .map(ExperimentSpec::load)
        .transpose()
        .map_err(Failure::from)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let out = common.out.as_deref();
    match cli.command {
        Command::Design {
            k,
            m,
            weighting,
            start,
        } => {
            let spec = load_spec(common)?;
            let k = k.or(spec.as_ref().map(|s| s.k));
            let m = m.or(spec.as_ref().map(|s| s.m));
            let (Some(k), Some(m)) = (k, m) else {
                return Err(Failure::Usage(
                    "design needs --K and --M (or a --config)".into(),
                ));
            };
            let weighting = weighting
                .or(spec.as_ref().map(|s| s.weighting))
                .unwrap_or_default();
            let start = start.or(spec.map(|s| s.design_start)).unwrap_or_default();
            let cb = design_codebook(
                &DesignConfig::new(k, m)
                    .with_weighting(weighting)
                    .with_start(start),
            )?;
            if !cb.converged() {
                log::warn!("design did not converge; emitting the best iterate");
            }
            let mut w = output(out)?;
            writeln!(w, "{}", cb.to_json()?).map_err(|e| write_err(out, e))?;
            w.flush().map_err(|e| write_err(out, e))
        }
        Command::Sweep => {
            let Some(mut spec) = load_spec(common)? else {
                return Err(Failure::Usage("sweep needs --config <file>".into()));
            };
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            if let Some(trials) = common.trials {
                spec.trials = trials;
            }
            let result = run_sweep(&spec)?;
            write_csv(&result, output(out)?).map_err(|e| write_err(out, e))
        }
        Command::Validate => {
            let trials = common.trials.unwrap_or(10_000);
            if trials < 2 {
                return Err(Failure::Usage("validate needs --trials >= 2".into()));
            }
            let checks = run_validation(trials, common.seed.unwrap_or(0), Execution::default())?;
            let mut w = output(out)?;
            let mut failed = 0;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(w, "{tag} {}: {}", c.name, c.detail).map_err(|e| write_err(out, e))?;
                failed += usize::from(!c.passed);
            }
            w.flush().map_err(|e| write_err(out, e))?;
            if failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
            Ok(())
        }
        Command::Pdf { k, points } => {
            let k = match k.or(load_spec(common)?.map(|s| s.k)) {
                Some(k) if k.is_finite() && k >= 0.0 => k,
                Some(k) => return Err(Failure::Usage(format!("--K must be >= 0, got {k}"))),
                None => return Err(Failure::Usage("pdf needs --K (or a --config)".into())),
            };
            if points == 0 {
                return Err(Failure::Usage("--points must be > 0".into()));
            }
            write_pdf_csv(k, points, output(out)?).map_err(|e| write_err(out, e))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("irs-dps: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("irs-dps: {msg}");
            ExitCode::from(1)
        }
    }
}
