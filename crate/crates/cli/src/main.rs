//! `covsense`: run detection experiments from a config file.
//!
//! Exit status is 0 on success, 1 for an invalid config or arguments and 2
//! for failures during the run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use covsense::experiment::{
    emit_results, export_first_trial_iq, run_experiment, DetectorKind, ExperimentConfig,
    ThresholdMode,
};
use covsense::selftest::run_selftest;
use covsense::Error;

#[derive(Parser)]
#[command(
    name = "covsense",
    version,
    about = "Compressive OFDM detection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Awgn,
    Multipath,
    Energy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Formula,
    Empirical,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid and write CSV results.
    Run {
        config: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum)]
        threshold_mode: Option<ThresholdArg>,
        #[arg(long, value_enum)]
        detector: Option<DetectorArg>,
        /// Override the number of trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Draw a fresh measurement matrix for every trial.
        #[arg(long)]
        resample_matrix: bool,
        /// Also write the first received stream as little-endian f32 I/Q.
        #[arg(long)]
        export_iq: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Run the built-in consistency checks.
    Selftest,
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let cfg = ExperimentConfig::from_file(path).map_err(|e| match e {
        // an unreadable config is the caller's mistake, not a run failure
        Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
        other => other,
    })?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
            threshold_mode,
            detector,
            trials,
            resample_matrix,
            export_iq,
        } => (|| {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(m) = threshold_mode {
                cfg.threshold_mode = match m {
                    ThresholdArg::Formula => ThresholdMode::Formula,
                    ThresholdArg::Empirical => ThresholdMode::Empirical,
                };
            }
            if let Some(d) = detector {
                cfg.detector = match d {
                    DetectorArg::Awgn => DetectorKind::Awgn,
                    DetectorArg::Multipath => DetectorKind::Multipath,
                    DetectorArg::Energy => DetectorKind::Energy,
                };
            }
            cfg.resample_matrix |= resample_matrix;
            cfg.validate()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            let output = pool.install(|| run_experiment(&cfg))?;
            if let Some(p) = export_iq {
                export_first_trial_iq(&cfg, &p)?;
            }
            emit_results(&output, out.as_deref())
        })(),
        Command::Validate { config } => load(&config).and_then(|cfg| {
            cfg.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }),
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Error::Numerical("self test failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
