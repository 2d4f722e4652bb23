//! Experiment CLI: oracle dumps, experiment runs, parameter sweeps, mode
//! listings, and sample generation.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use clap::{Parser, Subcommand};
use modeseek::csvio;
use modeseek::density::{self, GaussianMixture};
use modeseek::harness::{
    generate_starts, oracle_rows, run_experiment, write_oracle_csv, ExperimentConfig, Workbench,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "modeseek", about = "Hill-climbing clustering experiments", version)]
struct Cli {
    /// Worker threads (default: all cores). Reports are byte-identical
    /// regardless of this setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the gradient flow from every start point and write the
    /// per-point assignment CSV.
    Oracle {
        config: PathBuf,
        /// Output path (defaults to stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full experiment described by a config and write the report.
    Run {
        config: PathBuf,
        /// Override the config's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the experiment and check that agreement is nondecreasing along
    /// each algorithm's parameter grid.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the modes of a mixture model file.
    Modes { model: PathBuf },
    /// Draw a deterministic sample from a mixture model file.
    Sample {
        model: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.downcast_ref::<modeseek::Error>().map_or(false, |err| {
                matches!(
                    err,
                    modeseek::Error::Config(_)
                        | modeseek::Error::Parse { .. }
                        | modeseek::Error::Json(_)
                        | modeseek::Error::InvalidParameter { .. }
                )
            });
            ExitCode::from(if config_error { 1 } else { 2 })
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Oracle { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let bench = Workbench::from_config(&cfg)?;
            let starts = generate_starts(&cfg, &bench)?;
            let rows = oracle_rows(&bench, &starts)?;
            match output {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_oracle_csv(&mut buf, &rows)?;
                    std::fs::write(path, buf)?;
                }
                None => write_oracle_csv(&mut std::io::stdout().lock(), &rows)?,
            }
            Ok(())
        }
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let report = run_experiment(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", report.to_csv());
            } else {
                eprintln!("wrote {} rows", report.rows.len());
            }
            Ok(())
        }
        Command::Sweep { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let report = run_experiment(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", report.to_csv());
            }
            // Agreement must be nondecreasing along each algorithm's grid
            // (parameters are swept from coarse to fine in the config).
            let mut ok = true;
            let names: Vec<String> = {
                let mut seen = Vec::new();
                for r in &report.rows {
                    if !seen.contains(&r.algorithm) {
                        seen.push(r.algorithm.clone());
                    }
                }
                seen
            };
            for name in names {
                let fracs: Vec<f64> = report
                    .rows
                    .iter()
                    .filter(|r| r.algorithm == name)
                    .map(|r| r.agreement_fraction)
                    .collect();
                let monotone = fracs.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                println!(
                    "sweep {name}: {} over {:?}",
                    if monotone { "nondecreasing" } else { "NOT monotone" },
                    fracs
                );
                ok &= monotone;
            }
            if !ok {
                anyhow::bail!("sweep monotonicity check failed");
            }
            Ok(())
        }
        Command::Modes { model } => {
            let m = GaussianMixture::load(&model)?;
            let modes = density::find_modes(
                &m,
                &density::default_mode_seeds(&m),
                &density::ModeFindConfig::default(),
            )?;
            let d = m.dim();
            let mut header: Vec<String> = (0..d).map(|a| format!("x_{a}")).collect();
            header.push("f".into());
            header.push("grad_norm".into());
            println!("{}", header.join(","));
            for (mode, gn) in modes.modes.iter().zip(&modes.gradient_norms) {
                let mut fields: Vec<String> = mode.iter().map(|v| csvio::fmt_f64(*v)).collect();
                fields.push(csvio::fmt_f64(density::eval_f(&m, mode)?));
                fields.push(csvio::fmt_f64(*gn));
                println!("{}", fields.join(","));
            }
            Ok(())
        }
        Command::Sample { model, n, seed, output } => {
            let m = GaussianMixture::load(&model)?;
            let pts = m.sample(n, seed)?;
            csvio::write_points_csv(&output, &pts)?;
            eprintln!("wrote {n} points to {}", output.display());
            Ok(())
        }
    }
}
