use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eprsim::modeopt::{FamilyKind, MIN_BUDGET};
use eprsim_cli::commands::{self, Completed};
use eprsim_cli::config::SweepVariable;
use eprsim_cli::output::Outputs;
use eprsim_cli::{CliError, RunConfig};

/// Time-domain simulator for continuous-wave EPR beams.
#[derive(Parser)]
#[command(name = "eprsim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `repetitions`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic spectra and filtered variances (no random numbers).
    Spectra(Common),
    /// Full synthesize → detect → analyze pipeline.
    Run(Common),
    /// Duan sum along one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "var", value_enum)]
        variable: Option<SweepVariable>,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Linear instead of log spacing.
        #[arg(long)]
        linear: bool,
        /// Monte Carlo spot checks at the grid endpoints.
        #[arg(long)]
        mc: bool,
    },
    /// Temporal-mode shape search.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_family)]
        family: Option<FamilyKind>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(MIN_BUDGET as u64..))]
        budget: Option<u64>,
    },
    /// Solve for the pump parameters giving target dB levels and print the
    /// updated configuration.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x_db: f64,
        #[arg(long, allow_hyphen_values = true)]
        p_db: f64,
    },
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: eprsim::Error| e.to_string())
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(r) = c.reps {
        cfg.repetitions = r as usize;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(outputs: &Outputs, dir: &Path, summary: &str) -> Result<(), CliError> {
    let written = outputs.write_all(dir)?;
    println!("{summary}");
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Spectra(c) => {
            let cfg = load(&c)?;
            let Completed { outputs, summary } = commands::spectra(&cfg)?;
            finish(&outputs, &cfg.output_dir, &summary)
        }
        Cmd::Run(c) => {
            let cfg = load(&c)?;
            let (Completed { outputs, summary }, _) = commands::run(&cfg)?;
            finish(&outputs, &cfg.output_dir, &summary)
        }
        Cmd::Sweep {
            common,
            variable,
            min,
            max,
            points,
            linear,
            mc,
        } => {
            let cfg = load(&common)?;
            let mut sw = cfg.sweep.clone();
            if let Some(v) = variable {
                sw.variable = v;
                if v != SweepVariable::T {
                    sw.log = false;
                }
            }
            sw.min = min.unwrap_or(sw.min);
            sw.max = max.unwrap_or(sw.max);
            sw.points = points.unwrap_or(sw.points);
            sw.log &= !linear;
            sw.monte_carlo |= mc;
            let Completed { outputs, summary } = commands::sweep(&cfg, &sw)?;
            finish(&outputs, &cfg.output_dir, &summary)
        }
        Cmd::Optimize { common, family, budget } => {
            let cfg = load(&common)?;
            let family = family.unwrap_or(cfg.optimize.family);
            let budget = budget.map_or(cfg.optimize.budget, |b| b as usize);
            match commands::optimize(&cfg, family, budget) {
                Ok(Completed { outputs, summary }) => finish(&outputs, &cfg.output_dir, &summary),
                Err((outputs, e)) => {
                    outputs.write_all(&cfg.output_dir)?;
                    Err(e)
                }
            }
        }
        Cmd::Calibrate { common, x_db, p_db } => {
            let cfg = load(&common)?;
            let c = commands::calibrate(&cfg, x_db, p_db)?;
            print!("{}", c.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
