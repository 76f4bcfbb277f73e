//! Command-line front end.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime or trial error,
//! 4 verification failure.

pub mod config_file;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, Variant};
use crate::experiments::csv::{render_panel_csv, write_csv, Panel};
use crate::experiments::run_sweep;
use crate::experiments::verify::{
    check_gradients, verify_concentration, verify_orthonormal_invariance, verify_pseudometric, verify_theorem1,
    VerifyReport,
};
use crate::losses::LossSpec;

pub use config_file::{load_config, parse_config, parse_k_grid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Latent dimensions checked by the `theorem1` suite.
pub const THEOREM1_KS: [usize; 5] = [20, 21, 40, 64, 127];

#[derive(Debug, Parser)]
#[command(name = "linear-gan", version, about = "Linear-Gaussian generator sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured sweep and write the aggregated CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare analytic and finite-difference loss gradients.
    CheckGradients {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Run a figure preset and write one CSV per panel.
    Demo {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Theorem1,
    Pseudometric,
    Orthonormal,
    Concentration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Spoon,
    Supervised,
    Ps1,
    Ps2,
    PsWeighted,
    PsPinv,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Spoon => "spoon",
            Figure::Supervised => "supervised",
            Figure::Ps1 => "ps1",
            Figure::Ps2 => "ps2",
            Figure::PsWeighted => "ps-weighted",
            Figure::PsPinv => "ps-pinv",
        }
    }

    /// Panels written besides the full table.
    pub fn panels(&self) -> &'static [Panel] {
        match self {
            Figure::Spoon => &[Panel::Train, Panel::Test],
            _ => &[Panel::Test, Panel::Train, Panel::Iterations],
        }
    }

    /// The preset sweep for this figure with `trials` trials.
    pub fn preset(&self, trials: usize) -> ExperimentConfig {
        let base = ExperimentConfig {
            trials,
            n_ps_list: vec![0, 12, 20],
            ..ExperimentConfig::default()
        };
        let gd = |spec| ExperimentConfig {
            variant: Variant::Gd(spec),
            ..base.clone()
        };
        match self {
            Figure::Spoon => ExperimentConfig {
                k_grid: Some((1..=64).collect()),
                n_ps_list: vec![0],
                ..base
            },
            // Full supervision needs n < m.
            Figure::Supervised => ExperimentConfig {
                m: 40,
                n: 20,
                relax_dims: true,
                ..gd(LossSpec::Supervised)
            },
            Figure::Ps1 => gd(LossSpec::PsPlain),
            Figure::Ps2 => gd(LossSpec::PsRegularized),
            Figure::PsWeighted => gd(LossSpec::PsWeighted { alpha: base.alpha }),
            Figure::PsPinv => gd(LossSpec::PsPinv),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn prepare(mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    config_file::apply_workers_override(&mut cfg, std::env::var("WORKERS").ok().as_deref())?;
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    eprint!("{}", cfg.render());
    Ok(cfg)
}

fn cmd_sweep(config: &Path, out: &Path) -> Result<()> {
    let cfg = prepare(load_config(config)?)?;
    write_csv(&run_sweep(&cfg)?, out)
}

fn cmd_demo(figure: Figure, out: &Path, trials: usize) -> Result<()> {
    let cfg = prepare(figure.preset(trials))?;
    let records = run_sweep(&cfg)?;
    fs::create_dir_all(out)?;
    let name = figure.name();
    write_csv(&records, out.join(format!("{name}.csv")))?;
    for &panel in figure.panels() {
        let path = out.join(format!("{name}_{}.csv", panel.suffix()));
        fs::write(&path, render_panel_csv(&records, panel)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_suite(suite: Suite, seed: u64) -> Result<VerifyReport> {
    match suite {
        Suite::Theorem1 => {
            let cfg = ExperimentConfig {
                base_seed: seed,
                ..ExperimentConfig::default()
            };
            verify_theorem1(&cfg, &THEOREM1_KS)
        }
        Suite::Pseudometric => verify_pseudometric(8, 100, seed),
        Suite::Orthonormal => verify_orthonormal_invariance(64, 30, seed, 100),
        Suite::Concentration => verify_concentration(&[10, 100, 1000], 10_000, seed),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Sweep { config, out } => match cmd_sweep(&config, &out) {
            Ok(()) => EXIT_OK,
            Err(e) => report_error(&e),
        },
        Command::Demo { figure, out, trials } => match cmd_demo(figure, &out, trials) {
            Ok(()) => EXIT_OK,
            Err(e) => report_error(&e),
        },
        Command::Verify { suite, seed } => match run_suite(suite, seed) {
            Ok(r) => {
                println!("{r}");
                if r.passed() {
                    EXIT_OK
                } else {
                    EXIT_VERIFY
                }
            }
            Err(e) => report_error(&e),
        },
        Command::CheckGradients { seed, cases } => match check_gradients(seed, cases) {
            Ok(r) => {
                println!("{r}");
                if r.passed() {
                    EXIT_OK
                } else {
                    EXIT_VERIFY
                }
            }
            Err(e) => report_error(&e),
        },
    }
}
