//! `qmor`: simulate, build, train, run and compare, one stage per subcommand.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use qmor_core::Result;

use crate::commands::RomRunArgs;
use crate::config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(
    name = "qmor",
    version,
    about = "Quadratic-manifold LSPG model reduction with ECSW hyperreduction"
)]
struct Cli {
    /// Pipeline configuration file (`key = value` lines); defaults apply without one.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full-order model and write snapshots and QoI histories.
    HdmRun {
        /// Snapshot file (default: `snapshots` from the config).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Build the affine POD manifold.
    BuildAffine {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Build the quadratic manifold.
    BuildQuadratic {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Use this Tikhonov parameter instead of the GCV selection.
        #[arg(long, value_name = "V")]
        alpha_star: Option<f64>,
    },
    /// Train an ECSW reduced mesh for a manifold.
    EcswTrain {
        /// Manifold file (default: `manifold` from the config).
        manifold: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "V")]
        tau: Option<f64>,
    },
    /// Run the LSPG reduced model, hyperreduced when a mesh is given.
    RomRun {
        /// Manifold file (default: `manifold` from the config).
        manifold: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        mesh: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write the reduced coordinates to `<out>.coords`.
        #[arg(long)]
        dump_coords: bool,
    },
    /// Relative QoI errors of reduced runs against the HDM run.
    Compare {
        /// HDM QoI history.
        hdm: PathBuf,
        /// Reduced-model QoI histories.
        #[arg(required = true)]
        roms: Vec<PathBuf>,
        /// Report file (default: `report` from the config).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::HdmRun { out } => commands::hdm_run(&cfg, out),
        Command::BuildAffine { out } => commands::build_affine(&cfg, out),
        Command::BuildQuadratic { out, alpha_star } => {
            commands::build_quadratic(&cfg, out, alpha_star)
        }
        Command::EcswTrain { manifold, out, tau } => commands::ecsw_train(&cfg, manifold, out, tau),
        Command::RomRun {
            manifold,
            mesh,
            out,
            dump_coords,
        } => commands::rom_run(
            &cfg,
            RomRunArgs {
                manifold,
                mesh,
                out,
                dump_coords,
            },
        ),
        Command::Compare { hdm, roms, out } => {
            report::compare(&hdm, &roms, &out.unwrap_or(cfg.report))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmor: error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
