//! Command-line driver for the polygonal-mesh MHD solver.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/configuration error,
//! 3 solver failure.

use clap::{Parser, Subcommand};
use polymhd_cli::commands;
use polymhd_cli::config::{parse_config, parse_levels, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polymhd",
    about = "Divergence-free virtual element solver for 2D incompressible MHD on polygonal meshes",
    version
)]
struct Cli {
    /// Path to a flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mesh family: square | nonconvex | voronoi
    #[arg(long, global = true)]
    family: Option<String>,
    /// Refinement level or range, e.g. `3` or `2-4`
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Polynomial degree (1 or 2)
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Explicit time step (default: the ceil(T/h) rule)
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Validate the convergence-rate acceptance bands
    #[arg(long, global = true)]
    check: bool,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study with error tables
    Convergence,
    /// Driven-cavity benchmark with VTK snapshots
    Cavity,
    /// Zero-forcing decay runs checking the telescoped energy decrease
    Stability,
    /// Generate and write the built-in mesh families
    Meshgen,
    /// Projector, consistency, and Stokes patch tests on all families
    PatchTest,
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = &cli.family {
        cfg.family = f.parse().map_err(|e: String| e)?;
    }
    if let Some(l) = &cli.levels {
        cfg.levels = Some(parse_levels(l).map_err(|e| e.to_string())?);
    }
    if let Some(k) = cli.k {
        if !(1..=2).contains(&k) {
            return Err(format!("k = {k} unsupported (1 or 2)"));
        }
        cfg.k = k;
    }
    if let Some(dt) = cli.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(format!("dt must be positive, got {dt}"));
        }
        cfg.dt = Some(dt);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.cmd {
        Command::Convergence => commands::cmd_convergence(&cfg, cli.check),
        Command::Cavity => commands::cmd_cavity(&cfg),
        Command::Stability => commands::cmd_stability(&cfg),
        Command::Meshgen => commands::cmd_meshgen(&cfg),
        Command::PatchTest => commands::cmd_patch_test(&cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
