use clap::{Parser, Subcommand};
use contact_stokes_cli::{run, Command, RunOptions};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "contact-stokes",
    version,
    about = "Capillary Stokes flow with moving contact points"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Scenario file (TOML).
    #[arg(long, global = true, default_value = "scenario.toml")]
    config: PathBuf,
    /// Directory receiving all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for assembly and norms.
    #[arg(long, global = true, env = "CONTACT_STOKES_THREADS")]
    threads: Option<usize>,
    /// Continue `simulate` or `audit` from a checkpoint.
    #[arg(long, global = true)]
    resume: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Equilibrium profile and residuals.
    Equilibrium,
    /// Time stepping with diagnostics report and plot scripts.
    Simulate,
    /// Time stepping with the energy-balance residual series.
    Audit,
    /// Weighted second-derivative norms near the corners under refinement.
    ProbeCorner,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            std::process::exit(2);
        }
    }
    let command = match cli.command {
        Sub::Equilibrium => Command::Equilibrium,
        Sub::Simulate => Command::Simulate,
        Sub::Audit => Command::Audit,
        Sub::ProbeCorner => Command::ProbeCorner,
    };
    let opts = RunOptions {
        config: cli.config,
        out_dir: cli.out_dir,
        resume: cli.resume,
    };
    std::process::exit(run(command, &opts));
}
