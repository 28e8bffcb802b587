use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsch_core::cli_io::{cmd_check_potential, cmd_compare_forms, cmd_run, cmd_twin_run, load_config};
use nsch_core::Result;

#[derive(Parser)]
#[command(name = "nsch", version, about = "Navier-Stokes-Cahn-Hilliard / cross-diffusion solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration; writes diagnostics.csv and snapshots.
    Run { config: PathBuf },
    /// Tabulate the regularized potential over check.eps_values × check.chi_values.
    CheckPotential { config: PathBuf },
    /// Paired runs with the cross-diffusion and linear-transport sigma equations.
    CompareForms { config: PathBuf },
    /// Perturbed twin runs; writes W(t) for every delta.
    TwinRun {
        config: PathBuf,
        /// Comma-separated perturbation amplitudes.
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4,1e-5")]
        delta_ladder: Vec<f64>,
    },
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("NSCH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("NSCH_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("NSCH_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let out = cmd_run(&cfg)?;
            println!(
                "{} steps to t = {} (dt = {:e}, {} halvings, K = {}); max |energy residual| = {:e}",
                out.steps,
                out.state.t,
                out.final_dt,
                out.halvings,
                out.cutoff,
                out.max_abs_residual()
            );
            println!("wrote {}", cfg.output.dir.join("diagnostics.csv").display());
        }
        Command::CheckPotential { config } => {
            let cfg = load_config(&config)?;
            let rows = cmd_check_potential(&cfg)?;
            for r in &rows {
                println!(
                    "eps = {:<6} chi = {:<5} knot jump = {:.1e}  convexity min = {:.3e}  r* = {:.4}  r* lower = {:.4}",
                    r.eps, r.chi, r.knot_jump, r.convexity_min, r.r_star, r.r_star_lower
                );
            }
            println!("wrote {}", cfg.output.dir.join("potential_check.csv").display());
        }
        Command::CompareForms { config } => {
            let cfg = load_config(&config)?;
            let [cross, linear] = cmd_compare_forms(&cfg)?;
            let low = |o: &nsch_core::timestepper::RunOutput| {
                o.records.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min)
            };
            println!("min sigma: cross_diffusion {:e}, linear_transport {:e}", low(&cross), low(&linear));
            println!("wrote {}", cfg.output.dir.join("compare_forms.csv").display());
        }
        Command::TwinRun { config, delta_ladder } => {
            let cfg = load_config(&config)?;
            let series = cmd_twin_run(&cfg, &delta_ladder)?;
            for s in &series {
                println!("delta = {:e}: sup W = {:e}", s.delta, s.sup());
            }
            println!("wrote {}", cfg.output.dir.join("twin_run.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
