//! Binary entry: argument parsing, logging setup, and exit-code mapping.
//! All observable behavior lives in the library crate.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irsec_cli::artifacts::Summary;
use irsec_cli::config::{Config, SolverChoice};
use irsec_cli::{run, verify, CliError};

#[derive(Parser)]
#[command(
    name = "irsec",
    version,
    about = "Max-min secrecy-rate experiments on a wiretap channel with dueling reflecting surfaces"
)]
struct Cli {
    /// JSON configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Channel seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver selection for run-all, overriding the configuration.
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverChoice>,
    /// Worker threads for payoff enumeration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the seeded channel realization and write scenario.json.
    GenScenario,
    /// Run alternating optimization with semidefinite relaxation.
    RunAo(ScenarioArg),
    /// Run projected gradient descent-ascent.
    RunGda(ScenarioArg),
    /// Enumerate the quantized game and solve for its mixed equilibrium.
    RunGame(ScenarioArg),
    /// Run the configured solver selection on one shared realization.
    RunAll(ScenarioArg),
    /// Check model invariants on the seed and recompute reported rates.
    Verify,
}

#[derive(Args)]
struct ScenarioArg {
    /// Reuse a scenario file instead of generating from the seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(solver) = cli.solver {
        cfg.solver = solver;
    }

    match cli.command {
        Command::GenScenario => {
            let path = run::gen_scenario(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::RunAo(arg) => run_and_print(cfg, arg, SolverChoice::Ao)?,
        Command::RunGda(arg) => run_and_print(cfg, arg, SolverChoice::Gda)?,
        Command::RunGame(arg) => run_and_print(cfg, arg, SolverChoice::Game)?,
        Command::RunAll(arg) => {
            let selection = cfg.solver;
            run_and_print(cfg, arg, selection)?;
        }
        Command::Verify => {
            let out_dir = cfg.output_dir.clone();
            if !verify::run(&cfg, &out_dir)? {
                return Err(CliError::Solver("verification failed".into()));
            }
        }
    }
    Ok(())
}

fn run_and_print(cfg: Config, arg: ScenarioArg, selection: SolverChoice) -> Result<(), CliError> {
    let prepared = run::prepare(cfg, arg.scenario.as_deref())?;
    let summary = run::execute(&prepared.config, &prepared.scenario, selection)?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(summary: &Summary) {
    if let Some(r) = &summary.solvers.ao {
        println!(
            "ao:   C_s = {:.6} bits/s/Hz (deliverable {:.6}), {} rounds{}",
            r.secrecy_rate_bps_hz,
            r.deliverable_secrecy_bps_hz,
            r.iterations,
            if r.converged { ", converged" } else { "" }
        );
    }
    if let Some(r) = &summary.solvers.gda {
        println!(
            "gda:  C_s = {:.6} bits/s/Hz (deliverable {:.6}), {} rounds{}",
            r.secrecy_rate_bps_hz,
            r.deliverable_secrecy_bps_hz,
            r.iterations,
            if r.converged { ", converged" } else { "" }
        );
    }
    if let Some(g) = &summary.solvers.game {
        println!(
            "game: value = {:.6} bits/s/Hz (deliverable {:.6}), supports {}x{} of {}x{}",
            g.value_bps_hz,
            g.deliverable_value_bps_hz,
            g.bob_support,
            g.eve_support,
            g.rows,
            g.cols
        );
    }
    for (name, err) in &summary.solvers.errors {
        println!("{name}: failed: {err}");
    }
}
