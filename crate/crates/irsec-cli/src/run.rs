//! Solver orchestration: build or load the channel realization once, fan
//! out to the selected solvers with per-solver failure isolation, and
//! write every artifact the run produces.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use irsec::ao;
use irsec::chansim::{generate, solver_rng, STREAM_AO, STREAM_GDA};
use irsec::game::{
    enumerate_strategies, payoff_matrix, solve_zero_sum, GameOptions, GameSolution, StrategySpace,
};
use irsec::gda;
use irsec::model::{rates, IterationRecord, Scenario, SolverRun, StepLabel};
use irsec::optkit::CVec;

use crate::artifacts::{
    pairs_from_vector, vector_from_pairs, write_json, write_payoff, write_scenario, write_trace,
    GameReport, ScenarioFile, SolverOutcomes, SolverReport, Summary,
};
use crate::config::{Config, SolverChoice};
use crate::CliError;

/// Probability mass below which a strategy pair is skipped when averaging
/// rates over the equilibrium mixture.
const MASS_FLOOR: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

pub struct Prepared {
    pub config: Config,
    pub scenario: Scenario,
}

/// Resolves the channel realization: a scenario file when given, otherwise
/// seeded generation from the configured deployment.
pub fn prepare(config: Config, scenario_path: Option<&Path>) -> Result<Prepared, CliError> {
    let scenario = match scenario_path {
        Some(p) => crate::artifacts::read_scenario(p)?,
        None => generate(&config.sim_params(), config.seed)?,
    };
    Ok(Prepared { config, scenario })
}

/// Generates the seeded channel realization and writes `scenario.json`.
pub fn gen_scenario(cfg: &Config) -> Result<PathBuf, CliError> {
    let s = generate(&cfg.sim_params(), cfg.seed)?;
    fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(&cfg.output_dir))?;
    let path = cfg.output_dir.join("scenario.json");
    write_scenario(&path, &s)?;
    Ok(path)
}

/// Runs the selected solvers on one shared scenario and writes traces,
/// payoff data, and the summary. A solver failure is recorded and the
/// remaining solvers still run; the call errors only when every selected
/// solver failed (or an artifact cannot be written).
pub fn execute(
    cfg: &Config,
    scenario: &Scenario,
    selection: SolverChoice,
) -> Result<Summary, CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(&cfg.output_dir))?;
    let want =
        |choice: SolverChoice| selection == SolverChoice::All || selection == choice;
    let mut outcomes = SolverOutcomes::default();
    let mut first_error = None;
    let mut record_failure =
        |outcomes: &mut SolverOutcomes, first: &mut Option<CliError>, name: &str, e: CliError| {
            warn!("{name} solver failed: {e}");
            outcomes.errors.insert(name.into(), e.to_string());
            first.get_or_insert(e);
        };

    if want(SolverChoice::Ao) {
        match run_ao(cfg, scenario) {
            Ok(report) => {
                info!(
                    "alternating optimization: {:.6} bits/s/Hz after {} rounds",
                    report.secrecy_rate_bps_hz, report.iterations
                );
                outcomes.ao = Some(report);
            }
            Err(e) => record_failure(&mut outcomes, &mut first_error, "ao", e),
        }
    }
    if want(SolverChoice::Gda) {
        match run_gda(cfg, scenario) {
            Ok(report) => {
                info!(
                    "descent-ascent: {:.6} bits/s/Hz after {} rounds",
                    report.secrecy_rate_bps_hz, report.iterations
                );
                outcomes.gda = Some(report);
            }
            Err(e) => record_failure(&mut outcomes, &mut first_error, "gda", e),
        }
    }
    if want(SolverChoice::Game) {
        let pinned = outcomes
            .ao
            .as_ref()
            .map(|r| vector_from_pairs(&r.beamformer));
        match run_game(cfg, scenario, pinned.as_ref()) {
            Ok(report) => {
                info!(
                    "game: value {:.6} bits/s/Hz, supports {}x{}",
                    report.value_bps_hz, report.bob_support, report.eve_support
                );
                outcomes.game = Some(report);
            }
            Err(e) => record_failure(&mut outcomes, &mut first_error, "game", e),
        }
    }

    let attempted = [SolverChoice::Ao, SolverChoice::Gda, SolverChoice::Game]
        .into_iter()
        .filter(|c| want(*c))
        .count();
    let failures = outcomes.errors.len();

    let summary = Summary {
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg.clone(),
        scenario: ScenarioFile::from(scenario),
        solvers: outcomes,
    };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;

    if failures == attempted {
        // A lone solver hands its failure through untouched so the exit
        // code keeps its class; a failed sweep is a solver failure.
        return Err(match first_error {
            Some(e) if attempted == 1 => e,
            _ => {
                let detail: Vec<String> = summary
                    .solvers
                    .errors
                    .iter()
                    .map(|(k, v)| format!("{k}: {v}"))
                    .collect();
                CliError::Solver(format!(
                    "all selected solvers failed ({})",
                    detail.join("; ")
                ))
            }
        });
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Individual solvers
// ---------------------------------------------------------------------------

fn solver_report(run: &SolverRun, trace_file: &str, wall_ms: f64) -> SolverReport {
    SolverReport {
        secrecy_rate_bps_hz: run.rates.secrecy,
        deliverable_secrecy_bps_hz: run.rates.secrecy.max(0.0),
        bob_rate_bps_hz: run.rates.bob,
        eve_rate_bps_hz: run.rates.eve,
        iterations: run.iterations,
        converged: run.converged,
        wall_ms,
        beamformer: pairs_from_vector(&run.beamformer),
        theta_bob: pairs_from_vector(&run.theta_bob),
        theta_eve: pairs_from_vector(&run.theta_eve),
        trace_file: trace_file.into(),
    }
}

fn run_ao(cfg: &Config, s: &Scenario) -> Result<SolverReport, CliError> {
    let started = Instant::now();
    let mut rng = solver_rng(cfg.seed, STREAM_AO);
    let run = ao::solve(
        s,
        cfg.domain_bob(),
        cfg.domain_eve(),
        &cfg.ao_options(),
        &mut rng,
    )?;
    let wall_ms = elapsed_ms(started, cfg.ao.record_timing);
    write_trace(&cfg.output_dir.join("ao_trace.csv"), &run.records)?;
    Ok(solver_report(&run, "ao_trace.csv", wall_ms))
}

fn run_gda(cfg: &Config, s: &Scenario) -> Result<SolverReport, CliError> {
    let started = Instant::now();
    let mut rng = solver_rng(cfg.seed, STREAM_GDA);
    let run = gda::solve(
        s,
        cfg.domain_bob(),
        cfg.domain_eve(),
        &cfg.gda_options(),
        &mut rng,
    )?;
    let wall_ms = elapsed_ms(started, cfg.gda.record_timing);
    write_trace(&cfg.output_dir.join("gda_trace.csv"), &run.records)?;
    Ok(solver_report(&run, "gda_trace.csv", wall_ms))
}

fn run_game(
    cfg: &Config,
    s: &Scenario,
    pinned_beamformer: Option<&CVec>,
) -> Result<GameReport, CliError> {
    let (l_b, l_e) = match (cfg.domains.l_b, cfg.domains.l_e) {
        (Some(b), Some(e)) => (b, e),
        _ => {
            return Err(CliError::Validation(
                "game solver needs discrete phase domains (set domains.l_b and domains.l_e)"
                    .into(),
            ))
        }
    };
    let started = Instant::now();
    let bob_space = enumerate_strategies(s.n_bob(), l_b, cfg.game.strategy_cap)?;
    let eve_space = enumerate_strategies(s.n_eve(), l_e, cfg.game.strategy_cap)?;

    let beamformer = if cfg.game.fixed_beamformer {
        Some(match pinned_beamformer {
            Some(w) => w.clone(),
            None => {
                info!("running alternating optimization to pin the game beamformer");
                let mut rng = solver_rng(cfg.seed, STREAM_AO);
                ao::solve(
                    s,
                    cfg.domain_bob(),
                    cfg.domain_eve(),
                    &cfg.ao_options(),
                    &mut rng,
                )?
                .beamformer
            }
        })
    } else {
        None
    };
    let opts = GameOptions { beamformer };

    let a = payoff_matrix(s, &bob_space, &eve_space, &opts)?;
    let sol = solve_zero_sum(&a)?;
    let (expected_bob, expected_eve, expected_secrecy) =
        mixture_rates(s, &bob_space, &eve_space, &opts, &sol);
    let wall_ms = elapsed_ms(started, cfg.game.record_timing);

    write_payoff(&cfg.output_dir.join("payoff_matrix.csv"), &a)?;
    let trace = [IterationRecord {
        iteration: 0,
        step: StepLabel::Init,
        secrecy_rate: expected_secrecy,
        bob_rate: expected_bob,
        eve_rate: expected_eve,
        wall_ms,
    }];
    write_trace(&cfg.output_dir.join("game_trace.csv"), &trace)?;

    Ok(GameReport {
        value_bps_hz: sol.value,
        deliverable_value_bps_hz: sol.value.max(0.0),
        minimax_gap: sol.minimax_gap,
        rows: a.entries.nrows(),
        cols: a.entries.ncols(),
        bob_support: sol.bob_support,
        eve_support: sol.eve_support,
        bob_strategy: sol.bob.probabilities.clone(),
        eve_strategy: sol.eve.probabilities.clone(),
        expected_bob_rate_bps_hz: expected_bob,
        expected_eve_rate_bps_hz: expected_eve,
        wall_ms,
        payoff_file: "payoff_matrix.csv".into(),
        trace_file: "game_trace.csv".into(),
    })
}

/// Rates averaged over the equilibrium mixture, skipping pairs whose joint
/// mass is negligible. Per-pair beamformers are recomputed, which is exact
/// because the closed form is deterministic.
fn mixture_rates(
    s: &Scenario,
    bob_space: &StrategySpace,
    eve_space: &StrategySpace,
    opts: &GameOptions,
    sol: &GameSolution,
) -> (f64, f64, f64) {
    let mut bob = 0.0;
    let mut eve = 0.0;
    let mut secrecy = 0.0;
    for (i, theta_bob) in bob_space.vectors.iter().enumerate() {
        let xi = sol.bob.probabilities[i];
        if xi <= MASS_FLOOR {
            continue;
        }
        for (j, theta_eve) in eve_space.vectors.iter().enumerate() {
            let mass = xi * sol.eve.probabilities[j];
            if mass <= MASS_FLOOR {
                continue;
            }
            let r = match &opts.beamformer {
                Some(w) => rates(s, w, theta_bob, theta_eve),
                None => match ao::optimal_beamformer(s, theta_bob, theta_eve) {
                    Ok(w) => rates(s, &w, theta_bob, theta_eve),
                    Err(_) => continue,
                },
            };
            bob += mass * r.bob;
            eve += mass * r.eve;
            secrecy += mass * r.secrecy;
        }
    }
    (bob, eve, secrecy)
}

fn elapsed_ms(started: Instant, record: bool) -> f64 {
    if record {
        started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}
