//! Post-hoc checking: structural invariants of the model on the configured
//! seed, then recomputation of every rate the run summary reports, straight
//! from the channel realization embedded in it.

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use irsec::ao::optimal_beamformer;
use irsec::chansim::{generate, solver_rng};
use irsec::game::{pure_bounds, verify_ne, MixedStrategy};
use irsec::model::{
    bob_lift_in_theta_bob, bob_lift_in_theta_eve, effective_bob, effective_eve,
    eve_lift_in_theta_bob, eve_lift_in_theta_eve, rates, received_snr, secrecy_rate, Scenario,
};
use irsec::optkit::CVec;

use crate::artifacts::{read_payoff, read_summary, vector_from_pairs, SolverReport};
use crate::config::Config;
use crate::CliError;

/// Seed stream for verification draws, disjoint from channel and solver
/// streams.
const STREAM_VERIFY: u64 = 32;

const LIFT_DRAWS: usize = 200;
const PROBE_PAIRS: usize = 5;
const PROBES_PER_PAIR: usize = 1000;
/// Tolerance on recomputed rates against reported ones.
const RATE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------

struct Report {
    all_passed: bool,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{}: {} ({detail})", name, if pass { "pass" } else { "FAIL" });
        self.all_passed &= pass;
    }

    fn note(&mut self, line: String) {
        println!("{line}");
    }
}

/// Runs every check and prints one line per check. Returns whether all of
/// them passed.
pub fn run(cfg: &Config, out_dir: &Path) -> Result<bool, CliError> {
    let mut report = Report { all_passed: true };
    let s = generate(&cfg.sim_params(), cfg.seed)?;
    let mut rng = solver_rng(cfg.seed, STREAM_VERIFY);

    lift_identities(&s, &mut rng, &mut report);
    beamformer_dominance(&s, &mut rng, &mut report);

    let summary_path = out_dir.join("summary.json");
    if summary_path.exists() {
        check_summary(&summary_path, out_dir, &mut report)?;
    } else {
        report.note(format!(
            "no summary at {}; skipping solution checks",
            summary_path.display()
        ));
    }
    Ok(report.all_passed)
}

// ---------------------------------------------------------------------------
// Invariant suites on the configured seed
// ---------------------------------------------------------------------------

fn unit_phases(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.gen::<f64>() * TAU))
}

fn sphere_beamformer(rng: &mut ChaCha8Rng, m: usize, power: f64) -> CVec {
    let raw = CVec::from_fn(m, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    raw.scale(power.sqrt() / raw.norm())
}

fn lift_identities(s: &Scenario, rng: &mut ChaCha8Rng, report: &mut Report) {
    let mut worst = 0.0f64;
    for _ in 0..LIFT_DRAWS {
        let w = sphere_beamformer(rng, s.m(), s.power);
        let theta_bob = unit_phases(rng, s.n_bob());
        let theta_eve = unit_phases(rng, s.n_eve());
        let snr_bob = received_snr(&effective_bob(s, &theta_bob, &theta_eve), &w, s.noise_bob);
        let snr_eve = received_snr(&effective_eve(s, &theta_bob, &theta_eve), &w, s.noise_eve);
        let pairs = [
            (bob_lift_in_theta_bob(s, &w, &theta_eve).snr(&theta_bob), snr_bob),
            (eve_lift_in_theta_bob(s, &w, &theta_eve).snr(&theta_bob), snr_eve),
            (bob_lift_in_theta_eve(s, &w, &theta_bob).snr(&theta_eve), snr_bob),
            (eve_lift_in_theta_eve(s, &w, &theta_bob).snr(&theta_eve), snr_eve),
        ];
        for (lifted, direct) in pairs {
            worst = worst.max((lifted - direct).abs() / (1.0 + direct.abs()));
        }
    }
    report.check(
        &format!("lift identities ({LIFT_DRAWS} draws)"),
        worst <= 1e-9,
        format!("max relative error {worst:.3e}"),
    );
}

fn beamformer_dominance(s: &Scenario, rng: &mut ChaCha8Rng, report: &mut Report) {
    let mut margin = f64::INFINITY;
    let mut failed = false;
    for _ in 0..PROBE_PAIRS {
        let theta_bob = unit_phases(rng, s.n_bob());
        let theta_eve = unit_phases(rng, s.n_eve());
        let Ok(w) = optimal_beamformer(s, &theta_bob, &theta_eve) else {
            failed = true;
            continue;
        };
        let achieved = secrecy_rate(s, &w, &theta_bob, &theta_eve);
        for _ in 0..PROBES_PER_PAIR {
            let probe = sphere_beamformer(rng, s.m(), s.power);
            margin = margin.min(achieved - secrecy_rate(s, &probe, &theta_bob, &theta_eve));
        }
    }
    report.check(
        &format!("beamformer dominance ({} probes)", PROBE_PAIRS * PROBES_PER_PAIR),
        !failed && margin >= -1e-9,
        format!("worst margin {margin:.3e}"),
    );
}

// ---------------------------------------------------------------------------
// Summary recomputation
// ---------------------------------------------------------------------------

fn check_summary(path: &Path, out_dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let summary = read_summary(path)?;
    let s = summary.scenario.to_scenario()?;

    if let Some(rep) = &summary.solvers.ao {
        check_solver("ao", &s, rep, out_dir, report);
    }
    if let Some(rep) = &summary.solvers.gda {
        check_solver("gda", &s, rep, out_dir, report);
    }
    if let Some(game) = &summary.solvers.game {
        let payoff_path = out_dir.join(&game.payoff_file);
        if payoff_path.exists() {
            let a = read_payoff(&payoff_path)?;
            let bob = MixedStrategy {
                probabilities: game.bob_strategy.clone(),
            };
            let eve = MixedStrategy {
                probabilities: game.eve_strategy.clone(),
            };
            let sizes_ok =
                a.entries.nrows() == game.rows && a.entries.ncols() == game.cols;
            let expected: f64 = (0..a.entries.nrows())
                .map(|i| {
                    (0..a.entries.ncols())
                        .map(|j| {
                            bob.probabilities[i] * a.entries[(i, j)] * eve.probabilities[j]
                        })
                        .sum::<f64>()
                })
                .sum();
            let value_ok = (expected - game.value_bps_hz).abs()
                <= RATE_TOL * (1.0 + game.value_bps_hz.abs());
            let ne = verify_ne(&a, &bob, &eve, game.value_bps_hz, 1e-8);
            let (lo, hi) = pure_bounds(&a);
            let sandwiched =
                lo <= game.value_bps_hz + 1e-8 && game.value_bps_hz <= hi + 1e-8;
            report.check(
                "game value recompute",
                sizes_ok && value_ok && ne.pass && sandwiched,
                format!(
                    "mixture payoff {expected:.9}, reported {:.9}, worst deviation gain {:.3e}, pure bounds [{lo:.6}, {hi:.6}]",
                    game.value_bps_hz, ne.worst_violation
                ),
            );
        } else {
            report.check(
                "game payoff file",
                false,
                format!("{} is missing", payoff_path.display()),
            );
        }
    }
    Ok(())
}

fn check_solver(
    name: &str,
    s: &Scenario,
    rep: &SolverReport,
    out_dir: &Path,
    report: &mut Report,
) {
    let w = vector_from_pairs(&rep.beamformer);
    let theta_bob = vector_from_pairs(&rep.theta_bob);
    let theta_eve = vector_from_pairs(&rep.theta_eve);

    let r = rates(s, &w, &theta_bob, &theta_eve);
    let close = |a: f64, b: f64| (a - b).abs() <= RATE_TOL * (1.0 + b.abs());
    let rates_ok = close(r.secrecy, rep.secrecy_rate_bps_hz)
        && close(r.bob, rep.bob_rate_bps_hz)
        && close(r.eve, rep.eve_rate_bps_hz)
        && close(rep.secrecy_rate_bps_hz.max(0.0), rep.deliverable_secrecy_bps_hz);

    let phases_ok = theta_bob
        .iter()
        .chain(theta_eve.iter())
        .all(|c| (c.norm() - 1.0).abs() <= 1e-9);
    let power_ok = w.norm_squared() <= s.power * (1.0 + 1e-9);
    let trace_ok = out_dir.join(&rep.trace_file).exists();

    report.check(
        &format!("{name} solution recompute"),
        rates_ok && phases_ok && power_ok && trace_ok,
        format!(
            "recomputed secrecy {:.9} vs reported {:.9}, phases unit {phases_ok}, power ok {power_ok}, trace {trace_ok}",
            r.secrecy, rep.secrecy_rate_bps_hz
        ),
    );
}
