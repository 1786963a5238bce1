//! Randomized cross-module checks: lifted quadratic forms against direct
//! rate evaluation, quantization, nearest-point projection, beamformer
//! optimality, and the zero-sum game pipeline end to end.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use irsec::ao::optimal_beamformer;
use irsec::chansim::{generate, SimParams};
use irsec::game::{pure_bounds, solve_zero_sum, verify_ne, PayoffMatrix};
use irsec::model::{
    bob_lift_in_theta_bob, bob_lift_in_theta_eve, effective_bob, effective_eve,
    eve_lift_in_theta_bob, eve_lift_in_theta_eve, received_snr, secrecy_rate, LiftedForm,
    PhaseDomain, Scenario,
};
use irsec::optkit::{project_affine_psd, AffineEquality, CMat, CVec};

const IDENTITY_RTOL: f64 = 1e-9;

fn small_scenario(m: usize, n_bob: usize, n_eve: usize, seed: u64) -> Scenario {
    let params = SimParams {
        m,
        n_bob,
        n_eve,
        ..SimParams::default()
    };
    generate(&params, seed).expect("channel generation")
}

fn unit_phases(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.gen::<f64>() * TAU))
}

fn feasible_beamformer(rng: &mut ChaCha8Rng, m: usize, power: f64) -> CVec {
    let raw = CVec::from_fn(m, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let fill: f64 = rng.gen_range(0.2..1.0);
    raw.scale((fill * power).sqrt() / raw.norm())
}

// The closed-form beamformer solves the fixed-power problem, so dominance
// is exact against probes spending the full budget. A sub-power probe can
// do better only when every full-power direction yields negative secrecy
// and backing off toward silence pays.
fn full_power_probe(rng: &mut ChaCha8Rng, m: usize, power: f64) -> CVec {
    let raw = CVec::from_fn(m, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    raw.scale(power.sqrt() / raw.norm())
}

fn lifted_vector(theta: &CVec) -> CVec {
    let n = theta.len();
    CVec::from_fn(n + 1, |i, _| {
        if i < n {
            theta[i]
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

fn check_lift(form: &LiftedForm, theta: &CVec, direct_snr: f64) {
    let by_form = form.snr(theta);
    assert!(
        (by_form - direct_snr).abs() <= IDENTITY_RTOL * (1.0 + direct_snr.abs()),
        "closed-form snr {by_form} vs direct {direct_snr}"
    );
    let bar = lifted_vector(theta);
    let quad = (bar.adjoint() * form.matrix() * &bar)[(0, 0)].re + form.offset();
    assert!(
        (quad - direct_snr).abs() <= IDENTITY_RTOL * (1.0 + direct_snr.abs()),
        "lifted quadratic {quad} vs direct {direct_snr}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lifted_forms_reproduce_direct_rates(
        m in 1usize..=3,
        n_bob in 1usize..=3,
        n_eve in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let s = small_scenario(m, n_bob, n_eve, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let w = feasible_beamformer(&mut rng, m, s.power);
        let theta_bob = unit_phases(&mut rng, n_bob);
        let theta_eve = unit_phases(&mut rng, n_eve);

        let snr_bob = received_snr(&effective_bob(&s, &theta_bob, &theta_eve), &w, s.noise_bob);
        let snr_eve = received_snr(&effective_eve(&s, &theta_bob, &theta_eve), &w, s.noise_eve);

        check_lift(&bob_lift_in_theta_bob(&s, &w, &theta_eve), &theta_bob, snr_bob);
        check_lift(&eve_lift_in_theta_bob(&s, &w, &theta_eve), &theta_bob, snr_eve);
        check_lift(&bob_lift_in_theta_eve(&s, &w, &theta_bob), &theta_eve, snr_bob);
        check_lift(&eve_lift_in_theta_eve(&s, &w, &theta_bob), &theta_eve, snr_eve);
    }

    #[test]
    fn quantization_picks_the_nearest_level(
        angle in 0.0..TAU,
        levels in 2u32..9,
    ) {
        let v = Complex64::from_polar(1.0, angle);
        let q = PhaseDomain::Discrete(levels).project_entry(v);
        prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        let dist = (q - v).norm();
        for k in 0..levels {
            let level = Complex64::from_polar(1.0, TAU * k as f64 / levels as f64);
            prop_assert!(dist <= (level - v).norm() + 1e-12);
        }
    }

    #[test]
    fn slice_projection_is_idempotent(
        n in 2usize..=4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
        });
        let x0 = (&raw + raw.adjoint()).scale(0.5);
        let trace_one = AffineEquality {
            matrix: CMat::identity(n, n),
            scalar: 0.0,
            rhs: 1.0,
        };
        let (p1, _) = project_affine_psd(&x0, 0.0, &[trace_one.clone()], &[]).unwrap();
        let (p2, _) = project_affine_psd(&p1, 0.0, &[trace_one], &[]).unwrap();
        prop_assert!((&p2 - &p1).norm() <= 1e-6 * (1.0 + p1.norm()));
    }

    #[test]
    fn beamformer_output_is_feasible_and_dominant(
        m in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let s = small_scenario(m, 2, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed_270b);
        let theta_bob = unit_phases(&mut rng, 2);
        let theta_eve = unit_phases(&mut rng, 2);
        let w = optimal_beamformer(&s, &theta_bob, &theta_eve).unwrap();
        prop_assert!(w.norm_squared() <= s.power * (1.0 + 1e-9));
        let achieved = secrecy_rate(&s, &w, &theta_bob, &theta_eve);
        for _ in 0..50 {
            let probe = full_power_probe(&mut rng, m, s.power);
            prop_assert!(achieved >= secrecy_rate(&s, &probe, &theta_bob, &theta_eve) - 1e-9);
        }
    }

    #[test]
    fn game_solutions_are_certified_saddles(
        rows in 1usize..=5,
        cols in 1usize..=5,
        seed in any::<u64>(),
        shift in -5.0..5.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = PayoffMatrix {
            entries: DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-10.0..10.0)),
        };
        let sol = solve_zero_sum(&a).unwrap();
        prop_assert!(sol.minimax_gap <= 1e-8);

        let check = verify_ne(&a, &sol.bob, &sol.eve, sol.value, 1e-8);
        prop_assert!(check.pass, "worst violation {}", check.worst_violation);

        let (lo, hi) = pure_bounds(&a);
        prop_assert!(lo <= sol.value + 1e-8 && sol.value <= hi + 1e-8);

        for p in sol.bob.probabilities.iter().chain(&sol.eve.probabilities) {
            prop_assert!(*p >= -1e-12);
        }
        let mass_bob: f64 = sol.bob.probabilities.iter().sum();
        let mass_eve: f64 = sol.eve.probabilities.iter().sum();
        prop_assert!((mass_bob - 1.0).abs() <= 1e-9 && (mass_eve - 1.0).abs() <= 1e-9);

        let shifted = PayoffMatrix {
            entries: a.entries.map(|v| v + shift),
        };
        let sol_shifted = solve_zero_sum(&shifted).unwrap();
        prop_assert!((sol_shifted.value - sol.value - shift).abs() <= 1e-8);
    }
}
