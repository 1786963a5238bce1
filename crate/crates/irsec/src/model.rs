//! System model: channel data, achievable rates, and the quadratic forms
//! the solvers optimize over.
//!
//! Alice transmits with `m` antennas to a single-antenna receiver (Bob)
//! while a single-antenna eavesdropper (Eve) listens. Two reflecting
//! surfaces modify both links: one with `n_bob` elements controlled by
//! Alice, one with `n_eve` elements controlled by the eavesdropper. Each
//! surface applies a unit-modulus phase shift per element, so the compound
//! channels are affine in either phase vector with the other held fixed.
//! That structure is exposed here as [`LiftedForm`], which every solver
//! builds on.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optkit::{CMat, CVec};

/// Complete problem data for one channel realization.
///
/// Single-letter dimensions: `m` transmit antennas, `n_bob` elements on
/// the legitimate surface, `n_eve` on the adversarial one. Vector links
/// are stored as plain vectors; `h . w` products are unconjugated sums.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    /// Alice to Bob, length m.
    pub alice_bob: CVec,
    /// Alice to the legitimate surface, n_bob x m.
    pub alice_irs_bob: CMat,
    /// Legitimate surface to Bob, length n_bob.
    pub irs_bob_bob: CVec,
    /// Legitimate surface to Eve, length n_bob.
    pub irs_bob_eve: CVec,
    /// Alice to Eve, length m.
    pub alice_eve: CVec,
    /// Alice to the adversarial surface, n_eve x m.
    pub alice_irs_eve: CMat,
    /// Adversarial surface to Eve, length n_eve.
    pub irs_eve_eve: CVec,
    /// Adversarial surface to Bob, length n_eve.
    pub irs_eve_bob: CVec,
    /// Noise power at Bob, watts.
    pub noise_bob: f64,
    /// Noise power at Eve, watts.
    pub noise_eve: f64,
    /// Transmit power budget, watts.
    pub power: f64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("inconsistent dimensions: {0}")]
    Shape(String),
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
}

impl Scenario {
    pub fn m(&self) -> usize {
        self.alice_bob.len()
    }

    pub fn n_bob(&self) -> usize {
        self.irs_bob_bob.len()
    }

    pub fn n_eve(&self) -> usize {
        self.irs_eve_eve.len()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (m, nb, ne) = (self.m(), self.n_bob(), self.n_eve());
        let checks = [
            ("alice_eve", self.alice_eve.len(), m),
            ("irs_bob_eve", self.irs_bob_eve.len(), nb),
            ("irs_eve_bob", self.irs_eve_bob.len(), ne),
            ("alice_irs_bob rows", self.alice_irs_bob.nrows(), nb),
            ("alice_irs_bob cols", self.alice_irs_bob.ncols(), m),
            ("alice_irs_eve rows", self.alice_irs_eve.nrows(), ne),
            ("alice_irs_eve cols", self.alice_irs_eve.ncols(), m),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(ScenarioError::Shape(format!("{name}: {got} != {want}")));
            }
        }
        if m == 0 {
            return Err(ScenarioError::Shape("no transmit antennas".into()));
        }
        for (field, value) in [
            ("noise_bob", self.noise_bob),
            ("noise_eve", self.noise_eve),
            ("power", self.power),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScenarioError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

/// Unconjugated product sum(a_i * b_i), the row-times-column contraction
/// used throughout the channel model.
pub fn row_dot(a: &CVec, b: &CVec) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Compound Alice-to-Bob channel for the given phase vectors, length m.
pub fn effective_bob(s: &Scenario, theta_bob: &CVec, theta_eve: &CVec) -> CVec {
    compound(
        &s.alice_bob,
        &s.irs_bob_bob,
        &s.alice_irs_bob,
        theta_bob,
        &s.irs_eve_bob,
        &s.alice_irs_eve,
        theta_eve,
    )
}

/// Compound Alice-to-Eve channel for the given phase vectors, length m.
pub fn effective_eve(s: &Scenario, theta_bob: &CVec, theta_eve: &CVec) -> CVec {
    compound(
        &s.alice_eve,
        &s.irs_eve_eve,
        &s.alice_irs_eve,
        theta_eve,
        &s.irs_bob_eve,
        &s.alice_irs_bob,
        theta_bob,
    )
}

#[allow(clippy::too_many_arguments)]
fn compound(
    direct: &CVec,
    out_a: &CVec,
    in_a: &CMat,
    theta_a: &CVec,
    out_b: &CVec,
    in_b: &CMat,
    theta_b: &CVec,
) -> CVec {
    debug_assert_eq!(out_a.len(), theta_a.len());
    debug_assert_eq!(out_b.len(), theta_b.len());
    let mut h = direct.clone();
    for n in 0..out_a.len() {
        let g = out_a[n] * theta_a[n];
        for j in 0..h.len() {
            h[j] += g * in_a[(n, j)];
        }
    }
    for n in 0..out_b.len() {
        let g = out_b[n] * theta_b[n];
        for j in 0..h.len() {
            h[j] += g * in_b[(n, j)];
        }
    }
    h
}

pub fn received_snr(h: &CVec, w: &CVec, noise: f64) -> f64 {
    row_dot(h, w).norm_sqr() / noise
}

/// Shannon rate log2(1 + snr) in bits per channel use.
pub fn rate(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// Bob's rate, Eve's rate, and their difference for one operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub bob: f64,
    pub eve: f64,
    /// Rate difference; negative when Eve outhears Bob. Callers that
    /// report an achievable secrecy rate clamp at zero themselves.
    pub secrecy: f64,
}

pub fn rates(s: &Scenario, w: &CVec, theta_bob: &CVec, theta_eve: &CVec) -> Rates {
    let hb = effective_bob(s, theta_bob, theta_eve);
    let he = effective_eve(s, theta_bob, theta_eve);
    let bob = rate(received_snr(&hb, w, s.noise_bob));
    let eve = rate(received_snr(&he, w, s.noise_eve));
    Rates {
        bob,
        eve,
        secrecy: bob - eve,
    }
}

/// Rate difference at one operating point, unclamped.
pub fn secrecy_rate(s: &Scenario, w: &CVec, theta_bob: &CVec, theta_eve: &CVec) -> f64 {
    rates(s, w, theta_bob, theta_eve).secrecy
}

// ---------------------------------------------------------------------------
// Lifted quadratic forms
// ---------------------------------------------------------------------------

/// A receiver's SNR as a function of one phase vector, everything else
/// fixed: snr(theta) = |direct + coupling^T theta|^2 / noise.
///
/// The homogenized matrix form uses theta_bar = [theta^T, 1]^T, for which
/// theta_bar^H * matrix() * theta_bar + offset() == snr(theta) exactly.
#[derive(Clone, Debug)]
pub struct LiftedForm {
    pub coupling: CVec,
    pub direct: Complex64,
    pub noise: f64,
}

impl LiftedForm {
    pub fn snr(&self, theta: &CVec) -> f64 {
        (self.direct + row_dot(&self.coupling, theta)).norm_sqr() / self.noise
    }

    /// (n+1) x (n+1) Hermitian coefficient matrix of the homogenized form.
    pub fn matrix(&self) -> CMat {
        let n = self.coupling.len();
        let mut h = CMat::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = self.coupling[i].conj() * self.coupling[j];
            }
            h[(i, n)] = self.direct * self.coupling[i].conj();
            h[(n, i)] = self.direct.conj() * self.coupling[i];
        }
        h.unscale(self.noise)
    }

    pub fn offset(&self) -> f64 {
        self.direct.norm_sqr() / self.noise
    }

    /// [`matrix`](Self::matrix) with the constant term folded into the
    /// homogenization corner, so theta_bar^H * homogeneous() * theta_bar
    /// == snr(theta) exactly. As a scaled outer product of
    /// [coupling^*, direct] it is positive semidefinite, which the plain
    /// split form is not.
    pub fn homogeneous(&self) -> CMat {
        let n = self.coupling.len();
        let mut h = self.matrix();
        h[(n, n)] = Complex64::new(self.offset(), 0.0);
        h
    }
}

/// Per-element coupling of one surface into one receiver:
/// entry n is link_out[n] * (link_in * w)[n].
fn coupling(link_out: &CVec, link_in: &CMat, w: &CVec) -> CVec {
    let fwd = link_in * w;
    CVec::from_fn(link_out.len(), |n, _| link_out[n] * fwd[n])
}

/// Bob's SNR as a function of the legitimate surface's phases.
pub fn bob_lift_in_theta_bob(s: &Scenario, w: &CVec, theta_eve: &CVec) -> LiftedForm {
    let mut base = s.alice_bob.clone();
    add_reflected(&mut base, &s.irs_eve_bob, &s.alice_irs_eve, theta_eve);
    LiftedForm {
        coupling: coupling(&s.irs_bob_bob, &s.alice_irs_bob, w),
        direct: row_dot(&base, w),
        noise: s.noise_bob,
    }
}

/// Eve's SNR as a function of the legitimate surface's phases.
pub fn eve_lift_in_theta_bob(s: &Scenario, w: &CVec, theta_eve: &CVec) -> LiftedForm {
    let mut base = s.alice_eve.clone();
    add_reflected(&mut base, &s.irs_eve_eve, &s.alice_irs_eve, theta_eve);
    LiftedForm {
        coupling: coupling(&s.irs_bob_eve, &s.alice_irs_bob, w),
        direct: row_dot(&base, w),
        noise: s.noise_eve,
    }
}

/// Bob's SNR as a function of the adversarial surface's phases.
pub fn bob_lift_in_theta_eve(s: &Scenario, w: &CVec, theta_bob: &CVec) -> LiftedForm {
    let mut base = s.alice_bob.clone();
    add_reflected(&mut base, &s.irs_bob_bob, &s.alice_irs_bob, theta_bob);
    LiftedForm {
        coupling: coupling(&s.irs_eve_bob, &s.alice_irs_eve, w),
        direct: row_dot(&base, w),
        noise: s.noise_bob,
    }
}

/// Eve's SNR as a function of the adversarial surface's phases.
pub fn eve_lift_in_theta_eve(s: &Scenario, w: &CVec, theta_bob: &CVec) -> LiftedForm {
    let mut base = s.alice_eve.clone();
    add_reflected(&mut base, &s.irs_bob_eve, &s.alice_irs_bob, theta_bob);
    LiftedForm {
        coupling: coupling(&s.irs_eve_eve, &s.alice_irs_eve, w),
        direct: row_dot(&base, w),
        noise: s.noise_eve,
    }
}

fn add_reflected(base: &mut CVec, out: &CVec, inp: &CMat, theta: &CVec) {
    for n in 0..out.len() {
        let g = out[n] * theta[n];
        for j in 0..base.len() {
            base[j] += g * inp[(n, j)];
        }
    }
}

// ---------------------------------------------------------------------------
// Phase domains
// ---------------------------------------------------------------------------

/// Feasible set of one surface's phase shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseDomain {
    /// Any unit-modulus value.
    Continuous,
    /// L equally spaced phases exp(i 2 pi l / L), l = 0..L-1.
    Discrete(u32),
}

impl PhaseDomain {
    /// Maps each entry to the nearest feasible phase shift. Zero entries,
    /// which have no usable phase, go to 1.
    pub fn project(&self, theta: &CVec) -> CVec {
        CVec::from_fn(theta.len(), |n, _| self.project_entry(theta[n]))
    }

    pub fn project_entry(&self, v: Complex64) -> Complex64 {
        if v.norm() == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        match self {
            PhaseDomain::Continuous => v / v.norm(),
            PhaseDomain::Discrete(l) => {
                let step = std::f64::consts::TAU / f64::from(*l);
                let idx = (v.arg() / step).round().rem_euclid(f64::from(*l));
                Complex64::from_polar(1.0, idx * step)
            }
        }
    }

    pub fn levels(&self) -> Option<u32> {
        match self {
            PhaseDomain::Continuous => None,
            PhaseDomain::Discrete(l) => Some(*l),
        }
    }
}

/// All levels^n phase vectors of a discrete domain, in lexicographic order
/// with the first element most significant. Index 0 is the all-zero-phase
/// vector; for n = 1, levels = 2 the order is [+1], [-1].
pub fn enumerate_phase_vectors(n: usize, levels: u32) -> Vec<CVec> {
    let count = (levels as u128)
        .checked_pow(n as u32)
        .and_then(|c| usize::try_from(c).ok())
        .expect("phase vector count overflows usize");
    let step = std::f64::consts::TAU / f64::from(levels);
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let mut digits = index;
        let mut theta = CVec::zeros(n);
        for pos in (0..n).rev() {
            let level = (digits % levels as usize) as f64;
            digits /= levels as usize;
            theta[pos] = Complex64::from_polar(1.0, level * step);
        }
        out.push(theta);
    }
    out
}

// ---------------------------------------------------------------------------
// Solver progress records
// ---------------------------------------------------------------------------

/// Which update produced a record within one solver round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepLabel {
    Init,
    ThetaBob,
    Beamformer,
    ThetaEve,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepLabel::Init => "init",
            StepLabel::ThetaBob => "theta_B",
            StepLabel::Beamformer => "w",
            StepLabel::ThetaEve => "theta_E",
        })
    }
}

/// One line of a solver's progress trace, evaluated at the operating
/// point the solver would report if stopped right there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub step: StepLabel,
    pub secrecy_rate: f64,
    pub bob_rate: f64,
    pub eve_rate: f64,
    /// Milliseconds since the solve started; 0 unless timing was requested.
    pub wall_ms: f64,
}

/// Everything an iterative solver hands back.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverRun {
    pub beamformer: CVec,
    pub theta_bob: CVec,
    pub theta_eve: CVec,
    pub rates: Rates,
    pub records: Vec<IterationRecord>,
    /// Outer rounds actually executed.
    pub iterations: usize,
    pub converged: bool,
}

/// Failure of an end-to-end solve.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("numerical kernel: {0}")]
    Kernel(#[from] crate::optkit::KernelError),
    #[error("scale variable collapsed to {lambda2:.3e}; no phase pattern can be read off")]
    DegenerateScale { lambda2: f64 },
    #[error("strategy space {levels}^{elements} = {count} profiles exceeds the cap of {cap}")]
    StrategySpaceTooLarge {
        levels: u32,
        elements: usize,
        count: u128,
        cap: usize,
    },
}
