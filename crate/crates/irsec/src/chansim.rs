//! Seeded channel generation from node placements and path-loss data.
//!
//! Every link draws from its own fixed stream of one counter-based
//! generator, so a single `u64` seed pins the full scenario bit-for-bit
//! no matter which links are generated first or how wide they are.
//! Small-scale fading is Rayleigh; the two Alice-to-surface matrices get
//! transmit- and receive-side exponential correlation, and are redrawn
//! (on their own stream) while numerically rank-deficient.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Scenario;
use crate::optkit::{CMat, CVec};

// Stream ids; one per link, plus reserved streams for solver randomness so
// solver draws never overlap channel draws under the same seed.
const STREAM_ALICE_BOB: u64 = 0;
const STREAM_ALICE_IRS_BOB: u64 = 1;
const STREAM_IRS_BOB_BOB: u64 = 2;
const STREAM_IRS_BOB_EVE: u64 = 3;
const STREAM_ALICE_EVE: u64 = 4;
const STREAM_ALICE_IRS_EVE: u64 = 5;
const STREAM_IRS_EVE_EVE: u64 = 6;
const STREAM_IRS_EVE_BOB: u64 = 7;
/// Stream for the alternating-optimization solver's randomized rounding.
pub const STREAM_AO: u64 = 16;
/// Stream for the descent-ascent solver's randomized rounding.
pub const STREAM_GDA: u64 = 17;

/// Redraw limit for a rank-deficient surface matrix.
const MAX_REDRAWS: usize = 100;
/// Smallest accepted ratio of extreme singular values.
const RANK_TOL: f64 = 1e-9;

/// 2D node position in meters.
pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Placement {
    pub alice: Point,
    pub bob: Point,
    pub eve: Point,
    pub irs_bob: Point,
    pub irs_eve: Point,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            alice: [0.0, 0.0],
            bob: [50.0, 0.0],
            eve: [45.0, 5.0],
            irs_bob: [40.0, 2.0],
            irs_eve: [48.0, 4.0],
        }
    }
}

/// Physical parameters of one simulated deployment. Powers are watts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimParams {
    pub m: usize,
    pub n_bob: usize,
    pub n_eve: usize,
    pub power: f64,
    pub noise_bob: f64,
    pub noise_eve: f64,
    /// Path gain at 1 m, in dB.
    pub reference_loss_db: f64,
    /// Path-loss exponent of the two direct links.
    pub direct_exponent: f64,
    /// Path-loss exponent of every link touching a surface.
    pub surface_exponent: f64,
    /// Adjacent-element correlation of the Alice-to-surface matrices.
    pub correlation: f64,
    pub placement: Placement,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            m: 3,
            n_bob: 4,
            n_eve: 4,
            power: dbm_to_watt(46.0),
            noise_bob: dbm_to_watt(-174.0) * 5.0e6,
            noise_eve: dbm_to_watt(-174.0) * 5.0e6,
            reference_loss_db: -30.0,
            direct_exponent: 4.0,
            surface_exponent: 2.0,
            correlation: 0.7,
            placement: Placement::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("channel {link} stayed rank-deficient after {attempts} draws")]
    RankDeficient { link: &'static str, attempts: usize },
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// A deterministic generator for one of the reserved solver streams.
pub fn solver_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates the full scenario for one seed.
pub fn generate(params: &SimParams, seed: u64) -> Result<Scenario, SimError> {
    validate(params)?;
    let p = &params.placement;
    let amp = |from: Point, to: Point, exponent: f64| -> Result<f64, SimError> {
        let d = ((from[0] - to[0]).powi(2) + (from[1] - to[1]).powi(2)).sqrt();
        if d <= 0.0 {
            return Err(SimError::Invalid(format!(
                "nodes at {from:?} and {to:?} coincide"
            )));
        }
        Ok((10f64.powf(params.reference_loss_db / 10.0) * d.powf(-exponent)).sqrt())
    };
    let link = |stream: u64| solver_rng(seed, stream);

    let direct = params.direct_exponent;
    let surface = params.surface_exponent;
    let scenario = Scenario {
        alice_bob: fading_vector(
            params.m,
            amp(p.alice, p.bob, direct)?,
            &mut link(STREAM_ALICE_BOB),
        ),
        alice_irs_bob: correlated_matrix(
            params.n_bob,
            params.m,
            amp(p.alice, p.irs_bob, surface)?,
            params.correlation,
            &mut link(STREAM_ALICE_IRS_BOB),
            "alice_irs_bob",
        )?,
        irs_bob_bob: fading_vector(
            params.n_bob,
            amp(p.irs_bob, p.bob, surface)?,
            &mut link(STREAM_IRS_BOB_BOB),
        ),
        irs_bob_eve: fading_vector(
            params.n_bob,
            amp(p.irs_bob, p.eve, surface)?,
            &mut link(STREAM_IRS_BOB_EVE),
        ),
        alice_eve: fading_vector(
            params.m,
            amp(p.alice, p.eve, direct)?,
            &mut link(STREAM_ALICE_EVE),
        ),
        alice_irs_eve: correlated_matrix(
            params.n_eve,
            params.m,
            amp(p.alice, p.irs_eve, surface)?,
            params.correlation,
            &mut link(STREAM_ALICE_IRS_EVE),
            "alice_irs_eve",
        )?,
        irs_eve_eve: fading_vector(
            params.n_eve,
            amp(p.irs_eve, p.eve, surface)?,
            &mut link(STREAM_IRS_EVE_EVE),
        ),
        irs_eve_bob: fading_vector(
            params.n_eve,
            amp(p.irs_eve, p.bob, surface)?,
            &mut link(STREAM_IRS_EVE_BOB),
        ),
        noise_bob: params.noise_bob,
        noise_eve: params.noise_eve,
        power: params.power,
    };
    scenario
        .validate()
        .map_err(|e| SimError::Invalid(e.to_string()))?;
    Ok(scenario)
}

fn validate(params: &SimParams) -> Result<(), SimError> {
    if params.m == 0 {
        return Err(SimError::Invalid("at least one transmit antenna".into()));
    }
    for (name, v) in [
        ("power", params.power),
        ("noise_bob", params.noise_bob),
        ("noise_eve", params.noise_eve),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SimError::Invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !(0.0..1.0).contains(&params.correlation) {
        return Err(SimError::Invalid(format!(
            "correlation must lie in [0, 1), got {}",
            params.correlation
        )));
    }
    Ok(())
}

/// Complex normal with unit variance per entry.
fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn fading_vector(len: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(len, |_, _| amplitude * cn(rng))
}

/// Correlated Rayleigh matrix: amplitude * Rr^(1/2) G Rt^(1/2), redrawn
/// from the same stream while the singular-value spread is degenerate.
fn correlated_matrix(
    rows: usize,
    cols: usize,
    amplitude: f64,
    rho: f64,
    rng: &mut ChaCha8Rng,
    name: &'static str,
) -> Result<CMat, SimError> {
    if rows == 0 {
        return Ok(CMat::zeros(0, cols));
    }
    let rx_half = to_complex(&correlation_sqrt(rows, rho));
    let tx_half = to_complex(&correlation_sqrt(cols, rho));
    for _ in 0..MAX_REDRAWS {
        let g = CMat::from_fn(rows, cols, |_, _| cn(rng));
        let h = (&rx_half * g * &tx_half).scale(amplitude);
        if full_rank(&h) {
            return Ok(h);
        }
    }
    Err(SimError::RankDeficient {
        link: name,
        attempts: MAX_REDRAWS,
    })
}

/// Ratio test on the Gram matrix of the smaller side.
fn full_rank(h: &CMat) -> bool {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    match crate::optkit::hermitian_eig(&gram) {
        Ok(eig) => {
            let max = eig.values[eig.values.len() - 1];
            let min = eig.values[0];
            max > 0.0 && (min.max(0.0) / max).sqrt() > RANK_TOL
        }
        Err(_) => false,
    }
}

/// Square root of the exponential correlation matrix R_ij = rho^|i-j|.
fn correlation_sqrt(n: usize, rho: f64) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let eig = nalgebra::SymmetricEigen::new(r);
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += lam * v[i] * v[j];
            }
        }
    }
    out
}

fn to_complex(r: &DMatrix<f64>) -> CMat {
    CMat::from_fn(r.nrows(), r.ncols(), |i, j| Complex64::new(r[(i, j)], 0.0))
}
