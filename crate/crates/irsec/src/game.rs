//! Finite zero-sum game over quantized phase configurations.
//!
//! When both surfaces are restricted to discrete phase levels, the secrecy
//! game becomes a finite matrix game: rows are the legitimate surface's
//! phase vectors, columns the adversary's, and each entry is the secrecy
//! rate with the transmitter best-responding to that pair. The mixed Nash
//! equilibrium is then exact: the row player's maximin LP and the column
//! player's minimax LP share a value by strong duality, and the module
//! checks that equality on every solve.

use nalgebra::DMatrix;

use crate::ao::optimal_beamformer;
use crate::model::{enumerate_phase_vectors, secrecy_rate, Scenario, SolveError};
use crate::optkit::{solve_lp, CVec, KernelError, LpProblem, VarBound};

/// Largest number of pure strategies either player may enumerate unless the
/// caller raises the cap explicitly.
pub const DEFAULT_STRATEGY_CAP: usize = 4096;

/// Probability mass below which a strategy does not count as support.
const SUPPORT_TOL: f64 = 1e-9;

/// Allowed disagreement between the row and column linear programs' values.
const MINIMAX_GAP_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Strategy spaces
// ---------------------------------------------------------------------------

/// Every phase vector one player can pick, in a fixed enumeration order.
///
/// Ordering is lexicographic in the per-element level indices with the first
/// element most significant, so index 0 is the all-ones (zero phase) vector
/// and a vector's index can be read back off its level digits.
#[derive(Clone, Debug)]
pub struct StrategySpace {
    /// Number of reflecting elements each vector covers.
    pub elements: usize,
    /// Phase levels per element.
    pub levels: u32,
    /// The `levels^elements` unit-modulus vectors.
    pub vectors: Vec<CVec>,
}

/// Enumerates the full strategy space of `levels` phase levels on `elements`
/// reflecting elements, refusing spaces larger than `cap`.
pub fn enumerate_strategies(
    elements: usize,
    levels: u32,
    cap: usize,
) -> Result<StrategySpace, SolveError> {
    if levels == 0 {
        return Err(KernelError::InvalidProblem(
            "a strategy space needs at least one phase level".into(),
        )
        .into());
    }
    let count = (levels as u128)
        .checked_pow(elements as u32)
        .unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(SolveError::StrategySpaceTooLarge {
            levels,
            elements,
            count,
            cap,
        });
    }
    Ok(StrategySpace {
        elements,
        levels,
        vectors: enumerate_phase_vectors(elements, levels),
    })
}

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

/// How the transmit beamformer is chosen when filling the payoff matrix.
#[derive(Clone, Debug, Default)]
pub struct GameOptions {
    /// Use this fixed beamformer for every entry instead of recomputing the
    /// optimal one per strategy pair.
    pub beamformer: Option<CVec>,
}

/// Secrecy-rate payoffs of the finite game.
///
/// Rows follow the legitimate surface's strategy order, columns the
/// adversary's. Entries are in bits/s/Hz and may be negative; the row player
/// maximizes, the column player minimizes.
#[derive(Clone, Debug)]
pub struct PayoffMatrix {
    pub entries: DMatrix<f64>,
}

/// Fills the payoff matrix entry by entry.
///
/// Each entry evaluates the secrecy rate at one pure strategy pair, with the
/// transmitter either best-responding to the pair or pinned to the fixed
/// beamformer in `opts`. Rows are filled independently (in parallel when the
/// `parallel` feature is on) and the result does not depend on scheduling.
pub fn payoff_matrix(
    s: &Scenario,
    bob: &StrategySpace,
    eve: &StrategySpace,
    opts: &GameOptions,
) -> Result<PayoffMatrix, SolveError> {
    s.validate()?;
    let fill_row = |theta_bob: &CVec| -> Result<Vec<f64>, SolveError> {
        eve.vectors
            .iter()
            .map(|theta_eve| match &opts.beamformer {
                Some(w) => Ok(secrecy_rate(s, w, theta_bob, theta_eve)),
                None => {
                    let w = optimal_beamformer(s, theta_bob, theta_eve)?;
                    Ok(secrecy_rate(s, &w, theta_bob, theta_eve))
                }
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        bob.vectors
            .par_iter()
            .map(fill_row)
            .collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = bob
        .vectors
        .iter()
        .map(fill_row)
        .collect::<Result<Vec<_>, _>>()?;

    let entries = DMatrix::from_fn(bob.vectors.len(), eve.vectors.len(), |i, j| rows[i][j]);
    Ok(PayoffMatrix { entries })
}

// ---------------------------------------------------------------------------
// Equilibrium
// ---------------------------------------------------------------------------

/// Probability vector over one player's strategy space.
#[derive(Clone, Debug)]
pub struct MixedStrategy {
    pub probabilities: Vec<f64>,
}

impl MixedStrategy {
    /// Indices carrying more than [`SUPPORT_TOL`] of probability mass.
    pub fn support(&self) -> Vec<usize> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > SUPPORT_TOL)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Mixed equilibrium of the matrix game.
#[derive(Clone, Debug)]
pub struct GameSolution {
    /// The legitimate surface's (row player's) mixture.
    pub bob: MixedStrategy,
    /// The adversary's (column player's) mixture.
    pub eve: MixedStrategy,
    /// Game value: the expected secrecy rate both players can guarantee.
    pub value: f64,
    /// Disagreement between the row and column solves, at most
    /// [`MINIMAX_GAP_TOL`].
    pub minimax_gap: f64,
    /// Number of row strategies with non-negligible probability.
    pub bob_support: usize,
    /// Number of column strategies with non-negligible probability.
    pub eve_support: usize,
}

/// Solves the zero-sum game exactly via its two linear programs.
///
/// The row program maximizes a floor `v` subject to every column's expected
/// payoff reaching `v`; the column program minimizes a ceiling the same way.
/// Both are solved independently and their values must agree to
/// [`MINIMAX_GAP_TOL`], otherwise the solve is rejected as inaccurate.
pub fn solve_zero_sum(a: &PayoffMatrix) -> Result<GameSolution, SolveError> {
    let m = a.entries.nrows();
    let n = a.entries.ncols();
    if m == 0 || n == 0 {
        return Err(KernelError::InvalidProblem("empty payoff matrix".into()).into());
    }

    // Row player: variables (x, v), maximize v subject to A^T x >= v 1 and
    // x on the simplex. Written for the minimizing solver as objective -v
    // with v - sum_i a_ij x_i <= 0 per column.
    let mut inequalities = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![0.0; m + 1];
        for i in 0..m {
            row[i] = -a.entries[(i, j)];
        }
        row[m] = 1.0;
        inequalities.push((row, 0.0));
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    let mut objective = vec![0.0; m + 1];
    objective[m] = -1.0;
    let mut bounds = vec![VarBound::NonNegative; m + 1];
    bounds[m] = VarBound::Free;
    let row_sol = solve_lp(&LpProblem {
        objective,
        inequalities,
        equalities: vec![(simplex, 1.0)],
        bounds,
    })?;
    let value_row = -row_sol.value;
    let x = row_sol.x[..m].to_vec();

    // Column player: variables (y, u), minimize u subject to A y <= u 1 and
    // y on the simplex.
    let mut inequalities = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; n + 1];
        for j in 0..n {
            row[j] = a.entries[(i, j)];
        }
        row[n] = -1.0;
        inequalities.push((row, 0.0));
    }
    let mut simplex = vec![1.0; n + 1];
    simplex[n] = 0.0;
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut bounds = vec![VarBound::NonNegative; n + 1];
    bounds[n] = VarBound::Free;
    let col_sol = solve_lp(&LpProblem {
        objective,
        inequalities,
        equalities: vec![(simplex, 1.0)],
        bounds,
    })?;
    let value_col = col_sol.value;
    let y = col_sol.x[..n].to_vec();

    let minimax_gap = (value_row - value_col).abs();
    if minimax_gap > MINIMAX_GAP_TOL {
        return Err(KernelError::LpInaccurate(format!(
            "row and column game values disagree by {minimax_gap:.3e}"
        ))
        .into());
    }

    let bob = MixedStrategy { probabilities: x };
    let eve = MixedStrategy { probabilities: y };
    let bob_support = bob.support().len();
    let eve_support = eve.support().len();
    Ok(GameSolution {
        bob,
        eve,
        value: value_row,
        minimax_gap,
        bob_support,
        eve_support,
    })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Result of checking a claimed equilibrium.
#[derive(Clone, Copy, Debug)]
pub struct NeCheck {
    pub pass: bool,
    /// Largest payoff gain any unilateral pure deviation achieves over the
    /// claimed value; zero when no deviation helps.
    pub worst_violation: f64,
}

/// Checks whether `(bob, eve, value)` is an equilibrium of `a` within `tol`.
///
/// The test is the saddle condition: no pure row strategy beats `value`
/// against `eve`, and no pure column strategy pushes below `value` against
/// `bob`, each by more than `tol`.
pub fn verify_ne(
    a: &PayoffMatrix,
    bob: &MixedStrategy,
    eve: &MixedStrategy,
    value: f64,
    tol: f64,
) -> NeCheck {
    let m = a.entries.nrows();
    let n = a.entries.ncols();
    debug_assert_eq!(bob.probabilities.len(), m);
    debug_assert_eq!(eve.probabilities.len(), n);

    let mut worst = 0.0f64;
    for i in 0..m {
        let expected: f64 = (0..n)
            .map(|j| a.entries[(i, j)] * eve.probabilities[j])
            .sum();
        worst = worst.max(expected - value);
    }
    for j in 0..n {
        let expected: f64 = (0..m)
            .map(|i| a.entries[(i, j)] * bob.probabilities[i])
            .sum();
        worst = worst.max(value - expected);
    }
    NeCheck {
        pass: worst <= tol,
        worst_violation: worst,
    }
}

/// Pure-strategy security levels: (max-min over rows, min-max over columns).
///
/// These bracket the mixed value from below and above.
pub fn pure_bounds(a: &PayoffMatrix) -> (f64, f64) {
    let m = a.entries.nrows();
    let n = a.entries.ncols();
    let maxmin = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| a.entries[(i, j)])
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let minmax = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| a.entries[(i, j)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    (maxmin, minmax)
}

// ---------------------------------------------------------------------------
