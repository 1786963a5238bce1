//! Nearest-point projection onto the intersection of affine constraints,
//! halfspaces, and the positive semidefinite cone.
//!
//! The variable is a pair (X, t) of a Hermitian matrix and a real scalar.
//! The projection is computed through its dual: each linear row carries one
//! multiplier, while the cone and plain bounds on t are absorbed in closed
//! form by their own projections. What remains is a smooth concave function
//! of the multipliers, maximized by a semismooth Newton iteration whose
//! curvature comes from the directional derivative of the eigenvalue
//! clipping map, with an Armijo backtrack for globalization. Cyclic
//! projection schemes were tried here first and crawl sublinearly whenever
//! the answer sits on a thin face of the cone, which is the common case for
//! the feasible sets in this crate.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::eig::{hermitian_eig, HermEig};
use super::{hermitian_part, re_inner, CMat, KernelError};

/// Relative ridge added to the dual Hessian before factorization.
const HESSIAN_RIDGE: f64 = 1e-10;
/// Armijo slope fraction for the dual line search.
const ARMIJO: f64 = 1e-4;
/// Smallest backtracking step tried before abandoning a direction.
const MIN_STEP: f64 = 1e-14;
/// Eigenvalue gap below which the clipping derivative falls back to 0/1.
const SPECTRAL_GAP: f64 = 1e-12;

/// Re<A, X> + scalar * t = rhs.
#[derive(Clone, Debug)]
pub struct AffineEquality {
    pub matrix: CMat,
    pub scalar: f64,
    pub rhs: f64,
}

/// Re<A, X> + scalar * t >= rhs.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub matrix: CMat,
    pub scalar: f64,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    /// Newton iteration budget.
    pub max_cycles: usize,
    /// Residual target on the unit-normalized constraint rows.
    pub tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            max_cycles: 500,
            tol: 1e-8,
        }
    }
}

pub fn project_affine_psd(
    x0: &CMat,
    t0: f64,
    equalities: &[AffineEquality],
    halfspaces: &[Halfspace],
) -> Result<(CMat, f64), KernelError> {
    project_affine_psd_with(x0, t0, equalities, halfspaces, &ProjectionOptions::default())
}

pub fn project_affine_psd_with(
    x0: &CMat,
    t0: f64,
    equalities: &[AffineEquality],
    halfspaces: &[Halfspace],
    opts: &ProjectionOptions,
) -> Result<(CMat, f64), KernelError> {
    let n = x0.nrows();
    if x0.ncols() != n {
        return Err(KernelError::NotSquare {
            rows: x0.nrows(),
            cols: x0.ncols(),
        });
    }
    for a in equalities
        .iter()
        .map(|e| &e.matrix)
        .chain(halfspaces.iter().map(|h| &h.matrix))
    {
        if a.nrows() != n || a.ncols() != n {
            return Err(KernelError::DimensionMismatch(format!(
                "constraint matrix is {}x{}, variable is {}x{}",
                a.nrows(),
                a.ncols(),
                n,
                n
            )));
        }
    }

    // Work with hermitized normals; on Hermitian X the skew part of a
    // constraint matrix contributes nothing to Re<A, X>.
    let eq_mats: Vec<CMat> = equalities.iter().map(|e| hermitian_part(&e.matrix)).collect();
    let hs_mats: Vec<CMat> = halfspaces.iter().map(|h| hermitian_part(&h.matrix)).collect();
    let x0h = hermitian_part(x0);

    // Halfspaces whose matrix part vanishes are plain bounds on the scalar
    // and stay on the primal side; everything else becomes a dual row,
    // normalized so the stopping tolerance means the same for every row.
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    let mut rows: Vec<Row> = Vec::new();
    for (eq, mat) in equalities.iter().zip(&eq_mats) {
        let norm = (mat.norm_squared() + eq.scalar * eq.scalar).sqrt();
        if norm == 0.0 {
            if eq.rhs != 0.0 {
                return Err(KernelError::InvalidProblem(
                    "equality with zero normal and nonzero offset".into(),
                ));
            }
            continue;
        }
        rows.push(Row {
            mat: mat.unscale(norm),
            scalar: eq.scalar / norm,
            rhs: eq.rhs / norm,
            norm,
            inequality: false,
        });
    }
    for (hs, mat) in halfspaces.iter().zip(&hs_mats) {
        if mat.norm_squared() == 0.0 {
            if hs.scalar > 0.0 {
                t_lo = t_lo.max(hs.rhs / hs.scalar);
            } else if hs.scalar < 0.0 {
                t_hi = t_hi.min(hs.rhs / hs.scalar);
            } else if hs.rhs > 0.0 {
                return Err(KernelError::InvalidProblem(
                    "halfspace with zero normal and positive offset".into(),
                ));
            }
            continue;
        }
        let norm = (mat.norm_squared() + hs.scalar * hs.scalar).sqrt();
        rows.push(Row {
            mat: mat.unscale(norm),
            scalar: hs.scalar / norm,
            rhs: hs.rhs / norm,
            norm,
            inequality: true,
        });
    }
    if t_lo > t_hi {
        return Err(KernelError::InvalidProblem(format!(
            "scalar bounds cross: {t_lo} > {t_hi}"
        )));
    }

    let m = rows.len();
    let mut y = DVector::zeros(m);
    let mut state = eval_primal(&x0h, t0, t_lo, t_hi, &rows, &y)?;
    let mut resid = kkt_residual(&rows, &y, &state.grad);

    // What the final check will demand of each row, with headroom. When
    // the dual Hessian is singular at the answer the iteration ends in a
    // slow creep; once every row is safely inside its bar there is no
    // point grinding toward the tighter target.
    let bars: Vec<f64> = rows
        .iter()
        .map(|r| {
            let base = if r.inequality { 1e-8 } else { 1e-6 };
            0.3 * base * (1.0 / r.norm + r.rhs.abs())
        })
        .collect();

    for cycle in 0..opts.max_cycles {
        if resid <= opts.tol || rows_within(&rows, &y, &state.grad, &bars) {
            verify(
                &state.x, state.tau, equalities, &eq_mats, halfspaces, &hs_mats, cycle, resid,
            )?;
            return Ok((state.x, state.tau));
        }

        let hess = curvature(&rows, &state.eig, state.t_interior);
        let dir = newton_direction(&hess, &state.grad);
        let slope = state.grad.dot(&dir);
        let (dir, slope) = if slope > 0.0 && slope.is_finite() {
            (dir, slope)
        } else {
            let g = state.grad.clone();
            let s = g.norm_squared();
            (g, s)
        };
        if slope == 0.0 {
            break;
        }

        // The acceptance test tolerates cancellation noise in the dual
        // value, which near the answer dwarfs the predicted gain and would
        // otherwise reject perfectly good Newton steps.
        let noise = 1e-12 * (1.0 + state.dual_value.abs());
        let mut step = 1.0;
        let mut advanced = false;
        while step >= MIN_STEP {
            let mut y_try = &y + dir.scale(step);
            for (i, row) in rows.iter().enumerate() {
                if row.inequality && y_try[i] < 0.0 {
                    y_try[i] = 0.0;
                }
            }
            let gain_ref = state.grad.dot(&(&y_try - &y));
            if gain_ref > 0.0 {
                let trial = eval_primal(&x0h, t0, t_lo, t_hi, &rows, &y_try)?;
                if trial.dual_value >= state.dual_value + ARMIJO * gain_ref - noise {
                    y = y_try;
                    state = trial;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
        resid = kkt_residual(&rows, &y, &state.grad);
    }

    // Budget exhausted or no usable step left; hand the iterate back only
    // if it actually satisfies everything the caller asked for.
    verify(
        &state.x,
        state.tau,
        equalities,
        &eq_mats,
        halfspaces,
        &hs_mats,
        opts.max_cycles,
        resid,
    )?;
    Ok((state.x, state.tau))
}

// ---------------------------------------------------------------------------
// Dual machinery
// ---------------------------------------------------------------------------

struct Row {
    mat: CMat,
    scalar: f64,
    rhs: f64,
    /// Norm of the caller's original (matrix, scalar) pair.
    norm: f64,
    inequality: bool,
}

struct Primal {
    x: CMat,
    tau: f64,
    eig: HermEig,
    t_interior: bool,
    grad: DVector<f64>,
    dual_value: f64,
}

/// Evaluates the inner minimizer for fixed multipliers: clip the shifted
/// matrix to the cone, clamp the shifted scalar to its bounds, and report
/// the per-row residuals together with the dual objective value.
fn eval_primal(
    x0: &CMat,
    t0: f64,
    t_lo: f64,
    t_hi: f64,
    rows: &[Row],
    y: &DVector<f64>,
) -> Result<Primal, KernelError> {
    let n = x0.nrows();
    let mut shifted = x0.clone();
    let mut sigma = 0.0;
    for (row, &yi) in rows.iter().zip(y.iter()) {
        if yi != 0.0 {
            shifted += row.mat.scale(yi);
            sigma += row.scalar * yi;
        }
    }
    let eig = hermitian_eig(&shifted)?;
    let clipped = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            nalgebra::Complex::new(eig.values[i].max(0.0), 0.0)
        } else {
            nalgebra::Complex::new(0.0, 0.0)
        }
    });
    let x = &eig.vectors * clipped * eig.vectors.adjoint();
    let t_raw = t0 + sigma;
    let tau = t_raw.clamp(t_lo, t_hi);

    let mut grad = DVector::zeros(rows.len());
    let mut lin = 0.0;
    for (i, row) in rows.iter().enumerate() {
        grad[i] = row.rhs - re_inner(&row.mat, &x) - row.scalar * tau;
        lin += y[i] * grad[i];
    }
    let dual_value = lin + 0.5 * (&x - x0).norm_squared() + 0.5 * (tau - t0) * (tau - t0);
    Ok(Primal {
        x,
        tau,
        eig,
        t_interior: t_raw > t_lo && t_raw < t_hi,
        grad,
        dual_value,
    })
}

/// First-order optimality violation of one row. Equality rows want a zero
/// residual; inequality rows want complementarity with their nonnegative
/// multiplier.
fn row_violation(row: &Row, y: f64, grad: f64) -> f64 {
    if row.inequality {
        if y > 0.0 {
            grad.abs()
        } else {
            grad.max(0.0)
        }
    } else {
        grad.abs()
    }
}

fn kkt_residual(rows: &[Row], y: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(i, row)| row_violation(row, y[i], grad[i]))
        .fold(0.0f64, f64::max)
}

fn rows_within(rows: &[Row], y: &DVector<f64>, grad: &DVector<f64>, bars: &[f64]) -> bool {
    rows.iter()
        .enumerate()
        .all(|(i, row)| row_violation(row, y[i], grad[i]) <= bars[i])
}

/// Generalized Hessian of the dual: the clipping map differentiated through
/// its eigenbasis by divided differences, plus the scalar term while the
/// clamp is inactive.
fn curvature(rows: &[Row], eig: &HermEig, t_interior: bool) -> DMatrix<f64> {
    let n = eig.values.len();
    let m = rows.len();
    let basis_t: Vec<CMat> = rows
        .iter()
        .map(|r| eig.vectors.adjoint() * &r.mat * &eig.vectors)
        .collect();
    let mut omega = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (eig.values[k], eig.values[l]);
            omega[(k, l)] = if (a - b).abs() > SPECTRAL_GAP * (1.0 + a.abs() + b.abs()) {
                (a.max(0.0) - b.max(0.0)) / (a - b)
            } else if a > 0.0 {
                1.0
            } else {
                0.0
            };
        }
    }
    let mut hess = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut v = 0.0;
            for k in 0..n {
                for l in 0..n {
                    v += omega[(k, l)] * (basis_t[i][(k, l)].conj() * basis_t[j][(k, l)]).re;
                }
            }
            if t_interior {
                v += rows[i].scalar * rows[j].scalar;
            }
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let m = hess.nrows();
    let scale = 1.0 + hess.diagonal().amax();
    let mut ridge = HESSIAN_RIDGE * scale;
    for _ in 0..3 {
        let regularized = hess + DMatrix::identity(m, m) * ridge;
        if let Some(chol) = Cholesky::new(regularized) {
            return chol.solve(grad);
        }
        ridge *= 1e4;
    }
    grad.clone()
}

#[allow(clippy::too_many_arguments)]
fn verify(
    x: &CMat,
    t: f64,
    equalities: &[AffineEquality],
    eq_mats: &[CMat],
    halfspaces: &[Halfspace],
    hs_mats: &[CMat],
    cycles: usize,
    change: f64,
) -> Result<(), KernelError> {
    let mut worst = 0.0f64;
    for (eq, mat) in equalities.iter().zip(eq_mats.iter()) {
        let r = (re_inner(mat, x) + eq.scalar * t - eq.rhs).abs() / (1.0 + eq.rhs.abs());
        worst = worst.max(r / 1e-6);
    }
    for (hs, mat) in halfspaces.iter().zip(hs_mats.iter()) {
        let deficit = hs.rhs - re_inner(mat, x) - hs.scalar * t;
        worst = worst.max(deficit / (1e-8 * (1.0 + hs.rhs.abs())));
    }
    let eig = hermitian_eig(x)?;
    if let Some(min) = eig.values.get(0) {
        worst = worst.max(-min / 1e-8);
    }
    if worst > 1.0 {
        return Err(KernelError::ProjectionStalled {
            cycles,
            change,
            residual: worst,
        });
    }
    Ok(())
}
