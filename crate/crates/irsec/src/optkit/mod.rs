//! Dense numeric kernels shared by the solver modules: Hermitian
//! eigendecompositions, a small-scale semidefinite programming solver, a
//! two-phase revised simplex for linear programs, and nearest-point
//! projections onto affine-plus-cone feasible sets.
//!
//! Everything here works on complex Hermitian matrices directly, without a
//! real embedding, because every instance in this crate is tiny (a handful of
//! reflecting elements plus one homogenization row). All kernels are pure
//! functions and safe to call concurrently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub mod eig;
pub mod lp;
pub mod project;
pub mod sdp;

pub use eig::{hermitian_eig, max_generalized_eigvec, psd_project, HermEig};
pub use lp::{solve_lp, solve_lp_with, LpOptions, LpProblem, LpSolution, VarBound};
pub use project::{
    project_affine_psd, project_affine_psd_with, AffineEquality, Halfspace, ProjectionOptions,
};
pub use sdp::{solve_sdp, solve_sdp_with, SdpConstraint, SdpOptions, SdpProblem, SdpSolution};

/// Dense complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Relative asymmetry above which a matrix is rejected as non-Hermitian.
const ASYMMETRY_TOL: f64 = 1e-8;

/// Failure modes of the numeric kernels.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must be Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix pencil denominator is not positive definite")]
    PencilNotPositiveDefinite,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("linear program is infeasible (phase-1 objective {residual:.3e})")]
    LpInfeasible { residual: f64 },
    #[error("linear program is unbounded along variable {variable}")]
    LpUnbounded { variable: usize },
    #[error("linear program solve failed verification: {0}")]
    LpInaccurate(String),
    #[error(
        "interior-point solve did not converge in {iterations} iterations \
         (primal {primal:.3e}, dual {dual:.3e}, gap {gap:.3e})"
    )]
    SdpDiverged {
        iterations: usize,
        primal: f64,
        dual: f64,
        gap: f64,
    },
    #[error("semidefinite solve failed verification: {0}")]
    SdpInaccurate(String),
    #[error(
        "projection did not converge in {cycles} steps \
         (last optimality gap {change:.3e}, worst residual {residual:.3e})"
    )]
    ProjectionStalled {
        cycles: usize,
        change: f64,
        residual: f64,
    },
}

// ---------------------------------------------------------------------------
// Shared small helpers
// ---------------------------------------------------------------------------

/// Real part of the Frobenius inner product tr(A^H B).
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Hermitian part (A + A^H) / 2.
pub fn hermitian_part(a: &CMat) -> CMat {
    let mut h = a.adjoint();
    h += a;
    h *= Complex64::new(0.5, 0.0);
    h
}

/// Checks that `a` is square and Hermitian within the kernel tolerance.
pub fn check_hermitian(a: &CMat) -> Result<(), KernelError> {
    if a.nrows() != a.ncols() {
        return Err(KernelError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let scale = a.norm().max(1.0);
    let asym = (a - a.adjoint()).norm() / scale;
    if asym > ASYMMETRY_TOL {
        return Err(KernelError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn re_inner_matches_trace_formula() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(-1.0, 0.0)]);
        let direct = (a.adjoint() * &b).trace().re;
        assert!(
            (re_inner(&a, &b) - direct).abs() < 1e-14,
            "inner product mismatch: {} vs {}",
            re_inner(&a, &b),
            direct
        );
    }

    #[test]
    fn check_hermitian_rejects_asymmetry() {
        let good = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert!(check_hermitian(&good).is_ok());
        let bad = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            check_hermitian(&bad),
            Err(KernelError::NotHermitian { .. })
        ));
        let rect = CMat::zeros(2, 3);
        assert!(matches!(
            check_hermitian(&rect),
            Err(KernelError::NotSquare { .. })
        ));
    }
}
