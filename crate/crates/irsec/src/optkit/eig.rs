//! Hermitian eigendecomposition, the generalized Rayleigh-quotient
//! maximizer, and the nearest-PSD projection.

use nalgebra::{Cholesky, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{check_hermitian, hermitian_part, CMat, CVec, KernelError};

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
///
/// `vectors` holds orthonormal eigenvectors as columns, in the same order as
/// `values`.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl HermEig {
    /// Largest eigenvalue.
    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Eigenvector paired with the largest eigenvalue.
    pub fn max_vector(&self) -> CVec {
        CVec::from(self.vectors.column(self.vectors.ncols() - 1))
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before factorization so harmless rounding noise
/// in the off-diagonal does not leak into the result; inputs that are not
/// Hermitian within kernel tolerance are rejected.
pub fn hermitian_eig(h: &CMat) -> Result<HermEig, KernelError> {
    check_hermitian(h)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(HermEig {
            values: DVector::zeros(0),
            vectors: CMat::zeros(0, 0),
        });
    }
    let se = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(HermEig { values, vectors })
}

/// Maximizes the generalized Rayleigh quotient x^H A x / x^H B x over unit
/// vectors, for Hermitian A and Hermitian positive definite B.
///
/// Returns the largest generalized eigenvalue and a unit-norm eigenvector
/// with a canonical phase (its largest-modulus entry is real nonnegative), so
/// repeated calls produce identical output.
pub fn max_generalized_eigvec(a: &CMat, b: &CMat) -> Result<(f64, CVec), KernelError> {
    check_hermitian(a)?;
    check_hermitian(b)?;
    if a.shape() != b.shape() {
        return Err(KernelError::DimensionMismatch(format!(
            "pencil shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let chol = Cholesky::new(hermitian_part(b)).ok_or(KernelError::PencilNotPositiveDefinite)?;
    let l = chol.l();
    // The factorization itself does not reject indefinite input; a valid
    // factor has a strictly positive real diagonal.
    for d in l.diagonal().iter() {
        if !(d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-12 * d.re.max(1.0)) {
            return Err(KernelError::PencilNotPositiveDefinite);
        }
    }
    // Reduce to the standard problem C = L^{-1} A L^{-H}.
    let la = l
        .solve_lower_triangular(a)
        .ok_or(KernelError::PencilNotPositiveDefinite)?;
    let c_adj = l
        .solve_lower_triangular(&la.adjoint())
        .ok_or(KernelError::PencilNotPositiveDefinite)?;
    let eig = hermitian_eig(&c_adj.adjoint())?;
    let y = eig.max_vector();
    let mut x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or(KernelError::PencilNotPositiveDefinite)?;
    let norm = x.norm();
    if norm == 0.0 {
        return Err(KernelError::InvalidProblem(
            "generalized eigenvector collapsed to zero".into(),
        ));
    }
    x /= Complex64::new(norm, 0.0);
    canonicalize_phase(&mut x);
    Ok((eig.max_value(), x))
}

/// Nearest positive semidefinite matrix in Frobenius norm, by clipping
/// negative eigenvalues at zero.
pub fn psd_project(h: &CMat) -> Result<CMat, KernelError> {
    let eig = hermitian_eig(h)?;
    let n = eig.values.len();
    let mut acc = CMat::zeros(n, n);
    for k in 0..n {
        let lam = eig.values[k];
        if lam > 0.0 {
            let v = eig.vectors.column(k);
            // acc += lam * v v^H
            for i in 0..n {
                for j in 0..n {
                    acc[(i, j)] += Complex64::new(lam, 0.0) * v[i] * v[j].conj();
                }
            }
        }
    }
    Ok(hermitian_part(&acc))
}

/// Rotates a vector by a global phase so its largest-modulus entry is real
/// nonnegative. Ties pick the smallest index.
fn canonicalize_phase(x: &mut CVec) {
    let mut best = 0usize;
    for i in 1..x.len() {
        if x[i].norm() > x[best].norm() {
            best = i;
        }
    }
    let pivot = x[best];
    let mag = pivot.norm();
    if mag > 0.0 {
        let rot = pivot.conj() / Complex64::new(mag, 0.0);
        for v in x.iter_mut() {
            *v *= rot;
        }
    }
}
