//! Primal-dual interior-point solver for small Hermitian semidefinite
//! programs with an optional extra nonnegative scalar variable.
//!
//! Problems have the form
//!
//! ```text
//! maximize   Re<C, X> + c_s * lambda
//! subject to Re<A_k, X> + a_k * lambda = b_k,   X >= 0,  lambda >= 0
//! ```
//!
//! The solver runs a Nesterov-Todd scaled predictor-corrector iteration on
//! a row-equilibrated copy of the problem and checks its own output before
//! returning: constraint residuals, positive semidefiniteness, and the gap
//! between the primal value and the dual certificate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eig::hermitian_eig;
use super::{hermitian_part, re_inner, CMat, KernelError};

/// Relative residual and gap accepted by the final verification pass.
const VERIFY_TOL: f64 = 1e-7;
/// Fraction of the step to the cone boundary actually taken.
const STEP_FRACTION: f64 = 0.99;

/// Re<A, X> + scalar * lambda = rhs.
#[derive(Clone, Debug)]
pub struct SdpConstraint {
    pub matrix: CMat,
    pub scalar: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub objective: CMat,
    /// Weight of the scalar variable in the objective; `None` removes the
    /// scalar variable entirely, and every constraint scalar must be zero.
    pub scalar_objective: Option<f64>,
    pub constraints: Vec<SdpConstraint>,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub max_iters: usize,
    pub feas_tol: f64,
    pub gap_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            feas_tol: 1e-10,
            gap_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub matrix: CMat,
    /// Value of the scalar variable; zero when the problem has none.
    pub scalar: f64,
    pub value: f64,
    /// One multiplier per constraint, certifying optimality through
    /// sum_k dual[k] * A_k - C >= 0.
    pub dual: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

pub fn solve_sdp(p: &SdpProblem) -> Result<SdpSolution, KernelError> {
    solve_sdp_with(p, &SdpOptions::default())
}

pub fn solve_sdp_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, KernelError> {
    let scaled = Scaled::build(p)?;
    let iterate = scaled.solve(opts)?;
    let sol = scaled.unscale(p, iterate);
    verify(p, &sol)?;
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Problem scaling
// ---------------------------------------------------------------------------

/// Internally the solver minimizes <obj, X> + obj_s * lambda over the
/// equilibrated constraints; `row_scale` and `rhs_scale` map back.
struct Scaled {
    n: usize,
    has_scalar: bool,
    obj: CMat,
    obj_s: f64,
    mats: Vec<CMat>,
    scalars: Vec<f64>,
    rhs: DVector<f64>,
    row_scale: Vec<f64>,
    rhs_scale: f64,
    obj_scale: f64,
}

struct Iterate {
    x: CMat,
    lam: f64,
    y: DVector<f64>,
    iterations: usize,
}

impl Scaled {
    fn build(p: &SdpProblem) -> Result<Self, KernelError> {
        let n = p.objective.nrows();
        if p.objective.ncols() != n || n == 0 {
            return Err(KernelError::NotSquare {
                rows: p.objective.nrows(),
                cols: p.objective.ncols(),
            });
        }
        if p.constraints.is_empty() {
            return Err(KernelError::InvalidProblem("no constraints".into()));
        }
        let has_scalar = p.scalar_objective.is_some();
        for (k, c) in p.constraints.iter().enumerate() {
            if c.matrix.nrows() != n || c.matrix.ncols() != n {
                return Err(KernelError::DimensionMismatch(format!(
                    "constraint {k} is {}x{}, objective is {n}x{n}",
                    c.matrix.nrows(),
                    c.matrix.ncols()
                )));
            }
            if !has_scalar && c.scalar != 0.0 {
                return Err(KernelError::InvalidProblem(format!(
                    "constraint {k} uses the scalar variable but no scalar objective is set"
                )));
            }
        }

        let obj_scale = p
            .objective
            .norm()
            .max(p.scalar_objective.unwrap_or(0.0).abs())
            .max(1.0);
        let m = p.constraints.len();
        let mut mats = Vec::with_capacity(m);
        let mut scalars = Vec::with_capacity(m);
        let mut rhs = DVector::zeros(m);
        let mut row_scale = Vec::with_capacity(m);
        for (k, c) in p.constraints.iter().enumerate() {
            let a = hermitian_part(&c.matrix);
            let s = (a.norm_squared() + c.scalar * c.scalar).sqrt();
            if s == 0.0 {
                return Err(KernelError::InvalidProblem(format!(
                    "constraint {k} has a zero left-hand side"
                )));
            }
            mats.push(a.unscale(s));
            scalars.push(c.scalar / s);
            rhs[k] = c.rhs / s;
            row_scale.push(s);
        }
        let rhs_scale = rhs.amax().max(1e-12);
        rhs /= rhs_scale;

        let obj = hermitian_part(&p.objective).unscale(-obj_scale);
        let obj_s = -p.scalar_objective.unwrap_or(0.0) / obj_scale;
        Ok(Self {
            n,
            has_scalar,
            obj,
            obj_s,
            mats,
            scalars,
            rhs,
            row_scale,
            rhs_scale,
            obj_scale,
        })
    }

    fn cone_dim(&self) -> f64 {
        self.n as f64 + if self.has_scalar { 1.0 } else { 0.0 }
    }

    fn solve(&self, opts: &SdpOptions) -> Result<Iterate, KernelError> {
        let n = self.n;
        let m = self.mats.len();
        let iota = self.rhs.amax().max(1.0);
        let mut x = CMat::identity(n, n).scale(iota);
        let mut z = CMat::identity(n, n);
        let mut lam = if self.has_scalar { iota } else { 0.0 };
        let mut zeta = if self.has_scalar { 1.0 } else { 0.0 };
        let mut y = DVector::zeros(m);

        let b_norm = 1.0 + self.rhs.norm();
        let c_norm = 1.0 + self.obj.norm() + self.obj_s.abs();

        for iter in 0..opts.max_iters {
            // Residuals of the two linear blocks.
            let mut rp = DVector::zeros(m);
            for k in 0..m {
                rp[k] = self.rhs[k] - re_inner(&self.mats[k], &x) - self.scalars[k] * lam;
            }
            let mut rd = self.obj.clone() - &z;
            for k in 0..m {
                rd -= self.mats[k].scale(y[k]);
            }
            let rd_s = if self.has_scalar {
                self.obj_s - zeta - self.scalars.iter().zip(y.iter()).map(|(a, yk)| a * yk).sum::<f64>()
            } else {
                0.0
            };

            let gap = re_inner(&x, &z) + lam * zeta;
            let rp_rel = rp.norm() / b_norm;
            let rd_rel = (rd.norm() + rd_s.abs()) / c_norm;
            let pobj = re_inner(&self.obj, &x) + self.obj_s * lam;
            let dobj = self.rhs.dot(&y);
            let gap_rel = gap / (1.0 + pobj.abs() + dobj.abs());
            if rp_rel <= opts.feas_tol && rd_rel <= opts.feas_tol && gap_rel <= opts.gap_tol {
                return Ok(Iterate {
                    x,
                    lam,
                    y,
                    iterations: iter,
                });
            }

            let mu = gap / self.cone_dim();

            // Nesterov-Todd scaling point W with W Z W = X.
            let z_eig = hermitian_eig(&z)?;
            if z_eig.values[0] <= 0.0 {
                return Err(KernelError::SdpInaccurate(
                    "dual iterate left the cone".into(),
                ));
            }
            let z_half = eig_power(&z_eig, 0.5);
            let z_inv_half = eig_power(&z_eig, -0.5);
            let z_inv = eig_power(&z_eig, -1.0);
            let inner = &z_half * &x * &z_half;
            let inner_half = eig_power(&hermitian_eig(&hermitian_part(&inner))?, 0.5);
            let w = hermitian_part(&(&z_inv_half * &inner_half * &z_inv_half));
            let w_s_sq = if self.has_scalar { lam / zeta } else { 0.0 };

            // Schur complement over the multipliers, shared by both passes.
            let mut wawt = Vec::with_capacity(m);
            for k in 0..m {
                wawt.push(hermitian_part(&(&w * &self.mats[k] * &w)));
            }
            let mut schur = DMatrix::zeros(m, m);
            for j in 0..m {
                for k in j..m {
                    let v = re_inner(&self.mats[j], &wawt[k]) + w_s_sq * self.scalars[j] * self.scalars[k];
                    schur[(j, k)] = v;
                    schur[(k, j)] = v;
                }
            }
            let chol = schur
                .clone()
                .cholesky()
                .or_else(|| {
                    let bump = 1e-13 * (1.0 + schur.diagonal().amax());
                    (schur + DMatrix::identity(m, m).scale(bump)).cholesky()
                })
                .ok_or_else(|| {
                    KernelError::SdpInaccurate("Schur complement lost definiteness".into())
                })?;

            let solve_pass = |rc_mat: &CMat, rc_s: f64| -> (CMat, f64, DVector<f64>, CMat, f64) {
                let mut rhs_vec = DVector::zeros(m);
                for j in 0..m {
                    rhs_vec[j] = rp[j] - re_inner(&self.mats[j], rc_mat)
                        + re_inner(&self.mats[j], &(&w * &rd * &w))
                        - self.scalars[j] * rc_s
                        + w_s_sq * self.scalars[j] * rd_s;
                }
                let dy = chol.solve(&rhs_vec);
                let mut dz = rd.clone();
                for k in 0..m {
                    dz -= self.mats[k].scale(dy[k]);
                }
                let dz = hermitian_part(&dz);
                let dx = hermitian_part(&(rc_mat - &(&w * &dz * &w)));
                let (dzeta, dlam) = if self.has_scalar {
                    let dzeta = rd_s - self.scalars.iter().zip(dy.iter()).map(|(a, d)| a * d).sum::<f64>();
                    (dzeta, rc_s - w_s_sq * dzeta)
                } else {
                    (0.0, 0.0)
                };
                (dx, dlam, dy, dz, dzeta)
            };

            // Predictor: pure affine step toward feasibility and gap zero.
            let rc_aff = x.scale(-1.0);
            let rc_s_aff = -lam;
            let (dxa, dla, _, dza, dza_s) = solve_pass(&rc_aff, rc_s_aff);
            let ap = STEP_FRACTION * max_step(&x, &dxa, lam, dla)?;
            let ad = STEP_FRACTION * max_step(&z, &dza, zeta, dza_s)?;
            let gap_aff = re_inner(&(&x + dxa.scale(ap)), &(&z + dza.scale(ad)))
                + (lam + ap * dla) * (zeta + ad * dza_s);
            let sigma = (gap_aff / gap).powi(3).clamp(1e-6, 0.999);

            // Corrector: recentre toward sigma * mu.
            let rc = hermitian_part(&(z_inv.scale(sigma * mu) - &x));
            let rc_s = if self.has_scalar { sigma * mu / zeta - lam } else { 0.0 };
            let (dx, dlam, dy, dz, dzeta) = solve_pass(&rc, rc_s);
            let ap = STEP_FRACTION * max_step(&x, &dx, lam, dlam)?;
            let ad = STEP_FRACTION * max_step(&z, &dz, zeta, dzeta)?;

            x += dx.scale(ap);
            lam += ap * dlam;
            y += dy.scale(ad);
            z += dz.scale(ad);
            zeta += ad * dzeta;
            x = hermitian_part(&x);
            z = hermitian_part(&z);
        }

        let mut rp = DVector::zeros(m);
        for k in 0..m {
            rp[k] = self.rhs[k] - re_inner(&self.mats[k], &x) - self.scalars[k] * lam;
        }
        Err(KernelError::SdpDiverged {
            iterations: opts.max_iters,
            primal: rp.norm(),
            dual: 0.0,
            gap: re_inner(&x, &z) + lam * zeta,
        })
    }

    fn unscale(&self, p: &SdpProblem, it: Iterate) -> SdpSolution {
        let x = it.x.scale(self.rhs_scale);
        let lam = it.lam * self.rhs_scale;
        let c = hermitian_part(&p.objective);
        let value = re_inner(&c, &x) + p.scalar_objective.unwrap_or(0.0) * lam;
        let mut dual = vec![0.0; p.constraints.len()];
        for k in 0..dual.len() {
            dual[k] = -self.obj_scale * it.y[k] / self.row_scale[k];
        }
        let dual_value: f64 = dual
            .iter()
            .zip(p.constraints.iter())
            .map(|(y, c)| y * c.rhs)
            .sum();
        SdpSolution {
            matrix: x,
            scalar: lam,
            value,
            dual,
            iterations: it.iterations,
            gap: (dual_value - value).abs(),
        }
    }
}

/// U f(D) U^H for an already computed eigendecomposition.
fn eig_power(eig: &super::eig::HermEig, p: f64) -> CMat {
    let n = eig.values.len();
    let mut out = CMat::zeros(n, n);
    for idx in 0..n {
        let lam = eig.values[idx].max(1e-300);
        let f = lam.powf(p);
        let v = eig.vectors.column(idx);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[i] * v[j].conj() * Complex64::new(f, 0.0);
            }
        }
    }
    out
}

/// Largest t with X + t dX >= 0 and lam + t dlam >= 0, capped at 1.
fn max_step(x: &CMat, dx: &CMat, lam: f64, dlam: f64) -> Result<f64, KernelError> {
    let x_eig = hermitian_eig(x)?;
    let x_inv_half = eig_power(&x_eig, -0.5);
    let scaled = hermitian_part(&(&x_inv_half * dx * &x_inv_half));
    let eig = hermitian_eig(&scaled)?;
    let min = eig.values[0];
    let mut t = if min < 0.0 { -1.0 / min } else { f64::INFINITY };
    if dlam < 0.0 && lam > 0.0 {
        t = t.min(-lam / dlam);
    }
    Ok(t.min(1.0 / STEP_FRACTION))
}

/// Final check of the returned solution against the original problem data.
fn verify(p: &SdpProblem, sol: &SdpSolution) -> Result<(), KernelError> {
    for (k, c) in p.constraints.iter().enumerate() {
        let lhs = re_inner(&hermitian_part(&c.matrix), &sol.matrix) + c.scalar * sol.scalar;
        let err = (lhs - c.rhs).abs();
        if err > VERIFY_TOL * (1.0 + c.rhs.abs() + lhs.abs()) {
            return Err(KernelError::SdpInaccurate(format!(
                "constraint {k} residual {err:.3e}"
            )));
        }
    }
    let eig = hermitian_eig(&sol.matrix)?;
    let scale = 1.0 + eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if eig.values[0] < -1e-8 * scale {
        return Err(KernelError::SdpInaccurate(format!(
            "solution eigenvalue {:.3e}",
            eig.values[0]
        )));
    }
    if sol.scalar < -1e-8 * (1.0 + sol.scalar.abs()) {
        return Err(KernelError::SdpInaccurate(format!(
            "scalar variable {:.3e}",
            sol.scalar
        )));
    }
    // The gap the interior point can certify is relative to the size of
    // the data times the iterate. When the optimum is a small difference
    // of large terms that is far coarser than the value itself.
    let work = hermitian_part(&p.objective).norm() * sol.matrix.norm();
    if sol.gap > VERIFY_TOL * (1.0 + sol.value.abs() + work) {
        return Err(KernelError::SdpInaccurate(format!(
            "duality gap {:.3e}",
            sol.gap
        )));
    }
    Ok(())
}
