//! Two-phase revised simplex for small dense linear programs.
//!
//! The solver keeps an explicit basis inverse, refreshed periodically by a
//! full refactorization, prices with Dantzig's rule, and falls back to
//! Bland's rule when degenerate pivots stall the objective. Every solve is
//! verified against its own dual before returning: primal feasibility,
//! reduced-cost sign, complementary slackness, and strong duality.

use nalgebra::{DMatrix, DVector};

use super::KernelError;

/// Absolute pivot threshold below which a column entry is treated as zero.
const PIVOT_TOL: f64 = 1e-11;
/// Consecutive non-improving pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 100;
/// Pivots between full basis refactorizations.
const REFACTOR_EVERY: usize = 64;

/// Bound on a single decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    /// x >= 0.
    NonNegative,
    /// Unrestricted sign.
    Free,
}

/// minimize objective . x  subject to
/// inequality rows (row . x <= rhs), equality rows (row . x = rhs), and
/// per-variable bounds.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<VarBound>,
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub max_iters: usize,
    /// Feasibility tolerance for the final verification pass.
    pub feas_tol: f64,
    /// Dual feasibility / strong duality tolerance for verification.
    pub dual_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            feas_tol: 1e-9,
            dual_tol: 1e-9,
        }
    }
}

/// Optimal basic solution with duals for the original rows
/// (inequalities first, then equalities).
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub dual: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, KernelError> {
    solve_lp_with(p, &LpOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution, KernelError> {
    validate(p)?;
    let mut tab = Tableau::build(p);
    let iters1 = tab.phase_one(opts)?;
    let iters2 = tab.phase_two(opts)?;
    let sol = tab.extract(p, iters1 + iters2);
    verify(p, &sol, &tab, opts)?;
    Ok(sol)
}

fn validate(p: &LpProblem) -> Result<(), KernelError> {
    let n = p.objective.len();
    if n == 0 {
        return Err(KernelError::InvalidProblem("no variables".into()));
    }
    if p.bounds.len() != n {
        return Err(KernelError::InvalidProblem(format!(
            "{} bounds for {} variables",
            p.bounds.len(),
            n
        )));
    }
    for (row, _) in p.inequalities.iter().chain(p.equalities.iter()) {
        if row.len() != n {
            return Err(KernelError::InvalidProblem(format!(
                "constraint row length {} for {} variables",
                row.len(),
                n
            )));
        }
    }
    for v in p
        .objective
        .iter()
        .chain(p.inequalities.iter().flat_map(|(r, h)| r.iter().chain(std::iter::once(h))))
        .chain(p.equalities.iter().flat_map(|(r, b)| r.iter().chain(std::iter::once(b))))
    {
        if !v.is_finite() {
            return Err(KernelError::InvalidProblem("non-finite coefficient".into()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Standard-form tableau
// ---------------------------------------------------------------------------

/// Standard-form data: minimize cost . z with mat z = rhs, z >= 0.
struct Tableau {
    mat: DMatrix<f64>,
    rhs: DVector<f64>,
    cost: Vec<f64>,
    /// Columns at or past this index are phase-1 artificials.
    art_start: usize,
    /// Original variable behind each standard column: (index, sign).
    origin: Vec<Option<(usize, f64)>>,
    /// Rows whose sign was flipped to make the right side nonnegative.
    flipped: Vec<bool>,
    basis: Vec<usize>,
    b_inv: DMatrix<f64>,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn build(p: &LpProblem) -> Self {
        let n = p.objective.len();
        let m = p.inequalities.len() + p.equalities.len();

        // Column layout: variable columns (split for free variables), then one
        // slack per inequality, then artificials as needed.
        let mut col_of_var: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut origin = Vec::new();
        let mut cost = Vec::new();
        for j in 0..n {
            let mut cols = vec![(origin.len(), 1.0)];
            origin.push(Some((j, 1.0)));
            cost.push(p.objective[j]);
            if p.bounds[j] == VarBound::Free {
                cols.push((origin.len(), -1.0));
                origin.push(Some((j, -1.0)));
                cost.push(-p.objective[j]);
            }
            col_of_var.push(cols);
        }
        let slack_start = origin.len();
        for _ in 0..p.inequalities.len() {
            origin.push(None);
            cost.push(0.0);
        }
        let art_start = origin.len();

        let mut rows: Vec<(&[f64], f64)> = Vec::with_capacity(m);
        for (r, h) in &p.inequalities {
            rows.push((r.as_slice(), *h));
        }
        for (r, b) in &p.equalities {
            rows.push((r.as_slice(), *b));
        }

        let mut flipped = vec![false; m];
        let mut rhs = DVector::zeros(m);
        let mut needs_artificial = Vec::new();
        for (i, (_, b)) in rows.iter().enumerate() {
            let flip = *b < 0.0;
            flipped[i] = flip;
            rhs[i] = if flip { -b } else { *b };
            let is_ineq = i < p.inequalities.len();
            // A flipped slack carries coefficient -1 and cannot start basic.
            needs_artificial.push(!is_ineq || flip);
        }
        let n_art = needs_artificial.iter().filter(|&&x| x).count();
        let total = art_start + n_art;

        let mut mat = DMatrix::zeros(m, total);
        for (i, (row, _)) in rows.iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            for j in 0..n {
                for &(col, csign) in &col_of_var[j] {
                    mat[(i, col)] = sign * csign * row[j];
                }
            }
            if i < p.inequalities.len() {
                mat[(i, slack_start + i)] = sign;
            }
        }
        let mut basis = vec![usize::MAX; m];
        let mut next_art = art_start;
        for i in 0..m {
            if needs_artificial[i] {
                mat[(i, next_art)] = 1.0;
                origin.push(None);
                cost.push(0.0);
                basis[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = slack_start + i;
            }
        }

        Self {
            mat,
            rhs,
            cost,
            art_start,
            origin,
            flipped,
            basis,
            b_inv: DMatrix::identity(m, m),
            pivots_since_refactor: 0,
        }
    }

    fn m(&self) -> usize {
        self.mat.nrows()
    }

    fn refactor(&mut self) -> Result<(), KernelError> {
        let m = self.m();
        let mut b = DMatrix::zeros(m, m);
        for (i, &col) in self.basis.iter().enumerate() {
            b.set_column(i, &self.mat.column(col));
        }
        self.b_inv = b
            .try_inverse()
            .ok_or_else(|| KernelError::LpInaccurate("singular basis during refactor".into()))?;
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn basic_solution(&self) -> DVector<f64> {
        &self.b_inv * &self.rhs
    }

    /// Runs simplex iterations on the given cost vector until optimal.
    /// Returns the iteration count; `Err` carries unboundedness.
    fn optimize(
        &mut self,
        cost: &[f64],
        allow_artificial: bool,
        opts: &LpOptions,
    ) -> Result<usize, KernelError> {
        let m = self.m();
        let ncols = self.mat.ncols();
        let cost_scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
        let rc_eps = 1e-10 * cost_scale;
        let mut iters = 0;
        let mut stalls = 0usize;
        let mut bland = false;
        let mut last_obj = f64::INFINITY;

        loop {
            if iters >= opts.max_iters {
                return Err(KernelError::LpInaccurate(format!(
                    "iteration limit {} reached",
                    opts.max_iters
                )));
            }
            // Duals for the current basis.
            let mut cb = DVector::zeros(m);
            for (i, &col) in self.basis.iter().enumerate() {
                cb[i] = cost[col];
            }
            let y = self.b_inv.tr_mul(&cb);

            // Entering column.
            let mut entering = None;
            let mut best_rc = -rc_eps;
            for j in 0..ncols {
                if !allow_artificial && j >= self.art_start {
                    continue;
                }
                if self.basis.contains(&j) {
                    continue;
                }
                let rc = cost[j] - y.dot(&self.mat.column(j));
                if bland {
                    if rc < -rc_eps {
                        entering = Some(j);
                        break;
                    }
                } else if rc < best_rc {
                    best_rc = rc;
                    entering = Some(j);
                }
            }
            let Some(q) = entering else {
                return Ok(iters);
            };

            // Ratio test.
            let d = &self.b_inv * self.mat.column(q);
            let xb = self.basic_solution();
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if d[i] > PIVOT_TOL {
                    let ratio = (xb[i].max(0.0)) / d[i];
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12
                                || (ratio < best + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, step)) = leave else {
                let variable = self.origin[q].map(|(v, _)| v).unwrap_or(q);
                return Err(KernelError::LpUnbounded { variable });
            };

            // Pivot: replace basis row r with column q.
            self.basis[r] = q;
            let dr = d[r];
            let pivot_row = self.b_inv.row(r) / dr;
            for i in 0..m {
                if i != r {
                    let f = d[i];
                    if f != 0.0 {
                        let update = &pivot_row * f;
                        let mut row = self.b_inv.row_mut(i);
                        row -= update.clone();
                    }
                }
            }
            self.b_inv.set_row(r, &pivot_row);
            self.pivots_since_refactor += 1;
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            iters += 1;

            // Stall detection drives the Bland fallback.
            let obj = {
                let xb = self.basic_solution();
                self.basis
                    .iter()
                    .enumerate()
                    .map(|(i, &col)| cost[col] * xb[i])
                    .sum::<f64>()
            };
            if step <= 1e-12 || obj > last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stalls += 1;
                if stalls >= STALL_LIMIT {
                    bland = true;
                }
            } else {
                stalls = 0;
            }
            last_obj = obj;
        }
    }

    fn phase_one(&mut self, opts: &LpOptions) -> Result<usize, KernelError> {
        let n_art = self.mat.ncols() - self.art_start;
        if n_art == 0 {
            return Ok(0);
        }
        let mut cost = vec![0.0; self.mat.ncols()];
        for c in cost.iter_mut().skip(self.art_start) {
            *c = 1.0;
        }
        let iters = match self.optimize(&cost, true, opts) {
            Ok(it) => it,
            Err(KernelError::LpUnbounded { .. }) => {
                return Err(KernelError::LpInaccurate(
                    "phase 1 reported unbounded".into(),
                ))
            }
            Err(e) => return Err(e),
        };
        let xb = self.basic_solution();
        let residual: f64 = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &col)| col >= self.art_start)
            .map(|(i, _)| xb[i].max(0.0))
            .sum();
        let scale = 1.0 + self.rhs.amax();
        if residual > 1e-8 * scale {
            return Err(KernelError::LpInfeasible { residual });
        }
        self.evict_artificials()?;
        Ok(iters)
    }

    /// Pivots basic artificials (at level zero) out of the basis where a
    /// structural column is available; redundant rows keep their artificial.
    fn evict_artificials(&mut self) -> Result<(), KernelError> {
        let m = self.m();
        for r in 0..m {
            if self.basis[r] < self.art_start {
                continue;
            }
            let row = self.b_inv.row(r).clone_owned();
            let mut replacement = None;
            for j in 0..self.art_start {
                if self.basis.contains(&j) {
                    continue;
                }
                let piv = row.transpose().dot(&self.mat.column(j));
                if piv.abs() > 1e-8 {
                    replacement = Some((j, piv));
                    break;
                }
            }
            if let Some((j, piv)) = replacement {
                let d = &self.b_inv * self.mat.column(j);
                self.basis[r] = j;
                let pivot_row = self.b_inv.row(r) / piv;
                for i in 0..m {
                    if i != r {
                        let f = d[i];
                        if f != 0.0 {
                            let update = &pivot_row * f;
                            let mut rowm = self.b_inv.row_mut(i);
                            rowm -= update.clone();
                        }
                    }
                }
                self.b_inv.set_row(r, &pivot_row);
            }
        }
        self.refactor()
    }

    fn phase_two(&mut self, opts: &LpOptions) -> Result<usize, KernelError> {
        let cost = self.cost.clone();
        self.optimize(&cost, false, opts)
    }

    fn extract(&self, p: &LpProblem, iterations: usize) -> LpSolution {
        let xb = self.basic_solution();
        let mut x = vec![0.0; p.objective.len()];
        for (i, &col) in self.basis.iter().enumerate() {
            if let Some((var, sign)) = self.origin[col] {
                x[var] += sign * xb[i];
            }
        }
        let value = p
            .objective
            .iter()
            .zip(x.iter())
            .map(|(c, v)| c * v)
            .sum::<f64>();

        let m = self.m();
        let mut cb = DVector::zeros(m);
        for (i, &col) in self.basis.iter().enumerate() {
            cb[i] = self.cost[col];
        }
        let y = self.b_inv.tr_mul(&cb);
        let mut dual = vec![0.0; m];
        for i in 0..m {
            dual[i] = if self.flipped[i] { -y[i] } else { y[i] };
        }
        LpSolution {
            x,
            value,
            dual,
            iterations,
        }
    }
}

/// Checks the returned solution against the problem and its dual.
fn verify(
    p: &LpProblem,
    sol: &LpSolution,
    tab: &Tableau,
    opts: &LpOptions,
) -> Result<(), KernelError> {
    for (k, (row, h)) in p.inequalities.iter().enumerate() {
        let lhs: f64 = row.iter().zip(sol.x.iter()).map(|(a, v)| a * v).sum();
        if lhs > h + opts.feas_tol * (1.0 + h.abs() + lhs.abs()) {
            return Err(KernelError::LpInaccurate(format!(
                "inequality {k} violated by {:.3e}",
                lhs - h
            )));
        }
    }
    for (k, (row, b)) in p.equalities.iter().enumerate() {
        let lhs: f64 = row.iter().zip(sol.x.iter()).map(|(a, v)| a * v).sum();
        if (lhs - b).abs() > opts.feas_tol * (1.0 + b.abs() + lhs.abs()) {
            return Err(KernelError::LpInaccurate(format!(
                "equality {k} off by {:.3e}",
                lhs - b
            )));
        }
    }
    for (j, (&bound, &xj)) in p.bounds.iter().zip(sol.x.iter()).enumerate() {
        if bound == VarBound::NonNegative && xj < -opts.feas_tol {
            return Err(KernelError::LpInaccurate(format!(
                "variable {j} negative: {xj:.3e}"
            )));
        }
    }

    // Dual feasibility and complementary slackness on the standard form.
    let m = tab.m();
    let mut cb = DVector::zeros(m);
    for (i, &col) in tab.basis.iter().enumerate() {
        cb[i] = tab.cost[col];
    }
    let y = tab.b_inv.tr_mul(&cb);
    let xb = tab.basic_solution();
    let cost_scale = tab.cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let rhs_scale = 1.0 + tab.rhs.amax();
    for j in 0..tab.art_start {
        let rc = tab.cost[j] - y.dot(&tab.mat.column(j));
        if rc < -opts.dual_tol * cost_scale * rhs_scale {
            return Err(KernelError::LpInaccurate(format!(
                "reduced cost {rc:.3e} on column {j}"
            )));
        }
        if let Some(i) = tab.basis.iter().position(|&b| b == j) {
            if rc.abs() > opts.dual_tol * cost_scale * rhs_scale && xb[i] > opts.feas_tol {
                return Err(KernelError::LpInaccurate(format!(
                    "complementary slackness violated on column {j}: rc {rc:.3e}, level {:.3e}",
                    xb[i]
                )));
            }
        }
    }
    let dual_obj = y.dot(&tab.rhs);
    if (dual_obj - sol.value).abs() > opts.dual_tol * (1.0 + sol.value.abs()) * rhs_scale {
        return Err(KernelError::LpInaccurate(format!(
            "duality gap {:.3e}",
            dual_obj - sol.value
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    #[test]
    fn maximize_single_bounded_variable() {
        // maximize x s.t. x <= 3  ->  minimize -x
        let p = LpProblem {
            objective: vec![-1.0],
            inequalities: vec![(vec![1.0], 3.0)],
            equalities: vec![],
            bounds: vec![VarBound::NonNegative],
        };
        let s = solve_lp(&p).unwrap();
        assert_close(s.x[0], 3.0, 1e-9, "x");
        assert_close(s.value, -3.0, 1e-9, "value");
    }

    #[test]
    fn equality_with_free_variable() {
        // minimize y s.t. y = -5, y free
        let p = LpProblem {
            objective: vec![1.0],
            inequalities: vec![],
            equalities: vec![(vec![1.0], -5.0)],
            bounds: vec![VarBound::Free],
        };
        let s = solve_lp(&p).unwrap();
        assert_close(s.x[0], -5.0, 1e-9, "free variable");
    }

    #[test]
    fn classic_two_variable_program() {
        // minimize -3x - 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let p = LpProblem {
            objective: vec![-3.0, -5.0],
            inequalities: vec![
                (vec![1.0, 0.0], 4.0),
                (vec![0.0, 2.0], 12.0),
                (vec![3.0, 2.0], 18.0),
            ],
            equalities: vec![],
            bounds: vec![VarBound::NonNegative; 2],
        };
        let s = solve_lp(&p).unwrap();
        assert_close(s.value, -36.0, 1e-8, "optimum");
        assert_close(s.x[0], 2.0, 1e-8, "x");
        assert_close(s.x[1], 6.0, 1e-8, "y");
    }

    #[test]
    fn detects_infeasible() {
        let p = LpProblem {
            objective: vec![1.0],
            inequalities: vec![(vec![1.0], 1.0)],
            equalities: vec![(vec![1.0], 2.0)],
            bounds: vec![VarBound::NonNegative],
        };
        assert!(matches!(solve_lp(&p), Err(KernelError::LpInfeasible { .. })));
    }

    #[test]
    fn detects_unbounded() {
        let p = LpProblem {
            objective: vec![-1.0],
            inequalities: vec![],
            equalities: vec![],
            bounds: vec![VarBound::NonNegative],
        };
        assert!(matches!(
            solve_lp(&p),
            Err(KernelError::LpUnbounded { variable: 0 })
        ));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many redundant rows through the origin force degenerate pivots.
        let p = LpProblem {
            objective: vec![-1.0, -1.0],
            inequalities: vec![
                (vec![1.0, -1.0], 0.0),
                (vec![2.0, -2.0], 0.0),
                (vec![1.0, 0.0], 1.0),
                (vec![0.0, 1.0], 1.0),
                (vec![1.0, 1.0], 2.0),
            ],
            equalities: vec![],
            bounds: vec![VarBound::NonNegative; 2],
        };
        let s = solve_lp(&p).unwrap();
        assert_close(s.value, -2.0, 1e-8, "degenerate optimum");
    }

    #[test]
    fn dual_values_certify_optimum() {
        let p = LpProblem {
            objective: vec![2.0, 3.0],
            inequalities: vec![(vec![-1.0, -1.0], -4.0)],
            equalities: vec![],
            bounds: vec![VarBound::NonNegative; 2],
        };
        let s = solve_lp(&p).unwrap();
        assert_close(s.value, 8.0, 1e-8, "cover optimum");
        // One binding row, dual -2 under the <= sign convention used here.
        let dual_obj = s.dual[0] * -4.0;
        assert_close(dual_obj, s.value, 1e-8, "dual objective");
    }
}
