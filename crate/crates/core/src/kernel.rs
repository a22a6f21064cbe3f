//! Dense log-barrier interior-point solver for small convex max-min problems.
//!
//! Solves
//!
//! ```text
//! maximize  min_k f_k(x)
//! s.t.      g_i(x) <= 0,   x_j >= lb_j (where given)
//! ```
//!
//! with concave `f_k` and convex `g_i`, through the epigraph form
//! `maximize t s.t. t - f_k(x) <= 0`. Each centering step minimizes
//! `-s t - sum log(-c(z))` by damped Newton with backtracking; `s` grows
//! geometrically until the duality-gap bound `m / s` is below tolerance.
//! A phase-I problem (minimize the largest violation) recovers a strictly
//! feasible start when the supplied one is not.

use nalgebra::{Cholesky, DMatrix, DVector};

/// A twice-differentiable scalar function of the decision vector.
pub trait Term: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// `coeffs . x + constant`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub coeffs: DVector<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        Self {
            coeffs: DVector::from_vec(coeffs),
            constant,
        }
    }
}

impl Term for Affine {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.dot(x) + self.constant
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.coeffs.clone()
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
}

pub struct MaxMinProblem {
    pub dim: usize,
    /// Concave terms; the objective is their minimum.
    pub objectives: Vec<Box<dyn Term>>,
    /// Convex constraints `g(x) <= 0`.
    pub constraints: Vec<Box<dyn Term>>,
    /// Optional lower bound per variable.
    pub lower_bounds: Vec<Option<f64>>,
    pub start: DVector<f64>,
}

impl MaxMinProblem {
    pub fn new(dim: usize, start: DVector<f64>) -> Self {
        assert_eq!(start.len(), dim, "start point has wrong dimension");
        Self {
            dim,
            objectives: Vec::new(),
            constraints: Vec::new(),
            lower_bounds: vec![None; dim],
            start,
        }
    }

    pub fn objective(mut self, f: impl Term + 'static) -> Self {
        self.objectives.push(Box::new(f));
        self
    }

    pub fn constraint(mut self, g: impl Term + 'static) -> Self {
        self.constraints.push(Box::new(g));
        self
    }

    pub fn lower_bound(mut self, j: usize, lb: f64) -> Self {
        self.lower_bounds[j] = Some(lb);
        self
    }

    /// Number of inequality rows of the epigraph problem.
    pub fn num_rows(&self) -> usize {
        self.objectives.len()
            + self.constraints.len()
            + self.lower_bounds.iter().filter(|b| b.is_some()).count()
    }

    /// `min_k f_k(x)`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.objectives
            .iter()
            .map(|f| f.value(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest positive violation over constraints and bounds.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let g = self.constraints.iter().map(|g| g.value(x));
        let lb = self
            .lower_bounds
            .iter()
            .enumerate()
            .filter_map(|(j, b)| b.map(|b| b - x[j]));
        g.chain(lb).fold(
            0.0,
            |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed constraint violation of a converged point.
    pub feasibility: f64,
    /// Allowed KKT residual of a converged point.
    pub optimality: f64,
    /// Stop once `m / s` falls below this.
    pub gap: f64,
    /// Centering stops when half the squared Newton decrement is below this.
    pub newton: f64,
    pub initial_barrier: f64,
    pub barrier_growth: f64,
    pub ls_alpha: f64,
    pub ls_beta: f64,
    pub max_newton_per_center: usize,
    pub max_newton_total: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            optimality: 1e-6,
            gap: 1e-8,
            newton: 1e-10,
            initial_barrier: 1.0,
            barrier_growth: 10.0,
            ls_alpha: 0.3,
            ls_beta: 0.5,
            max_newton_per_center: 200,
            max_newton_total: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelStatus {
    Converged,
    MaxIterations,
    InfeasibleStart,
}

#[derive(Debug, Clone)]
pub struct KernelResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub max_violation: f64,
    pub kkt_residual: f64,
    /// Ordered as objectives, constraints, then present lower bounds.
    pub multipliers: Vec<f64>,
    pub newton_iterations: usize,
    pub phase1_iterations: usize,
    pub outer_iterations: usize,
    pub status: KernelStatus,
}

/// One inequality row `c(z) <= 0` of a barrier problem over `z`.
enum Row<'a> {
    /// `t - f(x)`; `t` sits at index `t_idx`.
    Epigraph(&'a dyn Term, usize),
    /// `g(x) - r`, with the phase-I slack `r` at `r_idx` when present.
    Constraint(&'a dyn Term, Option<usize>),
    /// `lb - x_j - r`.
    Lower(usize, f64, Option<usize>),
    /// `x_j - ub`.
    Upper(usize, f64),
}

impl Row<'_> {
    fn value(&self, z: &DVector<f64>, n: usize) -> f64 {
        let x = z.rows(0, n).into_owned();
        match *self {
            Row::Epigraph(f, t) => z[t] - f.value(&x),
            Row::Constraint(g, r) => g.value(&x) - r.map_or(0.0, |r| z[r]),
            Row::Lower(j, lb, r) => lb - z[j] - r.map_or(0.0, |r| z[r]),
            Row::Upper(j, ub) => z[j] - ub,
        }
    }

    /// Gradient and Hessian in `z` space.
    fn derivatives(&self, z: &DVector<f64>, n: usize) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let dim = z.len();
        let x = z.rows(0, n).into_owned();
        let mut grad = DVector::zeros(dim);
        match *self {
            Row::Epigraph(f, t) => {
                grad.rows_mut(0, n).copy_from(&(-f.gradient(&x)));
                grad[t] = 1.0;
                let mut h = DMatrix::zeros(dim, dim);
                h.view_mut((0, 0), (n, n)).copy_from(&(-f.hessian(&x)));
                (grad, Some(h))
            }
            Row::Constraint(g, r) => {
                grad.rows_mut(0, n).copy_from(&g.gradient(&x));
                if let Some(r) = r {
                    grad[r] = -1.0;
                }
                let mut h = DMatrix::zeros(dim, dim);
                h.view_mut((0, 0), (n, n)).copy_from(&g.hessian(&x));
                (grad, Some(h))
            }
            Row::Lower(j, _, r) => {
                grad[j] = -1.0;
                if let Some(r) = r {
                    grad[r] = -1.0;
                }
                (grad, None)
            }
            Row::Upper(j, _) => {
                grad[j] = 1.0;
                (grad, None)
            }
        }
    }
}

/// Barrier problem `minimize s * w.z - sum log(-c_i(z))`.
struct Barrier<'a> {
    rows: Vec<Row<'a>>,
    /// Number of original variables.
    n: usize,
    /// Linear objective (to be minimized).
    weight: DVector<f64>,
}

impl Barrier<'_> {
    fn row_values(&self, z: &DVector<f64>) -> Vec<f64> {
        self.rows.iter().map(|r| r.value(z, self.n)).collect()
    }

    fn strictly_feasible(&self, z: &DVector<f64>) -> bool {
        self.rows.iter().all(|r| {
            let v = r.value(z, self.n);
            v.is_finite() && v < 0.0
        })
    }

    /// `phi(trial) - phi(z)` evaluated term by term so that the change is not
    /// lost against the magnitude of `phi`.
    fn phi_change(&self, base: &[f64], z: &DVector<f64>, trial: &DVector<f64>, s: f64) -> f64 {
        let mut acc = s * self.weight.dot(&(trial - z));
        for (r, &c0) in self.rows.iter().zip(base) {
            let c = r.value(trial, self.n);
            if !(c.is_finite() && c < 0.0) {
                return f64::INFINITY;
            }
            acc -= (c / c0).ln();
        }
        acc
    }

    fn grad_hess(&self, z: &DVector<f64>, s: f64) -> (DVector<f64>, DMatrix<f64>) {
        let dim = z.len();
        let mut g = &self.weight * s;
        let mut h = DMatrix::zeros(dim, dim);
        for r in &self.rows {
            let c = r.value(z, self.n);
            let (dc, d2c) = r.derivatives(z, self.n);
            let inv = 1.0 / (-c);
            g += &dc * inv;
            h += (&dc * dc.transpose()) * (inv * inv);
            if let Some(d2c) = d2c {
                h += d2c * inv;
            }
        }
        (g, h)
    }

    /// Lagrange multipliers implied by the central path at `z`.
    fn multipliers(&self, z: &DVector<f64>, s: f64) -> Vec<f64> {
        self.row_values(z).iter().map(|c| 1.0 / (s * -c)).collect()
    }

    /// Runs Newton centering at barrier weight `s`; returns the number of
    /// Newton steps taken and whether the decrement criterion was met.
    fn center(
        &self,
        z: &mut DVector<f64>,
        s: f64,
        tol: &Tolerances,
        budget: usize,
        mut stop: impl FnMut(&DVector<f64>) -> bool,
    ) -> (usize, bool) {
        let mut steps = 0;
        while steps < budget {
            let (g, h) = self.grad_hess(z, s);
            let Some(dz) = newton_direction(&g, &h) else {
                return (steps, false);
            };
            let slope = g.dot(&dz);
            // below a few ulps of the barrier value the line search can no
            // longer resolve the decrease
            let floor = PHI_ULPS * f64::EPSILON * (s * self.weight.dot(z)).abs();
            if -slope / 2.0 <= tol.newton.max(floor) {
                return (steps, true);
            }
            let base = self.row_values(z);
            let mut step = 1.0;
            loop {
                let trial = &*z + &dz * step;
                if self.phi_change(&base, z, &trial, s) <= tol.ls_alpha * step * slope {
                    *z = trial;
                    break;
                }
                step *= tol.ls_beta;
                if step < 1e-16 {
                    return (steps, false);
                }
            }
            steps += 1;
            if stop(z) {
                return (steps, true);
            }
        }
        (steps, false)
    }
}

/// Solves `h dz = -g` with Jacobi scaling and a Cholesky factorization,
/// regularizing the diagonal if the factorization fails.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = g.len();
    let d = DVector::from_iterator(
        n,
        h.diagonal().iter().map(|&v| {
            if v > 0.0 && v.is_finite() {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        }),
    );
    let mut scaled = h.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let rhs = -g.component_mul(&d);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut m = scaled.clone();
        for i in 0..n {
            m[(i, i)] += reg;
        }
        if let Some(chol) = Cholesky::new(m) {
            let y = chol.solve(&rhs);
            if y.iter().all(|v| v.is_finite()) {
                return Some(y.component_mul(&d));
            }
        }
        reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
    }
    None
}

fn epigraph_rows(problem: &MaxMinProblem) -> Vec<Row<'_>> {
    let t = problem.dim;
    let mut rows: Vec<Row<'_>> = problem
        .objectives
        .iter()
        .map(|f| Row::Epigraph(f.as_ref(), t))
        .collect();
    rows.extend(
        problem
            .constraints
            .iter()
            .map(|g| Row::Constraint(g.as_ref(), None)),
    );
    rows.extend(
        problem
            .lower_bounds
            .iter()
            .enumerate()
            .filter_map(|(j, b)| b.map(|b| Row::Lower(j, b, None))),
    );
    rows
}

/// Centering stops once the Newton decrement is this many ulps of the
/// linear part of the barrier function.
const PHI_ULPS: f64 = 8.0;

/// Half-width of the phase-I box, relative to `max(|x0_j|, 1)`.
const PHASE_ONE_BOX: f64 = 1e3;

/// Minimizes the largest constraint violation starting from `x0`, stopping
/// as soon as every constraint holds strictly.
fn phase_one(
    problem: &MaxMinProblem,
    x0: &DVector<f64>,
    tol: &Tolerances,
) -> (Option<DVector<f64>>, usize) {
    let n = problem.dim;
    let r = n;
    let mut rows: Vec<Row<'_>> = problem
        .constraints
        .iter()
        .map(|g| Row::Constraint(g.as_ref(), Some(r)))
        .collect();
    rows.extend(
        problem
            .lower_bounds
            .iter()
            .enumerate()
            .filter_map(|(j, b)| b.map(|b| Row::Lower(j, b, Some(r)))),
    );
    // a box around the start keeps the barrier bounded below when the
    // feasible set is unbounded in some direction
    for j in 0..n {
        let w = PHASE_ONE_BOX * x0[j].abs().max(1.0);
        rows.push(Row::Lower(j, x0[j] - w, None));
        rows.push(Row::Upper(j, x0[j] + w));
    }
    let mut weight = DVector::zeros(n + 1);
    weight[r] = 1.0;
    let barrier = Barrier { rows, n, weight };

    let worst = problem.max_violation(x0);
    if !worst.is_finite() {
        return (None, 0);
    }
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x0);
    z[r] = worst.abs().max(1.0) * 1.5 + worst;

    let m = barrier.rows.len() as f64;
    let mut s = tol.initial_barrier;
    let mut total = 0;
    loop {
        let budget = tol.max_newton_per_center.min(tol.max_newton_total - total);
        let (steps, _) = barrier.center(&mut z, s, tol, budget, |z| z[r] < 0.0);
        total += steps;
        if z[r] < 0.0 {
            return (Some(z.rows(0, n).into_owned()), total);
        }
        if m / s < tol.gap || total >= tol.max_newton_total {
            return (None, total);
        }
        s *= tol.barrier_growth;
    }
}

pub fn solve_maxmin(problem: &MaxMinProblem, tol: &Tolerances) -> KernelResult {
    let n = problem.dim;
    assert!(
        !problem.objectives.is_empty(),
        "need at least one objective term"
    );

    let infeasible = |x: DVector<f64>, phase1: usize| KernelResult {
        value: problem.value(&x),
        max_violation: problem.max_violation(&x),
        kkt_residual: f64::INFINITY,
        multipliers: vec![0.0; problem.num_rows()],
        newton_iterations: 0,
        phase1_iterations: phase1,
        outer_iterations: 0,
        status: KernelStatus::InfeasibleStart,
        x,
    };

    let strictly_inside = |x: &DVector<f64>| {
        problem.constraints.iter().all(|g| {
            let v = g.value(x);
            v.is_finite() && v < 0.0
        }) && problem
            .lower_bounds
            .iter()
            .enumerate()
            .all(|(j, b)| b.is_none_or(|b| x[j] > b))
    };

    let mut phase1 = 0;
    let x0 = if strictly_inside(&problem.start) {
        problem.start.clone()
    } else {
        match phase_one(problem, &problem.start, tol) {
            (Some(x), it) => {
                phase1 = it;
                x
            }
            (None, it) => return infeasible(problem.start.clone(), it),
        }
    };

    let f0 = problem.value(&x0);
    if !f0.is_finite() {
        return infeasible(x0, phase1);
    }
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(&x0);
    z[n] = f0 - f0.abs().max(1.0);

    let mut weight = DVector::zeros(n + 1);
    weight[n] = -1.0;
    let barrier = Barrier {
        rows: epigraph_rows(problem),
        n,
        weight,
    };
    debug_assert!(barrier.strictly_feasible(&z));

    let m = barrier.rows.len() as f64;
    let mut s = tol.initial_barrier;
    let mut total = 0;
    let mut outer = 0;
    let mut centered = true;
    loop {
        let budget = tol.max_newton_per_center.min(tol.max_newton_total - total);
        let (steps, ok) = barrier.center(&mut z, s, tol, budget, |_| false);
        total += steps;
        outer += 1;
        centered = centered && ok;
        if m / s < tol.gap || total >= tol.max_newton_total {
            break;
        }
        s *= tol.barrier_growth;
    }

    let mut x = z.rows(0, n).into_owned();
    let central = barrier.multipliers(&z, s);
    let refined = refine_multipliers(problem, &x, &central);
    let polished = polish(problem, &barrier.rows, &z, &central, tol);
    let (mut kkt, mut multipliers) = {
        let a = kkt_residual(problem, &x, &central);
        let b = kkt_residual(problem, &x, &refined);
        if b < a {
            (b, refined)
        } else {
            (a, central)
        }
    };
    if let Some((xp, lp, kp)) = polished {
        if kp < kkt {
            (x, kkt, multipliers) = (xp, kp, lp);
        }
    }
    let max_violation = problem.max_violation(&x);
    let converged = m / s < tol.gap && max_violation <= tol.feasibility && kkt <= tol.optimality;
    KernelResult {
        value: problem.value(&x),
        max_violation,
        kkt_residual: kkt,
        multipliers,
        newton_iterations: total,
        phase1_iterations: phase1,
        outer_iterations: outer,
        status: if converged {
            KernelStatus::Converged
        } else {
            KernelStatus::MaxIterations
        },
        x,
    }
}

/// Newton iterations on the active-set KKT system after the barrier loop.
const POLISH_STEPS: usize = 8;
/// Bounds on `lambda / (-c)` separating certainly active and certainly
/// inactive rows in the polish.
const CLEARLY_ACTIVE: f64 = 1e8;
const CLEARLY_INACTIVE: f64 = 1e-2;
/// Largest number of undecided rows whose subsets are enumerated.
const MAX_UNSURE: usize = 6;

/// Rows treated as active: on the central path `lambda_i (-c_i) = 1 / s`,
/// so this selects rows with `lambda_i > 1 / sqrt(s)`.
fn active_rows(rows: &[Row<'_>], n: usize, z: &DVector<f64>, multipliers: &[f64]) -> Vec<usize> {
    (0..rows.len())
        .filter(|&i| multipliers[i] > -rows[i].value(z, n))
        .collect()
}

/// Candidate active sets for the polish. Rows with `lambda / (-c)` above
/// `CLEARLY_ACTIVE` are always in, rows below `CLEARLY_INACTIVE` never;
/// every subset of the rows in between is tried.
fn candidate_active_sets(
    rows: &[Row<'_>],
    n: usize,
    z: &DVector<f64>,
    multipliers: &[f64],
) -> Vec<Vec<usize>> {
    let ratio = |i: usize| multipliers[i] / (-rows[i].value(z, n)).max(f64::MIN_POSITIVE);
    let sure: Vec<usize> = (0..rows.len())
        .filter(|&i| ratio(i) >= CLEARLY_ACTIVE)
        .collect();
    let unsure: Vec<usize> = (0..rows.len())
        .filter(|&i| (CLEARLY_INACTIVE..CLEARLY_ACTIVE).contains(&ratio(i)))
        .collect();
    if unsure.len() > MAX_UNSURE {
        return vec![active_rows(rows, n, z, multipliers)];
    }
    (0..1usize << unsure.len())
        .map(|mask| {
            let mut set = sure.clone();
            set.extend(
                unsure
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &i)| i),
            );
            set.sort_unstable();
            set
        })
        .collect()
}

/// Refines a barrier solution by Newton's method on the KKT equations of a
/// guessed active set, treated as equalities. Each candidate set is tried;
/// among results that keep the multipliers non-negative and the point
/// feasible, the one with the smallest KKT residual wins.
fn polish(
    problem: &MaxMinProblem,
    rows: &[Row<'_>],
    z0: &DVector<f64>,
    multipliers: &[f64],
    tol: &Tolerances,
) -> Option<(DVector<f64>, Vec<f64>, f64)> {
    let n = problem.dim;
    let mut best: Option<(DVector<f64>, Vec<f64>, f64)> = None;
    for active in candidate_active_sets(rows, n, z0, multipliers) {
        let Some((z, lambda)) = polish_active(rows, n, z0, multipliers, &active) else {
            continue;
        };
        if lambda.iter().any(|&l| l < 0.0) {
            continue;
        }
        let x = z.rows(0, n).into_owned();
        let v = problem.max_violation(&x);
        if v.is_nan() || v > tol.feasibility {
            continue;
        }
        let mut full = vec![0.0; rows.len()];
        for (a, &i) in active.iter().enumerate() {
            full[i] = lambda[a];
        }
        let kkt = kkt_residual(problem, &x, &full);
        if best.as_ref().is_none_or(|b| kkt < b.2) {
            best = Some((x, full, kkt));
        }
    }
    best
}

fn polish_active(
    rows: &[Row<'_>],
    n: usize,
    z0: &DVector<f64>,
    multipliers: &[f64],
    active: &[usize],
) -> Option<(DVector<f64>, Vec<f64>)> {
    let dim = n + 1;
    let k = active.len();
    let mut z = z0.clone();
    let mut lambda: Vec<f64> = active.iter().map(|&i| multipliers[i]).collect();
    let mut best: Option<(f64, DVector<f64>, Vec<f64>)> = None;
    for _ in 0..=POLISH_STEPS {
        let mut kkt = DMatrix::zeros(dim + k, dim + k);
        let mut residual = DVector::zeros(dim + k);
        residual[n] = -1.0;
        for (a, &i) in active.iter().enumerate() {
            let (g, h) = rows[i].derivatives(&z, n);
            residual.rows_mut(0, dim).axpy(lambda[a], &g, 1.0);
            if let Some(h) = h {
                let mut block = kkt.view_mut((0, 0), (dim, dim));
                block += h * lambda[a];
            }
            kkt.view_mut((0, dim + a), (dim, 1)).copy_from(&g);
            kkt.view_mut((dim + a, 0), (1, dim))
                .copy_from(&g.transpose());
            residual[dim + a] = rows[i].value(&z, n);
        }
        if residual.iter().any(|v| !v.is_finite()) {
            break;
        }
        let norm = residual.norm();
        if best.as_ref().is_none_or(|b| norm < b.0) {
            best = Some((norm, z.clone(), lambda.clone()));
        }
        if norm < 1e-14 {
            break;
        }
        // symmetric equilibration before the least-squares solve
        let scale = DVector::from_iterator(
            dim + k,
            kkt.row_iter().map(|r| {
                let m = r.amax();
                if m > 0.0 {
                    1.0 / m.sqrt()
                } else {
                    1.0
                }
            }),
        );
        for i in 0..dim + k {
            for j in 0..dim + k {
                kkt[(i, j)] *= scale[i] * scale[j];
            }
        }
        let svd = kkt.svd(true, true);
        let cutoff = 1e-14 * svd.singular_values.max();
        let Ok(y) = svd.solve(&(-residual.component_mul(&scale)), cutoff) else {
            break;
        };
        let step = y.component_mul(&scale);
        z += step.rows(0, dim);
        for a in 0..k {
            lambda[a] += step[dim + a];
        }
    }
    best.map(|(_, z, l)| (z, l))
}

/// Re-fits the multipliers of active rows by non-negative least squares on
/// the stationarity condition.
///
/// Central-path multipliers of nearly active rows with large curvature (a
/// bound at 1e-11, say) carry errors the Newton decrement cannot see; a
/// direct fit removes them.
fn refine_multipliers(problem: &MaxMinProblem, x: &DVector<f64>, central: &[f64]) -> Vec<f64> {
    let n = problem.dim;
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x);
    z[n] = problem.value(x);
    let rows = epigraph_rows(problem);
    let grads: Vec<DVector<f64>> = rows.iter().map(|r| r.derivatives(&z, n).0).collect();

    let mut active = active_rows(&rows, n, &z, central);
    let mut out = central.to_vec();
    for _ in 0..rows.len() {
        let mut rest = DVector::zeros(n + 1);
        rest[n] = -1.0;
        for (i, g) in grads.iter().enumerate() {
            if !active.contains(&i) {
                rest += g * out[i];
            }
        }
        if active.is_empty() {
            break;
        }
        let mut jac = DMatrix::zeros(n + 1, active.len());
        for (k, &i) in active.iter().enumerate() {
            jac.set_column(k, &grads[i]);
        }
        let Ok(fit) = jac.svd(true, true).solve(&(-rest), 1e-14) else {
            return central.to_vec();
        };
        let negative: Vec<usize> = active
            .iter()
            .zip(fit.iter())
            .filter(|(_, &v)| v < 0.0)
            .map(|(&i, _)| i)
            .collect();
        for (&i, &v) in active.iter().zip(fit.iter()) {
            out[i] = v.max(0.0);
        }
        if negative.is_empty() {
            break;
        }
        active.retain(|i| !negative.contains(i));
    }
    out
}

/// Norm of the stationarity and complementary-slackness residuals of the
/// epigraph problem at `x` (with `t = min_k f_k(x)`).
///
/// Stationarity is divided by the largest multiplier-weighted constraint
/// gradient (at least 1), so the residual does not grow with the units of
/// the rows.
///
/// `multipliers` are ordered as objectives, constraints, then present lower
/// bounds.
pub fn kkt_residual(problem: &MaxMinProblem, x: &DVector<f64>, multipliers: &[f64]) -> f64 {
    let n = problem.dim;
    assert_eq!(multipliers.len(), problem.num_rows());
    let t = problem.value(x);
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x);
    z[n] = t;

    let rows = epigraph_rows(problem);
    // d/dz (-t) + sum lambda_i grad c_i
    let mut stationarity = DVector::zeros(n + 1);
    stationarity[n] = -1.0;
    let mut slackness = 0.0;
    let mut scale = 1.0_f64;
    for (row, &lambda) in rows.iter().zip(multipliers) {
        let (grad, _) = row.derivatives(&z, n);
        scale = scale.max(lambda.abs() * grad.amax());
        stationarity += grad * lambda;
        let c = row.value(&z, n);
        slackness += (lambda * c).powi(2);
    }
    (stationarity.norm_squared() / (scale * scale) + slackness).sqrt()
}
