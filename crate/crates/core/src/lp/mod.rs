//! Dense linear programs `min c^T v  s.t.  A v >= b`, `v` free.
//!
//! The solver works on the dual standard form `max b^T y  s.t.  A^T y = c, y >= 0`
//! with a revised simplex method. Its basis matrix is square in the number of
//! primal variables, which is small, while the many constraint rows only enter
//! through pricing. Basic dual columns are active primal rows, and the simplex
//! multipliers of the dual are the primal point itself, so every phase-two
//! iterate is a vertex of the primal polyhedron restricted to its active rows.
//!
//! Phase one drives artificial columns out of the basis. A positive phase-one
//! optimum means `A^T y = c, y >= 0` has no solution, and the phase-one
//! multipliers form a ray `r` with `A r >= 0` and `c^T r < 0`.

mod lu;
pub mod mps;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use lu::{BasisFactor, DenseLu};

/// What a constraint row encodes in a fitting problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    /// `p(x_i) >= 1` at a point of the cloud.
    Containment,
    /// `p(x_j) >= 0` at a grid point of the box.
    Grid,
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    /// Row-major constraint matrix.
    matrix: Vec<f64>,
    bounds: Vec<f64>,
    origins: Vec<RowOrigin>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("objective"));
        }
        Ok(LpProblem { objective, matrix: Vec::new(), bounds: Vec::new(), origins: Vec::new() })
    }

    /// Appends `coeffs^T v >= bound`.
    pub fn add_row(&mut self, coeffs: &[f64], bound: f64, origin: RowOrigin) -> Result<()> {
        if coeffs.len() != self.num_cols() {
            return Err(Error::DimensionMismatch { expected: self.num_cols(), found: coeffs.len() });
        }
        if !bound.is_finite() || coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("constraint row"));
        }
        self.matrix.extend_from_slice(coeffs);
        self.bounds.push(bound);
        self.origins.push(origin);
        Ok(())
    }

    /// Appends rows from an already validated row-major block.
    pub(crate) fn extend_rows(&mut self, block: Vec<f64>, bounds: Vec<f64>, origin: RowOrigin) -> Result<()> {
        let n = self.num_cols();
        if n == 0 || block.len() != bounds.len() * n {
            return Err(Error::DimensionMismatch { expected: bounds.len() * n, found: block.len() });
        }
        if block.iter().chain(&bounds).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint row"));
        }
        self.matrix.extend(block);
        self.origins.extend(std::iter::repeat_n(origin, bounds.len()));
        self.bounds.extend(bounds);
        Ok(())
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.bounds.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_cols();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn bound(&self, i: usize) -> f64 {
        self.bounds[i]
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn origin(&self, i: usize) -> RowOrigin {
        self.origins[i]
    }

    pub fn count_rows(&self, origin: RowOrigin) -> usize {
        self.origins.iter().filter(|o| **o == origin).count()
    }

    /// Same constraints, objective multiplied by `factor`.
    pub fn scale_objective(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.objective.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// `max_i (b_i - a_i^T v)^+`.
    pub fn max_infeasibility(&self, v: &[f64]) -> f64 {
        (0..self.num_rows()).map(|i| (self.bounds[i] - dot(self.row(i), v)).max(0.0)).fold(0.0, f64::max)
    }

    /// The problem restricted to `rows`, in the given order.
    fn select_rows(&self, rows: &[usize]) -> LpProblem {
        let mut out = LpProblem {
            objective: self.objective.clone(),
            matrix: Vec::with_capacity(rows.len() * self.num_cols()),
            bounds: Vec::with_capacity(rows.len()),
            origins: Vec::with_capacity(rows.len()),
        };
        for &i in rows {
            out.matrix.extend_from_slice(self.row(i));
            out.bounds.push(self.bounds[i]);
            out.origins.push(self.origins[i]);
        }
        out
    }

    fn row_slices(&self) -> std::slice::ChunksExact<'_, f64> {
        self.matrix.chunks_exact(self.num_cols().max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative primal feasibility tolerance.
    pub feas_tol: f64,
    /// Relative optimality tolerance.
    pub opt_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iters: 200_000, feas_tol: 1e-9, opt_tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    SolverFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_infeasibility: f64,
    pub iterations: usize,
    /// Row multipliers `y >= 0` with `A^T y = c`; empty unless optimal.
    pub duals: Vec<f64>,
    pub duality_gap: Option<f64>,
    /// Improving recession direction, present iff unbounded.
    pub ray: Option<Vec<f64>>,
    pub message: Option<String>,
}

impl LpSolution {
    fn failure(iterations: usize, message: impl Into<String>) -> Self {
        LpSolution {
            status: LpStatus::SolverFailure,
            x: Vec::new(),
            objective: f64::NAN,
            max_infeasibility: f64::NAN,
            iterations,
            duals: Vec::new(),
            duality_gap: None,
            ray: None,
            message: Some(message.into()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const PHASE_ONE_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-9;
/// Basis changes between fresh LU factorizations.
const REFACTOR_INTERVAL: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal { multipliers: Vec<f64>, basic_values: Vec<f64> },
    DualUnbounded,
    Failure(String),
}

struct Simplex<'a> {
    prob: &'a LpProblem,
    opts: &'a SolverOptions,
    n: usize,
    m: usize,
    /// Sign of each artificial column `sign_i e_i`.
    sign: Vec<f64>,
    /// Column ids: `j < m` is row `j`, `m + i` is artificial `i`.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    row_norms: Vec<f64>,
    c_scale: f64,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(prob: &'a LpProblem, opts: &'a SolverOptions) -> Self {
        let (n, m) = (prob.num_cols(), prob.num_rows());
        let sign = prob.objective.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut in_basis = vec![false; m + n];
        in_basis[m..].iter_mut().for_each(|b| *b = true);
        let row_norms = prob.row_slices().map(|r| dot(r, r).sqrt().max(f64::MIN_POSITIVE)).collect();
        let c_scale = inf_norm(&prob.objective);
        Simplex {
            prob,
            opts,
            n,
            m,
            sign,
            basis: (m..m + n).collect(),
            in_basis,
            row_norms,
            c_scale: if c_scale > 0.0 { c_scale } else { 1.0 },
            iterations: 0,
        }
    }

    fn column(&self, id: usize, out: &mut [f64]) {
        if id < self.m {
            out.copy_from_slice(self.prob.row(id));
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[id - self.m] = self.sign[id - self.m];
        }
    }

    fn factor(&self) -> Option<DenseLu> {
        DenseLu::factor_columns(self.n, |k, col| self.column(self.basis[k], col))
    }

    fn cost(&self, phase: Phase, id: usize) -> f64 {
        match (phase, id < self.m) {
            (Phase::One, true) => 0.0,
            (Phase::One, false) => -1.0,
            (Phase::Two, true) => self.prob.bounds[id],
            (Phase::Two, false) => 0.0,
        }
    }

    /// `a_j^T pi` for every row.
    fn row_products(&self, pi: &[f64]) -> Vec<f64> {
        self.prob.row_slices().map(|r| dot(r, pi)).collect()
    }

    /// Entering column, or `None` at optimality for this phase.
    fn price(&self, phase: Phase, pi: &[f64], bland: bool) -> Option<usize> {
        let products = self.row_products(pi);
        let mut best: Option<(usize, f64)> = None;
        let mut consider = |id: usize, score: f64| {
            if bland {
                if best.is_none() {
                    best = Some((id, score));
                }
            } else if best.is_none_or(|(_, s)| score > s) {
                best = Some((id, score));
            }
        };
        for (j, ap) in products.iter().enumerate() {
            if self.in_basis[j] {
                continue;
            }
            let d = self.cost(phase, j) - ap;
            let threshold = match phase {
                Phase::One => PHASE_ONE_TOL * self.row_norms[j],
                Phase::Two => self.opts.feas_tol * (1.0 + self.prob.bounds[j].abs()),
            };
            if d > threshold {
                consider(j, d / self.row_norms[j]);
            }
        }
        if phase == Phase::One {
            for (i, (sign, p)) in self.sign.iter().zip(pi).enumerate() {
                let id = self.m + i;
                if self.in_basis[id] {
                    continue;
                }
                let d = -1.0 - sign * p;
                if d > PHASE_ONE_TOL {
                    consider(id, d);
                }
            }
        }
        best.map(|(id, _)| id)
    }

    /// Leaving basis position for entering direction `w = B^{-1} g_q`.
    fn ratio_test(&self, phase: Phase, w: &[f64], values: &[f64], bland: bool) -> Option<usize> {
        let w_max = inf_norm(w);
        if w_max == 0.0 {
            return None;
        }
        let ptol = PIVOT_TOL * w_max.max(1.0);
        if phase == Phase::Two {
            // Artificials left at level zero must not become positive again.
            let blocking = (0..self.n)
                .filter(|&k| self.basis[k] >= self.m && w[k].abs() > ptol)
                .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(self.basis[b].cmp(&self.basis[a])));
            if blocking.is_some() {
                return blocking;
            }
        }
        let eligible = || (0..self.n).filter(|&k| w[k] > ptol);
        if bland {
            return eligible().min_by(|&a, &b| {
                let (ra, rb) = (values[a].max(0.0) / w[a], values[b].max(0.0) / w[b]);
                ra.total_cmp(&rb).then(self.basis[a].cmp(&self.basis[b]))
            });
        }
        let delta = 1e-11 * self.c_scale;
        let theta_max = eligible().map(|k| (values[k].max(0.0) + delta) / w[k]).fold(f64::INFINITY, f64::min);
        if !theta_max.is_finite() {
            return None;
        }
        eligible()
            .filter(|&k| values[k].max(0.0) / w[k] <= theta_max)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]).then(self.basis[b].cmp(&self.basis[a])))
    }

    /// Replaces the all-artificial starting basis by `ids` if that basis is
    /// nonsingular and feasible for the dual system.
    fn warm_start(&mut self, ids: &[usize]) -> bool {
        if ids.len() != self.n || ids.iter().any(|&id| id >= self.m + self.n) {
            return false;
        }
        let previous = std::mem::replace(&mut self.basis, ids.to_vec());
        let feasible = self.factor().is_some_and(|lu| {
            let mut values = self.prob.objective.clone();
            lu.solve(&mut values);
            values.iter().all(|v| *v >= -1e-9 * self.c_scale)
        });
        if !feasible {
            self.basis = previous;
            return false;
        }
        self.in_basis.iter_mut().for_each(|b| *b = false);
        for &id in &self.basis {
            self.in_basis[id] = true;
        }
        true
    }

    fn swap_in(&mut self, position: usize, entering: usize) {
        self.in_basis[self.basis[position]] = false;
        self.in_basis[entering] = true;
        self.basis[position] = entering;
    }

    fn run(&mut self, phase: Phase) -> Outcome {
        let stall_window = 50 + 5 * self.n;
        let mut best_objective = f64::NEG_INFINITY;
        let mut since_progress = 0usize;
        let mut bland = false;
        let mut column = vec![0.0; self.n];
        let mut factor: Option<BasisFactor> = None;
        loop {
            let lu = match factor.take() {
                Some(f) if f.updates() < REFACTOR_INTERVAL => f,
                _ => match self.factor() {
                    Some(lu) => BasisFactor::new(lu),
                    None => return Outcome::Failure("basis matrix became numerically singular".into()),
                },
            };
            let mut values = self.prob.objective.clone();
            lu.solve(&mut values);
            let mut pi: Vec<f64> = self.basis.iter().map(|&id| self.cost(phase, id)).collect();
            let objective = dot(&pi, &values);
            lu.solve_transpose(&mut pi);

            if objective > best_objective + 1e-12 * (1.0 + objective.abs()) {
                best_objective = objective;
                since_progress = 0;
                bland = false;
            } else {
                since_progress += 1;
                if since_progress > stall_window && !bland {
                    debug!("simplex stalled for {since_progress} pivots, switching to smallest-index rule");
                    bland = true;
                }
            }

            let Some(entering) = self.price(phase, &pi, bland) else {
                if lu.updates() > 0 {
                    // confirm optimality with a fresh factorization
                    continue;
                }
                return Outcome::Optimal { multipliers: pi, basic_values: values };
            };
            if self.iterations >= self.opts.max_iters {
                return Outcome::Failure(format!("iteration limit {} reached", self.opts.max_iters));
            }
            self.column(entering, &mut column);
            lu.solve(&mut column);
            let Some(leaving) = self.ratio_test(phase, &column, &values, bland) else {
                return Outcome::DualUnbounded;
            };
            self.swap_in(leaving, entering);
            self.iterations += 1;
            let mut lu = lu;
            lu.update(leaving, column.clone());
            factor = Some(lu);
        }
    }

    /// Pivots basic artificials (all at level zero) out in favour of constraint rows.
    fn drive_out_artificials(&mut self) -> std::result::Result<(), String> {
        for k in 0..self.n {
            if self.basis[k] < self.m {
                continue;
            }
            let lu = self.factor().ok_or("basis matrix became numerically singular")?;
            let mut rho = vec![0.0; self.n];
            rho[k] = 1.0;
            lu.solve_transpose(&mut rho);
            let products = self.row_products(&rho);
            let candidate = (0..self.m)
                .filter(|&j| !self.in_basis[j])
                .map(|j| (j, products[j].abs() / self.row_norms[j]))
                .filter(|(_, a)| *a > 1e-9)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            if let Some((j, _)) = candidate {
                self.swap_in(k, j);
                self.iterations += 1;
            }
        }
        Ok(())
    }

    fn certified_ray(&self, multipliers: &[f64]) -> Option<Vec<f64>> {
        let scale = inf_norm(multipliers);
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let ray: Vec<f64> = multipliers.iter().map(|v| v / scale).collect();
        verify_ray(self.prob, &ray).then_some(ray)
    }
}

/// Checks `A r >= 0` and `c^T r < 0` to within `1e-10` (row-norm relative).
pub fn verify_ray(prob: &LpProblem, ray: &[f64]) -> bool {
    if ray.len() != prob.num_cols() {
        return false;
    }
    let rows_ok = prob.row_slices().all(|a| {
        let norm = dot(a, a).sqrt();
        dot(a, ray) >= -1e-10 * norm.max(1.0)
    });
    rows_ok && dot(&prob.objective, ray) < -1e-10
}

/// Solves `min c^T v  s.t.  A v >= b` with `v` free.
///
/// Problems with many grid rows are solved by row generation: the simplex
/// runs on the non-grid rows plus an evenly spaced subset of grid rows, the
/// most violated remaining rows are added, and this repeats until the
/// restricted optimum satisfies every row. Its multipliers, extended by zeros,
/// then certify optimality for the full problem. A restricted ray that no
/// remaining row cuts certifies unboundedness in the same way.
pub fn solve(prob: &LpProblem, opts: &SolverOptions) -> LpSolution {
    let n = prob.num_cols();
    let initial = initial_rows(prob);
    if n == 0 || initial.len() * 2 >= prob.num_rows() {
        return solve_dense(prob, opts);
    }
    solve_by_row_generation(prob, opts, initial)
}

/// Non-grid rows and about `8n` evenly spaced grid rows.
fn initial_rows(prob: &LpProblem) -> Vec<usize> {
    let grid_rows = prob.count_rows(RowOrigin::Grid);
    let stride = grid_rows.div_ceil((8 * prob.num_cols()).max(64)).max(1);
    let mut seen_grid = 0;
    (0..prob.num_rows())
        .filter(|&i| {
            if prob.origins[i] != RowOrigin::Grid {
                return true;
            }
            seen_grid += 1;
            (seen_grid - 1) % stride == 0
        })
        .collect()
}

fn solve_by_row_generation(prob: &LpProblem, opts: &SolverOptions, initial: Vec<usize>) -> LpSolution {
    let (m, n) = (prob.num_rows(), prob.num_cols());
    let mut active = vec![false; m];
    for &i in &initial {
        active[i] = true;
    }
    let norms: Vec<f64> = prob.row_slices().map(|r| dot(r, r).sqrt().max(f64::MIN_POSITIVE)).collect();
    let add_tol = 0.1 * opts.feas_tol * (1.0 + inf_norm(&prob.bounds));
    let batch = (2 * n).max(16);
    let mut iterations = 0;
    // final basis of the previous round: rows by global index, artificials by position
    let mut carried: Option<Vec<Result<usize, usize>>> = None;
    for round in 1.. {
        let rows: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let start: Option<Vec<usize>> = carried.as_ref().map(|basis| {
            basis
                .iter()
                .map(|entry| match *entry {
                    Ok(global) => rows.binary_search(&global).expect("working rows only grow"),
                    Err(i) => rows.len() + i,
                })
                .collect()
        });
        let budget = SolverOptions { max_iters: opts.max_iters.saturating_sub(iterations), ..opts.clone() };
        let (mut sol, basis) = solve_dense_from(&prob.select_rows(&rows), &budget, start.as_deref());
        carried =
            Some(basis.iter().map(|&id| if id < rows.len() { Ok(rows[id]) } else { Err(id - rows.len()) }).collect());
        iterations += sol.iterations;
        sol.iterations = iterations;

        // violation scores of the rows outside the working set, normalized by row length
        let mut violated: Vec<(usize, f64)> = match sol.status {
            LpStatus::Optimal => (0..m)
                .filter(|&i| !active[i])
                .filter_map(|i| {
                    let gap = prob.bounds[i] - dot(prob.row(i), &sol.x);
                    (gap > add_tol).then(|| (i, gap / norms[i]))
                })
                .collect(),
            LpStatus::Unbounded => {
                let ray = sol.ray.as_deref().unwrap_or_default();
                (0..m)
                    .filter(|&i| !active[i])
                    .filter_map(|i| {
                        let slope = dot(prob.row(i), ray);
                        (slope < -1e-10 * norms[i].max(1.0)).then(|| (i, -slope / norms[i]))
                    })
                    .collect()
            }
            LpStatus::SolverFailure => return sol,
        };
        debug!("row generation round {round}: {} rows, {} violated, {iterations} pivots", rows.len(), violated.len());

        if violated.is_empty() {
            return match sol.status {
                LpStatus::Optimal => {
                    let mut duals = vec![0.0; m];
                    for (k, &i) in rows.iter().enumerate() {
                        duals[i] = sol.duals[k];
                    }
                    LpSolution { max_infeasibility: prob.max_infeasibility(&sol.x), duals, ..sol }
                }
                _ if sol.ray.as_deref().is_some_and(|r| verify_ray(prob, r)) => sol,
                _ => LpSolution::failure(iterations, "restricted ray failed verification on the full problem"),
            };
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(i, _) in violated.iter().take(batch) {
            active[i] = true;
        }
    }
    unreachable!("the row generation loop only exits by returning")
}

fn solve_dense(prob: &LpProblem, opts: &SolverOptions) -> LpSolution {
    solve_dense_from(prob, opts, None).0
}

/// Dense simplex, optionally started from a basis given as column ids (`j < m`
/// for row `j`, `m + i` for artificial `i`). Also returns the final basis.
fn solve_dense_from(prob: &LpProblem, opts: &SolverOptions, start: Option<&[usize]>) -> (LpSolution, Vec<usize>) {
    let mut simplex = Simplex::new(prob, opts);
    if let Some(ids) = start {
        if !simplex.warm_start(ids) {
            debug!("warm start basis rejected, starting from artificials");
        }
    }
    let solution = run_simplex(&mut simplex);
    (solution, simplex.basis)
}

fn run_simplex(simplex: &mut Simplex) -> LpSolution {
    let (prob, opts) = (simplex.prob, simplex.opts);
    let n = prob.num_cols();
    if n == 0 {
        let infeasible = prob.bounds.iter().any(|b| *b > opts.feas_tol);
        return if infeasible {
            LpSolution::failure(0, "primal infeasible: a row with no variables has a positive bound")
        } else {
            LpSolution {
                status: LpStatus::Optimal,
                x: Vec::new(),
                objective: 0.0,
                max_infeasibility: 0.0,
                iterations: 0,
                duals: vec![0.0; prob.num_rows()],
                duality_gap: Some(0.0),
                ray: None,
                message: None,
            }
        };
    }

    let m = simplex.m;

    match simplex.run(Phase::One) {
        Outcome::Optimal { multipliers, basic_values } => {
            let residual: f64 = (0..n).filter(|&k| simplex.basis[k] >= m).map(|k| basic_values[k].max(0.0)).sum();
            if residual > 1e-9 * simplex.c_scale {
                return match simplex.certified_ray(&multipliers) {
                    Some(ray) => LpSolution {
                        status: LpStatus::Unbounded,
                        x: Vec::new(),
                        objective: f64::NEG_INFINITY,
                        max_infeasibility: f64::NAN,
                        iterations: simplex.iterations,
                        duals: Vec::new(),
                        duality_gap: None,
                        ray: Some(ray),
                        message: None,
                    },
                    None => LpSolution::failure(
                        simplex.iterations,
                        format!("phase one ended with residual {residual:e} but no ray could be certified"),
                    ),
                };
            }
        }
        Outcome::DualUnbounded => return LpSolution::failure(simplex.iterations, "phase one unbounded"),
        Outcome::Failure(msg) => return LpSolution::failure(simplex.iterations, msg),
    }

    if let Err(msg) = simplex.drive_out_artificials() {
        return LpSolution::failure(simplex.iterations, msg);
    }

    let (x, basic_values) = match simplex.run(Phase::Two) {
        Outcome::Optimal { multipliers, basic_values } => (multipliers, basic_values),
        Outcome::DualUnbounded => return LpSolution::failure(simplex.iterations, "primal infeasible (dual unbounded)"),
        Outcome::Failure(msg) => return LpSolution::failure(simplex.iterations, msg),
    };

    let mut duals = vec![0.0; m];
    for (k, &id) in simplex.basis.iter().enumerate() {
        if id < m {
            duals[id] = basic_values[k].max(0.0);
        }
    }
    let objective = dot(&prob.objective, &x);
    let dual_objective = dot(&prob.bounds, &duals);
    let gap = (objective - dual_objective).abs();
    let max_infeasibility = prob.max_infeasibility(&x);
    let b_scale = 1.0 + inf_norm(&prob.bounds);
    let iterations = simplex.iterations;

    if max_infeasibility > opts.feas_tol * b_scale {
        return LpSolution::failure(iterations, format!("final point infeasible by {max_infeasibility:e}"));
    }
    if gap > opts.opt_tol * (1.0 + objective.abs()) {
        return LpSolution::failure(iterations, format!("duality gap {gap:e} exceeds tolerance"));
    }
    debug!("LP solved: {} rows, {n} columns, {iterations} pivots, objective {objective}", m);
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        max_infeasibility,
        iterations,
        duals,
        duality_gap: Some(gap),
        ray: None,
        message: None,
    }
}
