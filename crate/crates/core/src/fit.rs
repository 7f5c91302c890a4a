//! Discrete-cloud fitting: minimize `integral over B of p` subject to `p >= 1`
//! on the cloud and `p >= 0` on a grid of the box.

use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, RowOrigin, SolverOptions};
use crate::moments::{moment_matrix, moment_vector, MomentVector};
use crate::polybasis::{poly_to_gram, to_monomial, BasisKind, PolyBasis, Polynomial};
use crate::verify::{nonnegativity_scan, ScanResult};

/// Grids above this many points are rejected.
pub const MAX_GRID_POINTS: usize = 10_000_000;
/// Direct-evaluation containment tolerance.
pub const CONTAINMENT_TOL: f64 = 1e-6;
/// Tolerance of the degree monotonicity check in sweeps.
pub const MONOTONICITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dimension: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyPointCloud)?;
        let dimension = first.len();
        if dimension == 0 {
            return Err(Error::InvalidArgument("points must have at least one coordinate".into()));
        }
        for p in &points {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("point coordinates"));
            }
        }
        Ok(PointCloud { dimension, points })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: shift.len() });
        }
        Self::new(self.points.iter().map(|p| p.iter().zip(shift).map(|(x, t)| x + t).collect()).collect())
    }

    /// Errors with the first point outside `domain`.
    pub fn check_inside(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dimension() != self.dimension {
            return Err(Error::DimensionMismatch { expected: domain.dimension(), found: self.dimension });
        }
        match self.points.iter().position(|p| !domain.contains(p)) {
            Some(index) => Err(Error::PointOutsideBox { index }),
            None => Ok(()),
        }
    }
}

/// Where `p >= 0` is enforced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Uniform tensor grid including both endpoints of every axis.
    Tensor { points_per_axis: usize },
    /// Randomly shifted Halton points.
    QuasiRandom { samples: usize, seed: u64 },
}

impl GridSpec {
    /// 2001 points for `n = 1`, `201^2` for `n = 2`, 100000 quasi-random points otherwise.
    pub fn default_for(dimension: usize) -> Self {
        match dimension {
            1 => GridSpec::Tensor { points_per_axis: 2001 },
            2 => GridSpec::Tensor { points_per_axis: 201 },
            _ => GridSpec::QuasiRandom { samples: 100_000, seed: 0 },
        }
    }

    /// A strictly finer grid; the tensor variant contains the original points.
    pub fn refined(&self, factor: usize) -> Self {
        match *self {
            GridSpec::Tensor { points_per_axis } => {
                GridSpec::Tensor { points_per_axis: (points_per_axis - 1) * factor + 1 }
            }
            GridSpec::QuasiRandom { samples, seed } => {
                GridSpec::QuasiRandom { samples: samples * factor, seed: seed.wrapping_add(1) }
            }
        }
    }

    pub fn size(&self, dimension: usize) -> Option<usize> {
        match *self {
            GridSpec::Tensor { points_per_axis } => points_per_axis.checked_pow(dimension as u32),
            GridSpec::QuasiRandom { samples, .. } => Some(samples),
        }
    }
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Points of `spec` in `domain`, as a flat row-major `len x n` array.
pub fn build_grid_flat(domain: &BoxDomain, spec: &GridSpec) -> Result<Vec<f64>> {
    let n = domain.dimension();
    let size = spec.size(n).filter(|s| *s <= MAX_GRID_POINTS);
    let Some(size) = size else {
        return Err(Error::GridTooLarge { size: spec.size(n).unwrap_or(usize::MAX), limit: MAX_GRID_POINTS });
    };
    match *spec {
        GridSpec::Tensor { points_per_axis } => {
            if points_per_axis < 2 {
                return Err(Error::InvalidGrid("a tensor grid needs at least 2 points per axis".into()));
            }
            let axes: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let (l, u) = (domain.lower()[i], domain.upper()[i]);
                    let h = (u - l) / (points_per_axis - 1) as f64;
                    (0..points_per_axis).map(|k| if k + 1 == points_per_axis { u } else { l + k as f64 * h }).collect()
                })
                .collect();
            let mut out = Vec::with_capacity(size * n);
            let mut counter = vec![0usize; n];
            for _ in 0..size {
                out.extend(counter.iter().enumerate().map(|(i, &k)| axes[i][k]));
                for axis in (0..n).rev() {
                    counter[axis] += 1;
                    if counter[axis] < points_per_axis {
                        break;
                    }
                    counter[axis] = 0;
                }
            }
            Ok(out)
        }
        GridSpec::QuasiRandom { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidGrid("sample count must be positive".into()));
            }
            if n > HALTON_PRIMES.len() {
                return Err(Error::InvalidGrid(format!(
                    "quasi-random grids support up to {} axes",
                    HALTON_PRIMES.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut out = Vec::with_capacity(samples * n);
            for k in 1..=samples as u64 {
                for i in 0..n {
                    let t = (radical_inverse(k, HALTON_PRIMES[i]) + shift[i]).fract();
                    out.push(domain.lower()[i] + t * domain.width(i));
                }
            }
            Ok(out)
        }
    }
}

pub fn build_grid(domain: &BoxDomain, spec: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let n = domain.dimension();
    Ok(build_grid_flat(domain, spec)?.chunks_exact(n).map(<[f64]>::to_vec).collect())
}

/// Rows `pi(x)^T v >= bound` for every point of a flat point array, in input order.
fn evaluation_rows(basis: &PolyBasis, points: &[f64]) -> Result<Vec<f64>> {
    let (n, s) = (basis.dimension(), basis.len());
    let count = points.len() / n;
    let mut block = vec![0.0; count * s];
    block.par_chunks_mut(s).zip(points.par_chunks(n)).try_for_each(|(row, x)| basis.eval_into(x, row))?;
    Ok(block)
}

/// Builds `min y^T v  s.t.  pi(x_i)^T v >= 1` on the cloud, `pi(x_j)^T v >= 0` on the grid.
pub fn assemble(cloud: &PointCloud, grid: &[Vec<f64>], basis: &PolyBasis, moments: &MomentVector) -> Result<LpProblem> {
    let flat: Vec<f64> = grid.iter().flatten().copied().collect();
    if let Some(bad) = grid.iter().find(|g| g.len() != basis.dimension()) {
        return Err(Error::DimensionMismatch { expected: basis.dimension(), found: bad.len() });
    }
    assemble_flat(cloud, &flat, basis, moments)
}

fn assemble_flat(cloud: &PointCloud, grid: &[f64], basis: &PolyBasis, moments: &MomentVector) -> Result<LpProblem> {
    if cloud.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let n = basis.dimension();
    if cloud.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cloud.dimension() });
    }
    if moments.basis() != basis {
        return Err(Error::InvalidArgument("moment vector was computed for a different basis".into()));
    }
    let mut lp = LpProblem::new(moments.values().to_vec())?;
    let cloud_flat: Vec<f64> = cloud.points().iter().flatten().copied().collect();
    lp.extend_rows(evaluation_rows(basis, &cloud_flat)?, vec![1.0; cloud.len()], RowOrigin::Containment)?;
    if !grid.is_empty() {
        lp.extend_rows(evaluation_rows(basis, grid)?, vec![0.0; grid.len() / n], RowOrigin::Grid)?;
    }
    Ok(lp)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub degree: u32,
    /// Basis of the returned polynomial.
    pub basis: BasisKind,
    /// Basis whose coefficients are the LP variables. The LP is the same for
    /// either choice; Chebyshev rows stay well conditioned at high degree,
    /// where monomial rows lose more than the solver's feasibility tolerance
    /// to rounding.
    pub lp_basis: BasisKind,
    /// `None` selects [`GridSpec::default_for`].
    pub grid: Option<GridSpec>,
    pub solver: SolverOptions,
    /// Factor by which the box is scaled about its center before fitting.
    pub inflate: f64,
    /// Optional safeguard `|v_k| <= bound` on every coefficient.
    pub coefficient_bound: Option<f64>,
    /// Refinement of the fit grid used by the nonnegativity scan.
    pub scan_refinement: usize,
}

impl FitOptions {
    pub fn new(degree: u32) -> Self {
        FitOptions {
            degree,
            basis: BasisKind::Monomial,
            lp_basis: BasisKind::Chebyshev,
            grid: None,
            solver: SolverOptions::default(),
            inflate: 1.0,
            coefficient_bound: None,
            scan_refinement: 4,
        }
    }

    pub fn grid_for(&self, dimension: usize) -> GridSpec {
        self.grid.clone().unwrap_or_else(|| GridSpec::default_for(dimension))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitDiagnostics {
    /// `min_i p(x_i) - 1` by direct evaluation.
    pub containment_margin: f64,
    /// Minimum of `p` over the fit grid.
    pub min_grid_value: f64,
    /// `trace(P M)` with the canonical Gram matrix; monomial basis only.
    pub trace_pm: Option<f64>,
    pub scan: ScanResult,
    pub iterations: usize,
    pub lp_rows: usize,
    pub lp_cols: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub polynomial: Polynomial,
    /// Optimal LP objective `w = integral over B of p`.
    pub objective: f64,
    pub degree: u32,
    /// Box the polynomial was fitted on (after inflation).
    pub domain: BoxDomain,
    pub moments: MomentVector,
    pub grid: GridSpec,
    pub grid_size: usize,
    pub lp_basis: BasisKind,
    pub status: LpStatus,
    pub diagnostics: FitDiagnostics,
}

/// The fitting LP for one degree, before solving.
#[derive(Clone, Debug)]
pub struct FitProblem {
    /// Box after inflation.
    pub domain: BoxDomain,
    /// Basis whose coefficients are the LP variables.
    pub basis: PolyBasis,
    pub grid: GridSpec,
    pub grid_size: usize,
    pub lp: LpProblem,
    grid_points: Vec<f64>,
}

/// Validates the input and assembles the LP in the `opts.lp_basis` coordinates.
pub fn fit_problem(cloud: &PointCloud, domain: &BoxDomain, opts: &FitOptions) -> Result<FitProblem> {
    if cloud.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    cloud.check_inside(domain)?;
    let domain = domain.inflate(opts.inflate)?;
    let n = domain.dimension();
    let basis = PolyBasis::of_kind(opts.lp_basis, opts.degree, &domain);
    let moments = moment_vector(&basis, &domain)?;
    let grid_spec = opts.grid_for(n);
    let grid_points = build_grid_flat(&domain, &grid_spec)?;
    let grid_size = grid_points.len() / n;

    let mut lp = assemble_flat(cloud, &grid_points, &basis, &moments)?;
    if let Some(bound) = opts.coefficient_bound {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidArgument(format!("coefficient bound must be positive, got {bound}")));
        }
        let s = basis.len();
        let mut unit = vec![0.0; s];
        for k in 0..s {
            unit[k] = 1.0;
            lp.add_row(&unit, -bound, RowOrigin::Generic)?;
            unit[k] = -1.0;
            lp.add_row(&unit, -bound, RowOrigin::Generic)?;
            unit[k] = 0.0;
        }
    }
    Ok(FitProblem { domain, basis, grid: grid_spec, grid_size, lp, grid_points })
}

/// Solves the fitting LP for one degree.
pub fn fit(cloud: &PointCloud, domain: &BoxDomain, opts: &FitOptions) -> Result<FitResult> {
    let FitProblem { domain, basis: lp_basis, grid: grid_spec, grid_size, lp, grid_points: grid } =
        fit_problem(cloud, domain, opts)?;
    let n = domain.dimension();
    let basis = PolyBasis::of_kind(opts.basis, opts.degree, &domain);
    let moments = moment_vector(&basis, &domain)?;

    let solution = lp::solve(&lp, &opts.solver);
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(Error::Unbounded { degree: opts.degree }),
        LpStatus::SolverFailure => {
            return Err(Error::Solver(solution.message.unwrap_or_else(|| "unknown failure".into())));
        }
    }

    let solved = Polynomial::new(lp_basis, solution.x)?;
    let polynomial = match (opts.lp_basis, opts.basis) {
        (a, b) if a == b => solved,
        (BasisKind::Chebyshev, BasisKind::Monomial) => to_monomial(&solved)?,
        _ => {
            return Err(Error::InvalidArgument(
                "monomial LP coefficients cannot be returned in the chebyshev basis".into(),
            ))
        }
    };
    let mut eval = polynomial.evaluator();
    let containment_margin = cloud.points().iter().map(|x| eval.eval(x) - 1.0).fold(f64::INFINITY, f64::min);
    if containment_margin < -CONTAINMENT_TOL {
        return Err(Error::Solver(format!("containment post-check failed: min p(x_i) - 1 = {containment_margin:e}")));
    }
    let min_grid_value = grid.chunks_exact(n).map(|x| eval.eval(x)).fold(f64::INFINITY, f64::min);
    let trace_pm = match basis.kind() {
        BasisKind::Monomial => {
            let gram = poly_to_gram(&polynomial)?;
            Some(moment_matrix(gram.basis(), &domain)?.trace_product(&gram)?)
        }
        BasisKind::Chebyshev => None,
    };
    let scan = nonnegativity_scan(&polynomial, &domain, &grid_spec.refined(opts.scan_refinement.max(2)))?;
    if scan.min_value < 0.0 {
        warn!(
            "degree {} fit dips to {:e} between grid points; the volume bound is not certified",
            opts.degree, scan.min_value
        );
    }

    Ok(FitResult {
        objective: solution.objective,
        degree: opts.degree,
        domain,
        moments,
        grid: grid_spec,
        grid_size,
        lp_basis: opts.lp_basis,
        status: solution.status,
        diagnostics: FitDiagnostics {
            containment_margin,
            min_grid_value,
            trace_pm,
            scan,
            iterations: solution.iterations,
            lp_rows: lp.num_rows(),
            lp_cols: lp.num_cols(),
        },
        polynomial,
    })
}

#[derive(Debug)]
pub struct SweepEntry {
    pub degree: u32,
    pub result: Result<FitResult>,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Pairs of degrees `(d, d')`, `d < d'`, with `w_d < w_d' - tol`.
    pub monotonicity_violations: Vec<(u32, u32)>,
}

impl SweepResult {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }

    /// Objectives of the successful fits, in degree order.
    pub fn objectives(&self) -> Vec<(u32, f64)> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok().map(|r| (e.degree, r.objective))).collect()
    }
}

/// Fits every degree (independently, in parallel) and checks that `w` is nonincreasing.
pub fn degree_sweep(cloud: &PointCloud, domain: &BoxDomain, degrees: &[u32], opts: &FitOptions) -> Result<SweepResult> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("degree list is empty".into()));
    }
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("degrees must be strictly ascending".into()));
    }
    let entries: Vec<SweepEntry> = degrees
        .par_iter()
        .map(|&degree| {
            let start = Instant::now();
            let result = fit(cloud, domain, &FitOptions { degree, ..opts.clone() });
            let seconds = start.elapsed().as_secs_f64();
            match &result {
                Ok(r) => info!("degree {degree}: w = {} ({seconds:.2} s)", r.objective),
                Err(e) => warn!("degree {degree} failed: {e}"),
            }
            SweepEntry { degree, result, seconds }
        })
        .collect();

    let objectives: Vec<(u32, f64)> =
        entries.iter().filter_map(|e| e.result.as_ref().ok().map(|r| (e.degree, r.objective))).collect();
    let mut monotonicity_violations = Vec::new();
    for (i, &(d, w)) in objectives.iter().enumerate() {
        for &(d2, w2) in &objectives[i + 1..] {
            if w < w2 - MONOTONICITY_TOL {
                monotonicity_violations.push((d, d2));
            }
        }
    }
    Ok(SweepResult { entries, monotonicity_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> BoxDomain {
        BoxDomain::cube(n, -1.0, 1.0).unwrap()
    }

    #[test]
    fn tensor_grid_examples() {
        let g = build_grid(&unit(1), &GridSpec::Tensor { points_per_axis: 5 }).unwrap();
        assert_eq!(g, vec![vec![-1.0], vec![-0.5], vec![0.0], vec![0.5], vec![1.0]]);
        let g = build_grid(&unit(2), &GridSpec::Tensor { points_per_axis: 3 }).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![-1.0, 0.0]);
        assert_eq!(g[3], vec![0.0, -1.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
    }

    #[test]
    fn quasi_random_grid_is_deterministic_and_inside() {
        let b = BoxDomain::new(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 5.0]).unwrap();
        let spec = GridSpec::QuasiRandom { samples: 1000, seed: 42 };
        let a = build_grid(&b, &spec).unwrap();
        assert_eq!(a, build_grid(&b, &spec).unwrap());
        assert_eq!(a.len(), 1000);
        assert!(a.iter().all(|x| b.contains(x)));
        assert_ne!(a, build_grid(&b, &GridSpec::QuasiRandom { samples: 1000, seed: 43 }).unwrap());
    }

    #[test]
    fn grid_guards() {
        let err = build_grid(&unit(3), &GridSpec::Tensor { points_per_axis: 1000 }).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
        assert!(build_grid(&unit(1), &GridSpec::Tensor { points_per_axis: 1 }).is_err());
        assert!(build_grid(&unit(1), &GridSpec::QuasiRandom { samples: 0, seed: 0 }).is_err());
    }

    #[test]
    fn refined_tensor_grid_contains_original() {
        let spec = GridSpec::Tensor { points_per_axis: 11 };
        let coarse = build_grid(&unit(1), &spec).unwrap();
        let fine = build_grid(&unit(1), &spec.refined(4)).unwrap();
        assert_eq!(fine.len(), 41);
        for (k, x) in coarse.iter().enumerate() {
            assert!((fine[4 * k][0] - x[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn assemble_counts_rows() {
        let cloud = PointCloud::new(vec![vec![-0.5], vec![0.0], vec![0.25]]).unwrap();
        let basis = PolyBasis::monomial(1, 2).unwrap();
        let y = moment_vector(&basis, &unit(1)).unwrap();
        let grid = build_grid(&unit(1), &GridSpec::Tensor { points_per_axis: 2001 }).unwrap();
        let lp = assemble(&cloud, &grid, &basis, &y).unwrap();
        assert_eq!(lp.num_rows(), 2004);
        assert_eq!(lp.num_cols(), 3);
        assert_eq!(lp.count_rows(RowOrigin::Containment), 3);
        assert_eq!(lp.row(0), &[1.0, -0.5, 0.25]);
        assert_eq!(lp.bound(0), 1.0);
        assert_eq!(lp.bound(3), 0.0);
        // p = 1 is feasible with objective vol(B)
        let one = [1.0, 0.0, 0.0];
        assert_eq!(lp.max_infeasibility(&one), 0.0);
        assert_eq!(crate::polybasis::dot(lp.objective(), &one), 2.0);
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let basis = PolyBasis::monomial(1, 1).unwrap();
        let y = moment_vector(&basis, &unit(1)).unwrap();
        let cloud2 = PointCloud::new(vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(assemble(&cloud2, &[], &basis, &y), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyPointCloud)));
    }

    #[test]
    fn constant_fit() {
        let cloud = PointCloud::new(vec![vec![0.3], vec![-0.9]]).unwrap();
        let mut opts = FitOptions::new(0);
        opts.grid = Some(GridSpec::Tensor { points_per_axis: 101 });
        let r = fit(&cloud, &unit(1), &opts).unwrap();
        assert_eq!(r.polynomial.coeffs(), &[1.0]);
        assert_eq!(r.objective, 2.0);
        assert_eq!(r.diagnostics.trace_pm, Some(2.0));
        opts.lp_basis = BasisKind::Monomial;
        assert_eq!(fit(&cloud, &unit(1), &opts).unwrap().polynomial.coeffs(), &[1.0]);
        opts.basis = BasisKind::Chebyshev;
        assert!(fit(&cloud, &unit(1), &opts).is_err());
    }

    #[test]
    fn rejects_points_outside_box() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![1.5]]).unwrap();
        let err = fit(&cloud, &unit(1), &FitOptions::new(2)).unwrap_err();
        assert!(matches!(err, Error::PointOutsideBox { index: 1 }));
    }

    #[test]
    fn sweep_requires_ascending_degrees() {
        let cloud = PointCloud::new(vec![vec![0.0]]).unwrap();
        assert!(degree_sweep(&cloud, &unit(1), &[2, 2], &FitOptions::new(0)).is_err());
        assert!(degree_sweep(&cloud, &unit(1), &[], &FitOptions::new(0)).is_err());
    }
}
