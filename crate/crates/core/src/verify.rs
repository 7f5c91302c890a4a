//! Post-fit checks: Monte Carlo volume of `{p >= 1}`, the L1 volume bound,
//! the Gram trace identity, nonnegativity between grid points and the
//! number of connected components of the superlevel set.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::fit::{build_grid_flat, FitResult, GridSpec, PointCloud, CONTAINMENT_TOL};
use crate::moments::{moment_matrix, moment_vector, orthonormalize, MomentVector};
use crate::polybasis::{poly_to_gram, BasisKind, Polynomial};

pub const MIN_MC_SAMPLES: usize = 1000;
const MC_BATCH: usize = 1 << 14;
/// Relative tolerance of the `trace(PM) = integral of p` agreement.
pub const TRACE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub hits: usize,
    pub seed: u64,
}

/// Uniform Monte Carlo estimate of `vol {x in B : p(x) >= 1}`.
///
/// Samples are drawn in fixed-size batches, batch `k` from ChaCha8 stream `k`
/// of `seed`, so the result does not depend on how batches are scheduled.
pub fn mc_volume(p: &Polynomial, domain: &BoxDomain, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!("at least {MIN_MC_SAMPLES} samples required, got {samples}")));
    }
    let n = domain.dimension();
    if p.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.dimension() });
    }
    let batches = samples.div_ceil(MC_BATCH);
    let hits: usize = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch as u64);
            let count = MC_BATCH.min(samples - batch * MC_BATCH);
            let mut eval = p.evaluator();
            let mut x = vec![0.0; n];
            let mut hits = 0usize;
            for _ in 0..count {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = domain.lower()[i] + domain.width(i) * rng.random::<f64>();
                }
                if eval.eval(&x) >= 1.0 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let vol = domain.volume();
    let frac = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        estimate: frac * vol,
        standard_error: (frac * (1.0 - frac) / samples as f64).sqrt() * vol,
        samples,
        hits,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevReport {
    /// `integral over B of p`.
    pub integral: f64,
    pub volume: f64,
    pub standard_error: f64,
    /// `integral - volume`.
    pub gap: f64,
    /// `integral >= volume - 3 sigma`.
    pub pass: bool,
}

/// Checks `integral over B of p >= vol {p >= 1}` against a Monte Carlo estimate.
pub fn chebyshev_check(p: &Polynomial, moments: &MomentVector, volume: &VolumeEstimate) -> Result<ChebyshevReport> {
    let integral = moments.integrate(p)?;
    Ok(ChebyshevReport {
        integral,
        volume: volume.estimate,
        standard_error: volume.standard_error,
        gap: integral - volume.estimate,
        pass: integral >= volume.estimate - 3.0 * volume.standard_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub points: usize,
}

impl ScanResult {
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.min_value >= -tol
    }
}

/// Minimum of `p` over the points of `spec`; ties go to the earliest grid point.
pub fn nonnegativity_scan(p: &Polynomial, domain: &BoxDomain, spec: &GridSpec) -> Result<ScanResult> {
    let n = domain.dimension();
    if p.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.dimension() });
    }
    let grid = build_grid_flat(domain, spec)?;
    let points = grid.len() / n;
    const CHUNK: usize = 4096;
    let (index, min_value) = grid
        .par_chunks(CHUNK * n)
        .enumerate()
        .map(|(c, block)| {
            let mut eval = p.evaluator();
            block
                .chunks_exact(n)
                .enumerate()
                .map(|(k, x)| (c * CHUNK + k, eval.eval(x)))
                .fold((usize::MAX, f64::INFINITY), pick_min)
        })
        .reduce(|| (usize::MAX, f64::INFINITY), pick_min);
    Ok(ScanResult { min_value, argmin: grid[index * n..(index + 1) * n].to_vec(), points })
}

fn pick_min(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Minimum resolution per axis accepted by [`count_components`].
pub const MIN_RESOLUTION: usize = 64;

/// Number of connected components of `{p >= 1}` on a cell grid.
///
/// The box is split into `resolution^n` cells; a cell is inside when `p` at its
/// center is at least one. Inside cells are grouped by face adjacency.
pub fn count_components(p: &Polynomial, domain: &BoxDomain, resolution: usize) -> Result<usize> {
    count_components_anchored(p, domain, resolution, &[])
}

/// [`count_components`] that additionally marks every cell whose closed extent
/// holds an anchor point with `p >= 1 - CONTAINMENT_TOL` (both cells when the
/// anchor lies on a shared face). Components thinner than a cell, which a tight
/// fit produces around isolated cloud points, are then still counted.
pub fn count_components_anchored(
    p: &Polynomial,
    domain: &BoxDomain,
    resolution: usize,
    anchors: &[Vec<f64>],
) -> Result<usize> {
    let n = domain.dimension();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    if p.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.dimension() });
    }
    let mut mask = superlevel_mask(p, domain, resolution);
    let mut eval = p.evaluator();
    for x in anchors {
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        if !domain.contains(x) || eval.eval(x) < 1.0 - CONTAINMENT_TOL {
            continue;
        }
        // candidate cell range per axis, two cells when x sits on a face
        let ranges: Vec<(usize, usize)> = (0..n)
            .map(|i| {
                let t = (x[i] - domain.lower()[i]) / domain.width(i) * resolution as f64;
                let k = (t.floor() as usize).min(resolution - 1);
                let lo = if t == k as f64 && k > 0 { k - 1 } else { k };
                (lo, k)
            })
            .collect();
        let mut counter: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let cell = counter.iter().fold(0, |acc, &k| acc * resolution + k);
            mask[cell] = true;
            let Some(axis) = (0..n).rev().find(|&a| counter[a] < ranges[a].1) else {
                break;
            };
            counter[axis] += 1;
            for a in axis + 1..n {
                counter[a] = ranges[a].0;
            }
        }
    }
    Ok(label_components(&mask, n, resolution))
}

/// Row-major (last axis fastest) inside/outside flags of cell centers.
pub fn superlevel_mask(p: &Polynomial, domain: &BoxDomain, resolution: usize) -> Vec<bool> {
    let n = domain.dimension();
    let total = resolution.pow(n as u32);
    let centers: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..resolution)
                .map(|k| domain.lower()[i] + (k as f64 + 0.5) * domain.width(i) / resolution as f64)
                .collect()
        })
        .collect();
    let mut mask = vec![false; total];
    mask.par_chunks_mut(resolution).enumerate().for_each(|(line, out)| {
        let mut eval = p.evaluator();
        let mut x = vec![0.0; n];
        let mut rest = line;
        for axis in (0..n - 1).rev() {
            x[axis] = centers[axis][rest % resolution];
            rest /= resolution;
        }
        for (k, flag) in out.iter_mut().enumerate() {
            x[n - 1] = centers[n - 1][k];
            *flag = eval.eval(&x) >= 1.0;
        }
    });
    mask
}

/// Face-adjacency flood fill on an `n`-dimensional cube of side `side`.
pub fn label_components(mask: &[bool], n: usize, side: usize) -> usize {
    let strides: Vec<usize> = (0..n).map(|axis| side.pow((n - 1 - axis) as u32)).collect();
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let mut count = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(cell) = queue.pop_front() {
            for &stride in &strides {
                let coord = (cell / stride) % side;
                if coord > 0 {
                    let nb = cell - stride;
                    if mask[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
                if coord + 1 < side {
                    let nb = cell + stride;
                    if mask[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    /// `trace(P M)` with the canonical Gram matrix.
    pub trace_pm: f64,
    /// `sum_alpha p_alpha y_alpha`.
    pub integral: f64,
    /// `trace(L^T P L)`, the Gram trace in the orthonormalized basis.
    pub orthonormal_trace: f64,
    pub relative_error: f64,
    pub pass: bool,
}

/// Compares the moment-matrix trace of the Gram matrix with the integral of `p`.
pub fn trace_report(p: &Polynomial, domain: &BoxDomain) -> Result<TraceReport> {
    if p.basis().kind() != BasisKind::Monomial {
        return Err(Error::UnsupportedBasis { required: "monomial" });
    }
    let gram = poly_to_gram(p)?;
    let m = moment_matrix(gram.basis(), domain)?;
    let trace_pm = m.trace_product(&gram)?;
    let integral = moment_vector(p.basis(), domain)?.integrate(p)?;
    let orthonormal_trace = orthonormalize(&m)?.transform_gram(&gram)?.trace();
    let relative_error = (trace_pm - integral).abs() / (1.0 + integral.abs());
    Ok(TraceReport { trace_pm, integral, orthonormal_trace, relative_error, pass: relative_error <= TRACE_TOL })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub mc_samples: usize,
    pub seed: u64,
    /// Cells per axis for component counting; `None` picks 512 for `n <= 2`, 64 for `n = 3`.
    pub resolution: Option<usize>,
    /// Nonnegativity scan grid; `None` picks the default fit grid refined 4x.
    pub scan: Option<GridSpec>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { mc_samples: 1_000_000, seed: 0, resolution: None, scan: None }
    }
}

impl VerifyOptions {
    pub fn resolution_for(&self, dimension: usize) -> usize {
        self.resolution.unwrap_or(if dimension <= 2 { 512 } else { 64 })
    }
}

/// Machine-readable verification summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub degree: u32,
    pub basis: BasisKind,
    pub w: f64,
    pub mc_volume: f64,
    pub mc_stderr: f64,
    pub mc_samples: usize,
    pub seed: u64,
    pub cheb_gap: f64,
    pub cheb_pass: bool,
    pub min_scan_value: f64,
    pub scan_nonnegative: bool,
    pub containment_margin: f64,
    pub containment_ok: bool,
    pub components: Option<usize>,
    #[serde(rename = "trace_PM")]
    pub trace_pm: Option<f64>,
    pub trace_pass: Option<bool>,
}

impl VerificationReport {
    /// Containment holds and the volume bound holds whenever the scan found no negative value.
    pub fn passed(&self) -> bool {
        self.containment_ok && (!self.scan_nonnegative || self.cheb_pass) && self.trace_pass != Some(false)
    }
}

/// Runs every check on `p` fitted over `domain` around `cloud`.
pub fn verify(
    p: &Polynomial,
    cloud: &PointCloud,
    domain: &BoxDomain,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let n = domain.dimension();
    if cloud.dimension() != n || p.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cloud.dimension() });
    }
    let moments = moment_vector(p.basis(), domain)?;
    let volume = mc_volume(p, domain, opts.mc_samples, opts.seed)?;
    let cheb = chebyshev_check(p, &moments, &volume)?;
    let scan_spec = opts.scan.clone().unwrap_or_else(|| GridSpec::default_for(n).refined(4));
    let scan = nonnegativity_scan(p, domain, &scan_spec)?;
    let mut eval = p.evaluator();
    let containment_margin = cloud.points().iter().map(|x| eval.eval(x) - 1.0).fold(f64::INFINITY, f64::min);
    let components =
        if n <= 3 { Some(count_components_anchored(p, domain, opts.resolution_for(n), cloud.points())?) } else { None };
    let trace = match p.basis().kind() {
        BasisKind::Monomial => Some(trace_report(p, domain)?),
        BasisKind::Chebyshev => None,
    };
    Ok(VerificationReport {
        degree: p.degree(),
        basis: p.basis().kind(),
        w: cheb.integral,
        mc_volume: volume.estimate,
        mc_stderr: volume.standard_error,
        mc_samples: volume.samples,
        seed: volume.seed,
        cheb_gap: cheb.gap,
        cheb_pass: cheb.pass,
        min_scan_value: scan.min_value,
        scan_nonnegative: scan.is_nonnegative(1e-9),
        containment_margin,
        containment_ok: containment_margin >= -CONTAINMENT_TOL,
        components,
        trace_pm: trace.as_ref().map(|t| t.trace_pm),
        trace_pass: trace.map(|t| t.pass),
    })
}

/// [`verify`] for a fit result, using its own box and a scan grid refined from its fit grid.
pub fn verify_fit(result: &FitResult, cloud: &PointCloud, opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut opts = opts.clone();
    if opts.scan.is_none() {
        opts.scan = Some(result.grid.refined(4));
    }
    verify(&result.polynomial, cloud, &result.domain, &opts)
}
