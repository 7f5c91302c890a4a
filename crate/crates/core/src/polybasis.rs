//! Multi-indices, graded polynomial bases and Gram-matrix conversions.
//!
//! Bases are ordered graded lexicographically: by total degree first, then
//! lexicographically descending in the exponent tuple, so the degree-one block
//! of a monomial basis in `n` variables reads `x_1, x_2, ..., x_n`.
//! Truncating a degree-`d` basis to its first `binomial(n + e, e)` elements
//! yields the degree-`e` basis.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Exponent tuple `alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn has_odd_entry(&self) -> bool {
        self.0.iter().any(|e| e % 2 == 1)
    }
}

impl std::ops::Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dimension(), rhs.dimension());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// `binomial(n + d, d)`, the number of monomials of degree at most `d` in `n` variables.
pub fn basis_size(dimension: usize, degree: u32) -> usize {
    let d = degree as usize;
    let mut acc: u128 = 1;
    for k in 1..=d {
        acc = acc * (dimension + k) as u128 / k as u128;
    }
    acc as usize
}

/// All exponent tuples of length `n` with total degree at most `d`, in graded lex order.
pub fn enumerate_indices(dimension: usize, degree: u32) -> Vec<MultiIndex> {
    assert!(dimension >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(basis_size(dimension, degree));
    let mut current = vec![0u32; dimension];
    for total in 0..=degree {
        compositions(&mut current, 0, total, &mut out);
    }
    out
}

fn compositions(current: &mut [u32], axis: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[axis] = e;
        compositions(current, axis + 1, remaining - e, out);
    }
    current[axis] = 0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Monomial,
    Chebyshev,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Monomial => f.write_str("monomial"),
            BasisKind::Chebyshev => f.write_str("chebyshev"),
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monomial" => Ok(BasisKind::Monomial),
            "chebyshev" => Ok(BasisKind::Chebyshev),
            other => Err(Error::InvalidArgument(format!("unknown basis kind '{other}'"))),
        }
    }
}

/// Ordered basis of all polynomials of degree at most `d` in `n` variables.
///
/// The Chebyshev kind is the tensor product `T_{a_1}(t_1) ... T_{a_n}(t_n)` where
/// `t_i` is `x_i` mapped affinely from the box onto `[-1, 1]`; it carries that box.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    dimension: usize,
    degree: u32,
    kind: BasisKind,
    domain: Option<BoxDomain>,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl PartialEq for PolyBasis {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.degree == other.degree
            && self.kind == other.kind
            && self.domain == other.domain
    }
}

impl PolyBasis {
    pub fn monomial(dimension: usize, degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self::build(dimension, degree, BasisKind::Monomial, None))
    }

    pub fn chebyshev(degree: u32, domain: &BoxDomain) -> Self {
        Self::build(domain.dimension(), degree, BasisKind::Chebyshev, Some(domain.clone()))
    }

    /// Monomial or Chebyshev basis over `domain`.
    pub fn of_kind(kind: BasisKind, degree: u32, domain: &BoxDomain) -> Self {
        match kind {
            BasisKind::Monomial => Self::build(domain.dimension(), degree, kind, None),
            BasisKind::Chebyshev => Self::chebyshev(degree, domain),
        }
    }

    fn build(dimension: usize, degree: u32, kind: BasisKind, domain: Option<BoxDomain>) -> Self {
        let indices = enumerate_indices(dimension, degree);
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        PolyBasis { dimension, degree, kind, domain, indices, lookup }
    }

    /// The same kind of basis with a different degree.
    pub fn with_degree(&self, degree: u32) -> Self {
        Self::build(self.dimension, degree, self.kind, self.domain.clone())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Box of the Chebyshev affine map; `None` for monomials.
    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Values of every basis element at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes the basis values at `x` into `out`, which must have `self.len()` entries.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        assert_eq!(out.len(), self.len());
        let table = self.axis_table(x);
        let stride = self.degree as usize + 1;
        for (slot, alpha) in out.iter_mut().zip(&self.indices) {
            *slot = alpha.exponents().iter().enumerate().map(|(axis, &e)| table[axis * stride + e as usize]).product();
        }
        Ok(())
    }

    /// Per-axis univariate values `phi_k(x_i)` for `k = 0..=d`, laid out axis-major.
    fn axis_table(&self, x: &[f64]) -> Vec<f64> {
        let stride = self.degree as usize + 1;
        let mut table = vec![0.0; self.dimension * stride];
        for (axis, row) in table.chunks_exact_mut(stride).enumerate() {
            match self.kind {
                BasisKind::Monomial => {
                    row[0] = 1.0;
                    for k in 1..stride {
                        row[k] = row[k - 1] * x[axis];
                    }
                }
                BasisKind::Chebyshev => {
                    let t = self.domain.as_ref().expect("chebyshev basis has a box").to_unit(axis, x[axis]);
                    chebyshev_values(t, row);
                }
            }
        }
        table
    }
}

/// Fills `out[k] = T_k(t)` by the three-term recurrence.
pub fn chebyshev_values(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for k in 2..out.len() {
        out[k] = 2.0 * t * out[k - 1] - out[k - 2];
    }
}

/// A polynomial as a coefficient vector over a [`PolyBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    basis: PolyBasis,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(basis: PolyBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::CoefficientLength { expected: basis.len(), found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        Ok(Polynomial { basis, coeffs })
    }

    pub fn zero(basis: PolyBasis) -> Self {
        let coeffs = vec![0.0; basis.len()];
        Polynomial { basis, coeffs }
    }

    /// The constant polynomial `value` in `basis` (both kinds have `1` as first element).
    pub fn constant(basis: PolyBasis, value: f64) -> Self {
        let mut p = Self::zero(basis);
        p.coeffs[0] = value;
        p
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let values = self.basis.eval(x)?;
        Ok(dot(&self.coeffs, &values))
    }

    /// Evaluator that reuses its scratch buffer across calls.
    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator { poly: self, scratch: vec![0.0; self.basis.len()] }
    }
}

pub struct Evaluator<'a> {
    poly: &'a Polynomial,
    scratch: Vec<f64>,
}

impl Evaluator<'_> {
    /// Panics if `x` has the wrong dimension.
    pub fn eval(&mut self, x: &[f64]) -> f64 {
        self.poly.basis.eval_into(x, &mut self.scratch).expect("point dimension matches basis");
        dot(&self.poly.coeffs, &self.scratch)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    dimension: usize,
    degree: u32,
    kind: BasisKind,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    domain: Option<BoxDomain>,
    coeffs: Vec<f64>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            dimension: self.dimension(),
            degree: self.degree(),
            kind: self.basis.kind,
            domain: self.basis.domain.clone(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolynomialJson::deserialize(deserializer)?;
        let basis = match raw.kind {
            BasisKind::Monomial => PolyBasis::monomial(raw.dimension, raw.degree).map_err(D::Error::custom)?,
            BasisKind::Chebyshev => {
                let domain = raw.domain.ok_or_else(|| D::Error::custom("chebyshev polynomial requires a box"))?;
                if domain.dimension() != raw.dimension {
                    return Err(D::Error::custom("box dimension does not match polynomial dimension"));
                }
                PolyBasis::chebyshev(raw.degree, &domain)
            }
        };
        Polynomial::new(basis, raw.coeffs).map_err(D::Error::custom)
    }
}

/// Monomial coefficients of `T_k(a x + b)` for `k = 0..=degree`; `table[k][j]` multiplies `x^j`.
fn shifted_chebyshev_table(degree: usize, a: f64, b: f64) -> Vec<Vec<f64>> {
    let mut table: Vec<Vec<f64>> = vec![vec![1.0]];
    if degree >= 1 {
        table.push(vec![b, a]);
    }
    for k in 2..=degree {
        let mut next = vec![0.0; k + 1];
        for (j, c) in table[k - 1].iter().enumerate() {
            next[j] += 2.0 * b * c;
            next[j + 1] += 2.0 * a * c;
        }
        for (j, c) in table[k - 2].iter().enumerate() {
            next[j] -= c;
        }
        table.push(next);
    }
    table
}

/// Re-expands `p` in the monomial basis of the same degree.
pub fn to_monomial(p: &Polynomial) -> Result<Polynomial> {
    if p.basis.kind == BasisKind::Monomial {
        return Ok(p.clone());
    }
    let domain = p.basis.domain.as_ref().expect("chebyshev basis has a box");
    let n = p.dimension();
    let d = p.degree() as usize;
    let tables: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            let (l, u) = (domain.lower()[i], domain.upper()[i]);
            shifted_chebyshev_table(d, 2.0 / (u - l), -(u + l) / (u - l))
        })
        .collect();
    let target = PolyBasis::monomial(n, p.degree())?;
    let mut coeffs = vec![0.0; target.len()];
    let mut beta = vec![0u32; n];
    for (alpha, &c) in p.basis.indices.iter().zip(&p.coeffs) {
        if c == 0.0 {
            continue;
        }
        // every beta <= alpha componentwise
        let bounds = alpha.exponents();
        beta.iter_mut().for_each(|e| *e = 0);
        loop {
            let weight: f64 = (0..n).map(|i| tables[i][bounds[i] as usize][beta[i] as usize]).product();
            if weight != 0.0 {
                let k = target.position(&MultiIndex(beta.clone())).expect("lower index lies in the basis");
                coeffs[k] += c * weight;
            }
            let mut axis = 0;
            while axis < n {
                if beta[axis] < bounds[axis] {
                    beta[axis] += 1;
                    break;
                }
                beta[axis] = 0;
                axis += 1;
            }
            if axis == n {
                break;
            }
        }
    }
    Polynomial::new(target, coeffs)
}

/// Symmetric matrix `P` with `p(x) = pi_delta(x)^T P pi_delta(x)` over a monomial basis of degree `delta`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    basis: PolyBasis,
    entries: DMatrix<f64>,
}

pub const SYMMETRY_TOL: f64 = 1e-12;

impl GramMatrix {
    pub fn new(basis: PolyBasis, entries: DMatrix<f64>) -> Result<Self> {
        if basis.kind() != BasisKind::Monomial {
            return Err(Error::UnsupportedBasis { required: "monomial" });
        }
        let s = basis.len();
        if entries.nrows() != s || entries.ncols() != s {
            return Err(Error::DimensionMismatch { expected: s, found: entries.nrows() });
        }
        let deviation = max_asymmetry(&entries);
        let scale = entries.amax().max(1.0);
        if deviation > SYMMETRY_TOL * scale {
            return Err(Error::Asymmetric { deviation });
        }
        Ok(GramMatrix { basis, entries })
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `delta = ceil(d / 2)`.
pub fn half_degree(degree: u32) -> u32 {
    degree.div_ceil(2)
}

/// Expands `pi_delta^T P pi_delta` into the monomial basis of degree `2 delta`.
pub fn gram_to_poly(gram: &GramMatrix) -> Polynomial {
    let half = &gram.basis;
    let full = half.with_degree(2 * half.degree());
    let mut coeffs = vec![0.0; full.len()];
    for (i, a) in half.indices().iter().enumerate() {
        for (j, b) in half.indices().iter().enumerate() {
            let k = full.position(&(a + b)).expect("sum of half-degree indices lies in the full basis");
            coeffs[k] += gram.entries[(i, j)];
        }
    }
    Polynomial { basis: full, coeffs }
}

/// Canonical Gram representative: each coefficient `p_gamma` is split equally
/// across every ordered pair `(alpha, beta)` with `alpha + beta = gamma`.
pub fn poly_to_gram(p: &Polynomial) -> Result<GramMatrix> {
    if p.basis.kind() != BasisKind::Monomial {
        return Err(Error::UnsupportedBasis { required: "monomial" });
    }
    let half = p.basis.with_degree(half_degree(p.degree()));
    let s = half.len();
    let mut pairs: HashMap<MultiIndex, u32> = HashMap::new();
    for a in half.indices() {
        for b in half.indices() {
            *pairs.entry(a + b).or_default() += 1;
        }
    }
    let mut entries = DMatrix::zeros(s, s);
    for (i, a) in half.indices().iter().enumerate() {
        for (j, b) in half.indices().iter().enumerate() {
            let gamma = a + b;
            if let Some(k) = p.basis.position(&gamma) {
                entries[(i, j)] = p.coeffs[k] / f64::from(pairs[&gamma]);
            }
        }
    }
    Ok(GramMatrix { basis: half, entries })
}
