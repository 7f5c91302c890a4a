//! Lebesgue moments on boxes, moment matrices and their orthonormalization.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::polybasis::{BasisKind, GramMatrix, MultiIndex, PolyBasis, Polynomial};

/// Condition number above which a moment matrix is reported as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e12;

fn check_dimension(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `prod_i (u_i^(a_i+1) - l_i^(a_i+1)) / (a_i + 1)`.
pub fn box_monomial_moment(domain: &BoxDomain, alpha: &MultiIndex) -> Result<f64> {
    check_dimension(domain.dimension(), alpha.dimension())?;
    Ok(alpha
        .exponents()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let k = a as i32 + 1;
            (domain.upper()[i].powi(k) - domain.lower()[i].powi(k)) / f64::from(k as u32)
        })
        .product())
}

/// Integral over `[-1, 1]` of `T_k`.
fn chebyshev_unit_integral(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        let k = f64::from(k);
        2.0 / (1.0 - k * k)
    }
}

/// Antiderivative of `T_k` evaluated at `t`.
fn chebyshev_antiderivative(k: u32, t: f64) -> f64 {
    match k {
        0 => t,
        1 => 0.5 * t * t,
        _ => {
            let mut values = vec![0.0; k as usize + 2];
            crate::polybasis::chebyshev_values(t, &mut values);
            let kf = f64::from(k);
            values[k as usize + 1] / (2.0 * (kf + 1.0)) - values[k as usize - 1] / (2.0 * (kf - 1.0))
        }
    }
}

/// Integral over `domain` of the tensor Chebyshev element `alpha` whose affine map is
/// defined by `basis_box`.
pub fn chebyshev_moment_in(basis_box: &BoxDomain, domain: &BoxDomain, alpha: &MultiIndex) -> Result<f64> {
    check_dimension(domain.dimension(), alpha.dimension())?;
    check_dimension(domain.dimension(), basis_box.dimension())?;
    Ok(alpha
        .exponents()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let half_width = 0.5 * basis_box.width(i);
            if basis_box.lower()[i] == domain.lower()[i] && basis_box.upper()[i] == domain.upper()[i] {
                half_width * chebyshev_unit_integral(k)
            } else {
                let a = basis_box.to_unit(i, domain.lower()[i]);
                let b = basis_box.to_unit(i, domain.upper()[i]);
                half_width * (chebyshev_antiderivative(k, b) - chebyshev_antiderivative(k, a))
            }
        })
        .product())
}

/// Integral over `domain` of `prod_i T_{a_i}(t_i)` with `t_i` the affine image of `x_i` in `[-1, 1]`.
pub fn chebyshev_moment(domain: &BoxDomain, alpha: &MultiIndex) -> Result<f64> {
    chebyshev_moment_in(domain, domain, alpha)
}

/// Dot product in twice the working precision (Ogita, Rump and Oishi's `Dot2`).
///
/// High-degree monomial coefficients are large and alternate in sign, so the
/// plain sum loses digits that the trace identity checks care about.
fn compensated_dot(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let prod = a * b;
        let prod_err = a.mul_add(b, -prod);
        let t = sum + prod;
        let z = t - sum;
        err += (sum - (t - z)) + (prod - z) + prod_err;
        sum = t;
    }
    sum + err
}

/// Moments `y_alpha` of the Lebesgue measure on a box with respect to a basis.
#[derive(Clone, Debug)]
pub struct MomentVector {
    basis: PolyBasis,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `integral over B of p`, i.e. `sum_alpha p_alpha y_alpha`.
    pub fn integrate(&self, p: &Polynomial) -> Result<f64> {
        if p.basis() != &self.basis {
            return Err(Error::InvalidArgument("polynomial and moments use different bases".into()));
        }
        Ok(compensated_dot(p.coeffs().iter().copied().zip(self.values.iter().copied())))
    }

    /// CSV lines `a_1,...,a_n,value` with a header row.
    pub fn to_csv(&self) -> String {
        let n = self.basis.dimension();
        let mut out = (1..=n).map(|i| format!("a{i}")).collect::<Vec<_>>().join(",");
        out.push_str(",value\n");
        for (alpha, y) in self.basis.indices().iter().zip(&self.values) {
            for e in alpha.exponents() {
                out.push_str(&format!("{e},"));
            }
            out.push_str(&format!("{y:?}\n"));
        }
        out
    }
}

fn moment_of(basis: &PolyBasis, domain: &BoxDomain, alpha: &MultiIndex) -> Result<f64> {
    match basis.kind() {
        BasisKind::Monomial => box_monomial_moment(domain, alpha),
        BasisKind::Chebyshev => chebyshev_moment_in(basis.domain().expect("chebyshev basis has a box"), domain, alpha),
    }
}

pub fn moment_vector(basis: &PolyBasis, domain: &BoxDomain) -> Result<MomentVector> {
    check_dimension(domain.dimension(), basis.dimension())?;
    let values = basis.indices().iter().map(|a| moment_of(basis, domain, a)).collect::<Result<_>>()?;
    Ok(MomentVector { basis: basis.clone(), values })
}

/// `M = integral over B of pi_delta pi_delta^T`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    basis: PolyBasis,
    entries: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Ratio of extreme eigenvalues.
    pub fn condition_number(&self) -> f64 {
        let eig = SymmetricEigen::new(self.entries.clone()).eigenvalues;
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// `trace(P M)` for a Gram matrix over the same half-degree basis.
    pub fn trace_product(&self, gram: &GramMatrix) -> Result<f64> {
        if gram.basis() != &self.basis {
            return Err(Error::InvalidArgument("Gram and moment matrices use different bases".into()));
        }
        Ok(compensated_dot(gram.entries().iter().copied().zip(self.entries.iter().copied())))
    }
}

pub fn moment_matrix(basis: &PolyBasis, domain: &BoxDomain) -> Result<MomentMatrix> {
    check_dimension(domain.dimension(), basis.dimension())?;
    let s = basis.len();
    let idx = basis.indices();
    let mut entries = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..=i {
            let v = match basis.kind() {
                BasisKind::Monomial => box_monomial_moment(domain, &(&idx[i] + &idx[j]))?,
                BasisKind::Chebyshev => chebyshev_product_moment(basis, domain, &idx[i], &idx[j]),
            };
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    let m = MomentMatrix { basis: basis.clone(), entries };
    let cond = m.condition_number();
    if cond > CONDITION_WARNING {
        warn!(
            "moment matrix of the degree-{} {} basis has condition number {cond:.3e}; \
             consider the chebyshev basis",
            basis.degree(),
            basis.kind()
        );
    }
    Ok(m)
}

/// `T_a T_b = (T_{a+b} + T_{|a-b|}) / 2` on each axis.
fn chebyshev_product_moment(basis: &PolyBasis, domain: &BoxDomain, a: &MultiIndex, b: &MultiIndex) -> f64 {
    let bbox = basis.domain().expect("chebyshev basis has a box");
    (0..domain.dimension())
        .map(|i| {
            let (ka, kb) = (a.exponents()[i], b.exponents()[i]);
            let axis = |k: u32| {
                let half_width = 0.5 * bbox.width(i);
                if bbox.lower()[i] == domain.lower()[i] && bbox.upper()[i] == domain.upper()[i] {
                    half_width * chebyshev_unit_integral(k)
                } else {
                    let lo = bbox.to_unit(i, domain.lower()[i]);
                    let hi = bbox.to_unit(i, domain.upper()[i]);
                    half_width * (chebyshev_antiderivative(k, hi) - chebyshev_antiderivative(k, lo))
                }
            };
            0.5 * (axis(ka + kb) + axis(ka.abs_diff(kb)))
        })
        .product()
}

/// Cholesky factor `L` of a moment matrix, `M = L L^T`.
///
/// The transformed basis `L^{-1} pi` is orthonormal for the Lebesgue measure on the box,
/// and a Gram matrix `P` in the original basis becomes `L^T P L`.
#[derive(Clone, Debug)]
pub struct Orthonormalizer {
    basis: PolyBasis,
    factor: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

pub fn orthonormalize(m: &MomentMatrix) -> Result<Orthonormalizer> {
    let chol: Cholesky<f64, Dyn> =
        Cholesky::new(m.entries.clone()).ok_or(Error::NotPositiveDefinite { degree: m.basis.degree() })?;
    let factor = chol.l();
    let s = factor.nrows();
    let inverse = factor
        .solve_lower_triangular(&DMatrix::identity(s, s))
        .ok_or(Error::NotPositiveDefinite { degree: m.basis.degree() })?;
    if inverse.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { degree: m.basis.degree() });
    }
    Ok(Orthonormalizer { basis: m.basis.clone(), factor, inverse })
}

impl Orthonormalizer {
    /// Lower-triangular `L`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `L^{-1}`; row `k` holds the coefficients of the `k`-th orthonormal element in the original basis.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Orthonormal basis values `L^{-1} pi(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pi = DVector::from_vec(self.basis.eval(x)?);
        Ok((&self.inverse * pi).iter().copied().collect())
    }

    /// `L^{-1} A L^{-T}`; maps the moment matrix to the identity.
    pub fn whiten(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.inverse * a * self.inverse.transpose()
    }

    /// Gram matrix of the same polynomial in the orthonormal basis: `L^T P L`.
    pub fn transform_gram(&self, gram: &GramMatrix) -> Result<DMatrix<f64>> {
        if gram.basis() != &self.basis {
            return Err(Error::InvalidArgument("Gram matrix uses a different basis".into()));
        }
        Ok(self.factor.transpose() * gram.entries() * &self.factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::{gram_to_poly, poly_to_gram};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn unit(n: usize) -> BoxDomain {
        BoxDomain::cube(n, -1.0, 1.0).unwrap()
    }

    /// Adaptive Simpson on `[a, b]`.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            (a, fa): (f64, f64),
            (b, fb): (f64, f64),
            fm: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, (a, fa), (m, fm), flm, left, tol / 2.0, depth - 1)
                    + rec(f, (m, fm), (b, fb), frm, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, (a, fa), (b, fb), fm, whole, tol, 40)
    }

    #[test]
    fn monomial_moment_examples() {
        assert!((box_monomial_moment(&unit(1), &idx(&[2])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(box_monomial_moment(&unit(3), &idx(&[2, 3, 0])).unwrap(), 0.0);
        let b = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        assert!((box_monomial_moment(&b, &idx(&[1, 2])).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(box_monomial_moment(&b, &idx(&[1])).is_err());
    }

    #[test]
    fn even_moments_positive_on_symmetric_boxes() {
        let b = BoxDomain::cube(3, -0.7, 0.7).unwrap();
        for alpha in crate::polybasis::enumerate_indices(3, 8) {
            if !alpha.has_odd_entry() {
                assert!(box_monomial_moment(&b, &alpha).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn chebyshev_moment_examples() {
        assert!((chebyshev_moment(&unit(1), &idx(&[2])).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(chebyshev_moment(&unit(1), &idx(&[1])).unwrap(), 0.0);
        let b = BoxDomain::cube(1, 0.0, 2.0).unwrap();
        let got = chebyshev_moment(&b, &idx(&[4])).unwrap();
        // quadrature of T_4(x - 1) over [0, 2]
        let oracle = simpson(
            &|x: f64| {
                let t = x - 1.0;
                8.0 * t.powi(4) - 8.0 * t * t + 1.0
            },
            0.0,
            2.0,
            1e-14,
        );
        assert!((got - oracle).abs() < 1e-12);
        assert!((got + 2.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_moment_on_foreign_box_matches_quadrature() {
        let basis_box = BoxDomain::new(vec![-2.0], vec![1.0]).unwrap();
        let domain = BoxDomain::new(vec![-1.5], vec![0.5]).unwrap();
        for k in 0..8u32 {
            let got = chebyshev_moment_in(&basis_box, &domain, &idx(&[k])).unwrap();
            let f = |x: f64| {
                let mut v = vec![0.0; k as usize + 1];
                crate::polybasis::chebyshev_values(basis_box.to_unit(0, x), &mut v);
                v[k as usize]
            };
            let oracle = simpson(&f, -1.5, 0.5, 1e-14);
            assert!((got - oracle).abs() < 1e-12, "k={k}: {got} vs {oracle}");
        }
    }

    #[test]
    fn moment_vector_examples() {
        let y = moment_vector(&PolyBasis::monomial(1, 2).unwrap(), &unit(1)).unwrap();
        assert_eq!(y.values()[0], 2.0);
        assert_eq!(y.values()[1], 0.0);
        assert!((y.values()[2] - 2.0 / 3.0).abs() < 1e-15);

        let b = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 2.0]).unwrap();
        let basis = PolyBasis::monomial(2, 3).unwrap();
        let y = moment_vector(&basis, &b).unwrap();
        let one = Polynomial::constant(basis.clone(), 1.0);
        assert_eq!(y.integrate(&one).unwrap(), b.volume());
        assert!(moment_vector(&basis, &unit(3)).is_err());
        assert!(y.to_csv().starts_with("a1,a2,value\n0,0,6.0\n"));
    }

    #[test]
    fn moment_matrix_examples() {
        let m = moment_matrix(&PolyBasis::monomial(1, 1).unwrap(), &unit(1)).unwrap();
        assert_eq!(m.entries()[(0, 0)], 2.0);
        assert_eq!(m.entries()[(0, 1)], 0.0);
        assert!((m.entries()[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);
        for n in 1..=3 {
            for delta in 0..=7u32 {
                if n == 3 && delta > 5 {
                    continue;
                }
                let m = moment_matrix(&PolyBasis::monomial(n, delta).unwrap(), &unit(n)).unwrap();
                assert!(orthonormalize(&m).is_ok(), "n={n} delta={delta}");
            }
        }
    }

    #[test]
    fn moment_matrix_matches_quadrature() {
        let domains = [unit(2), BoxDomain::new(vec![-0.3, 0.2], vec![1.1, 1.7]).unwrap()];
        for domain in &domains {
            for delta in 0..=5u32 {
                let basis = PolyBasis::monomial(2, delta).unwrap();
                let m = moment_matrix(&basis, domain).unwrap();
                let idx = basis.indices();
                for i in 0..basis.len() {
                    for j in 0..=i {
                        let g = &idx[i] + &idx[j];
                        let (a, b) = (g.exponents()[0] as i32, g.exponents()[1] as i32);
                        // the integrand is a product, so the double integral factors
                        let oracle = simpson(&|x: f64| x.powi(a), domain.lower()[0], domain.upper()[0], 1e-15)
                            * simpson(&|y: f64| y.powi(b), domain.lower()[1], domain.upper()[1], 1e-15);
                        let got = m.entries()[(i, j)];
                        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1e-3), "{g}: {got} vs {oracle}");
                    }
                }
            }
        }
    }

    #[test]
    fn chebyshev_moment_matrix_is_consistent_with_quadrature() {
        let domain = BoxDomain::new(vec![0.0], vec![3.0]).unwrap();
        let basis = PolyBasis::chebyshev(4, &domain);
        let m = moment_matrix(&basis, &domain).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let f = |x: f64| {
                    let v = basis.eval(&[x]).unwrap();
                    v[i] * v[j]
                };
                let oracle = simpson(&f, 0.0, 3.0, 1e-14);
                assert!((m.entries()[(i, j)] - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_basis_on_unit_interval() {
        let m = moment_matrix(&PolyBasis::monomial(1, 1).unwrap(), &unit(1)).unwrap();
        let o = orthonormalize(&m).unwrap();
        let inv = o.inverse();
        assert!((inv[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((inv[(1, 1)] - 6f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(inv[(1, 0)], 0.0);
        let v = o.eval(&[0.5]).unwrap();
        assert!((v[1] - 0.5 * 6f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn whitening_yields_identity_and_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, delta) in [(1usize, 3u32), (2, 2), (2, 3), (3, 1)] {
            let domain = BoxDomain::new(vec![-1.0; n], (0..n).map(|i| 0.5 + i as f64).collect()).unwrap();
            let basis = PolyBasis::monomial(n, delta).unwrap();
            let m = moment_matrix(&basis, &domain).unwrap();
            let o = orthonormalize(&m).unwrap();
            let w = o.whiten(m.entries());
            assert!((w - DMatrix::identity(basis.len(), basis.len())).amax() < 1e-10);
            let s = basis.len();
            let r = DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
            let gram = GramMatrix::new(basis.clone(), (&r + r.transpose()) * 0.5).unwrap();
            let tilde = o.transform_gram(&gram).unwrap();
            let lhs = tilde.trace();
            let rhs = m.trace_product(&gram).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn trace_identity_for_random_gram_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let domain = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        for delta in 0..=3u32 {
            let half = PolyBasis::monomial(2, delta).unwrap();
            let m = moment_matrix(&half, &domain).unwrap();
            let s = half.len();
            for _ in 0..10 {
                let r = DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
                let gram = GramMatrix::new(half.clone(), (&r + r.transpose()) * 0.5).unwrap();
                let p = gram_to_poly(&gram);
                let y = moment_vector(p.basis(), &domain).unwrap();
                let integral = y.integrate(&p).unwrap();
                let trace = m.trace_product(&gram).unwrap();
                assert!((trace - integral).abs() <= 1e-10 * (1.0 + integral.abs()));
                let canonical = poly_to_gram(&p).unwrap();
                assert!((m.trace_product(&canonical).unwrap() - integral).abs() <= 1e-10 * (1.0 + integral.abs()));
            }
        }
    }
}
