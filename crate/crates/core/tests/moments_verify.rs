use levelfit::moments::{moment_matrix, moment_vector, orthonormalize};
use levelfit::polybasis::{gram_to_poly, poly_to_gram, GramMatrix};
use levelfit::verify::{
    chebyshev_check, count_components, count_components_anchored, mc_volume, nonnegativity_scan, trace_report,
};
use levelfit::{fit, BasisKind, BoxDomain, FitOptions, PointCloud, PolyBasis, Polynomial};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_polynomial(rng: &mut ChaCha8Rng, basis: PolyBasis) -> Polynomial {
    let coeffs = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Polynomial::new(basis, coeffs).unwrap()
}

/// Plain Monte Carlo estimate of the integral of `p` over `domain` with its standard error.
fn mc_integral(p: &Polynomial, domain: &BoxDomain, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domain.dimension();
    let mut x = vec![0.0; n];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = rng.random_range(domain.lower()[i]..domain.upper()[i]);
        }
        let v = p.eval(&x).unwrap();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    (mean * domain.volume(), (var / samples as f64).sqrt() * domain.volume())
}

#[test]
fn moment_integration_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let domains = [
        BoxDomain::cube(1, -1.0, 1.0).unwrap(),
        BoxDomain::new(vec![-1.0, 0.5], vec![0.5, 2.0]).unwrap(),
        BoxDomain::cube(2, -1.0, 1.0).unwrap(),
    ];
    for k in 0..10 {
        let domain = &domains[k % domains.len()];
        let basis = match k % 2 {
            0 => PolyBasis::monomial(domain.dimension(), 6).unwrap(),
            _ => PolyBasis::chebyshev(6, domain),
        };
        let p = random_polynomial(&mut rng, basis);
        let exact = moment_vector(p.basis(), domain).unwrap().integrate(&p).unwrap();
        let (estimate, se) = mc_integral(&p, domain, 1_000_000, k as u64);
        assert!((exact - estimate).abs() <= 3.0 * se, "polynomial {k}: {exact} vs {estimate} +- {se}");
    }
}

/// Random symmetric matrix `N` with `pi^T N pi = 0`: entries at two index pairs
/// with the same exponent sum cancel.
fn null_perturbation(rng: &mut ChaCha8Rng, half: &PolyBasis) -> DMatrix<f64> {
    let idx = half.indices();
    let s = idx.len();
    let mut out = DMatrix::zeros(s, s);
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..s), rng.random_range(0..s));
        let target = &idx[i] + &idx[j];
        let partners: Vec<(usize, usize)> = (0..s)
            .flat_map(|k| (0..s).map(move |l| (k, l)))
            .filter(|&(k, l)| (k, l) != (i, j) && (k, l) != (j, i) && &idx[k] + &idx[l] == target)
            .collect();
        if partners.is_empty() {
            continue;
        }
        let (k, l) = partners[rng.random_range(0..partners.len())];
        let t: f64 = rng.random_range(-1.0..1.0);
        for (a, b, v) in [(i, j, t), (k, l, -t)] {
            out[(a, b)] += v / 2.0;
            out[(b, a)] += v / 2.0;
        }
    }
    out
}

#[test]
fn trace_identity_holds_for_every_gram_representative() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let domain = BoxDomain::new(vec![-1.0, -0.5], vec![1.0, 2.0]).unwrap();
    for degree in [2, 4, 6] {
        let p = random_polynomial(&mut rng, PolyBasis::monomial(2, degree).unwrap());
        let canonical = poly_to_gram(&p).unwrap();
        let m = moment_matrix(canonical.basis(), &domain).unwrap();
        let integral = moment_vector(p.basis(), &domain).unwrap().integrate(&p).unwrap();
        for _ in 0..5 {
            let entries = canonical.entries() + null_perturbation(&mut rng, canonical.basis());
            let gram = GramMatrix::new(canonical.basis().clone(), entries).unwrap();
            let back = gram_to_poly(&gram);
            for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
                assert!((a - b).abs() <= 1e-12);
            }
            let trace = m.trace_product(&gram).unwrap();
            assert!((trace - integral).abs() <= 1e-9 * (1.0 + integral.abs()), "{trace} vs {integral}");
            let whitened = orthonormalize(&m).unwrap().transform_gram(&gram).unwrap();
            assert!((whitened.trace() - integral).abs() <= 1e-9 * (1.0 + integral.abs()));
        }
    }
}

fn three_point_fit(degree: u32) -> levelfit::FitResult {
    let cloud = PointCloud::new(vec![vec![-0.5], vec![0.0], vec![0.25]]).unwrap();
    fit(&cloud, &BoxDomain::cube(1, -1.0, 1.0).unwrap(), &FitOptions::new(degree)).unwrap()
}

#[test]
fn component_counts_are_stable_under_resolution_doubling() {
    let anchors = [vec![-0.5], vec![0.0], vec![0.25]];
    for degree in [2, 7, 17, 26] {
        let r = three_point_fit(degree);
        let coarse = count_components_anchored(&r.polynomial, &r.domain, 256, &anchors).unwrap();
        let fine = count_components_anchored(&r.polynomial, &r.domain, 512, &anchors).unwrap();
        assert_eq!(coarse, fine, "degree {degree}");
    }
    let r = three_point_fit(7);
    assert_eq!(count_components(&r.polynomial, &r.domain, 256).unwrap(), 2);
    assert_eq!(count_components(&r.polynomial, &r.domain, 512).unwrap(), 2);
}

#[test]
fn volume_bound_holds_for_nonnegative_fits() {
    for degree in [0, 2, 7] {
        let r = three_point_fit(degree);
        let scan = nonnegativity_scan(&r.polynomial, &r.domain, &r.grid.refined(4)).unwrap();
        let vol = mc_volume(&r.polynomial, &r.domain, 1_000_000, 1).unwrap();
        let check = chebyshev_check(&r.polynomial, &r.moments, &vol).unwrap();
        if scan.is_nonnegative(1e-9) {
            assert!(check.pass, "degree {degree}: {check:?}");
        }
    }
}

#[test]
fn trace_report_for_fitted_polynomials() {
    for degree in [2, 7, 17, 26] {
        let r = three_point_fit(degree);
        let t = trace_report(&r.polynomial, &r.domain).unwrap();
        assert!(t.pass, "degree {degree}: {t:?}");
        assert_eq!(r.polynomial.basis().kind(), BasisKind::Monomial);
    }
}

#[test]
fn mc_volume_is_reproducible_and_seed_dependent() {
    let r = three_point_fit(7);
    let a = mc_volume(&r.polynomial, &r.domain, 100_000, 5).unwrap();
    assert_eq!(a, mc_volume(&r.polynomial, &r.domain, 100_000, 5).unwrap());
    assert_ne!(a.hits, mc_volume(&r.polynomial, &r.domain, 100_000, 6).unwrap().hits);
    assert_eq!(a.seed, 5);
    assert!(a.estimate <= r.domain.volume());
    let p_hat = a.hits as f64 / a.samples as f64;
    let se = (p_hat * (1.0 - p_hat) / a.samples as f64).sqrt() * r.domain.volume();
    assert!((a.standard_error - se).abs() <= 1e-15);
}
