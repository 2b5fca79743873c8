use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, Gamma as GammaDist};

use super::*;
use crate::affine_params::matrix_drift;
use crate::jordan::random::{random_cone_element, random_interior};
use crate::jordan::{eigenvalues, make_algebra, AlgebraKind};
use crate::quadrature::integrate;

fn sym(r: usize) -> Algebra {
    make_algebra(AlgebraKind::SymMatrix, r).unwrap()
}

fn scalar(a: Algebra, v: f64) -> Element {
    Element::from_slice(a, &[v]).unwrap()
}

#[test]
fn gindikin_set() {
    let s3 = sym(3);
    assert!(!gindikin_contains(s3, 1.5));
    assert!(gindikin_contains(s3, 2.0));
    assert!(gindikin_contains(s3, 1.0));
    assert!(gindikin_contains(s3, 2.0001));
    assert!(gindikin_contains(s3, 0.0));
    let h3 = make_algebra(AlgebraKind::HermComplex, 3).unwrap();
    assert!(!gindikin_contains(h3, 1.0) && gindikin_contains(h3, 2.0) && gindikin_contains(h3, 4.5));
    assert!(gindikin_contains(sym(1), 0.3));
    assert!(!gindikin_contains(s3, -1.0));
}

#[test]
fn cone_gamma_values() {
    assert!((cone_gamma(sym(1), &MultiIndex::zero(1), 1.0).unwrap() - 1.0).abs() < 1e-15);
    let s2 = sym(2);
    let want = (2.0 * std::f64::consts::PI).sqrt() * std::f64::consts::PI.sqrt() / 2.0;
    assert!((cone_gamma(s2, &MultiIndex::zero(2), 1.5).unwrap() - want).abs() < 1e-13);
    assert!(matches!(ln_cone_gamma(s2, &MultiIndex::zero(2), 0.5), Err(Error::PoleArgument(_))));
    // grows with |m| above the threshold
    let mut prev = ln_cone_gamma(s2, &MultiIndex::zero(2), 2.0).unwrap();
    for m in [vec![1, 0], vec![2, 0], vec![2, 1], vec![3, 2], vec![5, 4]] {
        let v = ln_cone_gamma(s2, &MultiIndex::new(m).unwrap(), 2.0).unwrap();
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn laws_are_validated() {
    let s2 = sym(2);
    let e = Element::identity(s2);
    assert!(matches!(WishartLaw::central(0.5, e.clone(), 1.0), Err(Error::InvalidLaw(_))));
    assert!(WishartLaw::central(1.0, e.clone(), 1.0).is_ok());
    assert!(matches!(WishartLaw::new(0.5, e.clone(), 1.0, e.clone()), Err(Error::InvalidLaw(_))));
    assert!(matches!(WishartLaw::central(2.0, e.clone(), 0.0), Err(Error::InvalidLaw(_))));
    assert!(matches!(WishartLaw::central(2.0, &e * -1.0, 1.0), Err(Error::InvalidLaw(_))));
}

#[test]
fn laplace_rank_one_and_limits() {
    let a = sym(1);
    for (d, t, al, x, u) in [(1.0, 0.5, 1.0, 0.0, 0.3), (2.5, 1.3, 0.7, 2.0, 1.1), (0.0, 2.0, 1.0, 1.0, 4.0)] {
        let law = WishartLaw::new(d, scalar(a, al), t, scalar(a, x)).unwrap();
        let want = (1.0 + 2.0 * t * al * u).powf(-d / 2.0) * (-u * x / (1.0 + 2.0 * t * al * u)).exp();
        assert!((laplace(&law, &scalar(a, u)).unwrap() - want).abs() < 1e-12);
        assert_eq!(laplace(&law, &scalar(a, 0.0)).unwrap(), 1.0);
        assert!((laplace(&law, &scalar(a, 1e-12)).unwrap() - 1.0).abs() < 1e-10);
    }
    let s3 = sym(3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alpha = random_cone_element(s3, &mut rng);
    let u = random_interior(s3, &mut rng, 0.2, 2.0);
    let law = WishartLaw::central(2.5, alpha.clone(), 0.9).unwrap();
    let z = Element::identity(s3) + quad_apply(&sqrt(&alpha, DEFAULT_TOL).unwrap(), &u) * 1.8;
    let want = (-1.25 * ln_det(&z).unwrap()).exp();
    assert!((laplace(&law, &u).unwrap() - want).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_is_antitone(seed in any::<u64>(), r in 1usize..4) {
        let a = sym(r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_cone_element(a, &mut rng);
        let x = random_cone_element(a, &mut rng);
        let law = WishartLaw::new(r as f64 + 0.3, alpha, 0.7, x).unwrap();
        let u = random_cone_element(a, &mut rng);
        let v = &u + &random_cone_element(a, &mut rng);
        prop_assert!(laplace(&law, &v).unwrap() <= laplace(&law, &u).unwrap() + 1e-14);
    }

    #[test]
    fn laplace_matches_bru_flow(seed in any::<u64>()) {
        let a = sym(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_cone_element(a, &mut rng);
        let x = random_cone_element(a, &mut rng);
        let u = random_interior(a, &mut rng, 0.1, 3.0);
        let law = WishartLaw::new(1.7, alpha.clone(), 1.1, x.clone()).unwrap();
        let (phi, psi) = bru_flow(&alpha, 1.7, &u, 1.1).unwrap();
        prop_assert!((ln_laplace(&law, &u).unwrap() - (-phi - psi.inner(&x))).abs() < 1e-12);
    }
}

#[test]
fn central_density_rank_one_is_gamma() {
    let a = sym(1);
    for d in [1.0, 2.0, 3.7, 9.0] {
        let law = WishartLaw::central(d, Element::identity(a), 0.5).unwrap();
        let g = GammaDist::new(d / 2.0, 1.0).unwrap();
        for xi in [0.05, 0.5, 1.0, 3.0, 12.0] {
            let w = central_density(&law, &scalar(a, xi)).unwrap();
            assert!((w.value - g.pdf(xi)).abs() < 1e-12 * g.pdf(xi).max(1.0), "δ={d} ξ={xi}");
        }
    }
}

#[test]
fn central_density_boundary_and_errors() {
    let s2 = sym(2);
    let law = WishartLaw::central(5.0, Element::identity(s2), 1.0).unwrap();
    let p1 = Element::from_slice(s2, &[1.0, 0.0, 0.0]).unwrap();
    assert_eq!(central_density(&law, &p1).unwrap().value, 0.0);
    let near = Element::from_slice(s2, &[1.0, 1e-9, 0.0]).unwrap();
    assert!(central_density(&law, &near).unwrap().value < 1e-8);
    let law1 = WishartLaw::central(1.0, Element::identity(s2), 1.0).unwrap();
    assert!(matches!(central_density(&law1, &Element::identity(s2)), Err(Error::DensityDoesNotExist(_))));
    let law2 = WishartLaw::central(3.0, p1.clone(), 1.0).unwrap();
    assert!(matches!(central_density(&law2, &Element::identity(s2)), Err(Error::DensityDoesNotExist(_))));
}

/// ∫_K f dξ on S₂ for orthogonally invariant f: √2·π ∫_{λ₁>λ₂>0} |λ₁−λ₂| f(λ) dλ.
fn s2_invariant_integral(f: impl Fn(f64, f64) -> f64, top: f64) -> f64 {
    let c = std::f64::consts::SQRT_2 * std::f64::consts::PI;
    let (v, _) = integrate(
        |l2| integrate(|l1| (l1 - l2) * f(l1, l2), l2, top, 1e-13).0,
        0.0,
        top,
        1e-12,
    );
    c * v
}

#[test]
fn central_density_s2_normalization() {
    let s2 = sym(2);
    let law = WishartLaw::central(3.0, &Element::identity(s2) * 0.5, 1.0).unwrap();
    let dens = |l1: f64, l2: f64| {
        central_density(&law, &Element::from_slice(s2, &[l1, l2, 0.0]).unwrap()).unwrap().value
    };
    let total = s2_invariant_integral(dens, 60.0);
    assert!((total - 1.0).abs() < 1e-6, "total {total}");
    // the eigenvalue Jacobian against sampling: P(λ_max ≤ 1)
    let quad = s2_invariant_integral(|l1, l2| if l1 <= 1.0 { dens(l1, l2) } else { 0.0 }, 1.0);
    let xs = sample(&law, 100_000, 77).unwrap();
    let hits = xs.iter().filter(|x| eigenvalues(x).unwrap()[0] <= 1.0).count() as f64 / xs.len() as f64;
    let se = (hits * (1.0 - hits) / xs.len() as f64).sqrt();
    assert!((hits - quad).abs() < 4.0 * se, "mc {hits} quad {quad} se {se}");
}

fn scalar_series(d: f64, al: f64, t: f64, x: f64, xi: f64, cap: usize) -> f64 {
    let pre = (1.0 / (2.0 * t * al)).powf(d / 2.0) * (-(xi + x) / (2.0 * t * al)).exp() * xi.powf(d / 2.0 - 1.0);
    let z = x * xi / (4.0 * t * t * al * al);
    let mut term = 1.0 / statrs::function::gamma::gamma(d / 2.0);
    let mut s = term;
    for k in 1..=cap {
        term *= z / (k as f64 * (k as f64 - 1.0 + d / 2.0));
        s += term;
    }
    pre * s
}

#[test]
fn noncentral_rank_one_matches_scalar_series() {
    let a = sym(1);
    let opts = SeriesOptions { cap: 60, ..Default::default() };
    for (d, al, t, x) in [(3.0, 1.0, 0.5, 1.0), (1.5, 0.7, 1.2, 3.0), (5.0, 2.0, 0.3, 0.4)] {
        let law = WishartLaw::new(d, scalar(a, al), t, scalar(a, x)).unwrap();
        for xi in [0.1, 0.8, 2.0, 5.0] {
            let v = noncentral_density(&law, &scalar(a, xi), &opts).unwrap();
            let want = scalar_series(d, al, t, x, xi, 60);
            assert!((v.value - want).abs() < 1e-10, "{v:?} vs {want}");
            assert!(v.tail_bound <= 1e-8);
        }
    }
}

#[test]
fn noncentral_rank_one_integrates_to_one() {
    let a = sym(1);
    let law = WishartLaw::new(3.0, scalar(a, 1.0), 0.5, scalar(a, 2.0)).unwrap();
    let opts = SeriesOptions::default();
    let (v, _) = integrate(|xi| noncentral_density(&law, &scalar(a, xi), &opts).unwrap().value, 0.0, 80.0, 1e-11);
    assert!((v - 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn noncentral_reduces_to_central() {
    let s2 = sym(2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alpha = random_interior(s2, &mut rng, 0.5, 2.0);
    let law = WishartLaw::central(2.4, alpha, 0.8).unwrap();
    let xi = random_interior(s2, &mut rng, 0.1, 3.0);
    let nc = noncentral_density(&law, &xi, &SeriesOptions::default()).unwrap();
    let c = central_density(&law, &xi).unwrap();
    assert_eq!(nc.log_value, c.log_value);
    assert_eq!(nc.tail_bound, 0.0);
}

#[test]
fn noncentral_s2_is_a_probability_density() {
    // E_central[f_nc / f_c] = 1 by importance sampling from the central law
    let s2 = sym(2);
    let alpha = &Element::identity(s2) * 0.5;
    let x = Element::from_sym_matrix(s2, &DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5])).unwrap();
    let nc = WishartLaw::new(3.0, alpha.clone(), 1.0, x).unwrap();
    let c = WishartLaw::central(3.0, alpha, 1.0).unwrap();
    let xs = sample(&c, 20_000, 31).unwrap();
    let opts = SeriesOptions::default();
    let w: Vec<f64> = xs
        .iter()
        .map(|xi| {
            let a = noncentral_density(&nc, xi, &opts).unwrap();
            let b = central_density(&c, xi).unwrap();
            (a.log_value - b.log_value).exp()
        })
        .collect();
    let m = w.iter().sum::<f64>() / w.len() as f64;
    let se = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64 / w.len() as f64).sqrt();
    assert!((m - 1.0).abs() < 4.0 * se, "mean {m} se {se}");
}

#[test]
fn noncentral_monte_carlo_zonal_mode_agrees() {
    let s2 = sym(2);
    let x = Element::from_sym_matrix(s2, &DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5])).unwrap();
    let law = WishartLaw::new(3.0, Element::identity(s2), 0.5, x).unwrap();
    let xi = Element::from_sym_matrix(s2, &DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.9])).unwrap();
    let exact = noncentral_density(&law, &xi, &SeriesOptions::default()).unwrap();
    let mc = noncentral_density(
        &law,
        &xi,
        &SeriesOptions { mode: Some(ZonalMode::MonteCarlo { samples: 20_000, seed: 3 }), ..Default::default() },
    )
    .unwrap();
    assert!((exact.value - mc.value).abs() < 4.0 * mc.zonal_std_error + 1e-12, "{exact:?} {mc:?}");
}

#[test]
fn tail_bound_is_certified_and_enforced() {
    let s2 = sym(2);
    let x = &Element::identity(s2) * 3.0;
    let law = WishartLaw::new(2.5, Element::identity(s2), 0.5, x).unwrap();
    let xi = &Element::identity(s2) * 2.0;
    for cap in [2, 5, 10, 15] {
        let lo = noncentral_density(&law, &xi, &SeriesOptions { cap, target_tol: 1e9, mode: None }).unwrap();
        let hi = noncentral_density(&law, &xi, &SeriesOptions { cap: cap + 10, target_tol: 1e9, mode: None }).unwrap();
        assert!((hi.value - lo.value).abs() <= lo.tail_bound, "cap {cap}");
    }
    assert!(matches!(
        noncentral_density(&law, &xi, &SeriesOptions { cap: 3, ..Default::default() }),
        Err(Error::TailNotConverged { .. })
    ));
}

#[test]
fn density_existence() {
    let s2 = sym(2);
    let zero = ConeOperator::zero(s2);
    assert!(density_exists(&Element::identity(s2), &zero).unwrap());
    let p1 = Element::from_slice(s2, &[1.0, 0.0, 0.0]).unwrap();
    assert!(!density_exists(&p1, &zero).unwrap());
    let mixing = matrix_drift(s2, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])).unwrap();
    assert!(density_exists(&p1, &mixing).unwrap());
    let outward = ConeOperator::from_fn(s2, |x| {
        let e = Element::identity(s2);
        &e * -e.inner(x)
    });
    assert!(matches!(density_exists(&p1, &outward), Err(Error::NotAdmissible(_))));
}

#[test]
fn sample_mean_matches_transform_derivative() {
    let s2 = sym(2);
    let alpha = Element::from_sym_matrix(s2, &DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.6])).unwrap();
    let x = Element::from_sym_matrix(s2, &DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3])).unwrap();
    let law = WishartLaw::new(3.0, alpha, 0.7, x).unwrap();
    let xs = sample(&law, 50_000, 19).unwrap();
    let tr: Vec<f64> = xs.iter().map(|x| x.trace()).collect();
    let m = tr.iter().sum::<f64>() / tr.len() as f64;
    let se = (tr.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (tr.len() - 1) as f64 / tr.len() as f64).sqrt();
    let h = 1e-6;
    let e = Element::identity(s2);
    let fd = (ln_laplace(&law, &(&e * h)).unwrap() - ln_laplace(&law, &(&e * (2.0 * h))).unwrap()) / h;
    assert!((m - fd).abs() < 3.0 * se, "mean {m} fd {fd} se {se}");
}
