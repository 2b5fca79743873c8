//! Property tests for the algebraic identities of the kernel.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{random_element, random_frame, random_interior};
use super::*;

fn algebras() -> Vec<Algebra> {
    vec![
        make_algebra(AlgebraKind::SymMatrix, 1).unwrap(),
        make_algebra(AlgebraKind::SymMatrix, 2).unwrap(),
        make_algebra(AlgebraKind::SymMatrix, 3).unwrap(),
        make_algebra(AlgebraKind::HermComplex, 2).unwrap(),
        make_algebra(AlgebraKind::HermComplex, 3).unwrap(),
        make_algebra(AlgebraKind::SpinFactor, 3).unwrap(),
        make_algebra(AlgebraKind::SpinFactor, 5).unwrap(),
    ]
}

fn setup(idx: usize, seed: u64) -> (Algebra, ChaCha8Rng) {
    let all = algebras();
    (all[idx % all.len()], ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative_with_inner_product(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let (x, y, z) = (random_element(a, &mut rng), random_element(a, &mut rng), random_element(a, &mut rng));
        let lhs = x.jmul(&y).inner(&z);
        let rhs = y.inner(&x.jmul(&z));
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn jordan_axiom(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let (x, y) = (random_element(a, &mut rng), random_element(a, &mut rng));
        let x2 = x.square();
        let lhs = x2.jmul(&x.jmul(&y));
        let rhs = x.jmul(&x2.jmul(&y));
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + x.norm().powi(3) * y.norm()));
    }

    #[test]
    fn power_associativity(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_element(a, &mut rng) * 0.7;
        for m in 1..=3u32 {
            for k in 1..=(6 - m) {
                let lhs = x.powi(m).jmul(&x.powi(k));
                let rhs = x.powi(m + k);
                prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + x.norm().powi((m + k) as i32)));
            }
        }
    }

    #[test]
    fn quadratic_representation_identities(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_interior(a, &mut rng, 0.3, 2.0);
        let y = random_interior(a, &mut rng, 0.3, 2.0);
        let xi = inverse(&x, DEFAULT_TOL).unwrap();
        let yi = inverse(&y, DEFAULT_TOL).unwrap();
        let px = quad_rep(&x);
        // P(x)x⁻¹ = x
        prop_assert!((px.apply(&xi) - x.clone()).norm() < 1e-10);
        // P(x)⁻¹ = P(x⁻¹)
        let prod = px.compose(&quad_rep(&xi));
        let id = nalgebra::DMatrix::<f64>::identity(a.dim(), a.dim());
        prop_assert!((prod.matrix() - id).amax() < 1e-9);
        // (P(x)y)⁻¹ = P(x⁻¹)y⁻¹
        let lhs = inverse(&px.apply(&y), DEFAULT_TOL).unwrap();
        let rhs = quad_rep(&xi).apply(&yi);
        prop_assert!((&lhs - &rhs).norm() < 1e-8 * (1.0 + rhs.norm()));
        // det(P(x)y) = det(x)² det(y)
        let d = det(&px.apply(&y)).unwrap();
        let e = det(&x).unwrap().powi(2) * det(&y).unwrap();
        prop_assert!((d - e).abs() < 1e-9 * (1.0 + e.abs()));
        // det(x)det(x⁻¹) = 1 and x∘x⁻¹ = e
        prop_assert!((det(&x).unwrap() * det(&xi).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!((x.jmul(&xi) - Element::identity(a)).norm() < 1e-10);
    }

    #[test]
    fn inverse_derivative_matches_finite_differences(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_interior(a, &mut rng, 0.5, 2.0);
        let u = random_element(a, &mut rng);
        let h = 1e-5;
        let fp = inverse(&x.axpy(h, &u), DEFAULT_TOL).unwrap();
        let fm = inverse(&x.axpy(-h, &u), DEFAULT_TOL).unwrap();
        let fd = (fp - fm) * (0.5 / h);
        let exact = -&quad_rep(&inverse(&x, DEFAULT_TOL).unwrap()).apply(&u);
        prop_assert!((&fd - &exact).norm() < 1e-6 * exact.norm().max(1e-3));
    }

    #[test]
    fn gradient_of_ln_det_is_inverse(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_interior(a, &mut rng, 0.5, 2.0);
        let xi = inverse(&x, DEFAULT_TOL).unwrap();
        let h = 1e-5;
        for j in 0..a.dim() {
            let mut dir = Element::zero(a);
            dir.coords_mut()[j] = 1.0;
            let fd = (ln_det(&x.axpy(h, &dir)).unwrap() - ln_det(&x.axpy(-h, &dir)).unwrap()) / (2.0 * h);
            prop_assert!((fd - xi.coords()[j]).abs() < 1e-6 * (1.0 + xi.coords()[j].abs()));
        }
    }

    #[test]
    fn spectral_decomposition_invariants(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_element(a, &mut rng);
        let sd = spectral_decompose(&x, DEFAULT_TOL).unwrap();
        check_frame(&sd.frame, 1e-10).unwrap();
        prop_assert!((sd.reconstruct() - x.clone()).norm() < 1e-11 * (1.0 + x.norm()));
        prop_assert!(sd.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let tr: f64 = sd.eigenvalues.iter().sum();
        prop_assert!((tr - trace(&x)).abs() < 1e-11 * (1.0 + x.norm()));
    }

    #[test]
    fn sqrt_squares_back(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let x = random_element(a, &mut rng).square();
        let s = sqrt(&x, DEFAULT_TOL).unwrap();
        prop_assert!((s.square() - x.clone()).norm() < 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn peirce_resolution_of_identity(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let frame = random_frame(a, &mut rng);
        let pp = peirce_projections(&frame).unwrap();
        let x = random_element(a, &mut rng);
        let mut sum = Element::zero(a);
        for ((i, j), p) in &pp {
            sum += &p.apply(&x);
            // idempotent
            prop_assert!((p.compose(p).matrix() - p.matrix()).amax() < 1e-10);
            let want = if i == j { 1 } else { a.peirce() };
            prop_assert_eq!(projection_rank(p), want);
        }
        prop_assert!((sum - x).norm() < 1e-10);
        // mutual orthogonality
        for (k, (_, p)) in pp.iter().enumerate() {
            for (_, q) in pp.iter().skip(k + 1) {
                prop_assert!(p.compose(q).matrix().amax() < 1e-10);
            }
        }
    }

    #[test]
    fn orthogonal_cone_elements_multiply_to_zero(idx in 0usize..7, seed in any::<u64>()) {
        let (a, mut rng) = setup(idx, seed);
        let (x, u) = random::random_orthogonal_pair(a, &mut rng);
        prop_assert!(x.inner(&u).abs() < 1e-12);
        prop_assert!(x.jmul(&u).norm() < 1e-12);
    }
}
