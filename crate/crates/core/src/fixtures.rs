//! Named parameter sets used by the self-test suite, the examples and the
//! command-line tool.

use nalgebra::dmatrix;

use crate::affine_params::{matrix_drift, AffineParameterSet, ConstantAtom, LinearAtom, Truncation};
use crate::jordan::{make_algebra, Algebra, AlgebraKind, ConeOperator, Element};

fn sym(r: usize) -> Algebra {
    make_algebra(AlgebraKind::SymMatrix, r).expect("valid size")
}

fn s2(v: [f64; 3]) -> Element {
    Element::from_slice(sym(2), &v).expect("shape")
}

/// Wishart diffusion with a matrix drift plus a constant and a linear jump atom on S₂.
pub fn mixed_s2() -> AffineParameterSet {
    let a = sym(2);
    let e = Element::identity(a);
    let drift = matrix_drift(a, &dmatrix![-0.5, 0.3; 0.2, -0.4]).expect("matrix algebra");
    let mut p = AffineParameterSet::wishart(&e, 2.0, drift);
    p.m.push(ConstantAtom { xi: &e * 0.5, w: 0.7 });
    p.mu.push(LinearAtom { xi: &e * 1.5, c: &e * 0.3 });
    p
}

/// Pure-jump process on S₂: constant drift, one constant and one linear atom.
pub fn pure_jump_s2() -> AffineParameterSet {
    let a = sym(2);
    let mut p = AffineParameterSet::zero(a);
    p.b = &Element::identity(a) * 0.5;
    p.m = vec![ConstantAtom { xi: s2([0.5, 0.2, 0.1 * std::f64::consts::SQRT_2]), w: 1.2 }];
    p.mu = vec![LinearAtom { xi: s2([0.3, 0.6, 0.0]), c: &Element::identity(a) * 0.4 }];
    p.truncation = Truncation::Zero;
    p
}

/// Admissible parameter sets covering every algebra family, drifts and jumps.
pub fn admissible() -> Vec<(String, AffineParameterSet)> {
    let mut out = Vec::new();
    for (kind, size) in [
        (AlgebraKind::SymMatrix, 1),
        (AlgebraKind::SymMatrix, 2),
        (AlgebraKind::SymMatrix, 3),
        (AlgebraKind::HermComplex, 2),
        (AlgebraKind::SpinFactor, 4),
    ] {
        let a = make_algebra(kind, size).expect("valid size");
        let e = Element::identity(a);
        out.push((format!("bru {kind}:{size}"), AffineParameterSet::bru(&e, a.gindikin_threshold() + 1.0)));
        let dil = ConeOperator::identity(a).scale(-0.3);
        out.push((format!("dilation {kind}:{size}"), AffineParameterSet::wishart(&e, a.gindikin_threshold(), dil)));
    }
    let s3 = sym(3);
    let h = dmatrix![-0.6, 0.4, 0.0; 0.1, -0.2, 0.3; -0.5, 0.0, -0.1];
    let drift = matrix_drift(s3, &h).expect("matrix algebra");
    out.push(("wishart sym:3".into(), AffineParameterSet::wishart(&Element::identity(s3), 2.5, drift)));
    out.push(("mixed sym:2".into(), mixed_s2()));
    out.push(("pure jump sym:2".into(), pure_jump_s2()));
    out
}

/// Bru parameters on S₃ whose drift `−ee*` pushes boundary points outward.
pub fn broken_s3() -> AffineParameterSet {
    let a = sym(3);
    let ec = Element::identity(a).coords().clone();
    let mut p = AffineParameterSet::bru(&Element::identity(a), 2.0);
    p.drift = ConeOperator::new(a, -(&ec * ec.transpose())).expect("shape");
    p
}
