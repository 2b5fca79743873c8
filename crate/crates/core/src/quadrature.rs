//! Adaptive Gauss–Kronrod (7/15-point) quadrature for vector-valued integrands.

use nalgebra::DVector;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: DVector<f64>,
    /// Sum of the local |Kronrod − Gauss| estimates (max-norm).
    pub error: f64,
    pub intervals: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> DVector<f64>, a: f64, b: f64) -> (DVector<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = &fc * WGK[7];
    let mut g = &fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k.axpy(WGK[i], &s, 1.0);
        if i % 2 == 1 {
            g.axpy(WG[i / 2], &s, 1.0);
        }
    }
    let err = (&k - &g).amax() * h.abs();
    (k * h, err)
}

/// Integrates `f` over `[a, b]` to absolute accuracy `abs_tol` (max-norm) by
/// recursive bisection of the interval with the largest error estimate.
pub fn integrate_vec(
    mut f: impl FnMut(f64) -> DVector<f64>,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || pieces.len() >= max_intervals {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            let (v, _) = gk15(&mut f, lo, hi);
            pieces.push((lo, hi, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // sum in interval order so the result does not depend on the refinement history
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut value = DVector::zeros(pieces[0].2.len());
    for p in &pieces {
        value += &p.2;
    }
    Quadrature { value, error: pieces.iter().map(|p| p.3).sum(), intervals: pieces.len() }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    let q = integrate_vec(|x| DVector::from_element(1, f(x)), a, b, abs_tol, 10_000);
    (q.value[0], q.error)
}
