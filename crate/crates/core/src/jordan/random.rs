//! Random elements, Jordan frames and Haar-distributed automorphisms, for
//! sampling-based checks and Monte Carlo zonal averages.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::algebra::{Algebra, AlgebraKind};
use super::element::Element;

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Element with iid standard normal coordinates.
pub fn random_element<R: Rng + ?Sized>(a: Algebra, rng: &mut R) -> Element {
    Element::from_coords_unchecked(a, DVector::from_fn(a.dim(), |_, _| gauss(rng)))
}

/// Element of K (a Jordan square of a Gaussian element).
pub fn random_cone_element<R: Rng + ?Sized>(a: Algebra, rng: &mut R) -> Element {
    random_element(a, rng).square()
}

/// Element of the interior of K with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_interior<R: Rng + ?Sized>(a: Algebra, rng: &mut R, lo: f64, hi: f64) -> Element {
    let frame = random_frame(a, rng);
    let mut c = DVector::zeros(a.dim());
    for p in &frame {
        c.axpy(rng.random_range(lo..=hi), p.coords(), 1.0);
    }
    Element::from_coords_unchecked(a, c)
}

/// Haar-orthogonal r×r real matrix (QR of a Gaussian matrix with sign correction).
pub fn haar_orthogonal<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| gauss(rng));
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar-unitary r×r complex matrix.
pub fn haar_unitary<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(r, r, |_, _| Complex64::new(gauss(rng) * s, gauss(rng) * s));
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..r {
        let d = rr[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..r {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random orthogonal rotation of ℝᵐ (used on x̄ for the spin factor).
pub fn haar_rotation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    haar_orthogonal(m, rng)
}

/// A Haar-distributed element of the orthogonal automorphisms of K, applied to `x`.
///
/// SymMatrix: x ↦ QxQᵀ; HermComplex: x ↦ UxU*; SpinFactor: x̄ ↦ Ox̄.
pub struct HaarAutomorphism {
    kind: AlgebraKind,
    real: DMatrix<f64>,
    complex: DMatrix<Complex64>,
}

impl HaarAutomorphism {
    pub fn sample<R: Rng + ?Sized>(a: Algebra, rng: &mut R) -> Self {
        match a.kind() {
            AlgebraKind::SymMatrix => HaarAutomorphism {
                kind: a.kind(),
                real: haar_orthogonal(a.size(), rng),
                complex: DMatrix::zeros(0, 0),
            },
            AlgebraKind::HermComplex => HaarAutomorphism {
                kind: a.kind(),
                real: DMatrix::zeros(0, 0),
                complex: haar_unitary(a.size(), rng),
            },
            _ => HaarAutomorphism {
                kind: a.kind(),
                real: haar_rotation(a.dim() - 1, rng),
                complex: DMatrix::zeros(0, 0),
            },
        }
    }

    pub fn apply(&self, x: &Element) -> Element {
        let a = x.algebra();
        match self.kind {
            AlgebraKind::SymMatrix => {
                let m = x.to_sym_matrix().expect("sym");
                let y = &self.real * m * self.real.transpose();
                Element::from_coords_unchecked(a, a.sym_to_coords(&y))
            }
            AlgebraKind::HermComplex => {
                let m = x.to_herm_matrix().expect("herm");
                let y = &self.complex * m * self.complex.adjoint();
                Element::from_coords_unchecked(a, a.herm_to_coords(&y))
            }
            _ => {
                let c = x.coords();
                let mut out = c.clone();
                let bar = &self.real * c.rows(1, c.len() - 1);
                out.rows_mut(1, c.len() - 1).copy_from(&bar);
                Element::from_coords_unchecked(a, out)
            }
        }
    }
}

/// A uniformly rotated Jordan frame (the image of the standard frame under a Haar automorphism).
pub fn random_frame<R: Rng + ?Sized>(a: Algebra, rng: &mut R) -> Vec<Element> {
    let g = HaarAutomorphism::sample(a, rng);
    standard_frame(a).iter().map(|p| g.apply(p)).collect()
}

/// The standard frame: diagonal matrix units, or ½(1, ±e₁) for the spin factor.
pub fn standard_frame(a: Algebra) -> Vec<Element> {
    match a.kind() {
        AlgebraKind::SpinFactor => {
            let mk = |s: f64| {
                let mut nat = vec![0.0; a.dim()];
                nat[0] = 0.5;
                nat[1] = 0.5 * s;
                Element::from_spin_natural(a, &nat).expect("spin")
            };
            vec![mk(1.0), mk(-1.0)]
        }
        _ => (0..a.rank())
            .map(|i| {
                let mut c = DVector::zeros(a.dim());
                c[i] = 1.0;
                Element::from_coords_unchecked(a, c)
            })
            .collect(),
    }
}

/// A pair (x, u) of boundary cone elements with ⟨x, u⟩ = 0, built from complementary
/// subsets of a random Jordan frame with random positive weights.
///
/// In rank one the only orthogonal pairs involve 0, and `(0, 0)` is returned.
pub fn random_orthogonal_pair<R: Rng + ?Sized>(a: Algebra, rng: &mut R) -> (Element, Element) {
    let r = a.rank();
    if r == 1 {
        return (Element::zero(a), Element::zero(a));
    }
    let frame = random_frame(a, rng);
    // non-empty proper subset S for x; u lives on a non-empty subset of the complement
    let mut in_x: Vec<bool> = (0..r).map(|_| rng.random_bool(0.5)).collect();
    if in_x.iter().all(|&b| b) {
        in_x[rng.random_range(0..r)] = false;
    }
    if in_x.iter().all(|&b| !b) {
        in_x[rng.random_range(0..r)] = true;
    }
    let mut x = DVector::zeros(a.dim());
    let mut u = DVector::zeros(a.dim());
    for (k, p) in frame.iter().enumerate() {
        let w = rng.random_range(0.1..2.0);
        if in_x[k] {
            x.axpy(w, p.coords(), 1.0);
        } else {
            u.axpy(w, p.coords(), 1.0);
        }
    }
    (Element::from_coords_unchecked(a, x), Element::from_coords_unchecked(a, u))
}
