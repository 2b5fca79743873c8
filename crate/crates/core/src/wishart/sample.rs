//! Exact samplers for Wishart laws on the matrix cones.
//!
//! * rank one: Poisson mixture of Gamma laws (any δ ≥ 0, any x);
//! * integer number of Gaussian "vectors" (δ for real, δ/2 for complex
//!   matrices) at least rank(x): `X = Σ (gᵢ + mᵢ)(gᵢ + mᵢ)*` with
//!   `Σ mᵢmᵢ* = x` and `E gᵢgᵢ* = tα` (real) or `2tα` (complex);
//! * otherwise a Bartlett triangular factor for the central part, added to an
//!   integer noncentral part of rank(x) vectors when the remaining shape is
//!   above the continuous part of the Gindikin set.
//!
//! Spin factors and the remaining combinations report
//! `UnsupportedCombination`; `simulate::sample_or_simulate` falls back to
//! transition simulation for them.
//!
//! Samples are produced in chunks of [`CHUNK`]; chunk i uses the ChaCha8
//! stream i of the given seed, so the output does not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jordan::{AlgebraKind, Element};

use super::WishartLaw;

pub const CHUNK: usize = 1024;

/// Sampler chosen for a law.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplePlan {
    /// The law is the point mass at x.
    Point,
    /// Rank-one algebra: Poisson mixture of Gamma laws.
    PoissonGamma,
    /// `vectors` Gaussian outer products (noncentral) plus an optional
    /// Bartlett factor of the given shape (in vector units).
    Gaussian { vectors: usize, bartlett: Option<f64> },
}

fn field_units(law: &WishartLaw) -> f64 {
    match law.algebra().kind() {
        AlgebraKind::HermComplex => 0.5 * law.delta,
        _ => law.delta,
    }
}

/// Numeric rank of an element (eigenvalues above 1e−10 of the largest one).
pub fn sample_rank(x: &Element) -> Result<usize> {
    let ev = crate::jordan::eigenvalues(x)?;
    let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(ev.iter().filter(|v| v.abs() > 1e-10 * top).count())
}

/// Chooses the exact sampler for the law, or reports why there is none.
pub fn plan(law: &WishartLaw) -> Result<SamplePlan> {
    let a = law.algebra();
    if law.alpha.is_zero() || (law.delta == 0.0 && law.x.is_zero()) {
        return Ok(SamplePlan::Point);
    }
    if a.rank() == 1 {
        return Ok(SamplePlan::PoissonGamma);
    }
    if !a.is_matrix() {
        return Err(Error::UnsupportedCombination(format!("no exact sampler on {a}")));
    }
    let r = a.rank() as f64;
    let units = field_units(law);
    let kx = sample_rank(&law.x)?;
    let integral = (units - units.round()).abs() <= 1e-12;
    if integral && units.round() as usize >= kx {
        return Ok(SamplePlan::Gaussian { vectors: units.round() as usize, bartlett: None });
    }
    let rest = units - kx as f64;
    if rest > r - 1.0 {
        return Ok(SamplePlan::Gaussian { vectors: kx, bartlett: Some(rest) });
    }
    Err(Error::UnsupportedCombination(format!(
        "δ = {} with rank(x) = {kx} on {a} has no exact sampler",
        law.delta
    )))
}

pub(crate) struct MatrixSampler {
    complex: bool,
    r: usize,
    /// Root S with S S* = covariance of one Gaussian vector.
    root: DMatrix<Complex64>,
    means: Vec<DVector<Complex64>>,
    vectors: usize,
    bartlett: Option<f64>,
}

fn herm_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let e = m.clone().symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

fn to_complex(x: &Element) -> DMatrix<Complex64> {
    match x.algebra().kind() {
        AlgebraKind::HermComplex => x.to_herm_matrix().expect("herm"),
        _ => x.to_sym_matrix().expect("sym").map(|v| Complex64::new(v, 0.0)),
    }
}

impl MatrixSampler {
    fn new(law: &WishartLaw, vectors: usize, bartlett: Option<f64>) -> Self {
        let a = law.algebra();
        let complex = a.kind() == AlgebraKind::HermComplex;
        let r = a.rank();
        let cov = to_complex(&law.alpha) * Complex64::new(if complex { 2.0 } else { 1.0 } * law.t, 0.0);
        let (ev, vecs) = herm_eigen(&cov);
        let root = &vecs
            * DMatrix::from_diagonal(&ev.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)))
            * vecs.adjoint();
        let (xe, xv) = herm_eigen(&to_complex(&law.x));
        let top = xe.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut means: Vec<DVector<Complex64>> = (0..r)
            .filter(|&i| top > 0.0 && xe[i] > 1e-10 * top)
            .map(|i| xv.column(i) * Complex64::new(xe[i].sqrt(), 0.0))
            .collect();
        means.resize(vectors.max(means.len()), DVector::zeros(r));
        MatrixSampler { complex, r, root, means, vectors, bartlett }
    }

    fn normal<R: Rng>(&self, rng: &mut R) -> Complex64 {
        if self.complex {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        } else {
            Complex64::new(rng.sample(StandardNormal), 0.0)
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> DMatrix<Complex64> {
        let r = self.r;
        let mut x = DMatrix::<Complex64>::zeros(r, r);
        let mut z = DVector::<Complex64>::zeros(r);
        for i in 0..self.vectors {
            for v in z.iter_mut() {
                *v = self.normal(rng);
            }
            let g = &self.root * &z + &self.means[i];
            x += &g * g.adjoint();
        }
        if let Some(p) = self.bartlett {
            let mut t = DMatrix::<Complex64>::zeros(r, r);
            for i in 0..r {
                // |Tᵢᵢ|² ~ χ²_{δ−i} (real) or Gamma(p − i, 1) (complex)
                let diag = if self.complex {
                    Gamma::new(p - i as f64, 1.0).expect("shape").sample(rng)
                } else {
                    2.0 * Gamma::new(0.5 * (p - i as f64), 1.0).expect("shape").sample(rng)
                };
                t[(i, i)] = Complex64::new(diag.sqrt(), 0.0);
                for j in 0..i {
                    t[(i, j)] = self.normal(rng);
                }
            }
            let st = &self.root * t;
            x += &st * st.adjoint();
        }
        // remove rounding asymmetry
        (&x + x.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

fn matrix_to_element(law: &WishartLaw, m: &DMatrix<Complex64>) -> Element {
    let a = law.algebra();
    match a.kind() {
        AlgebraKind::HermComplex => Element::from_herm_matrix(a, m).expect("herm"),
        _ => Element::from_sym_matrix(a, &m.map(|v| v.re)).expect("sym"),
    }
}

/// A ready-to-use exact sampler for one law.
pub(crate) enum LawSampler {
    Point(Element),
    PoissonGamma { algebra: crate::jordan::Algebra, scale: f64, lambda: f64, shape: f64 },
    Matrix(Box<MatrixSampler>, WishartLaw),
}

impl LawSampler {
    pub(crate) fn new(law: &WishartLaw) -> Result<Self> {
        Ok(match plan(law)? {
            SamplePlan::Point => LawSampler::Point(law.x.clone()),
            SamplePlan::PoissonGamma => {
                let al = law.alpha.coords()[0];
                let x0 = law.x.coords()[0];
                LawSampler::PoissonGamma {
                    algebra: law.algebra(),
                    scale: 2.0 * law.t * al,
                    lambda: x0 / (2.0 * law.t * al),
                    shape: 0.5 * law.delta,
                }
            }
            SamplePlan::Gaussian { vectors, bartlett } => {
                LawSampler::Matrix(Box::new(MatrixSampler::new(law, vectors, bartlett)), law.clone())
            }
        })
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> Element {
        match self {
            LawSampler::Point(x) => x.clone(),
            LawSampler::PoissonGamma { algebra, scale, lambda, shape } => {
                let n = if *lambda > 0.0 { Poisson::new(*lambda).expect("rate").sample(rng) } else { 0.0 };
                let k = shape + n;
                let g = if k > 0.0 { Gamma::new(k, 1.0).expect("shape").sample(rng) } else { 0.0 };
                Element::from_slice(*algebra, &[scale * g]).expect("rank one")
            }
            LawSampler::Matrix(m, law) => matrix_to_element(law, &m.draw(rng)),
        }
    }
}

/// Draws `count` independent samples of the law.
pub fn sample(law: &WishartLaw, count: usize, seed: u64) -> Result<Vec<Element>> {
    let sampler = LawSampler::new(law)?;
    let chunks = count.div_ceil(CHUNK);
    let run_chunk = |c: usize| -> Vec<Element> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(count - c * CHUNK);
        (0..len).map(|_| sampler.draw(&mut rng)).collect()
    };
    Ok((0..chunks).into_par_iter().map(run_chunk).collect::<Vec<_>>().into_iter().flatten().collect())
}
