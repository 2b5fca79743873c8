use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::algebra::{Algebra, AlgebraKind};
use crate::error::{Error, Result};

/// A point of V, stored as coordinates in the canonical orthonormal basis.
///
/// The inner product `⟨x, y⟩ = tr(x∘y)` is the plain coordinate dot product.
/// Arithmetic operators panic when the operands belong to different algebras
/// (the same convention nalgebra uses for dimension mismatches); the free
/// functions in [`crate::jordan`] return [`Error::AlgebraMismatch`] instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct Element {
    algebra: Algebra,
    coords: DVector<f64>,
}

/// Serialized form `{algebra: {kind, size}, coords: [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementRepr {
    pub algebra: Algebra,
    pub coords: Vec<f64>,
}

impl TryFrom<ElementRepr> for Element {
    type Error = Error;
    fn try_from(r: ElementRepr) -> Result<Self> {
        Element::from_slice(r.algebra, &r.coords)
    }
}

impl From<Element> for ElementRepr {
    fn from(x: Element) -> Self {
        ElementRepr { algebra: x.algebra, coords: x.coords.iter().copied().collect() }
    }
}

impl Element {
    pub fn new(algebra: Algebra, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), got: coords.len() });
        }
        Ok(Element { algebra, coords })
    }

    pub fn from_slice(algebra: Algebra, coords: &[f64]) -> Result<Self> {
        Self::new(algebra, DVector::from_column_slice(coords))
    }

    pub(crate) fn from_coords_unchecked(algebra: Algebra, coords: DVector<f64>) -> Self {
        debug_assert_eq!(coords.len(), algebra.dim());
        Element { algebra, coords }
    }

    pub fn zero(algebra: Algebra) -> Self {
        Element { algebra, coords: DVector::zeros(algebra.dim()) }
    }

    /// The unit element e.
    pub fn identity(algebra: Algebra) -> Self {
        Element { algebra, coords: algebra.identity_coords() }
    }

    /// Builds an element of `SymMatrix(r)` from a real symmetric matrix.
    pub fn from_sym_matrix(algebra: Algebra, m: &DMatrix<f64>) -> Result<Self> {
        if algebra.kind() != AlgebraKind::SymMatrix {
            return Err(Error::AlgebraMismatch);
        }
        check_square(m.nrows(), m.ncols(), algebra.size())?;
        check_symmetric(m.iter().copied().zip(m.transpose().iter().copied()))?;
        Ok(Element { algebra, coords: algebra.sym_to_coords(m) })
    }

    /// Builds an element of `HermComplex(r)` from a Hermitian matrix.
    pub fn from_herm_matrix(algebra: Algebra, m: &DMatrix<Complex64>) -> Result<Self> {
        if algebra.kind() != AlgebraKind::HermComplex {
            return Err(Error::AlgebraMismatch);
        }
        check_square(m.nrows(), m.ncols(), algebra.size())?;
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::InvalidInput("matrix is not Hermitian".into()));
                }
            }
        }
        Ok(Element { algebra, coords: algebra.herm_to_coords(m) })
    }

    /// Builds a spin-factor element from its natural coordinates `(x₁, x̄)`.
    pub fn from_spin_natural(algebra: Algebra, natural: &[f64]) -> Result<Self> {
        if algebra.kind() != AlgebraKind::SpinFactor {
            return Err(Error::AlgebraMismatch);
        }
        if natural.len() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), got: natural.len() });
        }
        let s = std::f64::consts::SQRT_2;
        Ok(Element { algebra, coords: DVector::from_iterator(natural.len(), natural.iter().map(|v| v * s)) })
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    #[cfg(test)]
    pub(crate) fn coords_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coords
    }

    /// Real symmetric matrix representation (`SymMatrix` only).
    pub fn to_sym_matrix(&self) -> Option<DMatrix<f64>> {
        (self.algebra.kind() == AlgebraKind::SymMatrix).then(|| self.algebra.sym_from_coords(&self.coords))
    }

    /// Hermitian matrix representation (`HermComplex` only).
    pub fn to_herm_matrix(&self) -> Option<DMatrix<Complex64>> {
        (self.algebra.kind() == AlgebraKind::HermComplex).then(|| self.algebra.herm_from_coords(&self.coords))
    }

    /// Natural coordinates `(x₁, x̄)` (`SpinFactor` only).
    pub fn to_spin_natural(&self) -> Option<Vec<f64>> {
        (self.algebra.kind() == AlgebraKind::SpinFactor)
            .then(|| self.coords.iter().map(|c| c * std::f64::consts::FRAC_1_SQRT_2).collect())
    }

    fn assert_same(&self, other: &Element) {
        assert_eq!(self.algebra, other.algebra, "operands belong to different algebras");
    }

    pub(crate) fn check_same(&self, other: &Element) -> Result<()> {
        if self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    /// Trace inner product ⟨x, y⟩ = tr(x∘y).
    ///
    /// # Panics
    /// If the operands belong to different algebras.
    pub fn inner(&self, other: &Element) -> f64 {
        self.assert_same(other);
        self.coords.dot(&other.coords)
    }

    /// Norm induced by the trace inner product.
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// Jordan product x∘y.
    ///
    /// # Panics
    /// If the operands belong to different algebras.
    pub fn jmul(&self, other: &Element) -> Element {
        self.assert_same(other);
        Element { algebra: self.algebra, coords: self.algebra.product_coords(&self.coords, &other.coords) }
    }

    pub fn square(&self) -> Element {
        self.jmul(self)
    }

    /// Jordan power xᵏ (k ≥ 0), computed by repeated multiplication.
    pub fn powi(&self, k: u32) -> Element {
        let mut acc = Element::identity(self.algebra);
        for _ in 0..k {
            acc = acc.jmul(self);
        }
        acc
    }

    /// Trace tr(x) = ⟨x, e⟩.
    pub fn trace(&self) -> f64 {
        match self.algebra.kind() {
            AlgebraKind::SpinFactor => self.coords[0] * std::f64::consts::SQRT_2,
            _ => self.coords.rows(0, self.algebra.rank()).sum(),
        }
    }

    pub fn scale(&self, s: f64) -> Element {
        Element { algebra: self.algebra, coords: &self.coords * s }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Element) -> Element {
        self.assert_same(other);
        Element { algebra: self.algebra, coords: &self.coords + &other.coords * s }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }
}

fn check_square(rows: usize, cols: usize, size: usize) -> Result<()> {
    if rows != size || cols != size {
        return Err(Error::DimensionMismatch { expected: size * size, got: rows * cols });
    }
    Ok(())
}

fn check_symmetric(pairs: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let pairs: Vec<_> = pairs.collect();
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0_f64, f64::max);
    if pairs.iter().any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(())
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.assert_same(rhs);
        Element { algebra: self.algebra, coords: &self.coords + &rhs.coords }
    }
}

impl Add for Element {
    type Output = Element;
    fn add(self, rhs: Element) -> Element {
        &self + &rhs
    }
}

impl AddAssign<&Element> for Element {
    fn add_assign(&mut self, rhs: &Element) {
        self.assert_same(rhs);
        self.coords += &rhs.coords;
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.assert_same(rhs);
        Element { algebra: self.algebra, coords: &self.coords - &rhs.coords }
    }
}

impl Sub for Element {
    type Output = Element;
    fn sub(self, rhs: Element) -> Element {
        &self - &rhs
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        Element { algebra: self.algebra, coords: -&self.coords }
    }
}

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, s: f64) -> Element {
        self.scale(s)
    }
}

impl Mul<f64> for Element {
    type Output = Element;
    fn mul(mut self, s: f64) -> Element {
        self.coords *= s;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::make_algebra;
    use nalgebra::dmatrix;

    fn s2() -> Algebra {
        make_algebra(AlgebraKind::SymMatrix, 2).unwrap()
    }

    #[test]
    fn sym_product_matches_matrix_oracle() {
        let a = s2();
        let x = Element::from_sym_matrix(a, &dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        let y = Element::from_sym_matrix(a, &dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let z = x.jmul(&y).to_sym_matrix().unwrap();
        assert!((z - dmatrix![0.0, 0.5; 0.5, 0.0]).norm() < 1e-15);
    }

    #[test]
    fn identity_is_unit() {
        for (k, s) in [(AlgebraKind::SymMatrix, 3), (AlgebraKind::HermComplex, 2), (AlgebraKind::SpinFactor, 4)] {
            let a = make_algebra(k, s).unwrap();
            let x = Element::new(a, DVector::from_iterator(a.dim(), (0..a.dim()).map(|i| 0.7 * i as f64 - 0.4)))
                .unwrap();
            let e = Element::identity(a);
            assert!((e.jmul(&x) - x.clone()).norm() < 1e-14);
            assert!((e.trace() - a.rank() as f64).abs() < 1e-14);
            assert!((e.inner(&x) - x.trace()).abs() < 1e-13);
        }
    }

    #[test]
    fn spin_product_natural_formula() {
        let a = make_algebra(AlgebraKind::SpinFactor, 4).unwrap();
        let x = Element::from_spin_natural(a, &[1.0, 0.5, -2.0, 0.25]).unwrap();
        let y = Element::from_spin_natural(a, &[-0.3, 1.5, 0.0, 2.0]).unwrap();
        let z = x.jmul(&y).to_spin_natural().unwrap();
        let dot = 0.5 * 1.5 + 0.25 * 2.0;
        let expected = [1.0 * -0.3 + dot, 1.0 * 1.5 + -0.3 * 0.5, -0.3 * -2.0, 1.0 * 2.0 + -0.3 * 0.25];
        for (u, v) in z.iter().zip(expected) {
            assert!((u - v).abs() < 1e-14);
        }
        // (1,0,..) is the unit in natural coordinates
        let one = Element::from_spin_natural(a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((one.jmul(&one) - one.clone()).norm() < 1e-15);
        assert!((one - Element::identity(a)).norm() < 1e-15);
    }

    #[test]
    fn herm_inner_is_trace_of_product() {
        let a = make_algebra(AlgebraKind::HermComplex, 2).unwrap();
        let x = Element::from_slice(a, &[1.0, -2.0, 0.3, 0.7]).unwrap();
        let y = Element::from_slice(a, &[0.5, 1.0, -1.1, 0.2]).unwrap();
        let mx = x.to_herm_matrix().unwrap();
        let my = y.to_herm_matrix().unwrap();
        let tr = (&mx * &my).trace().re;
        assert!((x.inner(&y) - tr).abs() < 1e-14);
    }

    #[test]
    fn rejects_wrong_shapes() {
        let a = s2();
        assert!(matches!(Element::from_slice(a, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(Element::from_sym_matrix(a, &dmatrix![1.0, 2.0; 0.0, 1.0]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let a = s2();
        let x = Element::from_slice(a, &[1.0, 2.0, 3.0]).unwrap();
        let js = serde_json::to_string(&x).unwrap();
        let y: Element = serde_json::from_str(&js).unwrap();
        assert_eq!(x, y);
    }
}
