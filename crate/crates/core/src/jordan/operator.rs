use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use super::algebra::Algebra;
use super::element::Element;
use crate::error::{Error, Result};

/// A linear map V → V, stored as its n×n matrix in the canonical orthonormal basis.
///
/// Because the basis is orthonormal for the trace inner product, the matrix
/// transpose is the adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeOperator {
    algebra: Algebra,
    matrix: DMatrix<f64>,
}

impl ConeOperator {
    pub fn new(algebra: Algebra, matrix: DMatrix<f64>) -> Result<Self> {
        let n = algebra.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n * n, got: matrix.nrows() * matrix.ncols() });
        }
        Ok(ConeOperator { algebra, matrix })
    }

    pub fn zero(algebra: Algebra) -> Self {
        let n = algebra.dim();
        ConeOperator { algebra, matrix: DMatrix::zeros(n, n) }
    }

    pub fn identity(algebra: Algebra) -> Self {
        let n = algebra.dim();
        ConeOperator { algebra, matrix: DMatrix::identity(n, n) }
    }

    /// Builds an operator column by column from its action on the canonical basis.
    pub fn from_fn(algebra: Algebra, mut f: impl FnMut(&Element) -> Element) -> Self {
        let n = algebra.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut c = DVector::zeros(n);
            c[j] = 1.0;
            let col = f(&Element::from_coords_unchecked(algebra, c));
            m.set_column(j, col.coords());
        }
        ConeOperator { algebra, matrix: m }
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Adjoint with respect to the trace inner product (the matrix transpose).
    pub fn adjoint(&self) -> ConeOperator {
        ConeOperator { algebra: self.algebra, matrix: self.matrix.transpose() }
    }

    /// Applies the operator to an element.
    ///
    /// # Panics
    /// If `x` belongs to a different algebra.
    pub fn apply(&self, x: &Element) -> Element {
        assert_eq!(self.algebra, x.algebra(), "operands belong to different algebras");
        Element::from_coords_unchecked(self.algebra, &self.matrix * x.coords())
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &ConeOperator) -> ConeOperator {
        assert_eq!(self.algebra, other.algebra, "operands belong to different algebras");
        ConeOperator { algebra: self.algebra, matrix: &self.matrix * &other.matrix }
    }

    pub fn scale(&self, s: f64) -> ConeOperator {
        ConeOperator { algebra: self.algebra, matrix: &self.matrix * s }
    }

    /// Operator trace Tr(T) (trace of the n×n matrix, not the Jordan trace).
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Largest absolute deviation from self-adjointness.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Operator exponential e^{tT} (Padé scaling-and-squaring).
    pub fn exp(&self, t: f64) -> ConeOperator {
        ConeOperator { algebra: self.algebra, matrix: (&self.matrix * t).exp() }
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl Add for &ConeOperator {
    type Output = ConeOperator;
    fn add(self, rhs: &ConeOperator) -> ConeOperator {
        assert_eq!(self.algebra, rhs.algebra, "operands belong to different algebras");
        ConeOperator { algebra: self.algebra, matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &ConeOperator {
    type Output = ConeOperator;
    fn sub(self, rhs: &ConeOperator) -> ConeOperator {
        assert_eq!(self.algebra, rhs.algebra, "operands belong to different algebras");
        ConeOperator { algebra: self.algebra, matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &ConeOperator {
    type Output = ConeOperator;
    fn mul(self, rhs: &ConeOperator) -> ConeOperator {
        self.compose(rhs)
    }
}

/// Jordan product with an algebra check.
pub fn jordan_product(x: &Element, y: &Element) -> Result<Element> {
    x.check_same(y)?;
    Ok(x.jmul(y))
}

/// Left multiplication operator L(x): y ↦ x∘y.
pub fn left_mult(x: &Element) -> ConeOperator {
    ConeOperator::from_fn(x.algebra(), |b| x.jmul(b))
}

/// Quadratic representation P(x) = 2L(x)² − L(x²).
pub fn quad_rep(x: &Element) -> ConeOperator {
    let l = left_mult(x);
    let l2 = left_mult(&x.square());
    let mut m = &l.matrix * &l.matrix * 2.0;
    m -= &l2.matrix;
    ConeOperator { algebra: x.algebra(), matrix: m }
}

/// Polarized quadratic representation P(x, y) = ½(P(x+y) − P(x) − P(y))
/// = L(x)L(y) + L(y)L(x) − L(x∘y).
pub fn quad_rep_polarized(x: &Element, y: &Element) -> Result<ConeOperator> {
    x.check_same(y)?;
    let lx = left_mult(x);
    let ly = left_mult(y);
    let lxy = left_mult(&x.jmul(y));
    let m = &lx.matrix * &ly.matrix + &ly.matrix * &lx.matrix - lxy.matrix;
    Ok(ConeOperator { algebra: x.algebra(), matrix: m })
}

/// P(x, y)z = x∘(y∘z) + y∘(x∘z) − (x∘y)∘z, evaluated without forming operators.
pub fn quad_polarized_apply(x: &Element, y: &Element, z: &Element) -> Element {
    let a = x.jmul(&y.jmul(z));
    let b = y.jmul(&x.jmul(z));
    let c = x.jmul(y).jmul(z);
    &(&a + &b) - &c
}

/// P(x)y = 2x∘(x∘y) − x²∘y, evaluated without forming operators.
pub fn quad_apply(x: &Element, y: &Element) -> Element {
    let a = x.jmul(&x.jmul(y));
    let b = x.square().jmul(y);
    &(a * 2.0) - &b
}
