use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family of a simple Euclidean Jordan algebra.
///
/// Only the three real/complex families have kernels; the quaternionic and
/// octonionic families are listed so that requests for them can be rejected
/// with [`Error::UnsupportedAlgebra`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    SymMatrix,
    HermComplex,
    SpinFactor,
    HermQuaternion,
    Octonion,
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgebraKind::SymMatrix => "sym",
            AlgebraKind::HermComplex => "herm",
            AlgebraKind::SpinFactor => "spin",
            AlgebraKind::HermQuaternion => "quat",
            AlgebraKind::Octonion => "oct",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for AlgebraKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sym" | "symmatrix" | "s" => Ok(AlgebraKind::SymMatrix),
            "herm" | "hermcomplex" | "h" => Ok(AlgebraKind::HermComplex),
            "spin" | "spinfactor" | "lorentz" => Ok(AlgebraKind::SpinFactor),
            "quat" | "hermquaternion" => Ok(AlgebraKind::HermQuaternion),
            "oct" | "octonion" => Ok(AlgebraKind::Octonion),
            other => Err(Error::InvalidInput(format!("unknown algebra kind '{other}'"))),
        }
    }
}

/// Descriptor of one of the implemented simple Euclidean Jordan algebras.
///
/// `size` is the matrix order for the matrix families and the ambient
/// dimension for the spin factor. Descriptors are only obtainable through
/// [`make_algebra`], so every value refers to a supported algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AlgebraSpec", into = "AlgebraSpec")]
pub struct Algebra {
    kind: AlgebraKind,
    size: usize,
    n: usize,
    r: usize,
    d: usize,
}

/// Serialized form `{kind, size}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub kind: AlgebraKind,
    pub size: usize,
}

impl TryFrom<AlgebraSpec> for Algebra {
    type Error = Error;
    fn try_from(spec: AlgebraSpec) -> Result<Self> {
        make_algebra(spec.kind, spec.size)
    }
}

impl From<Algebra> for AlgebraSpec {
    fn from(a: Algebra) -> Self {
        AlgebraSpec { kind: a.kind, size: a.size }
    }
}

/// Builds the descriptor for `(kind, size)` from the classification table.
///
/// The rank-one algebra `SymMatrix(1)` is the real line; its Peirce invariant
/// is set to 0 (there are no off-diagonal Peirce spaces).
pub fn make_algebra(kind: AlgebraKind, size: usize) -> Result<Algebra> {
    let invalid = || Error::InvalidSize { kind: kind.to_string(), size };
    let (n, r, d) = match kind {
        AlgebraKind::SymMatrix => {
            if size == 0 {
                return Err(invalid());
            }
            let d = if size == 1 { 0 } else { 1 };
            (size * (size + 1) / 2, size, d)
        }
        AlgebraKind::HermComplex => {
            if size == 0 {
                return Err(invalid());
            }
            let d = if size == 1 { 0 } else { 2 };
            (size * size, size, d)
        }
        AlgebraKind::SpinFactor => {
            if size < 3 {
                return Err(invalid());
            }
            (size, 2, size - 2)
        }
        AlgebraKind::HermQuaternion | AlgebraKind::Octonion => {
            return Err(Error::UnsupportedAlgebra(format!("{kind}:{size}")));
        }
    };
    Ok(Algebra { kind, size, n, r, d })
}

impl Algebra {
    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Dimension of V.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// Peirce invariant d = dim V_ij (i < j).
    pub fn peirce(&self) -> usize {
        self.d
    }

    /// `d (r - 1)`, the threshold appearing in the drift condition and the Gindikin set.
    pub fn gindikin_threshold(&self) -> f64 {
        (self.d * (self.r - 1)) as f64
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self.kind, AlgebraKind::SymMatrix | AlgebraKind::HermComplex)
    }

    /// Coordinates of the identity element.
    pub(crate) fn identity_coords(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n);
        match self.kind {
            AlgebraKind::SymMatrix | AlgebraKind::HermComplex => {
                for i in 0..self.r {
                    c[i] = 1.0;
                }
            }
            _ => c[0] = std::f64::consts::SQRT_2,
        }
        c
    }

    /// Index pairs `(i, j)`, `i < j`, in the order used by the off-diagonal coordinates.
    pub(crate) fn off_diagonal_pairs(&self) -> Vec<(usize, usize)> {
        let r = self.size;
        let mut v = Vec::with_capacity(r * (r.saturating_sub(1)) / 2);
        for i in 0..r {
            for j in (i + 1)..r {
                v.push((i, j));
            }
        }
        v
    }

    // ---- coordinate <-> concrete representation ----

    pub(crate) fn sym_from_coords(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let r = self.size;
        let mut m = DMatrix::zeros(r, r);
        for i in 0..r {
            m[(i, i)] = c[i];
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (k, (i, j)) in self.off_diagonal_pairs().into_iter().enumerate() {
            let v = c[r + k] * s;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub(crate) fn sym_to_coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let r = self.size;
        let mut c = DVector::zeros(self.n);
        for i in 0..r {
            c[i] = m[(i, i)];
        }
        let s = std::f64::consts::SQRT_2;
        for (k, (i, j)) in self.off_diagonal_pairs().into_iter().enumerate() {
            c[r + k] = 0.5 * (m[(i, j)] + m[(j, i)]) * s;
        }
        c
    }

    pub(crate) fn herm_from_coords(&self, c: &DVector<f64>) -> DMatrix<Complex64> {
        let r = self.size;
        let pairs = self.off_diagonal_pairs();
        let p = pairs.len();
        let mut m = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
        for i in 0..r {
            m[(i, i)] = Complex64::new(c[i], 0.0);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let z = Complex64::new(c[r + k] * s, c[r + p + k] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        m
    }

    pub(crate) fn herm_to_coords(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        let r = self.size;
        let pairs = self.off_diagonal_pairs();
        let p = pairs.len();
        let mut c = DVector::zeros(self.n);
        for i in 0..r {
            c[i] = m[(i, i)].re;
        }
        let s = std::f64::consts::SQRT_2;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            c[r + k] = z.re * s;
            c[r + p + k] = z.im * s;
        }
        c
    }

    /// Jordan product on coordinate vectors.
    pub(crate) fn product_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        match self.kind {
            AlgebraKind::SymMatrix => {
                if self.size == 1 {
                    return DVector::from_element(1, x[0] * y[0]);
                }
                let a = self.sym_from_coords(x);
                let b = self.sym_from_coords(y);
                let ab = &a * &b;
                // ½(ab + ba) = ½(ab + (ab)ᵀ); sym_to_coords already symmetrizes
                let mut c = self.sym_to_coords(&ab);
                for i in 0..self.size {
                    c[i] = ab[(i, i)];
                }
                c
            }
            AlgebraKind::HermComplex => {
                let a = self.herm_from_coords(x);
                let b = self.herm_from_coords(y);
                let ab = &a * &b;
                let ba = &b * &a;
                self.herm_to_coords(&((ab + ba) * Complex64::new(0.5, 0.0)))
            }
            AlgebraKind::SpinFactor => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let n = self.n;
                let mut z = DVector::zeros(n);
                z[0] = x.dot(y) * s;
                for k in 1..n {
                    z[k] = (x[0] * y[k] + y[0] * x[k]) * s;
                }
                z
            }
            AlgebraKind::HermQuaternion | AlgebraKind::Octonion => unreachable!(),
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} (n={}, r={}, d={})", self.kind, self.size, self.n, self.r, self.d)
    }
}

impl std::str::FromStr for Algebra {
    type Err = Error;

    /// Parses `kind:size`, e.g. `sym:3`, `herm:2`, `spin:4`.
    fn from_str(s: &str) -> Result<Self> {
        let (k, n) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("algebra '{s}' is not of the form kind:size")))?;
        let kind: AlgebraKind = k.parse()?;
        let size: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("algebra size '{n}' is not an integer")))?;
        make_algebra(kind, size)
    }
}
