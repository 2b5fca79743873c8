use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::algebra::AlgebraKind;
use super::element::Element;
use super::operator::{left_mult, quad_rep, ConeOperator};
use crate::error::{Error, Result};

/// Default relative tolerance for cone classification and eigenvalue grouping.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Spectral decomposition x = Σ λᵢ pᵢ over a Jordan frame, eigenvalues descending.
///
/// Inside a repeated eigenvalue the frame is not unique; any orthonormal
/// choice of primitive idempotents spanning the eigenspace is returned.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub frame: Vec<Element>,
}

impl SpectralDecomposition {
    /// Σ f(λᵢ) pᵢ.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Element {
        let a = self.frame[0].algebra();
        let mut c = DVector::zeros(a.dim());
        for (l, p) in self.eigenvalues.iter().zip(&self.frame) {
            c.axpy(f(*l), p.coords(), 1.0);
        }
        Element::from_coords_unchecked(a, c)
    }

    pub fn reconstruct(&self) -> Element {
        self.map(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("rank ≥ 1")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Position of an element relative to the cone K of squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeClass {
    Interior,
    Boundary,
    Outside,
}

/// Spectral decomposition of x.
///
/// Eigenvectors belonging to eigenvalues that agree within `tol·max|λ|` are
/// re-orthonormalised together, so the frame stays a valid Jordan frame even
/// for clustered spectra.
pub fn spectral_decompose(x: &Element, tol: f64) -> Result<SpectralDecomposition> {
    let a = x.algebra();
    if x.coords().iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    match a.kind() {
        AlgebraKind::SymMatrix => {
            let m = x.to_sym_matrix().expect("sym");
            let eig = m
                .clone()
                .try_symmetric_eigen(f64::EPSILON, 10_000)
                .ok_or(Error::ConvergenceFailure)?;
            let order = descending(eig.eigenvalues.as_slice());
            let mut vecs = DMatrix::zeros(a.size(), a.size());
            let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            for (k, &i) in order.iter().enumerate() {
                vecs.set_column(k, &eig.eigenvectors.column(i));
            }
            regroup_real(&mut vecs, &eigenvalues, tol);
            let frame = (0..a.size())
                .map(|k| {
                    let v = vecs.column(k);
                    Element::from_coords_unchecked(a, a.sym_to_coords(&(v * v.transpose())))
                })
                .collect();
            Ok(SpectralDecomposition { eigenvalues, frame })
        }
        AlgebraKind::HermComplex => {
            let m = x.to_herm_matrix().expect("herm");
            let eig = m.try_symmetric_eigen(f64::EPSILON, 10_000).ok_or(Error::ConvergenceFailure)?;
            let order = descending(eig.eigenvalues.as_slice());
            let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut vecs = DMatrix::from_element(a.size(), a.size(), Complex64::new(0.0, 0.0));
            for (k, &i) in order.iter().enumerate() {
                vecs.set_column(k, &eig.eigenvectors.column(i));
            }
            regroup_complex(&mut vecs, &eigenvalues, tol);
            let frame = (0..a.size())
                .map(|k| {
                    let v = vecs.column(k);
                    Element::from_coords_unchecked(a, a.herm_to_coords(&(v * v.adjoint())))
                })
                .collect();
            Ok(SpectralDecomposition { eigenvalues, frame })
        }
        AlgebraKind::SpinFactor => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let c = x.coords();
            let x1 = c[0] * s;
            let bar = c.rows(1, a.dim() - 1) * s;
            let nb = bar.norm();
            let dir = if nb > 0.0 {
                bar / nb
            } else {
                let mut d = DVector::zeros(a.dim() - 1);
                d[0] = 1.0;
                d
            };
            let idem = |sign: f64| {
                let mut nat = DVector::zeros(a.dim());
                nat[0] = 0.5;
                nat.rows_mut(1, a.dim() - 1).copy_from(&(&dir * (0.5 * sign)));
                Element::from_coords_unchecked(a, nat * std::f64::consts::SQRT_2)
            };
            Ok(SpectralDecomposition { eigenvalues: vec![x1 + nb, x1 - nb], frame: vec![idem(1.0), idem(-1.0)] })
        }
        AlgebraKind::HermQuaternion | AlgebraKind::Octonion => unreachable!(),
    }
}

fn descending(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    idx
}

fn clusters(eigenvalues: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let scale = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=eigenvalues.len() {
        if k == eigenvalues.len() || (eigenvalues[k - 1] - eigenvalues[k]).abs() > tol * scale {
            out.push((start, k));
            start = k;
        }
    }
    out
}

fn regroup_real(vecs: &mut DMatrix<f64>, eigenvalues: &[f64], tol: f64) {
    for (s, e) in clusters(eigenvalues, tol) {
        if e - s > 1 {
            let q = vecs.columns(s, e - s).into_owned().qr().q();
            vecs.columns_mut(s, e - s).copy_from(&q);
        }
    }
}

fn regroup_complex(vecs: &mut DMatrix<Complex64>, eigenvalues: &[f64], tol: f64) {
    for (s, e) in clusters(eigenvalues, tol) {
        if e - s > 1 {
            let q = vecs.columns(s, e - s).into_owned().qr().q();
            vecs.columns_mut(s, e - s).copy_from(&q);
        }
    }
}

/// Eigenvalues of x, descending, without building the frame.
pub fn eigenvalues(x: &Element) -> Result<Vec<f64>> {
    let a = x.algebra();
    if x.coords().iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let mut v: Vec<f64> = match a.kind() {
        AlgebraKind::SymMatrix => {
            if a.size() == 1 {
                vec![x.coords()[0]]
            } else {
                x.to_sym_matrix().expect("sym").symmetric_eigenvalues().iter().copied().collect()
            }
        }
        AlgebraKind::HermComplex => {
            x.to_herm_matrix().expect("herm").symmetric_eigenvalues().iter().copied().collect()
        }
        AlgebraKind::SpinFactor => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let c = x.coords();
            let nb = c.rows(1, a.dim() - 1).norm() * s;
            vec![c[0] * s + nb, c[0] * s - nb]
        }
        AlgebraKind::HermQuaternion | AlgebraKind::Octonion => unreachable!(),
    };
    v.sort_by(|p, q| q.total_cmp(p));
    Ok(v)
}

/// Smallest eigenvalue of x.
pub fn min_eigenvalue(x: &Element) -> Result<f64> {
    Ok(*eigenvalues(x)?.last().expect("rank ≥ 1"))
}

/// det(x) = Π λᵢ.
pub fn det(x: &Element) -> Result<f64> {
    if x.algebra().kind() == AlgebraKind::SpinFactor {
        let c = x.coords();
        let bar2 = c.rows(1, c.len() - 1).norm_squared();
        return Ok(0.5 * (c[0] * c[0] - bar2));
    }
    Ok(eigenvalues(x)?.iter().product())
}

/// tr(x) = Σ λᵢ.
pub fn trace(x: &Element) -> f64 {
    x.trace()
}

/// ln det(x) for x in the cone interior.
pub fn ln_det(x: &Element) -> Result<f64> {
    let ev = eigenvalues(x)?;
    let min = *ev.last().expect("rank ≥ 1");
    if min <= 0.0 {
        return Err(Error::NotInterior(min));
    }
    Ok(ev.iter().map(|l| l.ln()).sum())
}

/// x⁻¹ = Σ λᵢ⁻¹ pᵢ; fails with [`Error::SingularElement`] when some |λᵢ| ≤ tol·max|λ|.
pub fn inverse(x: &Element, tol: f64) -> Result<Element> {
    let sd = spectral_decompose(x, tol)?;
    let scale = sd.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let minabs = sd.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if minabs <= tol * scale || minabs == 0.0 {
        return Err(Error::SingularElement(minabs));
    }
    Ok(sd.map(|l| 1.0 / l))
}

/// Classifies x as interior, boundary or outside of K using the relative tolerance `tol`.
pub fn cone_classify(x: &Element, tol: f64) -> Result<ConeClass> {
    let ev = eigenvalues(x)?;
    Ok(classify_eigenvalues(&ev, tol))
}

pub(crate) fn classify_eigenvalues(ev: &[f64], tol: f64) -> ConeClass {
    let scale = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if min.abs() <= tol * scale {
        ConeClass::Boundary
    } else if min > 0.0 {
        ConeClass::Interior
    } else {
        ConeClass::Outside
    }
}

/// Square root √x = Σ √λᵢ pᵢ of a cone element; eigenvalues within tolerance of 0 are clipped.
pub fn sqrt(x: &Element, tol: f64) -> Result<Element> {
    let sd = spectral_decompose(x, tol)?;
    if classify_eigenvalues(&sd.eigenvalues, tol) == ConeClass::Outside {
        return Err(Error::NotInCone(sd.min_eigenvalue()));
    }
    Ok(sd.map(|l| l.max(0.0).sqrt()))
}

/// Euclidean projection onto K: eigenvalue clipping at 0.
pub fn project_to_cone(x: &Element) -> Result<Element> {
    let sd = spectral_decompose(x, DEFAULT_TOL)?;
    if sd.min_eigenvalue() >= 0.0 {
        return Ok(x.clone());
    }
    Ok(sd.map(|l| l.max(0.0)))
}

/// Checks that `frame` is a Jordan frame: primitive, idempotent, orthogonal, summing to e.
pub fn check_frame(frame: &[Element], tol: f64) -> Result<()> {
    let a = frame.first().ok_or_else(|| Error::NotAFrame("empty frame".into()))?.algebra();
    if frame.len() != a.rank() {
        return Err(Error::NotAFrame(format!("expected {} idempotents, got {}", a.rank(), frame.len())));
    }
    let mut sum = Element::zero(a);
    for (i, p) in frame.iter().enumerate() {
        p.check_same(&frame[0])?;
        if (p.square() - p.clone()).norm() > tol {
            return Err(Error::NotAFrame(format!("p{} is not idempotent", i + 1)));
        }
        if (p.trace() - 1.0).abs() > tol {
            return Err(Error::NotAFrame(format!("p{} is not primitive", i + 1)));
        }
        for (j, q) in frame.iter().enumerate().skip(i + 1) {
            if p.jmul(q).norm() > tol {
                return Err(Error::NotAFrame(format!("p{} and p{} are not orthogonal", i + 1, j + 1)));
            }
        }
        sum += p;
    }
    if (sum - Element::identity(a)).norm() > tol * a.rank() as f64 {
        return Err(Error::NotAFrame("idempotents do not sum to e".into()));
    }
    Ok(())
}

/// Peirce projections of a Jordan frame: Πᵢᵢ = P(pᵢ), Πᵢⱼ = 4L(pᵢ)L(pⱼ) (i < j).
///
/// Returned in the order (0,0), (0,1), …, (0,r−1), (1,1), (1,2), …
pub fn peirce_projections(frame: &[Element]) -> Result<Vec<((usize, usize), ConeOperator)>> {
    check_frame(frame, 1e-8)?;
    let r = frame.len();
    let ls: Vec<ConeOperator> = frame.iter().map(left_mult).collect();
    let mut out = Vec::with_capacity(r * (r + 1) / 2);
    for i in 0..r {
        out.push(((i, i), quad_rep(&frame[i])));
        for j in (i + 1)..r {
            out.push(((i, j), ls[i].compose(&ls[j]).scale(4.0)));
        }
    }
    Ok(out)
}

/// Numeric rank of a projection (its trace, rounded).
pub fn projection_rank(p: &ConeOperator) -> usize {
    p.trace().round().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{make_algebra, Algebra};
    use nalgebra::dmatrix;

    fn s2() -> Algebra {
        make_algebra(AlgebraKind::SymMatrix, 2).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let a = make_algebra(AlgebraKind::SymMatrix, 3).unwrap();
        let sd = spectral_decompose(&Element::identity(a), DEFAULT_TOL).unwrap();
        assert!(sd.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-14));
        check_frame(&sd.frame, 1e-12).unwrap();
        assert_eq!(det(&Element::identity(a)).unwrap(), 1.0);
    }

    #[test]
    fn diag_spectrum_and_det() {
        let x = Element::from_sym_matrix(s2(), &dmatrix![2.0, 0.0; 0.0, 3.0]).unwrap();
        let sd = spectral_decompose(&x, DEFAULT_TOL).unwrap();
        assert_eq!(sd.eigenvalues, vec![3.0, 2.0]);
        let p1 = sd.frame[0].to_sym_matrix().unwrap();
        assert!((p1 - dmatrix![0.0, 0.0; 0.0, 1.0]).amax() < 1e-14);
        assert!((det(&x).unwrap() - 6.0).abs() < 1e-14);
        assert!((trace(&x) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn spin_closed_pair() {
        let a = make_algebra(AlgebraKind::SpinFactor, 3).unwrap();
        let x = Element::from_spin_natural(a, &[2.0, 1.0, 0.0]).unwrap();
        let sd = spectral_decompose(&x, DEFAULT_TOL).unwrap();
        assert!((sd.eigenvalues[0] - 3.0).abs() < 1e-14 && (sd.eigenvalues[1] - 1.0).abs() < 1e-14);
        let p = sd.frame[0].to_spin_natural().unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2].abs() < 1e-15);
        assert!((sd.reconstruct() - x).norm() < 1e-14);
    }

    #[test]
    fn classification_examples() {
        let a = s2();
        assert_eq!(cone_classify(&Element::identity(a), DEFAULT_TOL).unwrap(), ConeClass::Interior);
        let b = Element::from_sym_matrix(a, &dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        assert_eq!(cone_classify(&b, DEFAULT_TOL).unwrap(), ConeClass::Boundary);
        let sp = make_algebra(AlgebraKind::SpinFactor, 3).unwrap();
        let o = Element::from_spin_natural(sp, &[1.0, 2.0, 0.0]).unwrap();
        assert!(det(&o).unwrap() < 0.0);
        assert_eq!(cone_classify(&o, DEFAULT_TOL).unwrap(), ConeClass::Outside);
        assert!(matches!(sqrt(&o, DEFAULT_TOL), Err(Error::NotInCone(_))));
        let e = Element::identity(a);
        assert!((sqrt(&e, DEFAULT_TOL).unwrap() - e).norm() < 1e-15);
        assert_eq!(cone_classify(&Element::zero(a), DEFAULT_TOL).unwrap(), ConeClass::Boundary);
    }

    #[test]
    fn singular_inverse_is_rejected() {
        let b = Element::from_sym_matrix(s2(), &dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        assert!(matches!(inverse(&b, DEFAULT_TOL), Err(Error::SingularElement(_))));
    }

    #[test]
    fn repeated_eigenvalues_give_valid_frame() {
        let a = make_algebra(AlgebraKind::HermComplex, 3).unwrap();
        let mut x = Element::identity(a) * 2.0;
        x.coords_mut()[0] = 5.0;
        let sd = spectral_decompose(&x, DEFAULT_TOL).unwrap();
        check_frame(&sd.frame, 1e-12).unwrap();
        assert!((sd.reconstruct() - x).norm() < 1e-13);
    }

    #[test]
    fn peirce_dimensions() {
        let a = s2();
        let frame = spectral_decompose(
            &Element::from_sym_matrix(a, &dmatrix![2.0, 0.0; 0.0, 1.0]).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap()
        .frame;
        let pp = peirce_projections(&frame).unwrap();
        let (_, p12) = pp.iter().find(|(ij, _)| *ij == (0, 1)).unwrap();
        assert_eq!(projection_rank(p12), 1);
        // the range is spanned by the off-diagonal basis vector
        let w = Element::from_slice(a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((p12.apply(&w) - w).norm() < 1e-14);

        let sp = make_algebra(AlgebraKind::SpinFactor, 4).unwrap();
        let x = Element::from_spin_natural(sp, &[1.0, 0.2, -0.3, 0.4]).unwrap();
        let frame = spectral_decompose(&x, DEFAULT_TOL).unwrap().frame;
        let pp = peirce_projections(&frame).unwrap();
        assert_eq!(projection_rank(&pp[1].1), 2);
    }

    #[test]
    fn not_a_frame() {
        let a = s2();
        let e = Element::identity(a);
        assert!(matches!(check_frame(&[e.clone(), e], 1e-10), Err(Error::NotAFrame(_))));
    }
}
