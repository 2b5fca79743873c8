//! Euclidean Jordan algebra kernel for the real symmetric, complex Hermitian and
//! spin-factor algebras.
//!
//! Elements are stored as coordinates in a fixed orthonormal basis for the
//! trace inner product, so operators are plain matrices whose transpose is the
//! adjoint:
//!
//! * `SymMatrix(r)`: diagonal units `Eᵢᵢ` first, then `(Eᵢⱼ+Eⱼᵢ)/√2` for `i < j`
//!   in row-major order.
//! * `HermComplex(r)`: as above, followed by `(iEᵢⱼ−iEⱼᵢ)/√2`.
//! * `SpinFactor(n)`: natural coordinates `(x₁, x̄)` scaled by √2, so that
//!   `⟨x, y⟩ = 2(x₁y₁ + x̄·ȳ)`.

mod algebra;
mod element;
mod operator;
pub mod random;
mod spectral;

pub use algebra::{make_algebra, Algebra, AlgebraKind, AlgebraSpec};
pub use element::{Element, ElementRepr};
pub use operator::{
    jordan_product, left_mult, quad_apply, quad_polarized_apply, quad_rep, quad_rep_polarized, ConeOperator,
};
pub use spectral::{
    check_frame, cone_classify, det, eigenvalues, inverse, ln_det, min_eigenvalue, peirce_projections,
    project_to_cone, projection_rank, spectral_decompose, sqrt, trace, ConeClass, SpectralDecomposition,
    DEFAULT_TOL,
};
pub(crate) use spectral::classify_eigenvalues;

/// Σ f(λᵢ) pᵢ for the spectral decomposition of x.
pub fn spectral_map(x: &Element, f: impl Fn(f64) -> f64) -> crate::Result<Element> {
    Ok(spectral_decompose(x, DEFAULT_TOL)?.map(f))
}

#[cfg(test)]
mod props;
