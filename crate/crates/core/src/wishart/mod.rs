//! Central and non-central Wishart laws on symmetric cones.
//!
//! The law `W(δ, α, t, x)` is the marginal at time t of the Bru process
//! started at x; its Laplace transform is
//! `det(e + 2tP(√α)u)^{−δ/2} exp(−⟨(u⁻¹ + 2tα)⁻¹, x⟩)`. This module provides
//! the Gindikin set, the cone Gamma function, zonal polynomials, the
//! transform, both densities (in log space, with a certified truncation bound
//! for the non-central series), exact samplers on the matrix cones and the
//! rank test deciding whether a Wishart process has a Lebesgue density.

pub mod sample;
pub mod zonal;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::affine_params::structured_orthogonal_pairs;
use crate::error::{Error, Result};
use crate::jordan::{
    cone_classify, inverse, left_mult, ln_det, quad_apply, sqrt, Algebra, ConeClass, ConeOperator, Element,
    DEFAULT_TOL,
};
use crate::riccati::bru_flow;

pub use sample::{plan as sample_plan, sample, sample_rank, SamplePlan};
pub(crate) use sample::LawSampler;
pub use zonal::{partitions, zonal, MultiIndex, ZonalEvaluator, ZonalMode, ZonalValue, DEFAULT_ZONAL_CAP};

/// Default tolerance on the truncation bound of the non-central series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
/// min_{s>0} Γ(s).
const GAMMA_MIN: f64 = 0.885_603_194_410_888_7;

/// δ ∈ {0, d, …, d(r−1)} ∪ ]d(r−1), ∞[.
pub fn gindikin_contains(a: Algebra, delta: f64) -> bool {
    if !(delta >= 0.0) || !delta.is_finite() {
        return false;
    }
    let d = a.peirce() as f64;
    let top = d * (a.rank() as f64 - 1.0);
    if delta > top + 1e-12 {
        return true;
    }
    if d == 0.0 {
        return delta.abs() <= 1e-12;
    }
    let q = delta / d;
    (q - q.round()).abs() <= 1e-12 && q.round() <= a.rank() as f64 - 1.0
}

/// ln Γ_K(m + s) = (n−r)/2 · ln 2π + Σⱼ ln Γ(mⱼ + s − (j−1)d/2).
pub fn ln_cone_gamma(a: Algebra, m: &MultiIndex, s: f64) -> Result<f64> {
    let m = m.for_rank(a.rank())?;
    let d = a.peirce() as f64;
    let mut acc = 0.5 * (a.dim() - a.rank()) as f64 * (2.0 * std::f64::consts::PI).ln();
    for (j, &mj) in m.parts().iter().enumerate() {
        let arg = mj as f64 + s - j as f64 * d / 2.0;
        if !(arg > 0.0) {
            return Err(Error::PoleArgument(arg));
        }
        acc += ln_gamma(arg);
    }
    Ok(acc)
}

/// Γ_K(m + s); may overflow to +∞ — use [`ln_cone_gamma`] for large arguments.
pub fn cone_gamma(a: Algebra, m: &MultiIndex, s: f64) -> Result<f64> {
    Ok(ln_cone_gamma(a, m, s)?.exp())
}

/// The (non-central) Wishart law W(δ, α, t, x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WishartLaw {
    pub delta: f64,
    pub alpha: Element,
    pub t: f64,
    pub x: Element,
}

impl WishartLaw {
    pub fn new(delta: f64, alpha: Element, t: f64, x: Element) -> Result<Self> {
        alpha.check_same(&x)?;
        let a = alpha.algebra();
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidLaw(format!("shape δ = {delta} must be finite and non-negative")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidLaw(format!("time t = {t} must be positive")));
        }
        for (name, v) in [("scale α", &alpha), ("noncentrality x", &x)] {
            if cone_classify(v, DEFAULT_TOL)? == ConeClass::Outside {
                return Err(Error::InvalidLaw(format!("{name} is not in the cone")));
            }
        }
        if x.is_zero() {
            if !gindikin_contains(a, delta) {
                return Err(Error::InvalidLaw(format!("δ = {delta} is not in the Gindikin set of {a}")));
            }
        } else if delta < a.gindikin_threshold() - 1e-12 {
            return Err(Error::InvalidLaw(format!(
                "non-central law needs δ ≥ {} on {a}, got {delta}",
                a.gindikin_threshold()
            )));
        }
        Ok(WishartLaw { delta, alpha, t, x })
    }

    /// Central law (x = 0).
    pub fn central(delta: f64, alpha: Element, t: f64) -> Result<Self> {
        let x = Element::zero(alpha.algebra());
        Self::new(delta, alpha, t, x)
    }

    pub fn algebra(&self) -> Algebra {
        self.alpha.algebra()
    }
}

/// ln E[e^{−⟨u, X⟩}] = −φ(t,u) − ⟨ψ(t,u), x⟩ with the Bru flow (φ, ψ).
pub fn ln_laplace(law: &WishartLaw, u: &Element) -> Result<f64> {
    let (phi, psi) = bru_flow(&law.alpha, law.delta, u, law.t)?;
    Ok(-phi - psi.inner(&law.x))
}

/// Laplace transform of the law at u ∈ K.
pub fn laplace(law: &WishartLaw, u: &Element) -> Result<f64> {
    Ok(ln_laplace(law, u)?.exp())
}

/// A density value with its logarithm (the magnitude may under/overflow).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub log_value: f64,
    pub value: f64,
}

impl DensityValue {
    fn from_log(l: f64) -> Self {
        DensityValue { log_value: l, value: l.exp() }
    }
}

/// Non-central density with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoncentralDensity {
    pub log_value: f64,
    pub value: f64,
    /// Upper bound on the neglected series tail (density units).
    pub tail_bound: f64,
    /// Highest degree |m| included in the partial sum.
    pub degree: usize,
    /// Propagated Monte Carlo standard error of the zonal values (0 when exact).
    pub zonal_std_error: f64,
}

/// Options of the non-central series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub cap: usize,
    pub target_tol: f64,
    /// Zonal mode; the algebra default when `None`.
    pub mode: Option<ZonalMode>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { cap: DEFAULT_ZONAL_CAP, target_tol: DEFAULT_TAIL_TOL, mode: None }
    }
}

fn require_density(law: &WishartLaw) -> Result<Element> {
    let a = law.algebra();
    if law.delta <= a.gindikin_threshold() {
        return Err(Error::DensityDoesNotExist(format!(
            "δ = {} ≤ d(r−1) = {}",
            law.delta,
            a.gindikin_threshold()
        )));
    }
    if cone_classify(&law.alpha, DEFAULT_TOL)? != ConeClass::Interior {
        return Err(Error::DensityDoesNotExist("the scale α lies on the boundary of the cone".into()));
    }
    inverse(&law.alpha, DEFAULT_TOL)
}

/// (δ/2 − n/r) ln det ξ with the conventions 0·(−∞) = 0 and −∞ outside K.
fn det_power(law: &WishartLaw, xi: &Element) -> Result<f64> {
    let a = law.algebra();
    let e = 0.5 * law.delta - a.dim() as f64 / a.rank() as f64;
    match cone_classify(xi, DEFAULT_TOL)? {
        ConeClass::Outside => Ok(f64::NEG_INFINITY),
        ConeClass::Interior => Ok(e * ln_det(xi)?),
        ConeClass::Boundary => Ok(if e > 0.0 {
            f64::NEG_INFINITY
        } else if e < 0.0 {
            f64::INFINITY
        } else {
            0.0
        }),
    }
}

/// ln of det(α⁻¹/2t)^{δ/2} e^{−⟨α⁻¹/2t, ξ + x⟩} det(ξ)^{δ/2−n/r}.
fn ln_prefactor(law: &WishartLaw, alpha_inv: &Element, xi: &Element) -> Result<f64> {
    let a = law.algebra();
    let two_t = 2.0 * law.t;
    let ln_det_scale = -(a.rank() as f64) * two_t.ln() + ln_det(alpha_inv)?;
    let lin = (alpha_inv.inner(xi) + alpha_inv.inner(&law.x)) / two_t;
    Ok(0.5 * law.delta * ln_det_scale - lin + det_power(law, xi)?)
}

/// Central Wishart density (x = 0) with respect to Lebesgue measure in the
/// orthonormal coordinates.
pub fn central_density(law: &WishartLaw, xi: &Element) -> Result<DensityValue> {
    law.alpha.check_same(xi)?;
    if !law.x.is_zero() {
        return Err(Error::InvalidInput("central_density needs a law with x = 0".into()));
    }
    let ai = require_density(law)?;
    let a = law.algebra();
    let lg = ln_cone_gamma(a, &MultiIndex::zero(a.rank()), 0.5 * law.delta)?;
    Ok(DensityValue::from_log(ln_prefactor(law, &ai, xi)? - lg))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ_{k>K} cᵏ/k! = c + ln P(K+1, c) (regularised lower incomplete Gamma).
fn ln_exp_tail(c: f64, k: usize) -> f64 {
    if c <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let p = gamma_lr(k as f64 + 1.0, c);
    if p > 0.0 {
        return c + p.ln();
    }
    // underflow: geometric bound on the terms after the first neglected one
    let k1 = k as f64 + 1.0;
    let first = k1 * c.ln() - ln_gamma(k1 + 1.0);
    if c < k1 + 1.0 {
        first - (1.0 - c / (k1 + 1.0)).ln()
    } else {
        c
    }
}

/// ln of a bound on Σ_{k>K} cᵏ / (k! · C · Γ(k/r + s̄)^r), which dominates
/// the degree-k blocks of the series because ln Γ is convex:
/// Π_j Γ(m_j + s_j) ≥ Γ(|m|/r + s̄)^r with s̄ the mean of the shifts s_j.
/// Terms are summed explicitly until their ratio drops below ½ and the
/// remainder is closed with a geometric series (the ratio is decreasing).
fn ln_tail_convex(c: f64, k_max: usize, r: usize, s_bar: f64, ln_const: f64) -> f64 {
    if c <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let rf = r as f64;
    let ln_term = |k: f64| k * c.ln() - ln_gamma(k + 1.0) - rf * ln_gamma(k / rf + s_bar) - ln_const;
    let mut acc = f64::NEG_INFINITY;
    let mut k = k_max as f64 + 1.0;
    for _ in 0..1_000_000 {
        let lt = ln_term(k);
        let q = (ln_term(k + 1.0) - lt).exp();
        acc = log_add(acc, lt);
        if q < 0.5 {
            return log_add(acc, lt + (q / (1.0 - q)).ln());
        }
        k += 1.0;
    }
    f64::INFINITY
}

/// Non-central Wishart density as the partial zonal series up to `opts.cap`.
///
/// The argument of the series is η = (1/4t²) P(√x) P(α⁻¹) ξ. The bound
/// Γ_K(m + δ/2) ≥ M = (2π)^{(n−r)/2} (min Γ)^r together with
/// `Σ_{|m|=k} Z_m(η) = (tr η)ᵏ` bounds the neglected tail; the reported
/// bound is the smaller of that estimate and the convexity refinement of
/// [`ln_tail_convex`], which stays informative for large tr η. Summation
/// stops early once the bound is below both the target and the f64
/// resolution of the partial sum.
pub fn noncentral_density(law: &WishartLaw, xi: &Element, opts: &SeriesOptions) -> Result<NoncentralDensity> {
    law.alpha.check_same(xi)?;
    let ai = require_density(law)?;
    let a = law.algebra();
    let r = a.rank();
    let ln_pre = ln_prefactor(law, &ai, xi)?;
    let s = 0.5 * law.delta;
    let ln_g0 = ln_cone_gamma(a, &MultiIndex::zero(r), s)?;
    if law.x.is_zero() || !ln_pre.is_finite() {
        let l = ln_pre - ln_g0;
        return Ok(NoncentralDensity { log_value: l, value: l.exp(), tail_bound: 0.0, degree: 0, zonal_std_error: 0.0 });
    }
    let eta = {
        let rx = sqrt(&law.x, DEFAULT_TOL)?;
        quad_apply(&rx, &quad_apply(&ai, xi)) * (1.0 / (4.0 * law.t * law.t))
    };
    let c = eta.trace();
    if !(c > 0.0) {
        let l = ln_pre - ln_g0;
        return Ok(NoncentralDensity { log_value: l, value: l.exp(), tail_bound: 0.0, degree: 0, zonal_std_error: 0.0 });
    }
    let eta_hat = eta * (1.0 / c);
    let mode = opts.mode.unwrap_or_else(|| ZonalMode::default_for(a));
    let ev = ZonalEvaluator::new(&eta_hat, mode)?;
    let ln_2pi = 0.5 * (a.dim() - r) as f64 * (2.0 * std::f64::consts::PI).ln();
    let ln_m = ln_2pi + r as f64 * GAMMA_MIN.ln();
    let s_bar = s - 0.25 * a.peirce() as f64 * (r as f64 - 1.0);
    let ln_c = c.ln();
    let mut ln_sum = f64::NEG_INFINITY;
    let mut se_sum = 0.0;
    let mut degree = 0;
    let mut ln_tail = f64::INFINITY;
    for k in 0..=opts.cap {
        let ln_kf = ln_gamma(k as f64 + 1.0);
        for (m, z) in ev.degree(k)? {
            let lg = ln_cone_gamma(a, &m, s)?;
            let base = k as f64 * ln_c - ln_kf - lg;
            if z.value > 0.0 {
                ln_sum = log_add(ln_sum, base + z.value.ln());
            }
            se_sum += (base + ln_pre).exp() * z.std_error;
        }
        degree = k;
        ln_tail = ln_pre + (ln_exp_tail(c, k) - ln_m).min(ln_tail_convex(c, k, r, s_bar, ln_2pi));
        let value = ln_pre + ln_sum;
        if ln_tail <= opts.target_tol.ln() && ln_tail <= value + (0.25 * f64::EPSILON).ln() {
            break;
        }
    }
    let tail_bound = ln_tail.exp();
    if tail_bound > opts.target_tol {
        return Err(Error::TailNotConverged { bound: tail_bound, target: opts.target_tol, cap: opts.cap });
    }
    let l = ln_pre + ln_sum;
    Ok(NoncentralDensity { log_value: l, value: l.exp(), tail_bound, degree, zonal_std_error: se_sum })
}

/// Whether the Wishart process with scale α and drift B has a Lebesgue
/// density at positive times: rank[L(α), L(Bα), …, L(B^{n−1}α)] = n.
///
/// The drift must point inward on the boundary (checked on structured
/// orthogonal pairs x ⊥ u of the cone).
pub fn density_exists(alpha: &Element, drift: &ConeOperator) -> Result<bool> {
    let a = alpha.algebra();
    if drift.algebra() != a {
        return Err(Error::AlgebraMismatch);
    }
    if cone_classify(alpha, DEFAULT_TOL)? == ConeClass::Outside {
        return Err(Error::NotInCone(crate::jordan::min_eigenvalue(alpha)?));
    }
    let scale = drift.matrix().amax().max(1.0);
    for (x, u) in structured_orthogonal_pairs(a) {
        let v = drift.apply(&x).inner(&u);
        if v < -1e-9 * scale {
            return Err(Error::NotAdmissible(format!("drift is not inward-pointing (⟨Bx, u⟩ = {v:e})")));
        }
    }
    let n = a.dim();
    let mut stacked = DMatrix::zeros(n, n * n);
    let mut v = alpha.clone();
    for k in 0..n {
        stacked.view_mut((0, k * n), (n, n)).copy_from(left_mult(&v).matrix());
        v = drift.apply(&v);
    }
    let sv = stacked.singular_values();
    let smax = sv.max();
    if !(smax > 0.0) {
        return Ok(false);
    }
    Ok(sv.iter().filter(|&&s| s > 1e-10 * smax).count() == n)
}

#[cfg(test)]
mod tests;
