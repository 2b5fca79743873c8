//! Generalized Riccati equations `∂φ = F(ψ)`, `∂ψ = R(ψ)`, `φ(0) = 0`, `ψ(0) = u`:
//! adaptive numeric integration, the closed-form Bru and Wishart flows, and
//! the Lie–Trotter splitting into a Bru part and a drift/jump part.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::affine_params::{lie_algebra_defect, validate, AffineParameterSet};
use crate::error::{Error, Result};
use crate::jordan::{
    cone_classify, eigenvalues, inverse, ln_det, quad_apply, sqrt, ConeClass, ConeOperator, Element, DEFAULT_TOL,
};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::quadrature::integrate_vec;

/// How a flow was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowMethod {
    NumericRK,
    ClosedBru,
    ClosedWishart,
    Split(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FlowStats {
    pub steps: usize,
    pub rejections: usize,
    pub guard_rejections: usize,
    /// Smallest eigenvalue of ψ over the output grid.
    pub min_interior_margin: f64,
}

/// Sampled trajectory `{(tᵢ, φ(tᵢ,u), ψ(tᵢ,u))}`.
#[derive(Debug, Clone)]
pub struct RiccatiFlow {
    pub u0: Element,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<Element>,
    pub method: FlowMethod,
    pub stats: FlowStats,
}

impl RiccatiFlow {
    pub fn last(&self) -> (f64, &Element) {
        (*self.phi.last().expect("non-empty"), self.psi.last().expect("non-empty"))
    }
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions { rtol: 1e-10, atol: 1e-12 }
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be finite, non-negative and non-decreasing".into()));
    }
    Ok(())
}

fn require_cone(u: &Element) -> Result<()> {
    if cone_classify(u, DEFAULT_TOL)? == ConeClass::Outside {
        return Err(Error::NotInCone(*eigenvalues(u)?.last().expect("rank ≥ 1")));
    }
    Ok(())
}

/// Numeric Riccati solver for a parameter set that has been checked once.
///
/// Construction runs the deterministic admissibility checks (no random
/// boundary samples); repeated solves then skip validation.
#[derive(Debug, Clone)]
pub struct RiccatiSolver {
    params: AffineParameterSet,
    opts: RiccatiOptions,
}

impl RiccatiSolver {
    pub fn new(params: &AffineParameterSet, opts: RiccatiOptions) -> Result<Self> {
        let report = validate(params, 0, 0);
        if let Some(fail) = report.failures().next() {
            return Err(Error::NotAdmissible(format!("{}: {}", fail.name, fail.detail)));
        }
        Ok(Self::new_unchecked(params, opts))
    }

    /// Skips the admissibility checks (used for sub-problems of a validated set).
    pub(crate) fn new_unchecked(params: &AffineParameterSet, opts: RiccatiOptions) -> Self {
        RiccatiSolver { params: params.clone(), opts }
    }

    pub fn params(&self) -> &AffineParameterSet {
        &self.params
    }

    /// Solves on the grid `times` (non-decreasing, starting anywhere ≥ 0).
    pub fn solve(&self, u: &Element, times: &[f64]) -> Result<RiccatiFlow> {
        u.check_same(&self.params.alpha)?;
        check_grid(times)?;
        require_cone(u)?;
        let a = u.algebra();
        let n = a.dim();
        let mut y0 = DVector::zeros(n + 1);
        y0.rows_mut(1, n).copy_from(u.coords());
        let p = &self.params;
        let rhs = |y: &DVector<f64>| {
            let psi = Element::new(a, y.rows(1, n).into_owned()).expect("shape");
            let mut dy = DVector::zeros(n + 1);
            dy[0] = p.f_unchecked(&psi);
            dy.rows_mut(1, n).copy_from(p.r_unchecked(&psi).coords());
            dy
        };
        let atol = self.opts.atol;
        let guard = |y: &DVector<f64>| {
            let psi = Element::new(a, y.rows(1, n).into_owned()).expect("shape");
            eigenvalues(&psi).map(|ev| *ev.last().expect("rank ≥ 1") > -atol).unwrap_or(false)
        };
        let ode = OdeOptions { rtol: self.opts.rtol, atol: self.opts.atol, ..Default::default() };
        let (ys, st) = integrate(rhs, &y0, times, &ode, guard)?;
        let psi: Vec<Element> =
            ys.iter().map(|y| Element::new(a, y.rows(1, n).into_owned()).expect("shape")).collect();
        let phi = ys.iter().map(|y| y[0]).collect();
        Ok(RiccatiFlow {
            u0: u.clone(),
            times: times.to_vec(),
            phi,
            stats: flow_stats(st, &psi),
            psi,
            method: FlowMethod::NumericRK,
        })
    }

    /// (φ(t,u), ψ(t,u)) at a single time.
    pub fn flow_at(&self, u: &Element, t: f64) -> Result<(f64, Element)> {
        if t == 0.0 {
            return Ok((0.0, u.clone()));
        }
        let f = self.solve(u, &[t])?;
        let (phi, psi) = f.last();
        Ok((phi, psi.clone()))
    }

    /// Evaluates many independent (u, t) pairs in parallel; results are in input order.
    pub fn batch(&self, inputs: &[(Element, f64)]) -> Vec<Result<(f64, Element)>> {
        inputs.par_iter().map(|(u, t)| self.flow_at(u, *t)).collect()
    }
}

fn flow_stats(st: OdeStats, psi: &[Element]) -> FlowStats {
    let margin = psi
        .iter()
        .map(|p| eigenvalues(p).map(|e| *e.last().expect("rank ≥ 1")).unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    FlowStats { steps: st.steps, rejections: st.rejections, guard_rejections: st.guard_rejections, min_interior_margin: margin }
}

/// Numerically solves the Riccati system up to `t_end`, recording `[0, t_end]`.
pub fn solve_numeric(
    params: &AffineParameterSet,
    u: &Element,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<RiccatiFlow> {
    RiccatiSolver::new(params, RiccatiOptions { rtol, atol })?.solve(u, &[0.0, t_end])
}

/// Closed-form Bru flow: ψ = (u⁻¹ + 2tα)⁻¹, φ = (δ/2) ln det(e + 2tP(√α)u).
///
/// Evaluated as ψ = P(√u)(e + 2tP(√u)α)⁻¹ and φ = (δ/2) ln det(e + 2tP(√u)α),
/// which is the same expression for interior u and its continuous extension
/// to the boundary of K (in particular ψ(t, 0) = 0, φ(t, 0) = 0).
pub fn bru_flow(alpha: &Element, delta: f64, u: &Element, t: f64) -> Result<(f64, Element)> {
    alpha.check_same(u)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time {t} must be finite and non-negative")));
    }
    require_cone(u)?;
    if t == 0.0 {
        return Ok((0.0, u.clone()));
    }
    if u.is_zero() {
        return Ok((0.0, u.clone()));
    }
    let sigma = alpha * (2.0 * t);
    resolvent_flow(&sigma, delta, u)
}

/// (φ, ψ̃) with ψ̃ = (u⁻¹ + σ)⁻¹ = P(√u)(e + P(√u)σ)⁻¹ and φ = (δ/2) ln det(e + P(√u)σ).
fn resolvent_flow(sigma: &Element, delta: f64, u: &Element) -> Result<(f64, Element)> {
    let a = u.algebra();
    let ru = sqrt(u, DEFAULT_TOL)?;
    let z = Element::identity(a) + quad_apply(&ru, sigma);
    let zi = inverse(&z, DEFAULT_TOL)?;
    let psi = quad_apply(&ru, &zi);
    let phi = 0.5 * delta * ln_det(&z)?;
    Ok((phi, psi))
}

/// σ_t = 2∫₀ᵗ e^{Bs}α ds by adaptive Gauss–Kronrod quadrature (absolute accuracy 1e−12).
pub fn sigma_b(alpha: &Element, drift: &ConeOperator, t: f64) -> Element {
    let a = alpha.algebra();
    if t == 0.0 {
        return Element::zero(a);
    }
    let bm = drift.matrix();
    let al = alpha.coords().clone();
    let q = integrate_vec(|s| (bm * s).exp() * &al, 0.0, t, 1e-12, 4096);
    Element::new(a, q.value * 2.0).expect("shape")
}

/// Closed-form Wishart flow for B in the Lie algebra of the cone:
/// ψ = e^{Bᵀt}(u⁻¹ + σ_t)⁻¹, φ = (δ/2) ln det(e + P(√σ_t)u).
pub fn wishart_flow(alpha: &Element, delta: f64, drift: &ConeOperator, u: &Element, t: f64) -> Result<(f64, Element)> {
    let defect = lie_algebra_defect(drift, 4);
    if defect > 1e-9 {
        return Err(Error::DriftNotInLieAlgebra(defect));
    }
    wishart_flow_unchecked(alpha, delta, drift, u, t)
}

pub(crate) fn wishart_flow_unchecked(
    alpha: &Element,
    delta: f64,
    drift: &ConeOperator,
    u: &Element,
    t: f64,
) -> Result<(f64, Element)> {
    alpha.check_same(u)?;
    require_cone(u)?;
    if t == 0.0 || u.is_zero() {
        return Ok((0.0, u.clone()));
    }
    let sigma = sigma_b(alpha, drift, t);
    let (phi, inner) = resolvent_flow(&sigma, delta, u)?;
    Ok((phi, drift.adjoint().exp(t).apply(&inner)))
}

/// Closed-form Wishart flows on a grid, sharing one admissibility check.
pub fn wishart_flow_grid(
    alpha: &Element,
    delta: f64,
    drift: &ConeOperator,
    u: &Element,
    times: &[f64],
) -> Result<RiccatiFlow> {
    let defect = lie_algebra_defect(drift, 4);
    if defect > 1e-9 {
        return Err(Error::DriftNotInLieAlgebra(defect));
    }
    check_grid(times)?;
    let mut phi = Vec::with_capacity(times.len());
    let mut psi = Vec::with_capacity(times.len());
    for &t in times {
        let (f, p) = wishart_flow_unchecked(alpha, delta, drift, u, t)?;
        phi.push(f);
        psi.push(p);
    }
    let method = if drift.matrix().amax() == 0.0 { FlowMethod::ClosedBru } else { FlowMethod::ClosedWishart };
    Ok(RiccatiFlow {
        u0: u.clone(),
        times: times.to_vec(),
        phi,
        stats: flow_stats(OdeStats::default(), &psi),
        psi,
        method,
    })
}

/// Closed-form Bru flows on a grid.
pub fn bru_flow_grid(alpha: &Element, delta: f64, u: &Element, times: &[f64]) -> Result<RiccatiFlow> {
    check_grid(times)?;
    let mut phi = Vec::with_capacity(times.len());
    let mut psi = Vec::with_capacity(times.len());
    for &t in times {
        let (f, p) = bru_flow(alpha, delta, u, t)?;
        phi.push(f);
        psi.push(p);
    }
    Ok(RiccatiFlow {
        u0: u.clone(),
        times: times.to_vec(),
        phi,
        stats: flow_stats(OdeStats::default(), &psi),
        psi,
        method: FlowMethod::ClosedBru,
    })
}

/// δ with `b = δα` when the parameter set has a closed-form flow (no jumps,
/// c = 0, γ = 0, b parallel to α); the drift B may be non-zero.
pub fn closed_form_delta(params: &AffineParameterSet) -> Option<f64> {
    if params.has_jumps() || params.c != 0.0 || !params.gamma.is_zero() || params.alpha.is_zero() {
        return None;
    }
    let delta = params.b.inner(&params.alpha) / params.alpha.inner(&params.alpha);
    let resid = (&params.b - &(&params.alpha * delta)).norm();
    (delta >= 0.0 && resid <= 1e-12 * (1.0 + params.b.norm())).then_some(delta)
}

/// Closed-form Bru or Wishart flow of `params` on a grid.
pub fn closed_flow_grid(params: &AffineParameterSet, u: &Element, times: &[f64]) -> Result<RiccatiFlow> {
    let delta = closed_form_delta(params).ok_or_else(|| {
        Error::InvalidInput("parameter set has no closed-form flow (needs b = δα, no jumps, c = 0, γ = 0)".into())
    })?;
    if params.drift.matrix().amax() == 0.0 {
        bru_flow_grid(&params.alpha, delta, u, times)
    } else {
        wishart_flow_grid(&params.alpha, delta, &params.drift, u, times)
    }
}

/// Lie–Trotter splitting of the Riccati flow into the Bru part with shape
/// `δ = d(r−1)` (closed form) and the remaining drift/jump/killing part (numeric).
#[derive(Debug, Clone)]
pub struct SplitSolver {
    alpha: Element,
    share: f64,
    rest: AffineParameterSet,
    opts: RiccatiOptions,
}

impl SplitSolver {
    /// Splits `params` with the default δ-share `d(r−1)`.
    pub fn new(params: &AffineParameterSet, opts: RiccatiOptions) -> Result<Self> {
        Self::with_share(params, params.algebra().gindikin_threshold(), opts)
    }

    /// Splits `params` with a custom δ-share (must keep `b − δα ∈ K`).
    pub fn with_share(params: &AffineParameterSet, share: f64, opts: RiccatiOptions) -> Result<Self> {
        RiccatiSolver::new(params, opts)?;
        let mut rest = params.clone();
        rest.alpha = Element::zero(params.algebra());
        rest.b = params.b.axpy(-share, &params.alpha);
        if cone_classify(&rest.b, DEFAULT_TOL)? == ConeClass::Outside {
            return Err(Error::NotAdmissible(format!("b − {share}·α is not in K")));
        }
        Ok(SplitSolver { alpha: params.alpha.clone(), share, rest, opts })
    }

    /// (φ_N, ψ_N) after N steps of size τ = t/N:
    /// `y_n = ψ₂(τ, ψ₁(τ, y_{n−1}))`, `w_n = w_{n−1} + φ₁(τ, y_{n−1}) + φ₂(τ, ψ₁(τ, y_{n−1}))`.
    pub fn flow(&self, u: &Element, t: f64, steps: usize) -> Result<(f64, Element, OdeStats)> {
        if steps == 0 {
            return Err(Error::InvalidInput("splitting needs at least one step".into()));
        }
        require_cone(u)?;
        let tau = t / steps as f64;
        let sub = RiccatiSolver::new_unchecked(
            &self.rest,
            RiccatiOptions { rtol: self.opts.rtol / steps as f64, atol: self.opts.atol / steps as f64 },
        );
        let mut y = u.clone();
        let mut w = 0.0;
        let mut stats = OdeStats::default();
        let pure_bru = self.rest.drift.matrix().amax() == 0.0
            && self.rest.b.is_zero()
            && self.rest.gamma.is_zero()
            && self.rest.c == 0.0
            && !self.rest.has_jumps();
        for _ in 0..steps {
            let (phi1, y1) = bru_flow(&self.alpha, self.share, &y, tau)?;
            if pure_bru {
                w += phi1;
                y = y1;
                continue;
            }
            let f = sub.solve(&y1, &[tau])?;
            stats += OdeStats {
                steps: f.stats.steps,
                rejections: f.stats.rejections,
                guard_rejections: f.stats.guard_rejections,
                evaluations: 0,
            };
            let (phi2, y2) = f.last();
            w += phi1 + phi2;
            y = y2.clone();
        }
        Ok((w, y, stats))
    }
}

/// Split-flow approximation of (φ(t,u), ψ(t,u)) with N steps.
pub fn split_flow(params: &AffineParameterSet, u: &Element, t: f64, steps: usize) -> Result<(f64, Element)> {
    let (phi, psi, _) = SplitSolver::new(params, RiccatiOptions::default())?.flow(u, t, steps)?;
    Ok((phi, psi))
}

/// Worst defect of the flow identities
/// `φ(t+s,u) = φ(t,u) + φ(s,ψ(t,u))` and `ψ(t+s,u) = ψ(s,ψ(t,u))`.
pub fn semiflow_defect(
    flow: impl Fn(&Element, f64) -> Result<(f64, Element)>,
    u: &Element,
    t: f64,
    s: f64,
) -> Result<f64> {
    let (phi_ts, psi_ts) = flow(u, t + s)?;
    let (phi_t, psi_t) = flow(u, t)?;
    let (phi_s, psi_s) = flow(&psi_t, s)?;
    let d_phi = (phi_ts - phi_t - phi_s).abs();
    let d_psi = (&psi_ts - &psi_s).norm();
    Ok(d_phi.max(d_psi))
}

/// `true` iff [`semiflow_defect`] is at most `tol`.
pub fn verify_semiflow(
    flow: impl Fn(&Element, f64) -> Result<(f64, Element)>,
    u: &Element,
    t: f64,
    s: f64,
    tol: f64,
) -> Result<(bool, f64)> {
    let d = semiflow_defect(flow, u, t, s)?;
    Ok((d <= tol, d))
}

/// Solution of the affine majorant `y' = Bᵀy + γ + Σ_{‖ξₖ‖>1} cₖ`, `y(0) = u`.
pub fn affine_majorant(params: &AffineParameterSet, u: &Element, t: f64) -> Element {
    let a = params.algebra();
    let n = a.dim();
    let mut k = params.gamma.clone();
    for at in &params.mu {
        if at.xi.norm() > 1.0 {
            k += &at.c;
        }
    }
    // y(t) = e^{Mt}u + ∫₀ᵗ e^{Ms}k ds via one augmented exponential
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&params.drift.matrix().transpose());
    aug.view_mut((0, n), (n, 1)).copy_from(k.coords());
    let e = (aug * t).exp();
    let y = e.view((0, 0), (n, n)) * u.coords() + e.view((0, n), (n, 1)).column(0);
    Element::new(a, y).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine_params::{matrix_drift, ConstantAtom, LinearAtom};
    use crate::jordan::random::{random_cone_element, random_interior};
    use crate::jordan::{det, make_algebra, min_eigenvalue, quad_rep, Algebra, AlgebraKind};
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(r: usize) -> Algebra {
        make_algebra(AlgebraKind::SymMatrix, r).unwrap()
    }

    #[test]
    fn bru_scalar_example() {
        let a = s(1);
        let one = Element::identity(a);
        let (phi, psi) = bru_flow(&one, 3.0, &one, 0.5).unwrap();
        assert!((psi.coords()[0] - 0.5).abs() < 1e-15);
        assert!((phi - 1.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bru_s2_identity_example() {
        let a = s(2);
        let e = Element::identity(a);
        let (phi, psi) = bru_flow(&e, 2.0, &e, 1.0).unwrap();
        assert!((psi - e.clone() * (1.0 / 3.0)).norm() < 1e-15);
        assert!((phi - 2.0 * 3f64.ln()).abs() < 1e-14);
        let (phi0, psi0) = bru_flow(&e, 2.0, &e, 0.0).unwrap();
        assert_eq!(phi0, 0.0);
        assert_eq!(psi0, e);
        let z = Element::zero(a);
        assert_eq!(bru_flow(&e, 2.0, &z, 1.0).unwrap(), (0.0, z));
    }

    #[test]
    fn zero_params_give_constant_flow() {
        let a = s(2);
        let p = AffineParameterSet::zero(a);
        let u = Element::from_slice(a, &[1.0, 2.0, 0.3]).unwrap();
        let f = solve_numeric(&p, &u, 3.0, 1e-10, 1e-12).unwrap();
        assert_eq!(f.psi[1], u);
        assert_eq!(f.phi[1], 0.0);
    }

    #[test]
    fn numeric_matches_bru() {
        for a in [s(1), s(3), make_algebra(AlgebraKind::SpinFactor, 4).unwrap(),
                  make_algebra(AlgebraKind::HermComplex, 2).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let alpha = random_interior(a, &mut rng, 0.3, 1.2);
            let u = random_interior(a, &mut rng, 0.2, 2.0);
            let delta = a.gindikin_threshold() + 0.5;
            let p = AffineParameterSet::bru(&alpha, delta);
            let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
            let f = RiccatiSolver::new(&p, RiccatiOptions::default()).unwrap().solve(&u, &grid).unwrap();
            assert!(f.stats.min_interior_margin > 0.0);
            for (i, &t) in grid.iter().enumerate() {
                let (phi, psi) = bru_flow(&alpha, delta, &u, t).unwrap();
                assert!((phi - f.phi[i]).abs() < 1e-8, "{a} t={t}");
                assert!((&psi - &f.psi[i]).norm() < 1e-8, "{a} t={t}");
            }
        }
    }

    #[test]
    fn det_identity_for_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for a in [s(3), make_algebra(AlgebraKind::SpinFactor, 5).unwrap()] {
            let alpha = random_interior(a, &mut rng, 0.3, 1.5);
            let u = random_interior(a, &mut rng, 0.3, 1.5);
            let t = 0.7;
            let lhs = det(&u).unwrap() * det(&(inverse(&u, DEFAULT_TOL).unwrap() + alpha.clone() * (2.0 * t))).unwrap();
            let ra = sqrt(&alpha, DEFAULT_TOL).unwrap();
            let rhs = det(&(Element::identity(a) + quad_rep(&ra).apply(&u) * (2.0 * t))).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * rhs);
            // φ from the closed form agrees with the direct determinant
            let (phi, _) = bru_flow(&alpha, 2.0, &u, t).unwrap();
            assert!((phi - rhs.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_matches_augmented_exponential() {
        let a = s(2);
        let drift = matrix_drift(a, &dmatrix![-0.7, 0.4; 0.2, -0.3]).unwrap();
        let alpha = Element::from_slice(a, &[1.0, 0.5, 0.2]).unwrap();
        let t = 1.3;
        let n = a.dim();
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(drift.matrix());
        aug.view_mut((0, n), (n, 1)).copy_from(alpha.coords());
        let e = (aug * t).exp();
        let want = e.view((0, n), (n, 1)).column(0) * 2.0;
        assert!((sigma_b(&alpha, &drift, t).coords() - want).amax() < 1e-12);
        // B = 0 reduces to 2tα
        let z = ConeOperator::zero(a);
        assert!((sigma_b(&alpha, &z, t) - alpha.clone() * (2.0 * t)).norm() < 1e-13);
    }

    #[test]
    fn wishart_matches_numeric() {
        let a = s(2);
        let drift = matrix_drift(a, &dmatrix![-1.0, 0.0; 0.0, -1.0]).unwrap();
        let alpha = Element::identity(a);
        let p = AffineParameterSet::wishart(&alpha, 1.5, drift.clone());
        let u = Element::from_slice(a, &[1.0, 2.0, 0.5]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let num = RiccatiSolver::new(&p, RiccatiOptions::default()).unwrap().solve(&u, &grid).unwrap();
        let cl = wishart_flow_grid(&alpha, 1.5, &drift, &u, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((num.phi[i] - cl.phi[i]).abs() < 1e-8);
            assert!((&num.psi[i] - &cl.psi[i]).norm() < 1e-8);
        }
        // B = 0 is the Bru flow
        let z = ConeOperator::zero(a);
        let (p1, s1) = wishart_flow(&alpha, 1.5, &z, &u, 0.8).unwrap();
        let (p2, s2) = bru_flow(&alpha, 1.5, &u, 0.8).unwrap();
        assert!((p1 - p2).abs() < 1e-13 && (s1 - s2).norm() < 1e-13);
    }

    #[test]
    fn wishart_rejects_non_lie_drift() {
        let a = s(2);
        let e = Element::identity(a);
        let proj = ConeOperator::new(a, e.coords() * e.coords().transpose()).unwrap();
        assert!(matches!(wishart_flow(&e, 1.0, &proj, &e, 1.0), Err(Error::DriftNotInLieAlgebra(_))));
    }

    #[test]
    fn numeric_rejects_inadmissible() {
        let a = s(3);
        let p = AffineParameterSet::bru(&Element::identity(a), 0.5);
        assert!(matches!(
            solve_numeric(&p, &Element::identity(a), 1.0, 1e-8, 1e-10),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn split_pure_bru_equals_closed_form() {
        let a = s(2);
        let e = Element::identity(a);
        let p = AffineParameterSet::bru(&e, 1.0);
        let u = Element::from_slice(a, &[1.0, 0.5, 0.3]).unwrap();
        let (phi, psi) = bru_flow(&e, 1.0, &u, 1.5).unwrap();
        for n in [1, 3, 8] {
            let (sp, ss) = split_flow(&p, &u, 1.5, n).unwrap();
            assert!((sp - phi).abs() < 1e-12 && (&ss - &psi).norm() < 1e-12);
        }
    }

    fn mixed_params(a: Algebra) -> AffineParameterSet {
        let e = Element::identity(a);
        let mut p = AffineParameterSet::wishart(&e, 2.0, matrix_drift(a, &dmatrix![-0.5, 0.3; 0.2, -0.4]).unwrap());
        p.m.push(ConstantAtom { xi: e.clone() * 0.5, w: 0.7 });
        p.mu.push(LinearAtom { xi: e.clone() * 1.5, c: e.clone() * 0.3 });
        p
    }

    #[test]
    fn split_single_step_is_composition() {
        let a = s(2);
        let p = mixed_params(a);
        let u = Element::identity(a);
        let (phi1, y1) = bru_flow(&p.alpha, 1.0, &u, 0.8).unwrap();
        let mut rest = p.clone();
        rest.alpha = Element::zero(a);
        rest.b = p.b.axpy(-1.0, &p.alpha);
        let f2 = RiccatiSolver::new(&rest, RiccatiOptions::default()).unwrap().solve(&y1, &[0.8]).unwrap();
        let (sp, ss) = split_flow(&p, &u, 0.8, 1).unwrap();
        assert!((sp - phi1 - f2.phi[0]).abs() < 1e-9);
        assert!((&ss - &f2.psi[0]).norm() < 1e-9);
    }

    #[test]
    fn split_converges_first_order() {
        let a = s(2);
        let p = mixed_params(a);
        let u = Element::from_slice(a, &[1.0, 0.6, 0.2]).unwrap();
        let reference = RiccatiSolver::new(&p, RiccatiOptions { rtol: 1e-12, atol: 1e-14 })
            .unwrap()
            .flow_at(&u, 1.0)
            .unwrap();
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| (&split_flow(&p, &u, 1.0, n).unwrap().1 - &reference.1).norm())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn semiflow_at_zero_is_exact() {
        let a = s(2);
        let e = Element::identity(a);
        let u = Element::from_slice(a, &[1.0, 0.5, 0.3]).unwrap();
        let d = semiflow_defect(|v, t| bru_flow(&e, 1.0, v, t), &u, 0.7, 0.0).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn right_derivative_is_vector_field() {
        let a = s(2);
        let p = mixed_params(a);
        let u = Element::from_slice(a, &[1.0, 0.6, 0.2]).unwrap();
        let sol = RiccatiSolver::new(&p, RiccatiOptions { rtol: 1e-13, atol: 1e-15 }).unwrap();
        let h = 1e-6;
        let (phi, psi) = sol.flow_at(&u, h).unwrap();
        let r = p.eval_r(&u).unwrap();
        let dpsi = (psi - u.clone()) * (1.0 / h);
        assert!((&dpsi - &r).norm() < 1e-4 * r.norm());
        let f = p.eval_f(&u).unwrap();
        assert!((phi / h - f).abs() < 1e-4 * f.abs());
    }

    #[test]
    fn batch_is_order_preserving() {
        let a = s(2);
        let p = mixed_params(a);
        let sol = RiccatiSolver::new(&p, RiccatiOptions::default()).unwrap();
        let inputs: Vec<(Element, f64)> =
            (1..6).map(|i| (Element::identity(a) * i as f64, 0.2 * i as f64)).collect();
        let out = sol.batch(&inputs);
        for ((u, t), r) in inputs.iter().zip(out) {
            assert_eq!(r.unwrap(), sol.flow_at(u, *t).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn closed_semiflow(seed in any::<u64>(), t in 0.0f64..2.0, s_ in 0.0f64..2.0, kind in 0usize..3) {
            let a = [s(3), make_algebra(AlgebraKind::SpinFactor, 4).unwrap(),
                     make_algebra(AlgebraKind::HermComplex, 2).unwrap()][kind];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alpha = random_interior(a, &mut rng, 0.2, 1.5);
            let u = random_interior(a, &mut rng, 0.1, 3.0);
            let d = semiflow_defect(|v, tt| bru_flow(&alpha, 2.5, v, tt), &u, t, s_).unwrap();
            prop_assert!(d < 1e-10);
        }

        #[test]
        fn order_and_interior_preservation(seed in any::<u64>(), t in 0.05f64..2.0) {
            let a = s(2);
            let p = mixed_params(a);
            let sol = RiccatiSolver::new(&p, RiccatiOptions::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_interior(a, &mut rng, 0.1, 2.0);
            let v = &u + &random_cone_element(a, &mut rng);
            let (pu, su) = sol.flow_at(&u, t).unwrap();
            let (pv, sv) = sol.flow_at(&v, t).unwrap();
            prop_assert!(pu <= pv + 1e-9);
            prop_assert!(min_eigenvalue(&(&sv - &su)).unwrap() >= -1e-8);
            prop_assert!(min_eigenvalue(&su).unwrap() > 0.0);
            // comparison with the affine majorant
            let y = affine_majorant(&p, &u, t);
            prop_assert!(min_eigenvalue(&(&y - &su)).unwrap() >= -1e-8);
        }
    }
}
