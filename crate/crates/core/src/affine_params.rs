//! Admissible parameter sets `(α, b, B, c, γ, m, μ)` for affine processes on a
//! symmetric cone, the functions F and R of the generalized Riccati
//! equations, and sample-based admissibility checks.
//!
//! `B` is stored as the linear drift acting on the state (the process has
//! drift `b + B(x)`); the Riccati vector field uses its adjoint `Bᵀ`. Jump
//! measures are finite sums of atoms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jordan::random::{random_cone_element, random_frame, random_orthogonal_pair, standard_frame};
use crate::jordan::{
    cone_classify, left_mult, min_eigenvalue, quad_apply, quad_rep, quad_rep_polarized, Algebra, AlgebraSpec,
    ConeClass, ConeOperator, Element, DEFAULT_TOL,
};

/// Truncation function used to compensate small linear jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Truncation {
    /// χ(ξ) = ξ·1{‖ξ‖ ≤ 1}.
    #[default]
    IndicatorBall,
    /// χ ≡ 0.
    Zero,
}

impl Truncation {
    pub fn apply(&self, xi: &Element) -> Element {
        match self {
            Truncation::IndicatorBall if xi.norm() <= 1.0 => xi.clone(),
            _ => Element::zero(xi.algebra()),
        }
    }
}

/// Atom `w·δ_ξ` of the constant jump measure m.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantAtom {
    pub xi: Element,
    pub w: f64,
}

/// Atom `c·δ_ξ` of the cone-valued linear jump measure μ; the jump intensity at
/// state x is ⟨x, c⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAtom {
    pub xi: Element,
    pub c: Element,
}

/// A parameter set `(α, b, B, c, γ, m, μ)` together with its truncation function.
///
/// Construction only checks shapes; admissibility is checked by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParameterSet {
    pub alpha: Element,
    pub b: Element,
    /// Linear drift B acting on the state.
    pub drift: ConeOperator,
    pub c: f64,
    pub gamma: Element,
    pub m: Vec<ConstantAtom>,
    pub mu: Vec<LinearAtom>,
    pub truncation: Truncation,
}

impl AffineParameterSet {
    /// All-zero parameters.
    pub fn zero(algebra: Algebra) -> Self {
        AffineParameterSet {
            alpha: Element::zero(algebra),
            b: Element::zero(algebra),
            drift: ConeOperator::zero(algebra),
            c: 0.0,
            gamma: Element::zero(algebra),
            m: Vec::new(),
            mu: Vec::new(),
            truncation: Truncation::IndicatorBall,
        }
    }

    /// Bru parameters `(α, δα, 0, 0, 0, 0, 0)`.
    pub fn bru(alpha: &Element, delta: f64) -> Self {
        let mut p = Self::zero(alpha.algebra());
        p.alpha = alpha.clone();
        p.b = alpha * delta;
        p
    }

    /// Wishart parameters: Bru parameters with a linear drift B.
    pub fn wishart(alpha: &Element, delta: f64, drift: ConeOperator) -> Self {
        let mut p = Self::bru(alpha, delta);
        p.drift = drift;
        p
    }

    pub fn algebra(&self) -> Algebra {
        self.alpha.algebra()
    }

    /// Checks that every component lives in the same algebra and weights are finite.
    pub fn check_shapes(&self) -> Result<()> {
        let a = self.algebra();
        let same = |x: &Element| x.algebra() == a;
        if !same(&self.b) || !same(&self.gamma) || self.drift.algebra() != a {
            return Err(Error::AlgebraMismatch);
        }
        if self.m.iter().any(|at| !same(&at.xi)) || self.mu.iter().any(|at| !same(&at.xi) || !same(&at.c)) {
            return Err(Error::AlgebraMismatch);
        }
        let finite = |x: &Element| x.coords().iter().all(|v| v.is_finite());
        if !finite(&self.alpha) || !finite(&self.b) || !finite(&self.gamma) || !self.c.is_finite() {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        if self.drift.matrix().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite drift operator".into()));
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        !self.m.is_empty() || !self.mu.is_empty()
    }

    /// Total rate Σ wₖ of constant jumps.
    pub fn constant_jump_rate(&self) -> f64 {
        self.m.iter().map(|a| a.w).sum()
    }

    /// Linear drift of the continuous part of the state dynamics:
    /// `B₀(x) = B(x) − Σ χ(ξₖ)⟨x, cₖ⟩`.
    pub fn effective_state_drift(&self) -> ConeOperator {
        let mut m = self.drift.matrix().clone();
        for at in &self.mu {
            let chi = self.truncation.apply(&at.xi);
            m -= chi.coords() * at.c.coords().transpose();
        }
        ConeOperator::new(self.algebra(), m).expect("shape")
    }

    /// F(u) = ⟨b,u⟩ + c − Σ wₖ(e^{−⟨u,ξₖ⟩} − 1), for u ∈ K.
    pub fn eval_f(&self, u: &Element) -> Result<f64> {
        self.require_cone(u)?;
        Ok(self.f_unchecked(u))
    }

    /// R(u) = −2P(u)α + Bᵀu + γ − Σ(e^{−⟨u,ξₖ⟩} − 1 + ⟨χ(ξₖ),u⟩)cₖ, for u ∈ K.
    pub fn eval_r(&self, u: &Element) -> Result<Element> {
        self.require_cone(u)?;
        Ok(self.r_unchecked(u))
    }

    fn require_cone(&self, u: &Element) -> Result<()> {
        u.check_same(&self.alpha)?;
        if cone_classify(u, DEFAULT_TOL)? == ConeClass::Outside {
            return Err(Error::NotInCone(min_eigenvalue(u)?));
        }
        Ok(())
    }

    /// F without the cone check (used inside integrators whose stages may leave K).
    pub fn f_unchecked(&self, u: &Element) -> f64 {
        let mut f = self.b.inner(u) + self.c;
        for at in &self.m {
            f -= at.w * ((-u.inner(&at.xi)).exp_m1());
        }
        f
    }

    /// R without the cone check.
    pub fn r_unchecked(&self, u: &Element) -> Element {
        let a = self.algebra();
        let mut out = DVector::zeros(a.dim());
        if !self.alpha.is_zero() {
            out.axpy(-2.0, quad_apply(u, &self.alpha).coords(), 0.0);
        }
        out.gemv_tr(1.0, self.drift.matrix(), u.coords(), 1.0);
        out += self.gamma.coords();
        for at in &self.mu {
            let chi = self.truncation.apply(&at.xi);
            let s = (-u.inner(&at.xi)).exp_m1() + chi.inner(u);
            out.axpy(-s, at.c.coords(), 1.0);
        }
        Element::new(a, out).expect("shape")
    }

    /// Largest δ with b − δα ∈ K (None when α = 0 or b ∉ K).
    pub fn effective_delta(&self) -> Option<f64> {
        if self.alpha.is_zero() || min_eigenvalue(&self.b).ok()? < -DEFAULT_TOL * self.b.norm().max(1e-300) {
            return None;
        }
        let ok = |d: f64| {
            let y = self.b.axpy(-d, &self.alpha);
            min_eigenvalue(&y).map(|m| m >= -1e-12 * (1.0 + y.norm())).unwrap_or(false)
        };
        let mut hi = 1.0;
        while ok(hi) {
            hi *= 2.0;
            if hi > 1e15 {
                return Some(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Some(lo)
    }
}

/// Serialized parameter set. Elements are coordinate arrays in the algebra of
/// `algebra`; `B` is the drift matrix acting on coordinates (row-major).
/// Either `b` or the shortcut `delta` (b = δα) may be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDocument {
    pub algebra: AlgebraSpec,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub m: Vec<ConstantAtomDocument>,
    #[serde(default)]
    pub mu: Vec<LinearAtomDocument>,
    #[serde(default)]
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantAtomDocument {
    pub xi: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearAtomDocument {
    pub xi: Vec<f64>,
    pub c: Vec<f64>,
}

impl ParamsDocument {
    /// Builds the parameter set (shapes checked, admissibility not).
    pub fn to_params(&self) -> Result<AffineParameterSet> {
        let a = Algebra::try_from(self.algebra)?;
        let el = |v: &[f64]| Element::from_slice(a, v);
        let alpha = el(&self.alpha)?;
        let b = match (&self.b, self.delta) {
            (Some(_), Some(_)) => return Err(Error::InvalidInput("give either b or delta, not both".into())),
            (Some(b), None) => el(b)?,
            (None, Some(d)) => &alpha * d,
            (None, None) => Element::zero(a),
        };
        let drift = match &self.drift {
            None => ConeOperator::zero(a),
            Some(rows) => {
                let n = a.dim();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput(format!("B must be a {n}×{n} array")));
                }
                ConeOperator::new(a, DMatrix::from_fn(n, n, |i, j| rows[i][j]))?
            }
        };
        let p = AffineParameterSet {
            alpha,
            b,
            drift,
            c: self.c,
            gamma: match &self.gamma {
                Some(g) => el(g)?,
                None => Element::zero(a),
            },
            m: self.m.iter().map(|at| Ok(ConstantAtom { xi: el(&at.xi)?, w: at.w })).collect::<Result<_>>()?,
            mu: self.mu.iter().map(|at| Ok(LinearAtom { xi: el(&at.xi)?, c: el(&at.c)? })).collect::<Result<_>>()?,
            truncation: self.truncation,
        };
        p.check_shapes()?;
        Ok(p)
    }

    pub fn from_params(p: &AffineParameterSet) -> Self {
        let v = |x: &Element| x.coords().iter().copied().collect::<Vec<f64>>();
        let m = p.drift.matrix();
        ParamsDocument {
            algebra: p.algebra().into(),
            alpha: v(&p.alpha),
            b: Some(v(&p.b)),
            delta: None,
            drift: Some((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()),
            c: p.c,
            gamma: Some(v(&p.gamma)),
            m: p.m.iter().map(|at| ConstantAtomDocument { xi: v(&at.xi), w: at.w }).collect(),
            mu: p.mu.iter().map(|at| LinearAtomDocument { xi: v(&at.xi), c: v(&at.c) }).collect(),
            truncation: p.truncation,
        }
    }
}

/// Diffusion operator A(x) with ⟨u, A(x)u⟩ = 4⟨x, P(u)α⟩.
pub fn diffusion_operator(params: &AffineParameterSet, x: &Element) -> Result<ConeOperator> {
    params.require_cone(x)?;
    Ok(DiffusionTensor::new(&params.alpha).operator(x))
}

/// Precomputed tensor `T_{βγ} = 4P(e_β, e_γ)α`, so that `A(x)_{βγ} = ⟨x, T_{βγ}⟩`.
#[derive(Debug, Clone)]
pub struct DiffusionTensor {
    algebra: Algebra,
    /// Row `β·n + γ` holds the coordinates of `T_{βγ}`.
    table: DMatrix<f64>,
}

impl DiffusionTensor {
    pub fn new(alpha: &Element) -> Self {
        let a = alpha.algebra();
        let n = a.dim();
        let basis: Vec<Element> = (0..n)
            .map(|i| {
                let mut c = DVector::zeros(n);
                c[i] = 1.0;
                Element::new(a, c).expect("shape")
            })
            .collect();
        let mut table = DMatrix::zeros(n * n, n);
        for b in 0..n {
            for g in b..n {
                let t = crate::jordan::quad_polarized_apply(&basis[b], &basis[g], alpha) * 4.0;
                table.set_row(b * n + g, &t.coords().transpose());
                table.set_row(g * n + b, &t.coords().transpose());
            }
        }
        DiffusionTensor { algebra: a, table }
    }

    /// Writes A(x) (row-major n×n) into `out` without allocating.
    pub fn fill(&self, x: &[f64], out: &mut [f64]) {
        let n = self.algebra.dim();
        for (row, o) in out.iter_mut().enumerate().take(n * n) {
            let mut s = 0.0;
            for k in 0..n {
                s += self.table[(row, k)] * x[k];
            }
            *o = s;
        }
    }

    pub fn operator(&self, x: &Element) -> ConeOperator {
        let n = self.algebra.dim();
        let mut buf = vec![0.0; n * n];
        self.fill(x.coords().as_slice(), &mut buf);
        ConeOperator::new(self.algebra, DMatrix::from_row_slice(n, n, &buf)).expect("shape")
    }
}

/// Outcome of one admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Number of evaluated instances (1 for deterministic checks).
    pub samples: usize,
    pub detail: String,
    /// Worst observed value of the checked quantity (≥ 0 means satisfied).
    pub worst: f64,
    /// Coordinates of a violating witness, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<f64>>>,
}

/// One verdict per admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub algebra: String,
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn cone_check(name: &str, x: &Element) -> CheckOutcome {
    let ev = crate::jordan::eigenvalues(x).unwrap_or_else(|_| vec![f64::NAN]);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let class = crate::jordan::classify_eigenvalues(&ev, DEFAULT_TOL);
    let passed = min.is_finite() && class != ConeClass::Outside;
    CheckOutcome {
        name: name.to_string(),
        passed,
        samples: 1,
        detail: if passed { "in K".into() } else { format!("min eigenvalue {min:e}") },
        worst: min,
        witness: (!passed).then(|| vec![x.coords().iter().copied().collect()]),
    }
}

/// Relative tolerance used by the sampled inequality checks.
const CHECK_TOL: f64 = 1e-9;

/// Checks every admissibility condition.
///
/// The inward-drift condition is certified on: all pairs (pᵢ, pⱼ) of a fixed
/// set of Jordan frames, the Peirce pairs `x = pᵢ+pⱼ+w, u = pᵢ+pⱼ−w`
/// (w ∈ Vᵢⱼ, ‖w‖² = 2) for every orthonormal direction of Vᵢⱼ, and
/// `n_boundary_samples` random orthogonal boundary pairs. A pass therefore
/// means "no violation found on the reported number of pairs".
pub fn validate(params: &AffineParameterSet, n_boundary_samples: usize, seed: u64) -> ValidationReport {
    let a = params.algebra();
    let mut checks = Vec::new();
    if let Err(e) = params.check_shapes() {
        checks.push(CheckOutcome {
            name: "shapes".into(),
            passed: false,
            samples: 1,
            detail: e.to_string(),
            worst: f64::NAN,
            witness: None,
        });
        return ValidationReport { algebra: a.to_string(), checks };
    }
    checks.push(cone_check("alpha_in_cone", &params.alpha));
    let mut bshift = cone_check("drift_b_minus_d(r-1)alpha_in_cone", &params.b.axpy(-a.gindikin_threshold(), &params.alpha));
    bshift.name = "b_condition".into();
    checks.push(bshift);
    checks.push(CheckOutcome {
        name: "killing_rate_nonnegative".into(),
        passed: params.c >= 0.0,
        samples: 1,
        detail: format!("c = {}", params.c),
        worst: params.c,
        witness: None,
    });
    checks.push(cone_check("gamma_in_cone", &params.gamma));
    checks.push(jump_support_check(params));
    checks.push(inward_drift_check(params, n_boundary_samples, seed));
    ValidationReport { algebra: a.to_string(), checks }
}

fn jump_support_check(params: &AffineParameterSet) -> CheckOutcome {
    let mut problems = Vec::new();
    let mut witness = None;
    let nonzero_cone = |x: &Element| {
        !x.is_zero() && cone_classify(x, DEFAULT_TOL).map(|c| c != ConeClass::Outside).unwrap_or(false)
    };
    for (k, at) in params.m.iter().enumerate() {
        if !nonzero_cone(&at.xi) {
            problems.push(format!("m atom {k}: ξ ∉ K∖{{0}}"));
            witness.get_or_insert_with(|| vec![at.xi.coords().iter().copied().collect()]);
        }
        if !(at.w > 0.0 && at.w.is_finite()) {
            problems.push(format!("m atom {k}: weight {} is not positive", at.w));
        }
    }
    for (k, at) in params.mu.iter().enumerate() {
        if !nonzero_cone(&at.xi) {
            problems.push(format!("mu atom {k}: ξ ∉ K∖{{0}}"));
            witness.get_or_insert_with(|| vec![at.xi.coords().iter().copied().collect()]);
        }
        if cone_classify(&at.c, DEFAULT_TOL).map(|c| c == ConeClass::Outside).unwrap_or(true) {
            problems.push(format!("mu atom {k}: c ∉ K"));
            witness.get_or_insert_with(|| vec![at.c.coords().iter().copied().collect()]);
        }
    }
    let passed = problems.is_empty();
    CheckOutcome {
        name: "jump_supports".into(),
        passed,
        samples: params.m.len() + params.mu.len(),
        detail: if passed { "all atoms supported in K".into() } else { problems.join("; ") },
        worst: if passed { 0.0 } else { -1.0 },
        witness,
    }
}

/// `⟨x, Bᵀu⟩ − Σ⟨χ(ξₖ), u⟩⟨x, cₖ⟩`.
pub fn inward_drift_value(params: &AffineParameterSet, x: &Element, u: &Element) -> f64 {
    let mut v = params.drift.apply(x).inner(u);
    for at in &params.mu {
        v -= params.truncation.apply(&at.xi).inner(u) * x.inner(&at.c);
    }
    v
}

/// Orthogonal boundary pairs used by the deterministic part of the drift check.
pub fn structured_orthogonal_pairs(a: Algebra) -> Vec<(Element, Element)> {
    let mut frames = vec![standard_frame(a)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f4a3e);
    for _ in 0..3 {
        frames.push(random_frame(a, &mut rng));
    }
    let mut pairs = Vec::new();
    let r = a.rank();
    for frame in &frames {
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    pairs.push((frame[i].clone(), frame[j].clone()));
                }
            }
        }
        let ls: Vec<ConeOperator> = frame.iter().map(left_mult).collect();
        for i in 0..r {
            for j in (i + 1)..r {
                let proj = ls[i].compose(&ls[j]).scale(4.0);
                for w in orthonormal_range(&proj) {
                    let w = Element::new(a, w * std::f64::consts::SQRT_2).expect("shape");
                    let s = &frame[i] + &frame[j];
                    pairs.push((&s + &w, &s - &w));
                    pairs.push((&s - &w, &s + &w));
                }
            }
        }
    }
    pairs
}

/// Orthonormal basis of the range of a (symmetric) projection.
fn orthonormal_range(p: &ConeOperator) -> Vec<DVector<f64>> {
    let eig = p.matrix().clone().symmetric_eigen();
    (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect()
}

fn inward_drift_check(params: &AffineParameterSet, n_samples: usize, seed: u64) -> CheckOutcome {
    let a = params.algebra();
    let scale = 1.0
        + params.drift.matrix().amax()
        + params.mu.iter().map(|at| at.c.norm() * at.xi.norm()).sum::<f64>();
    let mut pairs = structured_orthogonal_pairs(a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        pairs.push(random_orthogonal_pair(a, &mut rng));
    }
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for (x, u) in &pairs {
        let nrm = x.norm() * u.norm();
        if nrm == 0.0 {
            continue;
        }
        let v = inward_drift_value(params, x, u) / nrm;
        if v < worst {
            worst = v;
            if v < -CHECK_TOL * scale {
                witness = Some(vec![x.coords().iter().copied().collect(), u.coords().iter().copied().collect()]);
            }
        }
    }
    if !worst.is_finite() {
        worst = 0.0;
    }
    let passed = witness.is_none();
    CheckOutcome {
        name: "inward_drift".into(),
        passed,
        samples: pairs.len(),
        detail: if passed {
            format!("certified on {} orthogonal pairs", pairs.len())
        } else {
            format!("violated: normalised value {worst:e} at witness (x, u)")
        },
        worst,
        witness,
    }
}

/// Result of a sampled quasi-monotonicity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiMonotoneReport {
    pub samples: usize,
    pub passed: bool,
    /// Smallest observed ⟨R(v) − R(u), x⟩ (normalised by the scale of the triple).
    pub worst: f64,
    /// Violating triple (u, v, x), if found.
    pub witness: Option<[Vec<f64>; 3]>,
}

/// Samples triples (u, v, x) with x ∈ ∂K, u ∈ K, v − u ∈ K orthogonal to x, and
/// checks ⟨R(u), x⟩ ≤ ⟨R(v), x⟩.
///
/// Half of the samples draw u from the face orthogonal to x, the other half
/// draw a general u ∈ K; both are valid instances of the definition.
pub fn check_quasi_monotone(params: &AffineParameterSet, n_samples: usize, seed: u64) -> QuasiMonotoneReport {
    let a = params.algebra();
    if a.dim() == 1 {
        return QuasiMonotoneReport { samples: n_samples, passed: true, worst: 0.0, witness: None };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for k in 0..n_samples {
        let frame = random_frame(a, &mut rng);
        let r = frame.len();
        // split the frame: x on S, the increment w on the complement
        let cut = rng.random_range(1..r);
        let mut x = Element::zero(a);
        let mut w = Element::zero(a);
        let mut face_u = Element::zero(a);
        for (i, p) in frame.iter().enumerate() {
            if i < cut {
                x = x.axpy(rng.random_range(0.1..2.0), p);
            } else {
                w = w.axpy(rng.random_range(0.0..2.0), p);
                face_u = face_u.axpy(rng.random_range(0.0..2.0), p);
            }
        }
        let u = if k % 2 == 0 { face_u } else { random_cone_element(a, &mut rng) * 0.5 };
        let v = &u + &w;
        let ru = params.r_unchecked(&u);
        let rv = params.r_unchecked(&v);
        let diff = rv.inner(&x) - ru.inner(&x);
        let scale = x.norm() * (1.0 + ru.norm() + rv.norm());
        let val = diff / scale;
        if val < worst {
            worst = val;
            if val < -CHECK_TOL {
                witness = Some([
                    u.coords().iter().copied().collect(),
                    v.coords().iter().copied().collect(),
                    x.coords().iter().copied().collect(),
                ]);
            }
        }
    }
    QuasiMonotoneReport { samples: n_samples, passed: witness.is_none(), worst, witness }
}

/// Membership test for the Lie algebra of the automorphism group of K:
/// `2P(B(u), u) = B P(u) + P(u) Bᵀ` on `n_samples` random u.
pub fn lie_algebra_drift_check(drift: &ConeOperator, n_samples: usize) -> bool {
    lie_algebra_defect(drift, n_samples) <= 1e-9
}

/// Largest relative defect of `2P(B(u), u) − B P(u) − P(u) Bᵀ` over sampled u.
pub fn lie_algebra_defect(drift: &ConeOperator, n_samples: usize) -> f64 {
    let a = drift.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11e_a16);
    let mut worst: f64 = 0.0;
    let bn = drift.matrix().amax().max(1e-300);
    for _ in 0..n_samples.max(1) {
        let u = crate::jordan::random::random_element(a, &mut rng);
        let bu = drift.apply(&u);
        let lhs = quad_rep_polarized(&bu, &u).expect("same algebra").scale(2.0);
        let pu = quad_rep(&u);
        let rhs = &drift.compose(&pu) + &pu.compose(&drift.adjoint());
        let d = (lhs.matrix() - rhs.matrix()).amax() / (bn * u.norm() * u.norm());
        worst = worst.max(d);
    }
    worst
}

/// Sufficient conservativeness and boundary non-attainment flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryFlags {
    /// c = 0 and γ = 0 (atomic jump measures have finite first moments).
    pub conservative_sufficient: bool,
    /// b − (d(r−1)+2)α ∈ K and dim V > 2.
    pub boundary_nonattainment: bool,
}

pub fn conservativeness_and_boundary_checks(params: &AffineParameterSet) -> BoundaryFlags {
    let a = params.algebra();
    let conservative = params.c == 0.0 && params.gamma.is_zero();
    let shifted = params.b.axpy(-(a.gindikin_threshold() + 2.0), &params.alpha);
    let in_k = cone_classify(&shifted, DEFAULT_TOL).map(|c| c != ConeClass::Outside).unwrap_or(false);
    BoundaryFlags { conservative_sufficient: conservative, boundary_nonattainment: in_k && a.dim() > 2 }
}

/// The linear drift `B(x) = Hx + xHᵀ` on `SymMatrix(r)` or `HermComplex(r)`
/// (H real), an element of the Lie algebra of the cone.
pub fn matrix_drift(a: Algebra, h: &DMatrix<f64>) -> Result<ConeOperator> {
    if !a.is_matrix() || h.nrows() != a.size() || h.ncols() != a.size() {
        return Err(Error::InvalidInput(format!("H must be a {0}×{0} matrix for {a}", a.size())));
    }
    let hc = h.map(|v| num_complex::Complex64::new(v, 0.0));
    Ok(ConeOperator::from_fn(a, |x| match x.to_sym_matrix() {
        Some(m) => Element::from_sym_matrix(a, &(h * &m + &m * h.transpose())).expect("symmetric"),
        None => {
            let m = x.to_herm_matrix().expect("herm");
            Element::from_herm_matrix(a, &(&hc * &m + &m * hc.adjoint())).expect("hermitian")
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::random::{random_element, random_interior};
    use crate::jordan::{make_algebra, AlgebraKind};
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn s(r: usize) -> Algebra {
        make_algebra(AlgebraKind::SymMatrix, r).unwrap()
    }

    #[test]
    fn bru_on_s3_is_admissible() {
        let a = s(3);
        let p = AffineParameterSet::bru(&Element::identity(a), a.gindikin_threshold());
        let rep = validate(&p, 200, 1);
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn zero_b_fails_drift_condition() {
        let a = s(3);
        let p = AffineParameterSet::bru(&Element::identity(a), 0.0);
        let rep = validate(&p, 10, 1);
        let c = rep.get("b_condition").unwrap();
        assert!(!c.passed && c.worst < 0.0 && c.witness.is_some());
    }

    #[test]
    fn wishart_drift_is_inward_on_many_pairs() {
        let a = s(2);
        let h = dmatrix![0.0, 1.0; 0.0, 0.0];
        let p = AffineParameterSet::wishart(&Element::identity(a), 1.0, matrix_drift(a, &h).unwrap());
        let rep = validate(&p, 10_000, 7);
        assert!(rep.get("inward_drift").unwrap().passed);
        assert!(rep.get("inward_drift").unwrap().samples >= 10_000);
    }

    #[test]
    fn outward_drift_is_caught() {
        let a = s(3);
        let e = Element::identity(a);
        let mut p = AffineParameterSet::bru(&e, 2.0);
        // B = −(1/r) e⟨e, ·⟩ pushes orthogonal pairs outward
        let ec = e.coords();
        p.drift = ConeOperator::new(a, -(ec * ec.transpose()) / 3.0).unwrap();
        let rep = validate(&p, 50, 3);
        let c = rep.get("inward_drift").unwrap();
        assert!(!c.passed && c.witness.is_some());
    }

    #[test]
    fn f_and_r_at_zero() {
        let a = s(2);
        let mut p = AffineParameterSet::bru(&Element::identity(a), 1.0);
        p.gamma = Element::identity(a) * 0.3;
        p.c = 0.7;
        p.m.push(ConstantAtom { xi: Element::identity(a), w: 2.0 });
        p.mu.push(LinearAtom { xi: Element::identity(a) * 0.1, c: Element::identity(a) });
        let z = Element::zero(a);
        assert_eq!(p.eval_f(&z).unwrap(), 0.7);
        assert_eq!(p.eval_r(&z).unwrap(), p.gamma);
    }

    #[test]
    fn bru_vector_field() {
        let a = s(2);
        let alpha = Element::from_sym_matrix(a, &dmatrix![1.0, 0.2; 0.2, 0.5]).unwrap();
        let p = AffineParameterSet::bru(&alpha, 1.5);
        let u = Element::from_sym_matrix(a, &dmatrix![0.7, -0.1; -0.1, 0.4]).unwrap();
        let r = p.eval_r(&u).unwrap().to_sym_matrix().unwrap();
        let (mu, ma) = (u.to_sym_matrix().unwrap(), alpha.to_sym_matrix().unwrap());
        assert!((r + (&mu * &ma * &mu) * 2.0).amax() < 1e-14);
        assert!((p.eval_f(&u).unwrap() - 1.5 * alpha.inner(&u)).abs() < 1e-14);
    }

    #[test]
    fn rank_one_vector_field() {
        let a = s(1);
        let p = AffineParameterSet::bru(&Element::identity(a), 1.0);
        let u = Element::from_slice(a, &[2.0]).unwrap();
        assert_eq!(p.eval_r(&u).unwrap().coords()[0], -8.0);
    }

    #[test]
    fn r_rejects_points_outside_cone() {
        let a = s(2);
        let p = AffineParameterSet::bru(&Element::identity(a), 1.0);
        let u = Element::from_slice(a, &[1.0, -1.0, 0.0]).unwrap();
        assert!(matches!(p.eval_r(&u), Err(Error::NotInCone(_))));
    }

    #[test]
    fn diffusion_operator_examples() {
        let a = s(1);
        let p = AffineParameterSet::bru(&Element::identity(a), 1.0);
        let x = Element::from_slice(a, &[0.7]).unwrap();
        assert!((diffusion_operator(&p, &x).unwrap().matrix()[(0, 0)] - 2.8).abs() < 1e-15);
        let z = AffineParameterSet::zero(s(3));
        assert_eq!(diffusion_operator(&z, &Element::identity(s(3))).unwrap().matrix().amax(), 0.0);
    }

    #[test]
    fn diffusion_is_four_polarized_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (k, sz) in [(AlgebraKind::SymMatrix, 3), (AlgebraKind::HermComplex, 2), (AlgebraKind::SpinFactor, 4)] {
            let a = make_algebra(k, sz).unwrap();
            let alpha = random_cone_element(a, &mut rng);
            let x = random_cone_element(a, &mut rng);
            let p = AffineParameterSet::bru(&alpha, 10.0);
            let op = diffusion_operator(&p, &x).unwrap();
            let want = quad_rep_polarized(&x, &alpha).unwrap().scale(4.0);
            assert!((op.matrix() - want.matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn lie_algebra_examples() {
        let a = s(2);
        assert!(lie_algebra_drift_check(&ConeOperator::zero(a), 5));
        let h = dmatrix![0.3, -1.2; 0.8, -0.5];
        assert!(lie_algebra_drift_check(&matrix_drift(a, &h).unwrap(), 5));
        let e = Element::identity(a);
        let proj = ConeOperator::new(a, e.coords() * e.coords().transpose() / 2.0).unwrap();
        assert!(!lie_algebra_drift_check(&proj, 5));
        let hh = make_algebra(AlgebraKind::HermComplex, 3).unwrap();
        let h3 = dmatrix![0.3, -1.2, 0.0; 0.8, -0.5, 0.1; 0.0, 0.2, 1.0];
        assert!(lie_algebra_drift_check(&matrix_drift(hh, &h3).unwrap(), 5));
    }

    #[test]
    fn boundary_flags() {
        let a = s(2);
        let e = Element::identity(a);
        let p = AffineParameterSet::bru(&e, 3.0);
        assert!(conservativeness_and_boundary_checks(&p).boundary_nonattainment);
        let p = AffineParameterSet::bru(&e, 1.0);
        assert!(!conservativeness_and_boundary_checks(&p).boundary_nonattainment);
        let mut p = AffineParameterSet::bru(&e, 1.0);
        p.mu.push(LinearAtom { xi: e.clone(), c: e.clone() });
        assert!(conservativeness_and_boundary_checks(&p).conservative_sufficient);
        p.c = 1.0;
        assert!(!conservativeness_and_boundary_checks(&p).conservative_sufficient);
    }

    #[test]
    fn effective_delta_of_bru() {
        let a = s(3);
        let p = AffineParameterSet::bru(&Element::identity(a), 2.5);
        assert!((p.effective_delta().unwrap() - 2.5).abs() < 1e-10);
    }

    #[test]
    fn params_document_round_trip() {
        let a = s(2);
        let e = Element::identity(a);
        let mut p = AffineParameterSet::wishart(&e, 2.0, matrix_drift(a, &dmatrix![-0.5, 0.3; 0.2, -0.4]).unwrap());
        p.m.push(ConstantAtom { xi: &e * 0.5, w: 0.7 });
        p.mu.push(LinearAtom { xi: &e * 1.5, c: &e * 0.3 });
        let doc = ParamsDocument::from_params(&p);
        let js = serde_json::to_string(&doc).unwrap();
        let back: ParamsDocument = serde_json::from_str(&js).unwrap();
        assert_eq!(back.to_params().unwrap(), p);

        let short: ParamsDocument =
            serde_json::from_str(r#"{"algebra":{"kind":"SymMatrix","size":2},"alpha":[1,1,0],"delta":3}"#).unwrap();
        assert_eq!(short.to_params().unwrap(), AffineParameterSet::bru(&e, 3.0));
        let bad: ParamsDocument =
            serde_json::from_str(r#"{"algebra":{"kind":"SymMatrix","size":2},"alpha":[1,1]}"#).unwrap();
        assert!(matches!(bad.to_params(), Err(Error::DimensionMismatch { .. })));
        assert!(serde_json::from_str::<ParamsDocument>(r#"{"algebra":{"kind":"SymMatrix","size":2},"alpha":[1,1,0],"x":1}"#).is_err());
    }

    #[test]
    fn quasi_monotone_fixtures() {
        let a = s(3);
        let p = AffineParameterSet::bru(&Element::identity(a), 2.0);
        assert!(check_quasi_monotone(&p, 2000, 1).passed);
        let mut broken = p.clone();
        let ec = Element::identity(a).coords().clone();
        broken.drift = ConeOperator::new(a, -(&ec * ec.transpose())).unwrap();
        let rep = check_quasi_monotone(&broken, 2000, 1);
        assert!(!rep.passed && rep.witness.is_some());
        assert!(check_quasi_monotone(&AffineParameterSet::bru(&Element::identity(s(1)), 1.0), 10, 1).passed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn diffusion_is_psd_and_parallel(seed in any::<u64>(), kind in 0usize..3) {
            let a = [s(3), make_algebra(AlgebraKind::HermComplex, 2).unwrap(),
                     make_algebra(AlgebraKind::SpinFactor, 5).unwrap()][kind];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alpha = random_cone_element(a, &mut rng);
            let x = random_cone_element(a, &mut rng);
            let p = AffineParameterSet::bru(&alpha, a.gindikin_threshold());
            let op = diffusion_operator(&p, &x).unwrap();
            let ev = op.symmetric_eigenvalues();
            prop_assert!(ev[0] >= -1e-10 * op.matrix().amax().max(1.0));
            // ⟨x, P(u)α⟩ = 0 whenever ⟨u, x⟩ = 0 in K
            let (xo, uo) = random_orthogonal_pair(a, &mut rng);
            prop_assert!(xo.inner(&quad_apply(&uo, &alpha)).abs() < 1e-12 * (1.0 + alpha.norm() * 16.0));
            // ⟨u, A(x)u⟩ = 4⟨x, P(u)α⟩
            let u = random_element(a, &mut rng);
            let lhs = u.inner(&op.apply(&u));
            let rhs = 4.0 * x.inner(&quad_apply(&u, &alpha));
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn r_is_dominated_by_affine_majorant(seed in any::<u64>()) {
            let a = s(2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = Element::identity(a);
            let mut p = AffineParameterSet::wishart(&random_interior(a, &mut rng, 0.2, 1.0), 1.5,
                matrix_drift(a, &dmatrix![-0.5, 0.3; 0.1, -0.2]).unwrap());
            p.gamma = e.clone() * 0.2;
            p.mu.push(LinearAtom { xi: e.clone() * 0.3, c: e.clone() * 0.4 });
            p.mu.push(LinearAtom { xi: e.clone() * 2.0, c: e.clone() * 0.5 });
            let u = random_cone_element(a, &mut rng);
            let x = random_cone_element(a, &mut rng);
            let mut maj = p.drift.adjoint().apply(&u) + p.gamma.clone();
            for at in &p.mu {
                if at.xi.norm() > 1.0 {
                    maj += &at.c;
                }
            }
            let lhs = p.r_unchecked(&u).inner(&x);
            prop_assert!(lhs <= maj.inner(&x) + 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn f_is_affine_in_b_and_weights(seed in any::<u64>(), s1 in 0.1f64..3.0, s2 in 0.1f64..3.0) {
            let a = s(2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_cone_element(a, &mut rng);
            let mk = |bs: f64, ws: f64| {
                let mut p = AffineParameterSet::bru(&Element::identity(a), bs);
                p.c = 0.4;
                p.m.push(ConstantAtom { xi: Element::identity(a) * 0.5, w: ws });
                p.f_unchecked(&u) - p.c
            };
            let lin = mk(s1, s2);
            let sum = mk(s1, 0.0) + mk(0.0, s2);
            prop_assert!((lin - sum).abs() < 1e-12 * (1.0 + lin.abs()));
            prop_assert_eq!(p_at_zero(a), 0.4);
        }
    }

    fn p_at_zero(a: Algebra) -> f64 {
        let mut p = AffineParameterSet::zero(a);
        p.c = 0.4;
        p.eval_f(&Element::zero(a)).unwrap()
    }
}
