//! Affine diffusions on two cones that are not symmetric.
//!
//! * A polyhedral cone in ℝ³ generated by four vectors. The process
//!   `X = q(y + B)`, with `q(y) = Σ yᵢ² aᵢ` and B a 4-dim Brownian motion, has
//!   constant drift `Σ aᵢ = (2, 2, 4)` and affine diffusion
//!   `a(X) = 2[[X₁, X₁+X₂−X₃, X₁], [·, X₂, X₂], [·, ·, X₃]]`.
//! * The dual Vinberg cone: 3×3 positive semidefinite matrices with zero (2,3)
//!   entry, written as a scalar squared-Bessel block plus two rank-one 2×2
//!   blocks. Its transform is `exp(−φ(t,u) − tr(ψ(t,u) x))` with explicit φ, ψ.
//!
//! These are fixed demonstrations used to regression-test the explicit
//! formulas, not general support for non-symmetric cones.

use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{check_config, mean_and_se, path_rng, recorded_indices, uniform_grid, SimConfig};

/// The four generators of the polyhedral cone.
pub const POLYHEDRAL_GENERATORS: [[f64; 3]; 4] = [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]];

/// The polyhedral cone `{x : x₁ ≥ 0, x₂ ≥ 0, x₃ ≥ x₁, x₃ ≥ x₂}` and the map q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyhedralConeSpec {
    pub generators: [[f64; 3]; 4],
}

impl Default for PolyhedralConeSpec {
    fn default() -> Self {
        PolyhedralConeSpec { generators: POLYHEDRAL_GENERATORS }
    }
}

impl PolyhedralConeSpec {
    /// `q(y) = Σ yᵢ² aᵢ`.
    pub fn q(&self, y: &[f64; 4]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (yi, a) in y.iter().zip(&self.generators) {
            let s = yi * yi;
            for k in 0..3 {
                x[k] += s * a[k];
            }
        }
        x
    }

    /// The four slacks `(x₁, x₂, x₃ − x₁, x₃ − x₂)`.
    pub fn slacks(x: &[f64]) -> [f64; 4] {
        [x[0], x[1], x[2] - x[0], x[2] - x[1]]
    }

    /// Smallest slack; non-negative exactly on the cone.
    pub fn margin(x: &[f64]) -> f64 {
        Self::slacks(x).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Cone membership allowing `tol·(1 + |x₃|)` of rounding.
    pub fn contains(x: &[f64], tol: f64) -> bool {
        Self::margin(x) >= -tol * (1.0 + x[2].abs())
    }

    /// The constant drift `Σ aᵢ`.
    pub fn drift(&self) -> [f64; 3] {
        let mut b = [0.0; 3];
        for a in &self.generators {
            for k in 0..3 {
                b[k] += a[k];
            }
        }
        b
    }

    /// The affine diffusion `2[[x₁, x₁+x₂−x₃, x₁], [·, x₂, x₂], [·, ·, x₃]]`.
    ///
    /// Every entry except (1,2) equals `½ d[X, X]/dt` at `x = q(y)`; the (1,2)
    /// entry is `2(y₃² − y₁²)` here against the true `2y₃²`, so the two agree
    /// only where y₁ = 0 (see [`PolyhedralConeSpec::covariation_rate`]).
    pub fn diffusion(x: &[f64]) -> Matrix3<f64> {
        let m = x[0] + x[1] - x[2];
        2.0 * Matrix3::new(x[0], m, x[0], m, x[1], x[1], x[0], x[1], x[2])
    }
}

impl PolyhedralConeSpec {
    /// `½ d[X, X]/dt = 2Σ yₗ² aₗaₗᵀ` at the Brownian state y.
    pub fn covariation_rate(&self, y: &[f64; 4]) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for (yl, a) in y.iter().zip(&self.generators) {
            let v = nalgebra::Vector3::from_row_slice(a);
            m += 2.0 * yl * yl * v * v.transpose();
        }
        m
    }
}

/// Dual-Vinberg process: squared-Bessel parameter b, initial scalar block a₀
/// and the rank-one blocks `zⁱ(zⁱ)ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VinbergProcessSpec {
    pub b: f64,
    pub a0: f64,
    pub z1: [f64; 2],
    pub z2: [f64; 2],
}

impl VinbergProcessSpec {
    pub fn new(b: f64, a0: f64, z1: [f64; 2], z2: [f64; 2]) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidInput(format!("b = {b} must be finite and non-negative")));
        }
        if !(a0 >= 0.0 && a0.is_finite()) {
            return Err(Error::InvalidInput(format!("a0 = {a0} must be finite and non-negative")));
        }
        if !z1.iter().chain(&z2).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rank-one block vectors must be finite".into()));
        }
        Ok(VinbergProcessSpec { b, a0, z1, z2 })
    }

    /// Assembled initial state in [`vinberg`] coordinates.
    pub fn x0(&self) -> [f64; 5] {
        vinberg::assemble(self.a0, self.z1, self.z1[0], self.z2, self.z2[0])
    }
}

/// Coordinates `(a, b₁, b₂, c₁, c₂)` of `[[a, b₁, b₂], [b₁, c₁, 0], [b₂, 0, c₂]]`.
pub mod vinberg {
    use nalgebra::Matrix3;

    pub fn matrix(x: &[f64]) -> Matrix3<f64> {
        Matrix3::new(x[0], x[1], x[2], x[1], x[3], 0.0, x[2], 0.0, x[4])
    }

    /// `tr(u x)`.
    pub fn inner(u: &[f64], x: &[f64]) -> f64 {
        u[0] * x[0] + 2.0 * u[1] * x[1] + 2.0 * u[2] * x[2] + u[3] * x[3] + u[4] * x[4]
    }

    /// Smallest eigenvalue; non-negative exactly on the dual Vinberg cone.
    pub fn min_eigen(x: &[f64]) -> f64 {
        matrix(x).symmetric_eigenvalues().min()
    }

    /// Smallest of `a` and `a cᵢ − bᵢ²`; non-negative exactly on the Vinberg cone.
    pub fn dual_margin(u: &[f64]) -> f64 {
        u[0].min(u[0] * u[3] - u[1] * u[1]).min(u[0] * u[4] - u[2] * u[2])
    }

    /// Inverse of the block assembly when c₁, c₂ > 0: the scalar block and the
    /// two rank-one blocks as `(x⁰, (a, b, c)¹, (a, b, c)²)`.
    pub fn decompose(x: &[f64]) -> Option<(f64, [f64; 3], [f64; 3])> {
        if !(x[3] > 0.0 && x[4] > 0.0) {
            return None;
        }
        let y1 = [x[1] * x[1] / x[3], x[1], x[3]];
        let y2 = [x[2] * x[2] / x[4], x[2], x[4]];
        Some((x[0] - y1[0] - y2[0], y1, y2))
    }

    /// `x⁰E₁₁ + wwᵀ + w'w'ᵀ` with `w = (w₁, z¹₂)` embedded in rows/cols {1,2}
    /// and `w' = (w'₁, z²₂)` in rows/cols {1,3}.
    pub(crate) fn assemble(x0: f64, z1: [f64; 2], w1: f64, z2: [f64; 2], w2: f64) -> [f64; 5] {
        [x0 + w1 * w1 + w2 * w2, w1 * z1[1], w2 * z2[1], z1[1] * z1[1], z2[1] * z2[1]]
    }
}

/// `ψ⁰(t, a) = a / (1 + 2ta)`.
pub fn vinberg_psi0(t: f64, a: f64) -> Result<f64> {
    let d = 1.0 + 2.0 * t * a;
    if d <= 0.0 {
        return Err(Error::BlockSingular(format!("1 + 2ta = {d} at t = {t}, a = {a}")));
    }
    Ok(a / d)
}

/// `ψ¹(t, v) = (v⁻¹ + 2tE₁₁)⁻¹`, evaluated as `v(I + 2tE₁₁v)⁻¹` so that
/// singular v are allowed; returns `(ψ₁₁, ψ₁₂, ψ₂₂)`.
pub fn vinberg_psi1(t: f64, v: [f64; 3]) -> Result<[f64; 3]> {
    let [a, b, c] = v;
    let d = 1.0 + 2.0 * t * a;
    if d <= 0.0 {
        return Err(Error::BlockSingular(format!("det(I + 2tE11 v) = {d} at t = {t}")));
    }
    Ok([a / d, b / d, c - 2.0 * t * b * b / d])
}

/// φ and ψ of the dual-Vinberg process for u in the Vinberg cone.
pub fn vinberg_phi_psi(spec: &VinbergProcessSpec, t: f64, u: &[f64; 5]) -> Result<(f64, [f64; 5])> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time {t} must be finite and non-negative")));
    }
    let margin = vinberg::dual_margin(u);
    if margin < -1e-12 * (1.0 + u.iter().map(|v| v * v).sum::<f64>()) {
        return Err(Error::NotInCone(margin));
    }
    let p0 = vinberg_psi0(t, u[0])?;
    let p1 = vinberg_psi1(t, [u[0], u[1], u[3]])?;
    let p2 = vinberg_psi1(t, [u[0], u[2], u[4]])?;
    let phi = (0.5 * spec.b + 1.0) * (2.0 * t * u[0]).ln_1p();
    Ok((phi, [p0, p1[1], p2[1], p1[2], p2[2]]))
}

/// Closed-form `E exp(−tr(u X_t))` from the initial state.
pub fn vinberg_laplace(spec: &VinbergProcessSpec, t: f64, u: &[f64; 5]) -> Result<f64> {
    let (phi, psi) = vinberg_phi_psi(spec, t, u)?;
    Ok((-phi - vinberg::inner(&psi, &spec.x0())).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExoticKind {
    Polyhedral,
    Vinberg,
}

/// Paths of one of the exotic examples on a uniform grid.
#[derive(Debug, Clone)]
pub struct ExoticEnsemble {
    pub kind: ExoticKind,
    /// Number of state coordinates (3 or 5).
    pub dim: usize,
    pub times: Vec<f64>,
    pub recorded: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    states: Vec<f64>,
}

impl ExoticEnsemble {
    pub fn record_position(&self, t_index: usize) -> Option<usize> {
        self.recorded.binary_search(&t_index).ok()
    }

    pub fn coords(&self, path: usize, j: usize) -> &[f64] {
        let off = (path * self.recorded.len() + j) * self.dim;
        &self.states[off..off + self.dim]
    }

    /// Cone margin of a state: the smallest slack (polyhedral) or the
    /// smallest eigenvalue (Vinberg).
    pub fn margin(&self, x: &[f64]) -> f64 {
        match self.kind {
            ExoticKind::Polyhedral => PolyhedralConeSpec::margin(x),
            ExoticKind::Vinberg => vinberg::min_eigen(x),
        }
    }

    fn require_recorded(&self, t_index: usize) -> Result<usize> {
        self.record_position(t_index)
            .ok_or_else(|| Error::InvalidInput(format!("time index {t_index} is not on the recorded grid")))
    }

    /// Sample mean and standard error of `e^{−⟨u, X_t⟩}` with the example's
    /// inner product (Euclidean for the polyhedral cone, `tr(ux)` for Vinberg).
    pub fn mc_laplace(&self, u: &[f64], t_index: usize) -> Result<(f64, f64)> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        let j = self.require_recorded(t_index)?;
        let vals: Vec<f64> = (0..self.count)
            .map(|p| {
                let x = self.coords(p, j);
                let s = match self.kind {
                    ExoticKind::Polyhedral => u.iter().zip(x).map(|(a, b)| a * b).sum(),
                    ExoticKind::Vinberg => vinberg::inner(u, x),
                };
                (-s).exp()
            })
            .collect();
        Ok(mean_and_se(&vals))
    }
}

fn run_ensemble(
    kind: ExoticKind,
    dim: usize,
    t_end: f64,
    cfg: &SimConfig,
    path: impl Fn(usize, &[f64], &[usize]) -> Vec<f64> + Sync + Send,
) -> Result<ExoticEnsemble> {
    check_config(t_end, cfg)?;
    let times = uniform_grid(t_end, cfg.steps);
    let recorded = recorded_indices(cfg.steps, cfg.record);
    let chunks: Vec<Vec<f64>> = (0..cfg.count).into_par_iter().map(|i| path(i, &times, &recorded)).collect();
    Ok(ExoticEnsemble { kind, dim, times, recorded, count: cfg.count, seed: cfg.seed, states: chunks.concat() })
}

/// Paths of `X = q(y₀ + B)` on `[0, t_end]`.
pub fn polyhedral_path(y0: [f64; 4], t_end: f64, steps: usize, count: usize, seed: u64) -> Result<ExoticEnsemble> {
    polyhedral_path_with(&PolyhedralConeSpec::default(), y0, t_end, &SimConfig::new(steps, count, seed))
}

pub fn polyhedral_path_with(spec: &PolyhedralConeSpec, y0: [f64; 4], t_end: f64, cfg: &SimConfig) -> Result<ExoticEnsemble> {
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial point must be finite".into()));
    }
    let seed = cfg.seed;
    run_ensemble(ExoticKind::Polyhedral, 3, t_end, cfg, |i, times, recorded| {
        let mut rng = path_rng(seed, i as u64);
        let mut y = y0;
        let mut out = Vec::with_capacity(recorded.len() * 3);
        let mut next = 0;
        for k in 0..times.len() {
            if k > 0 {
                let sd = (times[k] - times[k - 1]).sqrt();
                for yi in y.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *yi += sd * z;
                }
            }
            if recorded.get(next) == Some(&k) {
                out.extend_from_slice(&spec.q(&y));
                next += 1;
            }
        }
        out
    })
}

/// Drift estimate `(X_T − X₀)/T` averaged over paths, with standard errors.
/// The drift is constant, so this is unbiased for every step size.
pub fn polyhedral_drift_estimate(ens: &ExoticEnsemble) -> Result<([f64; 3], [f64; 3])> {
    check_kind(ens, ExoticKind::Polyhedral)?;
    let t = *ens.times.last().expect("grid");
    if t <= 0.0 {
        return Err(Error::InvalidInput("drift estimate needs a positive horizon".into()));
    }
    let last = ens.recorded.len() - 1;
    let mut mean = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 0..3 {
        let v: Vec<f64> = (0..ens.count).map(|p| (ens.coords(p, last)[k] - ens.coords(p, 0)[k]) / t).collect();
        (mean[k], se[k]) = mean_and_se(&v);
    }
    Ok((mean, se))
}

/// Instantaneous covariation estimate `ΔXᵢΔXⱼ / (2Δ)` over the first step,
/// averaged over paths, with standard errors; compare with the covariation
/// rate at the starting point.
pub fn polyhedral_covariation_estimate(ens: &ExoticEnsemble) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    check_kind(ens, ExoticKind::Polyhedral)?;
    let j1 = ens.require_recorded(1)?;
    let dt = ens.times[1] - ens.times[0];
    let mut mean = Matrix3::zeros();
    let mut se = Matrix3::zeros();
    for r in 0..3 {
        for c in r..3 {
            let v: Vec<f64> = (0..ens.count)
                .map(|p| {
                    let (x0, x1) = (ens.coords(p, 0), ens.coords(p, j1));
                    (x1[r] - x0[r]) * (x1[c] - x0[c]) / (2.0 * dt)
                })
                .collect();
            let (m, s) = mean_and_se(&v);
            mean[(r, c)] = m;
            mean[(c, r)] = m;
            se[(r, c)] = s;
            se[(c, r)] = s;
        }
    }
    Ok((mean, se))
}

fn check_kind(ens: &ExoticEnsemble, kind: ExoticKind) -> Result<()> {
    if ens.kind != kind {
        return Err(Error::InvalidInput(format!("expected a {kind:?} ensemble, got {:?}", ens.kind)));
    }
    Ok(())
}

/// Paths of the dual-Vinberg process. The scalar block follows full-truncation
/// Euler for `dX = b dt + 2√X dB` (reported as max(X, 0)); the rank-one blocks
/// are `(z₁ + Z_t, z₂)(z₁ + Z_t, z₂)ᵀ` with exact Brownian increments.
pub fn vinberg_path(spec: &VinbergProcessSpec, t_end: f64, steps: usize, count: usize, seed: u64) -> Result<ExoticEnsemble> {
    vinberg_path_with(spec, t_end, &SimConfig::new(steps, count, seed))
}

pub fn vinberg_path_with(spec: &VinbergProcessSpec, t_end: f64, cfg: &SimConfig) -> Result<ExoticEnsemble> {
    let spec = VinbergProcessSpec::new(spec.b, spec.a0, spec.z1, spec.z2)?;
    let seed = cfg.seed;
    run_ensemble(ExoticKind::Vinberg, 5, t_end, cfg, |i, times, recorded| {
        let mut rng = path_rng(seed, i as u64);
        let (mut x0, mut w1, mut w2) = (spec.a0, spec.z1[0], spec.z2[0]);
        let mut out = Vec::with_capacity(recorded.len() * 5);
        let mut next = 0;
        for k in 0..times.len() {
            if k > 0 {
                let dt = times[k] - times[k - 1];
                let sd = dt.sqrt();
                let (g0, g1, g2): (f64, f64, f64) =
                    (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                x0 += spec.b * dt + 2.0 * x0.max(0.0).sqrt() * sd * g0;
                w1 += sd * g1;
                w2 += sd * g2;
            }
            if recorded.get(next) == Some(&k) {
                out.extend_from_slice(&vinberg::assemble(x0.max(0.0), spec.z1, w1, spec.z2, w2));
                next += 1;
            }
        }
        out
    })
}
