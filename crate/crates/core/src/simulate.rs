//! Path simulation of affine processes on symmetric cones.
//!
//! * [`euler_path`]: Euler–Maruyama for the continuous part, with the
//!   operator diffusion A(x) (`⟨u, A(x)u⟩ = 4⟨x, P(u)α⟩`) and the drift
//!   `b + B₀(x)`, followed by the eigenvalue-clipping projection onto K;
//! * [`jump_augmented_path`]: the same scheme plus finite-activity jumps —
//!   constant atoms at rate Σwₖ and linear atoms at rate Σ⟨X, cₖ⟩, sampled by
//!   thinning along the drift line within each step;
//! * [`exact_bru_path`]: Markov chaining of exact Wishart transitions.
//!
//! Path i draws its Gaussian increments from ChaCha8 stream 2i and its jumps
//! from stream 2i+1 of the ensemble seed, so ensembles are bit-identical
//! regardless of how paths are scheduled across threads, and adding jump
//! atoms leaves the diffusion noise unchanged.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::affine_params::{conservativeness_and_boundary_checks, validate, AffineParameterSet, DiffusionTensor};
use crate::error::{Error, Result};
use crate::jordan::{cone_classify, min_eigenvalue, project_to_cone, Algebra, AlgebraKind, ConeClass, Element, DEFAULT_TOL};
use crate::wishart::{sample, LawSampler, WishartLaw};

/// Boundary samples used when validating parameters before simulation.
const VALIDATION_SAMPLES: usize = 200;
/// Accepted jumps within one step before the simulation is declared explosive.
const MAX_JUMPS_PER_STEP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Euler,
    ExactTransition,
    EulerPlusJumps,
}

/// Which grid points are stored (the boundary statistics always use the full grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Record {
    All,
    /// Only t = 0 and the final time.
    Final,
    /// Every k-th grid point and the final time.
    Stride(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub steps: usize,
    pub count: usize,
    pub seed: u64,
    pub record: Record,
}

impl SimConfig {
    pub fn new(steps: usize, count: usize, seed: u64) -> Self {
        SimConfig { steps, count, seed, record: Record::All }
    }

    pub fn record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }
}

/// An ensemble of simulated paths on a common time grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub algebra: Algebra,
    pub params: Option<AffineParameterSet>,
    pub x0: Element,
    /// Full simulation grid.
    pub times: Vec<f64>,
    /// Grid indices whose states are stored.
    pub recorded: Vec<usize>,
    pub count: usize,
    pub scheme: Scheme,
    pub seed: u64,
    /// Per-path minimum eigenvalue over the full grid (including t = 0).
    pub min_eigen: Vec<f64>,
    /// Per-path number of jumps.
    pub jump_counts: Vec<usize>,
    /// Number of thinning-bound refreshes (one per accepted jump).
    pub thinning_refreshes: usize,
    states: Vec<f64>,
}

impl PathEnsemble {
    fn stride(&self) -> usize {
        self.recorded.len() * self.algebra.dim()
    }

    /// Position of a grid index among the recorded ones.
    pub fn record_position(&self, t_index: usize) -> Option<usize> {
        self.recorded.binary_search(&t_index).ok()
    }

    /// Coordinates of path `path` at recorded position `j`.
    pub fn coords(&self, path: usize, j: usize) -> &[f64] {
        let n = self.algebra.dim();
        let off = path * self.stride() + j * n;
        &self.states[off..off + n]
    }

    pub fn state(&self, path: usize, j: usize) -> Element {
        Element::from_slice(self.algebra, self.coords(path, j)).expect("shape")
    }

    /// All states at grid index `t_index`.
    pub fn states_at(&self, t_index: usize) -> Result<Vec<Element>> {
        let j = self.require_recorded(t_index)?;
        Ok((0..self.count).map(|p| self.state(p, j)).collect())
    }

    fn require_recorded(&self, t_index: usize) -> Result<usize> {
        self.record_position(t_index).ok_or_else(|| {
            Error::InvalidInput(format!("time index {t_index} is not on the recorded grid"))
        })
    }

    pub fn final_index(&self) -> usize {
        self.times.len() - 1
    }
}

pub(crate) fn recorded_indices(steps: usize, record: Record) -> Vec<usize> {
    let mut v: Vec<usize> = match record {
        Record::All => (0..=steps).collect(),
        Record::Final => vec![0, steps],
        Record::Stride(k) => (0..=steps).step_by(k.max(1)).collect(),
    };
    if *v.last().expect("non-empty") != steps {
        v.push(steps);
    }
    v.dedup();
    v
}

pub(crate) fn uniform_grid(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| if k == steps { t_end } else { t_end * k as f64 / steps as f64 }).collect()
}

pub(crate) fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Smallest eigenvalue from coordinates; closed forms for rank ≤ 2.
pub(crate) fn min_eig_coords(a: Algebra, x: &[f64]) -> f64 {
    match (a.kind(), a.rank()) {
        (_, 1) => x[0],
        (AlgebraKind::SymMatrix, 2) => {
            let h = 0.5 * (x[0] - x[1]);
            0.5 * (x[0] + x[1]) - (h * h + 0.5 * x[2] * x[2]).sqrt()
        }
        (AlgebraKind::HermComplex, 2) => {
            let h = 0.5 * (x[0] - x[1]);
            0.5 * (x[0] + x[1]) - (h * h + 0.5 * (x[2] * x[2] + x[3] * x[3])).sqrt()
        }
        (AlgebraKind::SpinFactor, _) => {
            let bar = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            (x[0] - bar) * std::f64::consts::FRAC_1_SQRT_2
        }
        _ => min_eigenvalue(&Element::from_slice(a, x).expect("shape")).unwrap_or(f64::NAN),
    }
}

/// Lower-triangular L with L Lᵀ = A for a positive semidefinite A
/// (row-major, in place); non-positive pivots zero their column.
fn psd_cholesky(m: &mut [f64], n: usize) {
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max);
    let tol = 1e-14 * scale;
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if d <= tol {
            for i in j..n {
                m[i * n + j] = 0.0;
            }
        } else {
            let l = d.sqrt();
            m[j * n + j] = l;
            for i in (j + 1)..n {
                let mut s = m[i * n + j];
                for k in 0..j {
                    s -= m[i * n + k] * m[j * n + k];
                }
                m[i * n + j] = s / l;
            }
        }
        for k in (j + 1)..n {
            m[j * n + k] = 0.0;
        }
    }
}

struct JumpModel {
    constant: Vec<(Vec<f64>, f64)>,
    linear: Vec<(Vec<f64>, Vec<f64>)>,
    constant_rate: f64,
}

struct EulerModel {
    algebra: Algebra,
    n: usize,
    b: Vec<f64>,
    /// Row-major effective state drift B₀.
    drift: Vec<f64>,
    tensor: Option<DiffusionTensor>,
    jumps: Option<JumpModel>,
}

#[derive(Default)]
struct PathOutput {
    states: Vec<f64>,
    min_eigen: f64,
    jumps: usize,
    refreshes: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl EulerModel {
    fn new(params: &AffineParameterSet, with_jumps: bool) -> Self {
        let a = params.algebra();
        let n = a.dim();
        let b0 = params.effective_state_drift();
        let m = b0.matrix();
        let drift = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        let tensor = (!params.alpha.is_zero()).then(|| DiffusionTensor::new(&params.alpha));
        let jumps = (with_jumps && params.has_jumps()).then(|| JumpModel {
            constant: params.m.iter().map(|at| (at.xi.coords().as_slice().to_vec(), at.w)).collect(),
            linear: params
                .mu
                .iter()
                .map(|at| (at.xi.coords().as_slice().to_vec(), at.c.coords().as_slice().to_vec()))
                .collect(),
            constant_rate: params.constant_jump_rate(),
        });
        EulerModel { algebra: a, n, b: params.b.coords().as_slice().to_vec(), drift, tensor, jumps }
    }

    /// Jump intensity at y.
    fn rate(&self, j: &JumpModel, y: &[f64]) -> f64 {
        j.constant_rate + j.linear.iter().map(|(_, c)| dot(y, c).max(0.0)).sum::<f64>()
    }

    /// Adds the jumps over one step to `added`; the state between jumps
    /// follows `x + s·v + added`.
    #[allow(clippy::too_many_arguments)]
    fn step_jumps<R: Rng>(
        &self,
        j: &JumpModel,
        x: &[f64],
        v: &[f64],
        dt: f64,
        added: &mut [f64],
        y: &mut [f64],
        rng: &mut R,
        out: &mut PathOutput,
    ) -> Result<()> {
        let n = self.n;
        let at = |s: f64, added: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = x[i] + s * v[i] + added[i];
            }
        };
        let mut s = 0.0;
        let mut accepted = 0usize;
        loop {
            // the intensity is affine in s between jumps: the larger endpoint value bounds it
            at(s, added, y);
            let r0 = self.rate(j, y);
            at(dt, added, y);
            let r1 = self.rate(j, y);
            let bound = r0.max(r1);
            if !(bound > 0.0) {
                return Ok(());
            }
            let e: f64 = rng.sample(Exp1);
            s += e / bound;
            if s >= dt {
                return Ok(());
            }
            at(s, added, y);
            let lam = self.rate(j, y);
            let uacc: f64 = rng.random();
            if uacc * bound >= lam {
                continue;
            }
            let mut pick = rng.random::<f64>() * lam;
            let mut mark: &[f64] = &[];
            for (xi, w) in &j.constant {
                if pick < *w {
                    mark = xi;
                    break;
                }
                pick -= w;
            }
            if mark.is_empty() {
                for (xi, c) in &j.linear {
                    let w = dot(y, c).max(0.0);
                    if pick < w {
                        mark = xi;
                        break;
                    }
                    pick -= w;
                }
            }
            if mark.is_empty() {
                // rounding in the cumulative search: take the last atom with positive weight
                mark = j
                    .linear
                    .iter()
                    .rev()
                    .find(|(_, c)| dot(y, c) > 0.0)
                    .map(|(xi, _)| xi.as_slice())
                    .or_else(|| j.constant.iter().rev().find(|(_, w)| *w > 0.0).map(|(xi, _)| xi.as_slice()))
                    .expect("positive rate");
            }
            for i in 0..n {
                added[i] += mark[i];
            }
            out.jumps += 1;
            out.refreshes += 1;
            accepted += 1;
            if accepted > MAX_JUMPS_PER_STEP {
                return Err(Error::ThinningBoundExceeded(accepted));
            }
        }
    }

    fn run_path(&self, x0: &[f64], grid: &[f64], recorded: &[usize], seed: u64, path: usize) -> Result<PathOutput> {
        let n = self.n;
        let mut rng = path_rng(seed, 2 * path as u64);
        let mut jrng = path_rng(seed, 2 * path as u64 + 1);
        let mut out = PathOutput { states: Vec::with_capacity(recorded.len() * n), ..Default::default() };
        let mut x = x0.to_vec();
        let mut v = vec![0.0; n];
        let mut amat = vec![0.0; n * n];
        let mut z = vec![0.0; n];
        let mut added = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut next = vec![0.0; n];
        out.min_eigen = min_eig_coords(self.algebra, &x);
        out.states.extend_from_slice(&x);
        let mut rec = 1;
        for k in 0..grid.len() - 1 {
            let dt = grid[k + 1] - grid[k];
            for i in 0..n {
                v[i] = self.b[i] + dot(&self.drift[i * n..(i + 1) * n], &x);
            }
            added.iter_mut().for_each(|a| *a = 0.0);
            if let Some(j) = &self.jumps {
                self.step_jumps(j, &x, &v, dt, &mut added, &mut y, &mut jrng, &mut out)?;
            }
            for i in 0..n {
                next[i] = x[i] + v[i] * dt + added[i];
            }
            if let Some(t) = &self.tensor {
                t.fill(&x, &mut amat);
                psd_cholesky(&mut amat, n);
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let sq = dt.sqrt();
                for i in 0..n {
                    next[i] += sq * dot(&amat[i * n..i * n + i + 1], &z[..i + 1]);
                }
            }
            let mut lam = min_eig_coords(self.algebra, &next);
            if lam < 0.0 {
                let p = project_to_cone(&Element::from_slice(self.algebra, &next).expect("shape"))?;
                next.copy_from_slice(p.coords().as_slice());
                lam = 0.0;
            }
            out.min_eigen = out.min_eigen.min(lam);
            std::mem::swap(&mut x, &mut next);
            if rec < recorded.len() && recorded[rec] == k + 1 {
                out.states.extend_from_slice(&x);
                rec += 1;
            }
        }
        Ok(out)
    }
}

fn collect_paths(
    count: usize,
    run: impl Fn(usize) -> Result<PathOutput> + Sync + Send,
) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>, usize)> {
    let outs: Vec<Result<PathOutput>> = (0..count).into_par_iter().map(run).collect();
    let mut states = Vec::new();
    let mut mins = Vec::with_capacity(count);
    let mut jumps = Vec::with_capacity(count);
    let mut refreshes = 0;
    for o in outs {
        let o = o?;
        states.extend_from_slice(&o.states);
        mins.push(o.min_eigen);
        jumps.push(o.jumps);
        refreshes += o.refreshes;
    }
    Ok((states, mins, jumps, refreshes))
}

fn check_simulable(params: &AffineParameterSet, x0: &Element, seed: u64) -> Result<()> {
    params.check_shapes()?;
    x0.check_same(&params.alpha)?;
    let rep = validate(params, VALIDATION_SAMPLES, seed);
    if !rep.all_passed() {
        let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
        return Err(Error::NotAdmissible(format!("failed checks: {}", names.join(", "))));
    }
    if !conservativeness_and_boundary_checks(params).conservative_sufficient {
        return Err(Error::NotConservative { c: params.c, gamma_norm: params.gamma.norm() });
    }
    if cone_classify(x0, DEFAULT_TOL)? == ConeClass::Outside {
        return Err(Error::NotInCone(min_eigenvalue(x0)?));
    }
    Ok(())
}

pub(crate) fn check_config(t_end: f64, cfg: &SimConfig) -> Result<()> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon {t_end} must be finite and non-negative")));
    }
    if cfg.steps == 0 {
        return Err(Error::InvalidInput("at least one step is required".into()));
    }
    Ok(())
}

fn simulate_euler(
    params: &AffineParameterSet,
    x0: &Element,
    t_end: f64,
    cfg: &SimConfig,
    with_jumps: bool,
) -> Result<PathEnsemble> {
    check_config(t_end, cfg)?;
    check_simulable(params, x0, cfg.seed)?;
    let model = EulerModel::new(params, with_jumps);
    let grid = uniform_grid(t_end, cfg.steps);
    let recorded = recorded_indices(cfg.steps, cfg.record);
    let xs = x0.coords().as_slice().to_vec();
    let (states, min_eigen, jump_counts, thinning_refreshes) =
        collect_paths(cfg.count, |i| model.run_path(&xs, &grid, &recorded, cfg.seed, i))?;
    Ok(PathEnsemble {
        algebra: params.algebra(),
        params: Some(params.clone()),
        x0: x0.clone(),
        times: grid,
        recorded,
        count: cfg.count,
        scheme: if with_jumps { Scheme::EulerPlusJumps } else { Scheme::Euler },
        seed: cfg.seed,
        min_eigen,
        jump_counts,
        thinning_refreshes,
        states,
    })
}

/// Euler–Maruyama paths of the continuous part
/// `X_{k+1} = Π_K[X_k + (b + B₀X_k)Δ + √Δ·A(X_k)^{1/2} Z_k]`, where B₀ is the
/// drift compensated for small linear jumps; jump atoms themselves are not
/// simulated (see [`jump_augmented_path`]).
pub fn euler_path(
    params: &AffineParameterSet,
    x0: &Element,
    t_end: f64,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    euler_path_with(params, x0, t_end, &SimConfig::new(steps, count, seed))
}

pub fn euler_path_with(params: &AffineParameterSet, x0: &Element, t_end: f64, cfg: &SimConfig) -> Result<PathEnsemble> {
    simulate_euler(params, x0, t_end, cfg, false)
}

/// Euler paths with the jump atoms of m and μ added by thinning.
pub fn jump_augmented_path(
    params: &AffineParameterSet,
    x0: &Element,
    t_end: f64,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    jump_augmented_path_with(params, x0, t_end, &SimConfig::new(steps, count, seed))
}

pub fn jump_augmented_path_with(
    params: &AffineParameterSet,
    x0: &Element,
    t_end: f64,
    cfg: &SimConfig,
) -> Result<PathEnsemble> {
    simulate_euler(params, x0, t_end, cfg, true)
}

/// Bru paths by chaining exact Wishart transitions over `t_grid`
/// (non-decreasing, starting at 0).
pub fn exact_bru_path(
    alpha: &Element,
    delta: f64,
    x0: &Element,
    t_grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    exact_bru_path_with(alpha, delta, x0, t_grid, count, seed, Record::All)
}

pub fn exact_bru_path_with(
    alpha: &Element,
    delta: f64,
    x0: &Element,
    t_grid: &[f64],
    count: usize,
    seed: u64,
    record: Record,
) -> Result<PathEnsemble> {
    alpha.check_same(x0)?;
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("time grid must start at 0 and be non-decreasing".into()));
    }
    if cone_classify(x0, DEFAULT_TOL)? == ConeClass::Outside {
        return Err(Error::NotInCone(min_eigenvalue(x0)?));
    }
    let a = alpha.algebra();
    let steps = t_grid.len() - 1;
    let recorded = recorded_indices(steps, record);
    // fail early when the first transition has no exact sampler
    if let Some(&dt) = t_grid.windows(2).map(|w| w[1] - w[0]).find(|d| *d > 0.0).as_ref() {
        LawSampler::new(&WishartLaw::new(delta, alpha.clone(), dt, x0.clone())?)?;
    }
    let run = |i: usize| -> Result<PathOutput> {
        let mut rng = path_rng(seed, 2 * i as u64);
        let mut x = x0.clone();
        let mut out = PathOutput { states: Vec::with_capacity(recorded.len() * a.dim()), ..Default::default() };
        out.min_eigen = min_eig_coords(a, x.coords().as_slice());
        out.states.extend_from_slice(x.coords().as_slice());
        let mut rec = 1;
        for k in 0..steps {
            let dt = t_grid[k + 1] - t_grid[k];
            if dt > 0.0 {
                let law = WishartLaw::new(delta, alpha.clone(), dt, x)?;
                x = LawSampler::new(&law)?.draw(&mut rng);
            }
            out.min_eigen = out.min_eigen.min(min_eig_coords(a, x.coords().as_slice()));
            if rec < recorded.len() && recorded[rec] == k + 1 {
                out.states.extend_from_slice(x.coords().as_slice());
                rec += 1;
            }
        }
        Ok(out)
    };
    let (states, min_eigen, jump_counts, _) = collect_paths(count, run)?;
    Ok(PathEnsemble {
        algebra: a,
        params: Some(AffineParameterSet::bru(alpha, delta)),
        x0: x0.clone(),
        times: t_grid.to_vec(),
        recorded,
        count,
        scheme: Scheme::ExactTransition,
        seed,
        min_eigen,
        jump_counts,
        thinning_refreshes: 0,
        states,
    })
}

/// Sample mean and standard error of e^{−⟨u, X_t⟩} at grid index `t_index`.
pub fn mc_laplace(ens: &PathEnsemble, u: &Element, t_index: usize) -> Result<(f64, f64)> {
    u.check_same(&ens.x0)?;
    if cone_classify(u, DEFAULT_TOL)? == ConeClass::Outside {
        return Err(Error::NotInCone(min_eigenvalue(u)?));
    }
    let j = ens.require_recorded(t_index)?;
    if u.is_zero() {
        return Ok((1.0, 0.0));
    }
    let uc = u.coords().as_slice();
    let vals: Vec<f64> = (0..ens.count).map(|p| (-dot(uc, ens.coords(p, j))).exp()).collect();
    Ok(mean_and_se(&vals))
}

/// Sample mean and standard error.
pub fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Boundary-attainment statistics of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryStats {
    pub min_eigen_per_path: Vec<f64>,
    pub fraction_touching: f64,
}

/// Per-path minimum eigenvalue over the grid and the fraction of paths whose minimum is ≤ eps.
pub fn boundary_stats(ens: &PathEnsemble, eps: f64) -> BoundaryStats {
    let touching = ens.min_eigen.iter().filter(|&&m| m <= eps).count();
    BoundaryStats {
        min_eigen_per_path: ens.min_eigen.clone(),
        fraction_touching: if ens.count == 0 { 0.0 } else { touching as f64 / ens.count as f64 },
    }
}

/// Exact Wishart samples when available, otherwise the final states of Euler
/// paths of the Bru process started at x (`steps` steps over `[0, t]`).
/// The flag reports whether the exact sampler was used.
pub fn sample_or_simulate(law: &WishartLaw, count: usize, seed: u64, steps: usize) -> Result<(Vec<Element>, bool)> {
    match sample(law, count, seed) {
        Ok(v) => Ok((v, true)),
        Err(Error::UnsupportedCombination(_)) => {
            let params = AffineParameterSet::bru(&law.alpha, law.delta);
            let cfg = SimConfig::new(steps, count, seed).record(Record::Final);
            let ens = euler_path_with(&params, &law.x, law.t, &cfg)?;
            Ok((ens.states_at(ens.final_index())?, false))
        }
        Err(e) => Err(e),
    }
}

/// Empirical mean of the states at grid index `t_index`.
pub fn ensemble_mean(ens: &PathEnsemble, t_index: usize) -> Result<Element> {
    let j = ens.require_recorded(t_index)?;
    let n = ens.algebra.dim();
    let mut m = DVector::zeros(n);
    for p in 0..ens.count {
        for (i, v) in ens.coords(p, j).iter().enumerate() {
            m[i] += v;
        }
    }
    Element::new(ens.algebra, m / ens.count.max(1) as f64)
}
