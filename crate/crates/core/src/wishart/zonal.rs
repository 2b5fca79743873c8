//! Zonal polynomials Z_m of a symmetric cone, normalised so that
//! `Σ_{|m|=k} Z_m(ξ) = tr(ξ)ᵏ`.
//!
//! Two evaluation modes are provided:
//!
//! * `Recursive` (real symmetric matrices): the James recurrence for the
//!   coefficients of Z_κ in the monomial symmetric functions of the
//!   eigenvalues, normalised against the multinomial expansion of `p₁ᵏ`.
//!   Coefficient tables are cached per (rank, degree).
//! * `MonteCarlo` (every algebra): `Z_m(ξ) = ω_m E[Δ_m(Oξ)]` over Haar-random
//!   orthogonal automorphisms O, where Δ_m is the generalized power function
//!   built from the leading principal minors of the standard frame and
//!   `ω_m = d_m |m|! / (n/r)_m` with the dimension `d_m` of the space of
//!   polynomials of type m.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::jordan::random::HaarAutomorphism;
use crate::jordan::{eigenvalues, Algebra, AlgebraKind, Element};

/// Default maximal degree |m| for zonal evaluations and series.
pub const DEFAULT_ZONAL_CAP: usize = 40;
/// Default number of Haar samples in Monte Carlo mode.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Multi-index m = (m₁ ≥ … ≥ m_r ≥ 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidInput("multi-index must have at least one entry".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("multi-index {parts:?} is not weakly decreasing")));
        }
        Ok(MultiIndex(parts))
    }

    pub fn zero(r: usize) -> Self {
        MultiIndex(vec![0; r])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pads (with zeros) or validates the multi-index for an algebra of rank r.
    pub fn for_rank(&self, r: usize) -> Result<MultiIndex> {
        if self.0.len() > r && self.0[r..].iter().any(|&p| p != 0) {
            return Err(Error::InvalidInput(format!("multi-index {:?} has more than {r} non-zero parts", self.0)));
        }
        let mut p = self.0.clone();
        p.resize(r, 0);
        Ok(MultiIndex(p))
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All multi-indices of degree k with r entries, in decreasing lexicographic order.
pub fn partitions(k: usize, r: usize) -> Vec<MultiIndex> {
    fn rec(k: usize, r: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if r == 0 {
            if k == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = k.min(max);
        for p in (0..=hi).rev() {
            // remaining r−1 parts (each ≤ p) must absorb k − p
            if (k - p) > p * (r - 1) {
                break;
            }
            cur.push(p);
            rec(k - p, r - 1, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, k, &mut Vec::with_capacity(r), &mut out);
    out.into_iter().map(MultiIndex).collect()
}

/// Evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZonalMode {
    /// Exact recurrence (real symmetric matrices only).
    Recursive,
    /// Haar-average with the given number of samples and seed.
    MonteCarlo { samples: usize, seed: u64 },
}

impl ZonalMode {
    /// Recursive for `SymMatrix(r)` with r ≤ 4, Monte Carlo (10⁵ samples) otherwise.
    pub fn default_for(a: Algebra) -> Self {
        if a.kind() == AlgebraKind::SymMatrix && a.rank() <= 4 {
            ZonalMode::Recursive
        } else {
            ZonalMode::MonteCarlo { samples: DEFAULT_MC_SAMPLES, seed: 0x2014_a1a1 }
        }
    }
}

/// A zonal value with its Monte Carlo standard error (0 for exact evaluations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZonalValue {
    pub value: f64,
    pub std_error: f64,
}

/// ln of the generalized Pochhammer symbol (s)_m = Π_j Γ(s + m_j − (j−1)d/2)/Γ(s − (j−1)d/2).
pub fn ln_pochhammer(a: Algebra, s: f64, m: &MultiIndex) -> Result<f64> {
    let d = a.peirce() as f64;
    let mut acc = 0.0;
    for (j, &mj) in m.parts().iter().enumerate() {
        let base = s - j as f64 * d / 2.0;
        if base <= 0.0 {
            return Err(Error::PoleArgument(base));
        }
        acc += ln_gamma(base + mj as f64) - ln_gamma(base);
    }
    Ok(acc)
}

/// Dimension d_m of the space of polynomials of type m on V.
pub fn ln_dimension(a: Algebra, m: &MultiIndex) -> f64 {
    let d = a.peirce() as f64;
    let p = m.parts();
    let mut acc = 0.0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let diff = (p[i] - p[j]) as f64;
            let g = (j - i) as f64;
            acc += (diff + g * d / 2.0).ln() - (g * d / 2.0).ln();
            // B(diff, (g−1)d/2 + 1) / B(diff, (g+1)d/2), continuous at diff = 0
            let pp = (g - 1.0) * d / 2.0 + 1.0;
            let qq = (g + 1.0) * d / 2.0;
            acc += ln_gamma(pp) + ln_gamma(diff + qq) - ln_gamma(qq) - ln_gamma(diff + pp);
        }
    }
    acc
}

/// Normalising constant ω_m = d_m |m|! / (n/r)_m, so that Z_m(e) = ω_m.
pub fn omega(a: Algebra, m: &MultiIndex) -> Result<f64> {
    let m = m.for_rank(a.rank())?;
    let k = m.degree() as f64;
    let nr = a.dim() as f64 / a.rank() as f64;
    Ok((ln_dimension(a, &m) + ln_gamma(k + 1.0) - ln_pochhammer(a, nr, &m)?).exp())
}

/// Relative residual of `Σ_{|m|=k} ω_m = r^k` (the normalization identity at ξ = e).
pub fn calibration_residual(a: Algebra, k: usize) -> Result<f64> {
    let mut s = 0.0;
    for m in partitions(k, a.rank()) {
        s += omega(a, &m)?;
    }
    let target = (a.rank() as f64).powi(k as i32);
    Ok((s - target).abs() / target)
}

// ---------- recursive mode (real symmetric matrices) ----------

/// Coefficients of Z_κ in the monomial basis, for all κ of one degree.
#[derive(Debug)]
struct CoeffTable {
    parts: Vec<MultiIndex>,
    /// coeffs[κ][λ] over the same ordering as `parts`.
    coeffs: Vec<Vec<f64>>,
}

fn coeff_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<CoeffTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<CoeffTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn rho(p: &[usize]) -> f64 {
    p.iter().enumerate().map(|(i, &k)| k as f64 * (k as f64 - (i + 1) as f64)).sum()
}

fn dominates(k: &[usize], l: &[usize]) -> bool {
    let (mut a, mut b) = (0usize, 0usize);
    for i in 0..k.len() {
        a += k[i];
        b += l[i];
        if a < b {
            return false;
        }
    }
    true
}

fn coeff_table(r: usize, k: usize) -> Arc<CoeffTable> {
    if let Some(t) = coeff_cache().lock().expect("cache").get(&(r, k)) {
        return t.clone();
    }
    let parts = partitions(k, r);
    let np = parts.len();
    let index: HashMap<Vec<usize>, usize> = parts.iter().enumerate().map(|(i, p)| (p.0.clone(), i)).collect();
    let mut raw = vec![vec![0.0; np]; np];
    for (ki, kappa) in parts.iter().enumerate() {
        raw[ki][ki] = 1.0;
        let rk = rho(&kappa.0);
        for li in (ki + 1)..np {
            let lam = &parts[li].0;
            if !dominates(&kappa.0, lam) {
                continue;
            }
            let mut s = 0.0;
            for i in 0..r {
                for j in (i + 1)..r {
                    for t in 1..=lam[j] {
                        let mut mu = lam.clone();
                        mu[i] += t;
                        mu[j] -= t;
                        mu.sort_unstable_by(|a, b| b.cmp(a));
                        if let Some(&mi) = index.get(&mu) {
                            if raw[ki][mi] != 0.0 {
                                s += (lam[i] as f64 - lam[j] as f64 + 2.0 * t as f64) * raw[ki][mi];
                            }
                        }
                    }
                }
            }
            raw[ki][li] = s / (rk - rho(lam));
        }
    }
    // scale rows so that Σ_κ a_κ raw[κ][λ] equals the multinomial coefficient of M_λ in p₁ᵏ
    let ln_kf = ln_gamma(k as f64 + 1.0);
    let mut scale = vec![0.0; np];
    for li in 0..np {
        let lam = &parts[li].0;
        let mult = (ln_kf - lam.iter().map(|&p| ln_gamma(p as f64 + 1.0)).sum::<f64>()).exp();
        let mut s = 0.0;
        for ki in 0..li {
            s += scale[ki] * raw[ki][li];
        }
        scale[li] = mult - s;
    }
    let coeffs = (0..np).map(|ki| raw[ki].iter().map(|c| c * scale[ki]).collect()).collect();
    let table = Arc::new(CoeffTable { parts, coeffs });
    coeff_cache().lock().expect("cache").insert((r, k), table.clone());
    table
}

/// Monomial symmetric function M_λ(y) (sum over distinct permutations of λ).
fn monomial(lam: &[usize], y: &[f64]) -> f64 {
    let mut p = lam.to_vec();
    p.sort_unstable();
    let mut total = 0.0;
    loop {
        total += p.iter().zip(y).map(|(&e, &v)| v.powi(e as i32)).product::<f64>();
        if !next_permutation(&mut p) {
            break;
        }
    }
    total
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

// ---------- Monte Carlo mode ----------

/// Leading principal minors Δ₁(y), …, Δ_r(y) with respect to the standard frame.
pub fn principal_minors(y: &Element) -> Vec<f64> {
    let a = y.algebra();
    match a.kind() {
        AlgebraKind::SymMatrix => {
            let m = y.to_sym_matrix().expect("sym");
            (1..=a.size()).map(|j| m.view((0, 0), (j, j)).into_owned().determinant()).collect()
        }
        AlgebraKind::HermComplex => {
            let m = y.to_herm_matrix().expect("herm");
            (1..=a.size()).map(|j| m.view((0, 0), (j, j)).into_owned().determinant().re).collect()
        }
        _ => {
            let nat = y.to_spin_natural().expect("spin");
            let bar2: f64 = nat[1..].iter().map(|v| v * v).sum();
            vec![nat[0] + nat[1], nat[0] * nat[0] - bar2]
        }
    }
}

/// Generalized power function Δ_m(y) = Δ₁^{m₁−m₂} ⋯ Δ_r^{m_r}.
pub fn power_function(minors: &[f64], m: &[usize]) -> f64 {
    let r = minors.len();
    let mut v = 1.0;
    for j in 0..r {
        let e = m[j] - if j + 1 < r { m[j + 1] } else { 0 };
        if e > 0 {
            v *= minors[j].max(0.0).powi(e as i32);
        }
    }
    v
}

/// Degree-by-degree zonal evaluator at a fixed point ξ.
pub struct ZonalEvaluator {
    algebra: Algebra,
    mode: ZonalMode,
    eig: Vec<f64>,
    minors: Vec<Vec<f64>>,
}

impl ZonalEvaluator {
    pub fn new(xi: &Element, mode: ZonalMode) -> Result<Self> {
        let a = xi.algebra();
        match mode {
            ZonalMode::Recursive => {
                if a.kind() != AlgebraKind::SymMatrix {
                    return Err(Error::InvalidInput(format!("recursive zonal mode needs a real symmetric algebra, got {a}")));
                }
                Ok(ZonalEvaluator { algebra: a, mode, eig: eigenvalues(xi)?, minors: Vec::new() })
            }
            ZonalMode::MonteCarlo { samples, seed } => {
                if samples < 2 {
                    return Err(Error::InvalidInput("Monte Carlo zonal mode needs at least 2 samples".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let minors = (0..samples)
                    .map(|_| principal_minors(&HaarAutomorphism::sample(a, &mut rng).apply(xi)))
                    .collect();
                Ok(ZonalEvaluator { algebra: a, mode, eig: Vec::new(), minors })
            }
        }
    }

    /// Z_m(ξ) for every m of degree k, in decreasing lexicographic order.
    pub fn degree(&self, k: usize) -> Result<Vec<(MultiIndex, ZonalValue)>> {
        let r = self.algebra.rank();
        match self.mode {
            ZonalMode::Recursive => {
                let t = coeff_table(r, k);
                let monos: Vec<f64> = t.parts.iter().map(|l| monomial(&l.0, &self.eig)).collect();
                Ok(t.parts
                    .iter()
                    .zip(&t.coeffs)
                    .map(|(kappa, row)| {
                        let v: f64 = row.iter().zip(&monos).map(|(c, m)| c * m).sum();
                        (kappa.clone(), ZonalValue { value: v, std_error: 0.0 })
                    })
                    .collect())
            }
            ZonalMode::MonteCarlo { samples, .. } => {
                let mut out = Vec::new();
                for m in partitions(k, r) {
                    let w = omega(self.algebra, &m)?;
                    if !w.is_finite() {
                        return Err(Error::CalibrationFailure(format!("ω{m} is not finite")));
                    }
                    let (mut s, mut s2) = (0.0, 0.0);
                    for mi in &self.minors {
                        let v = power_function(mi, &m.0);
                        s += v;
                        s2 += v * v;
                    }
                    let nn = samples as f64;
                    let mean = s / nn;
                    let var = ((s2 / nn - mean * mean) * nn / (nn - 1.0)).max(0.0);
                    out.push((m, ZonalValue { value: w * mean, std_error: w * (var / nn).sqrt() }));
                }
                Ok(out)
            }
        }
    }
}

/// Z_m(ξ) for a single multi-index.
pub fn zonal(m: &MultiIndex, xi: &Element, mode: ZonalMode) -> Result<ZonalValue> {
    zonal_with_cap(m, xi, mode, DEFAULT_ZONAL_CAP)
}

pub fn zonal_with_cap(m: &MultiIndex, xi: &Element, mode: ZonalMode, cap: usize) -> Result<ZonalValue> {
    let a = xi.algebra();
    let m = m.for_rank(a.rank())?;
    if m.degree() > cap {
        return Err(Error::CapExceeded { degree: m.degree(), cap });
    }
    let res = calibration_residual(a, m.degree())?;
    if res > 1e-8 {
        return Err(Error::CalibrationFailure(format!("normalization residual {res:e} at degree {}", m.degree())));
    }
    let ev = ZonalEvaluator::new(xi, mode)?;
    let all = ev.degree(m.degree())?;
    Ok(all.into_iter().find(|(mm, _)| *mm == m).expect("partition present").1)
}

/// Schur polynomial s_λ(y) via the bialternant formula (distinct y assumed).
#[cfg(test)]
fn schur(lam: &[usize], y: &[f64]) -> f64 {
    use nalgebra::DMatrix;
    let r = y.len();
    let num = DMatrix::from_fn(r, r, |i, j| y[i].powi((lam[j] + r - 1 - j) as i32));
    let den = DMatrix::from_fn(r, r, |i, j| y[i].powi((r - 1 - j) as i32));
    num.determinant() / den.determinant()
}
