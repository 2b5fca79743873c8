//! Dormand–Prince 5(4) embedded Runge–Kutta integrator with adaptive steps and
//! a state guard that can veto a step (the step is then halved).

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h0: None, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejections: usize,
    /// Rejections caused by the state guard rather than the error estimate.
    pub guard_rejections: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for OdeStats {
    fn add_assign(&mut self, o: OdeStats) {
        self.steps += o.steps;
        self.rejections += o.rejections;
        self.guard_rejections += o.guard_rejections;
        self.evaluations += o.evaluations;
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights (equal to the last row of A: first-same-as-last).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates the autonomous system `y' = f(y)` from `t = 0`, recording the
/// state at each time in `outputs` (non-decreasing, non-negative).
///
/// `guard(y)` returns `false` for states that must not be accepted; such
/// steps are rejected and retried with half the step size.
pub fn integrate<F, G>(
    mut f: F,
    y0: &DVector<f64>,
    outputs: &[f64],
    opts: &OdeOptions,
    mut guard: G,
) -> Result<(Vec<DVector<f64>>, OdeStats)>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
    G: FnMut(&DVector<f64>) -> bool,
{
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let t_end = outputs.iter().copied().fold(0.0, f64::max);
    if outputs.iter().any(|t| !t.is_finite() || *t < 0.0) || outputs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("output times must be finite, non-negative and non-decreasing".into()));
    }
    let mut y = y0.clone();
    let mut t = 0.0;
    let mut k1 = f(&y);
    stats.evaluations += 1;
    let mut h = opts.h0.unwrap_or_else(|| initial_step(&y, &k1, opts, t_end));
    let h_min = 1e-14 * t_end.max(f64::MIN_POSITIVE);
    let mut ks: Vec<DVector<f64>> = vec![DVector::zeros(y.len()); 7];
    for &target in outputs {
        while t < target {
            if stats.steps + stats.rejections >= opts.max_steps {
                return Err(Error::StepUnderflow { t, h });
            }
            let last = t + h >= target * (1.0 - 4.0 * f64::EPSILON);
            let hs = if last { target - t } else { h };
            if hs < h_min && !last {
                return Err(Error::StepUnderflow { t, h: hs });
            }
            ks[0].copy_from(&k1);
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        ys.axpy(hs * A[s][j], kj, 1.0);
                    }
                }
                ks[s] = f(&ys);
                stats.evaluations += 1;
            }
            let mut ynew = y.clone();
            let mut err = DVector::zeros(y.len());
            for s in 0..7 {
                if B5[s] != 0.0 {
                    ynew.axpy(hs * B5[s], &ks[s], 1.0);
                }
                err.axpy(hs * E[s], &ks[s], 1.0);
            }
            // ks[6] was evaluated at ynew (first-same-as-last)
            let mut en: f64 = 0.0;
            let finite = ynew.iter().all(|v| v.is_finite());
            for i in 0..y.len() {
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                en = en.max((err[i] / sc).abs());
            }
            if !finite || en.is_nan() {
                stats.rejections += 1;
                h = hs * 0.25;
                if h < h_min {
                    return Err(Error::StepUnderflow { t, h });
                }
                continue;
            }
            if en <= 1.0 {
                if !guard(&ynew) {
                    stats.rejections += 1;
                    stats.guard_rejections += 1;
                    h = hs * 0.5;
                    if h < h_min {
                        return Err(Error::StepUnderflow { t, h });
                    }
                    continue;
                }
                stats.steps += 1;
                t = if last { target } else { t + hs };
                y = ynew;
                k1 = ks[6].clone();
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the proposed step for the next interval unless this one was clipped
                h = if last { h.max(hs * fac) } else { hs * fac };
            } else {
                stats.rejections += 1;
                h = hs * (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

fn initial_step(y: &DVector<f64>, f0: &DVector<f64>, opts: &OdeOptions, t_end: f64) -> f64 {
    let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let d0 = (0..y.len()).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
    let d1 = (0..y.len()).map(|i| (f0[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    if t_end > 0.0 {
        h.min(t_end * 0.1).max(1e-12 * t_end)
    } else {
        h
    }
}
