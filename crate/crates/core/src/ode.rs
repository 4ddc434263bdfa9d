//! Adaptive Dormand–Prince 5(4) integration of complex first-order systems.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{JcError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; estimated from the vector field when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-11, h_init: None, h_max: 0.25, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// Accepted steps of an integration run.
#[derive(Debug, Clone, Default)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
}

impl OdePath {
    pub fn last(&self) -> &[C64] {
        self.states.last().expect("path has at least the initial state")
    }

    /// Index of the last stored time not beyond `t` in the direction of
    /// integration.
    pub fn checkpoint_before(&self, t: f64) -> usize {
        let forward = self.times.len() < 2 || self.times[1] >= self.times[0];
        let idx =
            if forward { self.times.partition_point(|&s| s <= t) } else { self.times.partition_point(|&s| s >= t) };
        idx.saturating_sub(1)
    }
}

fn error_norm(y: &[C64], y_new: &[C64], err: &[C64], opts: &OdeOptions) -> f64 {
    y.iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| e.norm() / (opts.atol + opts.rtol * a.norm().max(b.norm())))
        .fold(0.0, f64::max)
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
///
/// `on_accept` runs after every accepted step and may rewrite the state in
/// place (for a change of chart); it returns `true` when it did, which
/// discards the cached derivative.
pub fn integrate_with<F, G>(
    mut f: F,
    t0: f64,
    y0: &[C64],
    t1: f64,
    opts: &OdeOptions,
    mut on_accept: G,
) -> Result<OdePath>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
    G: FnMut(f64, &mut [C64]) -> bool,
{
    let n = y0.len();
    let mut path = OdePath { times: vec![t0], states: vec![y0.to_vec()] };
    if t1 == t0 {
        return Ok(path);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::default(); n]; 7];
    let mut stage = vec![C64::default(); n];
    let mut y_new = vec![C64::default(); n];
    let mut err = vec![C64::default(); n];

    f(t, &y, &mut k[0])?;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-3);
            let rate = k[0].iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-8);
            (0.01 * scale / rate).min(0.01)
        }
    }
    .min(opts.h_max)
    .min(span);
    let mut fsal_valid = true;

    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * span.max(1.0) {
            return Ok(path);
        }
        let last = h >= remaining;
        let h_step = if last { remaining } else { h };
        if !fsal_valid {
            f(t, &y, &mut k[0])?;
            fsal_valid = true;
        }
        let hs = dir * h_step;
        let mut stage_ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * (hs * a);
                    }
                }
                stage[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            if f(t + C[s] * hs, &stage, &mut tail[0]).is_err() {
                stage_ok = false;
                break;
            }
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let err_norm = if stage_ok {
            for i in 0..n {
                let mut acc = C64::default();
                for (s, ks) in k.iter().enumerate() {
                    if E[s] != 0.0 {
                        acc += ks[i] * E[s];
                    }
                }
                err[i] = acc * hs;
            }
            error_norm(&y, &y_new, &err, opts)
        } else {
            f64::INFINITY
        };

        if err_norm.is_finite() && err_norm <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            if on_accept(t, &mut y) {
                fsal_valid = false;
            }
            path.times.push(t);
            path.states.push(y.clone());
            let fac = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                h = (h_step * fac).min(opts.h_max);
            }
        } else {
            let fac = if err_norm.is_finite() { (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = h_step * fac;
            if h < opts.h_min {
                return Err(JcError::StepFailure { t, step: h });
            }
        }
    }
    Err(JcError::StepFailure { t, step: h })
}

pub fn integrate<F>(f: F, t0: f64, y0: &[C64], t1: f64, opts: &OdeOptions) -> Result<OdePath>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
{
    integrate_with(f, t0, y0, t1, opts, |_, _| false)
}
