//! Complexified classical boundary-value problem and the dominant-path
//! propagator.
//!
//! The flow is integrated in whichever stereographic chart keeps the spin
//! coordinates small. The state vector is (α, β, x, y) where x is ζ or
//! ρ = 1/ζ and y is η or σ = 1/η. Shooting solves for (β(0), y(0)) with the
//! Jacobian carried along as two tangent columns of the variational flow.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

use crate::elliptic::{cubic_from_constants, invariants_from_cubic, CubicPotential, WeierstrassInvariants};
use crate::error::{JcError, Result};
use crate::model::{
    conserved_pair, hamiltonian_charted, CanonicalCoherentState, ChartedPoint, ConservedPair, Method, ModelParams,
    PhasePoint, PropagatorElement, SpinCoherentState, SpinCoord, CHART_SWITCH, CHART_TOL, I,
};
use crate::ode::{integrate_with, OdeOptions};
use crate::quad::{integrate_adaptive, kronrod_gauss_nodes};

/// Longest accepted horizon. The dominant path degrades well before this.
pub const MAX_HORIZON: f64 = 50.0;

/// Endpoint data α(0) = α′, ζ(0) = ζ′, β(T) = β″, η(T) = η″.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub alpha_initial: C64,
    pub zeta_initial: SpinCoord,
    pub beta_final: C64,
    pub eta_final: SpinCoord,
    pub horizon: f64,
    /// Azimuths φ′, φ″ of the two spin states. Spin-½ coherent states
    /// depend on φ/2, so these fix the sign that ζ′ and η″ alone leave open.
    pub phi_initial: f64,
    pub phi_final: f64,
}

impl BoundaryData {
    pub fn new(alpha_initial: C64, zeta_initial: C64, beta_final: C64, eta_final: C64, horizon: f64) -> Result<Self> {
        Self::charted(alpha_initial, SpinCoord::Direct(zeta_initial), beta_final, SpinCoord::Direct(eta_final), horizon)
    }

    pub fn charted(
        alpha_initial: C64,
        zeta_initial: SpinCoord,
        beta_final: C64,
        eta_final: SpinCoord,
        horizon: f64,
    ) -> Result<Self> {
        let azimuth = |c: SpinCoord, sign: f64| {
            let x = c.raw();
            let a = if x.norm() == 0.0 { 0.0 } else { x.arg() };
            if c.is_reciprocal() {
                -sign * a
            } else {
                sign * a
            }
        };
        let bd = Self {
            alpha_initial,
            zeta_initial,
            beta_final,
            eta_final,
            horizon,
            phi_initial: azimuth(zeta_initial, 1.0),
            phi_final: azimuth(eta_final, -1.0),
        };
        bd.validate()?;
        Ok(bd)
    }

    /// Data for ⟨final|U(T)|initial⟩ between product coherent states. Spin
    /// states in the southern hemisphere go to the reciprocal chart.
    pub fn from_states(
        init: (&SpinCoherentState, &CanonicalCoherentState),
        fin: (&SpinCoherentState, &CanonicalCoherentState),
        horizon: f64,
    ) -> Result<Self> {
        let chart = |s: &SpinCoherentState, sign: f64| {
            let t = (0.5 * s.theta).tan();
            if t <= 1.0 {
                SpinCoord::Direct(C64::from_polar(t, sign * s.phi))
            } else {
                let c = 1.0 / (0.5 * s.theta).tan();
                SpinCoord::Reciprocal(C64::from_polar(if c.abs() < 1e-16 { 0.0 } else { c }, -sign * s.phi))
            }
        };
        let bd = Self::charted(
            init.1.amplitude(),
            chart(init.0, 1.0),
            fin.1.amplitude().conj(),
            chart(fin.0, -1.0),
            horizon,
        )?;
        Ok(Self { phi_initial: init.0.phi, phi_final: fin.0.phi, ..bd })
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self { horizon, ..*self }
    }

    /// Image under the phase transformation generated by N.
    pub fn gauge(&self, lam: f64) -> Self {
        let p = C64::from_polar(1.0, lam);
        let rot = |c: SpinCoord, f: C64| match c {
            SpinCoord::Direct(z) => SpinCoord::Direct(z * f),
            SpinCoord::Reciprocal(r) => SpinCoord::Reciprocal(r / f),
        };
        Self {
            alpha_initial: self.alpha_initial * p.conj(),
            zeta_initial: rot(self.zeta_initial, p),
            beta_final: self.beta_final * p,
            eta_final: rot(self.eta_final, p.conj()),
            horizon: self.horizon,
            phi_initial: self.phi_initial + lam,
            phi_final: self.phi_final + lam,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha_initial, self.zeta_initial.raw(), self.beta_final, self.eta_final.raw()]
            .iter()
            .all(|z| z.is_finite());
        if !finite {
            return Err(JcError::InvalidParameter("boundary data must be finite".into()));
        }
        if self.horizon.is_nan() || self.horizon <= 0.0 {
            return Err(JcError::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.horizon > MAX_HORIZON {
            return Err(JcError::InvalidParameter(format!(
                "horizon {} exceeds the supported maximum {MAX_HORIZON}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn is_direct(&self) -> bool {
        !self.zeta_initial.is_reciprocal() && !self.eta_final.is_reciprocal()
    }

    /// Free overlap ⟨final|initial⟩ of the two product coherent states.
    pub fn overlap(&self) -> C64 {
        let a = self.alpha_initial;
        let b = self.beta_final;
        let field = (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a * b).exp();
        self.spin_weights() * chart_pair(self.zeta_initial, self.eta_final) * field
    }

    /// Normalisation and half-angle phases of the two spin states, divided
    /// by the chart factor of any reciprocal coordinate:
    /// e^{∓iφ/2}/√(1+|x|²) per endpoint.
    fn spin_weights(&self) -> C64 {
        let side = |c: SpinCoord, phase: f64| {
            let x = c.raw();
            let phase = if c.is_reciprocal() { -phase } else { phase };
            C64::from_polar(1.0 / (1.0 + x.norm_sqr()).sqrt(), 0.5 * phase)
        };
        side(self.zeta_initial, -self.phi_initial) * side(self.eta_final, self.phi_final)
    }
}

/// 1 + ζη written in the charts of its two arguments.
fn chart_pair(z: SpinCoord, e: SpinCoord) -> C64 {
    use SpinCoord::*;
    let one = C64::new(1.0, 0.0);
    match (z, e) {
        (Direct(z), Direct(e)) => one + z * e,
        (Reciprocal(r), Reciprocal(s)) => r * s + one,
        (Reciprocal(r), Direct(e)) => r + e,
        (Direct(z), Reciprocal(s)) => z + s,
    }
}

type Jacobian = [[C64; 4]; 4];

/// Rates of (α, β, x, y) in the charts of `p`, and optionally their Jacobian.
fn rates(p: &ChartedPoint, params: &ModelParams, with_jacobian: bool) -> Result<([C64; 4], Jacobian)> {
    use SpinCoord::*;
    let (lam, w) = (params.lambda, 1.0 + params.delta);
    let (x, y) = (p.zeta.raw(), p.eta.raw());
    let (a, b) = (p.alpha, p.beta);
    let zero = C64::default();
    let one = C64::new(1.0, 0.0);
    // (value, ∂x, ∂y) of the denominator and the two numerators
    let (den, zn, en) = match (p.zeta, p.eta) {
        (Direct(_), Direct(_)) => ((one + x * y, y, x), (x, one, zero), (y, zero, one)),
        (Reciprocal(_), Reciprocal(_)) => ((x * y + one, y, x), (y, zero, one), (x, one, zero)),
        (Reciprocal(_), Direct(_)) => ((x + y, one, one), (one, zero, zero), (x * y, y, x)),
        (Direct(_), Reciprocal(_)) => ((x + y, one, one), (x * y, y, x), (one, zero, zero)),
    };
    if den.0.norm() < CHART_TOL {
        return Err(JcError::DegenerateChart { magnitude: den.0.norm() });
    }
    let inv = den.0.inv();
    let zf = zn.0 * inv;
    let ef = en.0 * inv;

    let mut r = [zero; 4];
    r[0] = -I * (a + lam * ef);
    r[1] = I * (b + lam * zf);
    r[2] = match p.zeta {
        Direct(_) => I * (w * x - lam * b + lam * a * x * x),
        Reciprocal(_) => -I * (w * x - lam * b * x * x + lam * a),
    };
    r[3] = match p.eta {
        Direct(_) => -I * (w * y - lam * a + lam * b * y * y),
        Reciprocal(_) => I * (w * y - lam * a * y * y + lam * b),
    };

    let mut j = [[zero; 4]; 4];
    if with_jacobian {
        let d = |num: (C64, C64, C64), k: usize| {
            let (dn, dd) = if k == 0 { (num.1, den.1) } else { (num.2, den.2) };
            (dn * den.0 - num.0 * dd) * inv * inv
        };
        j[0] = [-I, zero, -I * lam * d(en, 0), -I * lam * d(en, 1)];
        j[1] = [zero, I, I * lam * d(zn, 0), I * lam * d(zn, 1)];
        j[2] = match p.zeta {
            Direct(_) => [I * lam * x * x, -I * lam, I * (w + 2.0 * lam * a * x), zero],
            Reciprocal(_) => [-I * lam, I * lam * x * x, -I * (w - 2.0 * lam * b * x), zero],
        };
        j[3] = match p.eta {
            Direct(_) => [I * lam, -I * lam * y * y, zero, -I * (w + 2.0 * lam * b * y)],
            Reciprocal(_) => [-I * lam * y * y, I * lam, zero, I * (w - 2.0 * lam * a * y)],
        };
    }
    Ok((r, j))
}

/// Classical rates (α̇, β̇, ζ̇, η̇) in the direct chart.
pub fn vector_field(point: &PhasePoint, params: &ModelParams) -> Result<PhasePoint> {
    let (r, _) = rates(&point.charted(), params, false)?;
    Ok(PhasePoint::new(r[0], r[1], r[2], r[3]))
}

/// Rates of (α, β, x, y) in the charts carried by `point`.
pub fn vector_field_charted(point: &ChartedPoint, params: &ModelParams) -> Result<[C64; 4]> {
    Ok(rates(point, params, false)?.0)
}

/// Jacobian of [`vector_field_charted`] with respect to (α, β, x, y).
pub fn jacobian_charted(point: &ChartedPoint, params: &ModelParams) -> Result<[[C64; 4]; 4]> {
    Ok(rates(point, params, true)?.1)
}

/// Time derivative of the direct-chart coordinates.
fn direct_rates(p: &ChartedPoint, params: &ModelParams) -> Result<(PhasePoint, PhasePoint)> {
    let (r, _) = rates(p, params, false)?;
    let pt = p.to_direct();
    // ζ = 1/ρ ⇒ ζ̇ = −ζ²ρ̇
    let dz = if p.zeta.is_reciprocal() { -pt.zeta * pt.zeta * r[2] } else { r[2] };
    let de = if p.eta.is_reciprocal() { -pt.eta * pt.eta * r[3] } else { r[3] };
    Ok((pt, PhasePoint::new(r[0], r[1], dz, de)))
}

fn pack(p: &ChartedPoint) -> [C64; 4] {
    [p.alpha, p.beta, p.zeta.raw(), p.eta.raw()]
}

fn unpack(y: &[C64], charts: (bool, bool)) -> ChartedPoint {
    let coord = |v: C64, rec: bool| if rec { SpinCoord::Reciprocal(v) } else { SpinCoord::Direct(v) };
    ChartedPoint { alpha: y[0], beta: y[1], zeta: coord(y[2], charts.0), eta: coord(y[3], charts.1) }
}

/// Solution of the classical flow sampled at accepted steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<ChartedPoint>,
    pub constants: ConservedPair,
    /// |N(t) − N(0)| at each sample.
    pub n_drift: Vec<f64>,
    /// |C(t) − C(0)| at each sample.
    pub c_drift: Vec<f64>,
}

impl ComplexTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> &ChartedPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &ChartedPoint {
        self.points.last().expect("trajectory has at least one point")
    }

    pub fn max_drift(&self) -> f64 {
        self.n_drift.iter().chain(&self.c_drift).fold(0.0, |m, &d| m.max(d))
    }

    /// State at `t`, re-integrated from the nearest earlier sample.
    pub fn state_at(&self, t: f64, params: &ModelParams, opts: &OdeOptions) -> Result<ChartedPoint> {
        let forward = self.times.len() < 2 || self.times[1] >= self.times[0];
        let idx =
            if forward { self.times.partition_point(|&s| s <= t) } else { self.times.partition_point(|&s| s >= t) }
                .saturating_sub(1);
        if self.times[idx] == t {
            return Ok(self.points[idx]);
        }
        let run = flow(&self.points[idx], self.times[idx], t, params, opts, false, false)?;
        Ok(run.end)
    }
}

struct FlowRun {
    end: ChartedPoint,
    /// ∂(α, β, x, y)(T)/∂(β(0), y(0)) in the end charts.
    tangent: [[C64; 4]; 2],
    trajectory: Option<ComplexTrajectory>,
}

/// Integrates the flow from `start` at `t0` to `t1`, switching chart when a
/// spin coordinate leaves the unit-ten disk.
fn flow(
    start: &ChartedPoint,
    t0: f64,
    t1: f64,
    params: &ModelParams,
    opts: &OdeOptions,
    with_tangent: bool,
    record: bool,
) -> Result<FlowRun> {
    let charts = Cell::new((start.zeta.is_reciprocal(), start.eta.is_reciprocal()));
    let dim = if with_tangent { 12 } else { 4 };
    let mut y0 = vec![C64::default(); dim];
    y0[..4].copy_from_slice(&pack(start));
    if with_tangent {
        y0[4 + 1] = C64::new(1.0, 0.0);
        y0[8 + 3] = C64::new(1.0, 0.0);
    }

    let constants = if record { Some(conserved_pair(start, params)?) } else { None };
    let mut traj = constants.map(|c| ComplexTrajectory {
        times: vec![t0],
        points: vec![*start],
        constants: c,
        n_drift: vec![0.0],
        c_drift: vec![0.0],
    });
    let mut audit_error = None;

    let rhs = |_t: f64, y: &[C64], dy: &mut [C64]| {
        let p = unpack(y, charts.get());
        let (r, j) = rates(&p, params, with_tangent)?;
        dy[..4].copy_from_slice(&r);
        if with_tangent {
            for c in 0..2 {
                let v = &y[4 + 4 * c..8 + 4 * c];
                for (row, jr) in j.iter().enumerate() {
                    dy[4 + 4 * c + row] = jr[0] * v[0] + jr[1] * v[1] + jr[2] * v[2] + jr[3] * v[3];
                }
            }
        }
        Ok(())
    };
    let on_accept = |t: f64, y: &mut [C64]| {
        let mut changed = false;
        let (mut rx, mut ry) = charts.get();
        for (k, flag) in [(2usize, &mut rx), (3usize, &mut ry)] {
            if y[k].norm() > CHART_SWITCH {
                let v = y[k].inv();
                y[k] = v;
                *flag = !*flag;
                changed = true;
                if with_tangent {
                    for c in 0..2 {
                        y[4 + 4 * c + k] *= -v * v;
                    }
                }
            }
        }
        charts.set((rx, ry));
        if let (Some(tr), Some(c0)) = (traj.as_mut(), constants) {
            let p = unpack(y, (rx, ry));
            match conserved_pair(&p, params) {
                Ok(c) => {
                    tr.times.push(t);
                    tr.points.push(p);
                    tr.n_drift.push((c.n_value - c0.n_value).norm());
                    tr.c_drift.push((c.c_value - c0.c_value).norm());
                }
                Err(e) => audit_error = Some(e),
            }
        }
        changed
    };
    let path = integrate_with(rhs, t0, &y0, t1, opts, on_accept)?;
    if let Some(e) = audit_error {
        return Err(e);
    }
    let last = path.last();
    let end = unpack(last, charts.get());
    let mut tangent = [[C64::default(); 4]; 2];
    if with_tangent {
        for (c, col) in tangent.iter_mut().enumerate() {
            col.copy_from_slice(&last[4 + 4 * c..8 + 4 * c]);
        }
    }
    Ok(FlowRun { end, tangent, trajectory: traj })
}

/// Integrates the flow from `initial` over `[0, t]` (t may be negative),
/// recording conserved-quantity drift.
pub fn integrate_ivp(
    initial: &ChartedPoint,
    t: f64,
    params: &ModelParams,
    opts: &OdeOptions,
) -> Result<ComplexTrajectory> {
    let run = flow(initial, 0.0, t, params, opts, false, true)?;
    Ok(run.trajectory.expect("recording requested"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Target for max(|β(T)−β″|, |η(T)−η″|).
    pub tol: f64,
    pub max_iter: usize,
    /// λ increment of the continuation from the decoupled solution.
    pub continuation_step: f64,
    pub ode: OdeOptions,
    /// Also run Newton straight from the decoupled guess and warn when it
    /// lands on a different solution.
    pub multi_start: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 40, continuation_step: 0.05, ode: OdeOptions::default(), multi_start: false }
    }
}

/// Converged solution of the boundary-value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopaSolution {
    pub trajectory: ComplexTrajectory,
    pub beta_initial: C64,
    pub eta_initial: SpinCoord,
    pub alpha_final: C64,
    pub zeta_final: SpinCoord,
    pub constants: ConservedPair,
    pub residual: f64,
    pub iterations: usize,
    /// Set when multi-start found a second, distinct solution.
    pub distinct_basin: bool,
}

impl DopaSolution {
    pub fn initial_point(&self) -> ChartedPoint {
        *self.trajectory.first()
    }

    pub fn final_point(&self) -> ChartedPoint {
        *self.trajectory.last()
    }
}

type Unknowns = (C64, SpinCoord);

/// Exact unknowns of the λ = 0 problem.
pub fn decoupled_unknowns(bd: &BoundaryData, params: &ModelParams) -> Unknowns {
    let t = bd.horizon;
    let w = 1.0 + params.delta;
    let beta0 = bd.beta_final * C64::from_polar(1.0, -t);
    let eta0 = match bd.eta_final {
        SpinCoord::Direct(e) => SpinCoord::Direct(e * C64::from_polar(1.0, w * t)),
        SpinCoord::Reciprocal(s) => SpinCoord::Reciprocal(s * C64::from_polar(1.0, -w * t)),
    };
    (beta0, eta0)
}

fn start_point(bd: &BoundaryData, u: Unknowns) -> ChartedPoint {
    ChartedPoint { alpha: bd.alpha_initial, beta: u.0, zeta: bd.zeta_initial, eta: u.1 }
}

struct Evaluation {
    residual: [C64; 2],
    norm: f64,
    jac: [[C64; 2]; 2],
    end: ChartedPoint,
}

fn evaluate(bd: &BoundaryData, params: &ModelParams, u: Unknowns, ode: &OdeOptions) -> Result<Evaluation> {
    let run = flow(&start_point(bd, u), 0.0, bd.horizon, params, ode, true, false)?;
    let mut y_end = run.end.eta.raw();
    let mut dy = [run.tangent[0][3], run.tangent[1][3]];
    if run.end.eta.is_reciprocal() != bd.eta_final.is_reciprocal() {
        let v = y_end.inv();
        dy = [-v * v * dy[0], -v * v * dy[1]];
        y_end = v;
    }
    let residual = [run.end.beta - bd.beta_final, y_end - bd.eta_final.raw()];
    let norm = residual[0].norm().max(residual[1].norm());
    let jac = [[run.tangent[0][1], run.tangent[1][1]], [dy[0], dy[1]]];
    Ok(Evaluation { residual, norm: if norm.is_finite() { norm } else { f64::INFINITY }, jac, end: run.end })
}

fn end_residual(bd: &BoundaryData, end: &ChartedPoint) -> f64 {
    let eta = if end.eta.is_reciprocal() == bd.eta_final.is_reciprocal() { end.eta.raw() } else { end.eta.raw().inv() };
    (end.beta - bd.beta_final).norm().max((eta - bd.eta_final.raw()).norm())
}

fn step_unknowns(u: Unknowns, d: [C64; 2], s: f64) -> Unknowns {
    let y = match u.1 {
        SpinCoord::Direct(v) => SpinCoord::Direct(v + d[1] * s),
        SpinCoord::Reciprocal(v) => SpinCoord::Reciprocal(v + d[1] * s),
    };
    (u.0 + d[0] * s, y)
}

/// Keeps the η unknown in the chart where it is small.
fn rechart_unknown(u: Unknowns) -> Unknowns {
    (u.0, u.1.rechart())
}

/// Damped Newton iteration; returns unknowns, residual, iterations, end point.
fn newton(
    bd: &BoundaryData,
    params: &ModelParams,
    start: Unknowns,
    opts: &ShootOptions,
) -> Result<(Unknowns, f64, usize, ChartedPoint)> {
    let mut u = rechart_unknown(start);
    let mut ev = evaluate(bd, params, u, &opts.ode)?;
    let mut best = ev.norm;
    for it in 0..opts.max_iter {
        if ev.norm <= opts.tol {
            return Ok((u, ev.norm, it, ev.end));
        }
        let [[a, b], [c, d]] = ev.jac;
        let det = a * d - b * c;
        if det.norm() < 1e-300 || !det.is_finite() {
            break;
        }
        let r = ev.residual;
        let step = [-(d * r[0] - b * r[1]) / det, -(a * r[1] - c * r[0]) / det];
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..16 {
            let trial = step_unknowns(u, step, s);
            if let Ok(tev) = evaluate(bd, params, trial, &opts.ode) {
                if tev.norm < ev.norm * (1.0 - 1e-4 * s) || tev.norm <= opts.tol {
                    accepted = Some((trial, tev));
                    break;
                }
            }
            s *= 0.5;
        }
        match accepted {
            Some((trial, tev)) => {
                // changing chart alters the residual coordinates only for y
                u = rechart_unknown(trial);
                ev = if u.1.is_reciprocal() != trial.1.is_reciprocal() {
                    evaluate(bd, params, u, &opts.ode)?
                } else {
                    tev
                };
                best = best.min(ev.norm);
            }
            None => break,
        }
    }
    if ev.norm <= opts.tol {
        return Ok((u, ev.norm, opts.max_iter, ev.end));
    }
    Err(JcError::ShootingNotConverged { iterations: opts.max_iter, best_residual: best })
}

/// Newton on (β(0), η(0)); without a guess the decoupled solution is
/// continued in λ.
fn solve_unknowns(
    bd: &BoundaryData,
    params: &ModelParams,
    guess: Option<Unknowns>,
    opts: &ShootOptions,
) -> Result<(Unknowns, f64, usize, ChartedPoint)> {
    if let Some(g) = guess {
        if let Ok(r) = newton(bd, params, g, opts) {
            return Ok(r);
        }
    }
    let target = params.lambda;
    let steps = ((target.abs() / opts.continuation_step).ceil() as usize).max(1);
    let mut u = decoupled_unknowns(bd, params);
    let mut total = 0;
    let mut last = None;
    for k in 1..=steps {
        let lam = target * k as f64 / steps as f64;
        let r = newton(bd, &params.with_lambda(lam), u, opts)?;
        u = r.0;
        total += r.2;
        last = Some(r);
    }
    let (u, res, _, end) = last.expect("at least one continuation step");
    Ok((u, res, total, end))
}

/// Solves the boundary-value problem by shooting on (β(0), η(0)).
pub fn shoot(
    bd: &BoundaryData,
    params: &ModelParams,
    guess: Option<(C64, SpinCoord)>,
    opts: &ShootOptions,
) -> Result<DopaSolution> {
    bd.validate()?;
    let (u, residual, iterations, _) = solve_unknowns(bd, params, guess, opts)?;
    let mut distinct_basin = false;
    if opts.multi_start {
        if let Ok((alt, _, _, _)) = newton(bd, params, decoupled_unknowns(bd, params), opts) {
            let d = (alt.0 - u.0).norm() + (alt.1.direct() - u.1.direct()).norm();
            if d > 1e-6 {
                log::warn!("boundary-value problem has distinct solutions (separation {d:.3e})");
                distinct_basin = true;
            }
        }
    }
    let trajectory = integrate_ivp(&start_point(bd, u), bd.horizon, params, &opts.ode)?;
    let end = *trajectory.last();
    // report the residual of the recorded run, not of the Newton run
    let residual = residual.max(end_residual(bd, &end));
    Ok(DopaSolution {
        beta_initial: u.0,
        eta_initial: u.1,
        alpha_final: end.alpha,
        zeta_final: end.zeta,
        constants: trajectory.constants,
        residual,
        iterations,
        distinct_basin,
        trajectory,
    })
}

/// Cubic reduction and Weierstrass anchors of one classical trajectory.
#[derive(Debug, Clone)]
pub struct EllipticProfile {
    pub cubic: CubicPotential,
    pub invariants: WeierstrassInvariants,
    /// A₁..A₄ with ℘(A₁) = a₂/3 + u(0), ℘(A₂) = a₂/3 + 2N, ℘(A₃) = a₂/3 − 1,
    /// ℘(A₄) = a₂/3 + 1.
    pub anchors: [C64; 4],
    pub constants: ConservedPair,
    /// Whether the A₂, A₃, A₄ terms carry a nonzero coefficient.
    active: [bool; 3],
    initial: PhasePoint,
    rate: f64,
}

impl EllipticProfile {
    pub fn new(initial: &PhasePoint, params: &ModelParams) -> Result<Self> {
        if params.lambda == 0.0 {
            return Err(JcError::ZeroCoupling);
        }
        let constants = conserved_pair(&initial.charted(), params)?;
        let cubic = cubic_from_constants(&constants, params)?;
        let invariants = invariants_from_cubic(&cubic);
        let (lam, delta) = (params.lambda, params.delta);
        let (n, c) = (constants.n_value, constants.c_value);
        let w0 = initial.zeta * initial.eta;
        let u0 = (1.0 - w0) / (1.0 + w0);
        let u_dot0 = -2.0 * I * lam * (initial.alpha * initial.zeta - initial.beta * initial.eta) / (1.0 + w0);
        let shift = cubic.a2 / 3.0;
        let k = 2.0 * 2f64.sqrt() * I / lam;
        let coeffs = [c - delta * n, c + 0.5 * delta, c - 0.5 * delta];
        let scale = 1.0 + n.norm() + c.norm();
        let a1 = invariants.wp_inverse_matching(shift + u0, 2f64.sqrt() * u_dot0 / lam, None)?;
        let mut anchors = [a1; 4];
        let targets = [shift + 2.0 * n, shift - 1.0, shift + 1.0];
        for i in 0..3 {
            anchors[i + 1] = invariants.wp_inverse_matching(targets[i], k * coeffs[i], None)?;
        }
        let active = coeffs.map(|x| x.norm() > 1e-12 * scale);
        Ok(Self { cubic, invariants, anchors, constants, active, initial: *initial, rate: lam / 2f64.sqrt() })
    }

    /// u(t) = −a₂/3 + ℘(A₁ + λt/√2).
    pub fn u_at(&self, t: f64) -> Result<C64> {
        Ok(self.invariants.wp(self.anchors[0] + self.rate * t)? - self.cubic.a2 / 3.0)
    }

    pub fn u_dot_at(&self, t: f64) -> Result<C64> {
        Ok(self.rate * self.invariants.wp_prime(self.anchors[0] + self.rate * t)?)
    }

    /// log of σ(z−a)σ(A₁+a)/(σ(z+a)σ(A₁−a)) · e^{2(z−A₁)ζ(a)}.
    fn log_factor(&self, a: C64, z: C64) -> Result<C64> {
        let w = &self.invariants;
        let a1 = self.anchors[0];
        Ok(w.w_sigma_ln(z - a)? - w.w_sigma_ln(z + a)? + w.w_sigma_ln(a1 + a)? - w.w_sigma_ln(a1 - a)?
            + 2.0 * (z - a1) * w.w_zeta(a)?)
    }

    /// (u, α², ζ²) at time t.
    fn squares(&self, t: f64, params: &ModelParams) -> Result<(C64, C64, C64)> {
        let z = self.anchors[0] + self.rate * t;
        let u = self.invariants.wp(z)? - self.cubic.a2 / 3.0;
        let p = &self.initial;
        let n = self.constants.n_value;
        let w0 = p.zeta * p.eta;
        let u0 = (1.0 - w0) / (1.0 + w0);
        let w = (1.0 - u) / (1.0 + u);
        let mut la = C64::new(0.0, -2.0 * (1.0 + 0.5 * params.delta) * t);
        if self.active[0] {
            la += self.log_factor(self.anchors[1], z)?;
        }
        let mut lz = C64::new(0.0, 2.0 * t);
        for k in 1..3 {
            if self.active[k] {
                lz += self.log_factor(self.anchors[k + 1], z)?;
            }
        }
        let alpha_sq = p.alpha * p.alpha * (2.0 * n - u) / (2.0 * n - u0) * la.exp();
        let zeta_sq = p.zeta * p.zeta * w / w0 * lz.exp();
        Ok((u, alpha_sq, zeta_sq))
    }
}

/// Square root continuing `prev` (extrapolated from `prev2`).
fn continue_root(sq: C64, prev: C64, prev2: C64, t: f64) -> Result<C64> {
    let guess = 2.0 * prev - prev2;
    let r = sq.sqrt();
    let (near, far) = if (r - guess).norm() <= (r + guess).norm() { (r, -r) } else { (-r, r) };
    let (dn, df) = ((near - guess).norm(), (far - guess).norm());
    if dn > 0.25 * df && r.norm() > 1e-12 {
        return Err(JcError::BranchResolution { t });
    }
    Ok(near)
}

/// Closed-form trajectory through the initial point of `solution`, sampled
/// at `times` (ascending, starting at or after 0). Square-root branches are
/// continued along a fine internal grid.
pub fn elliptic_trajectory(solution: &DopaSolution, params: &ModelParams, times: &[f64]) -> Result<ComplexTrajectory> {
    let p0 = solution.initial_point().to_direct();
    if p0.alpha.norm() < 1e-12
        || p0.zeta.norm() < 1e-12
        || (2.0 * solution.constants.n_value - (1.0 - p0.zeta * p0.eta) / (1.0 + p0.zeta * p0.eta)).norm() < 1e-12
    {
        return Err(JcError::InvalidParameter("closed form needs α(0), β(0), ζ(0) away from zero".into()));
    }
    let profile = EllipticProfile::new(&p0, params)?;
    let (n, c) = (profile.constants.n_value, profile.constants.c_value);
    const SUBSTEP: f64 = 0.01;

    let mut out = ComplexTrajectory {
        times: Vec::with_capacity(times.len()),
        points: Vec::with_capacity(times.len()),
        constants: profile.constants,
        n_drift: Vec::with_capacity(times.len()),
        c_drift: Vec::with_capacity(times.len()),
    };
    let (mut t_prev, mut a_prev, mut z_prev) = (0.0, p0.alpha, p0.zeta);
    let (mut a_prev2, mut z_prev2) = (p0.alpha, p0.zeta);
    for &t in times {
        if t < t_prev {
            return Err(JcError::InvalidParameter("sample times must be ascending and non-negative".into()));
        }
        let pieces = ((t - t_prev) / SUBSTEP).ceil().max(1.0) as usize;
        let mut u = C64::default();
        for k in 1..=pieces {
            let s = if k == pieces { t } else { t_prev + (t - t_prev) * k as f64 / pieces as f64 };
            if s == 0.0 {
                u = profile.u_at(0.0)?;
                continue;
            }
            let (uu, asq, zsq) = profile.squares(s, params)?;
            u = uu;
            let a = continue_root(asq, a_prev, a_prev2, s)?;
            let z = continue_root(zsq, z_prev, z_prev2, s)?;
            (a_prev2, a_prev, z_prev2, z_prev) = (a_prev, a, z_prev, z);
        }
        t_prev = t;
        let w = (1.0 - u) / (1.0 + u);
        let pt = PhasePoint::new(a_prev, (n - 0.5 * u) / a_prev, z_prev, w / z_prev);
        let cp = pt.charted().rechart();
        let k = conserved_pair(&cp, params)?;
        out.times.push(t);
        out.points.push(cp);
        out.n_drift.push((k.n_value - n).norm());
        out.c_drift.push((k.c_value - c).norm());
    }
    Ok(out)
}

/// Largest direct-chart distance between two trajectories sampled at the
/// same times.
pub fn sup_distance(a: &ComplexTrajectory, b: &ComplexTrajectory) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let (p, q) = (p.to_direct(), q.to_direct());
            [(p.alpha - q.alpha), (p.beta - q.beta), (p.zeta - q.zeta), (p.eta - q.eta)]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.norm()))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopaOptions {
    pub shoot: ShootOptions,
    /// Absolute tolerance of both time quadratures.
    pub quad_tol: f64,
    /// Largest accepted disagreement between the two representations.
    pub agreement_tol: f64,
    pub max_panels: usize,
}

impl Default for DopaOptions {
    fn default() -> Self {
        Self { shoot: ShootOptions::default(), quad_tol: 1e-9, agreement_tol: 1e-6, max_panels: 512 }
    }
}

/// Dominant-path amplitude from both representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopaPropagator {
    /// Horizon-family value, tagged with the discrepancy as residual.
    pub element: PropagatorElement,
    /// Boundary terms times the exponentiated action.
    pub action_form: C64,
    /// Free overlap times the phase integrated over horizons.
    pub horizon_form: C64,
    pub discrepancy: f64,
}

/// Lagrangian (i/2)(α̇β − αβ̇) + (i/2)(ζ̇η − ζη̇)/(1+ζη) − H.
fn lagrangian(p: &ChartedPoint, params: &ModelParams) -> Result<C64> {
    let (x, d) = direct_rates(p, params)?;
    let berry = (d.zeta * x.eta - x.zeta * d.eta) / (1.0 + x.zeta * x.eta);
    Ok(0.5 * I * (d.alpha * x.beta - x.alpha * d.beta) + 0.5 * I * berry - hamiltonian_charted(p, params)?)
}

/// Boundary terms and exp(iS) along the dominant path.
pub fn action_representation(
    solution: &DopaSolution,
    bd: &BoundaryData,
    params: &ModelParams,
    opts: &DopaOptions,
) -> Result<C64> {
    if !bd.is_direct() {
        return Err(JcError::ChartSingularity);
    }
    let p0 = solution.initial_point().to_direct();
    let p1 = solution.final_point().to_direct();
    let (a, b) = (bd.alpha_initial, bd.beta_final);
    let (z, e) = (bd.zeta_initial.raw(), bd.eta_final.raw());
    let boundary = (-0.5 * (a.norm_sqr() + b.norm_sqr()) + 0.5 * p1.alpha * b + 0.5 * a * p0.beta).exp();
    let norm = bd.spin_weights();
    let root = ((1.0 + z * p0.eta) * (1.0 + p1.zeta * e)).sqrt();
    let traj = &solution.trajectory;
    let panels = (bd.horizon.ceil() as usize).max(1);
    let action = integrate_adaptive(
        |t| lagrangian(&traj.state_at(t, params, &opts.shoot.ode)?, params),
        0.0,
        bd.horizon,
        panels,
        0.1 * opts.quad_tol,
        0.0,
        opts.max_panels,
    )?;
    Ok(boundary * norm * root * (I * action.value).exp())
}

/// Free overlap times exp{−i∫₀ᵀ H(α_τ(τ), β″, ζ_τ(τ), η″) dτ}, where the
/// subscript marks the endpoint of the path with horizon τ.
pub fn horizon_representation(
    solution: &DopaSolution,
    bd: &BoundaryData,
    params: &ModelParams,
    opts: &DopaOptions,
) -> Result<C64> {
    let t_end = bd.horizon;
    let mut panels = ((2.0 * t_end).ceil() as usize).max(2);
    loop {
        let mut nodes = Vec::with_capacity(15 * panels);
        for k in 0..panels {
            let a = t_end * k as f64 / panels as f64;
            let b = t_end * (k + 1) as f64 / panels as f64;
            nodes.extend(kronrod_gauss_nodes(a, b));
        }
        let mut guess: Option<Unknowns> = None;
        let (mut kron, mut gauss_err) = (C64::default(), 0.0);
        let mut panel_diff = C64::default();
        for (idx, &(tau, wk, wg)) in nodes.iter().enumerate() {
            let sub = bd.with_horizon(tau);
            let start = guess.unwrap_or_else(|| decoupled_unknowns(&sub, params));
            let (u, _, _, end) = match newton(&sub, params, start, &opts.shoot) {
                Ok(r) => r,
                Err(_) => solve_unknowns(&sub, params, None, &opts.shoot)?,
            };
            guess = Some(u);
            let h = hamiltonian_charted(
                &ChartedPoint { alpha: end.alpha, beta: bd.beta_final, zeta: end.zeta, eta: bd.eta_final },
                params,
            )?;
            kron += h * wk;
            panel_diff += h * (wk - wg);
            if idx % 15 == 14 {
                gauss_err += panel_diff.norm();
                panel_diff = C64::default();
            }
        }
        // the full horizon endpoint is the supplied solution
        let _ = solution;
        if gauss_err <= opts.quad_tol || panels >= opts.max_panels {
            return Ok(bd.overlap() * (-I * kron).exp());
        }
        panels *= 2;
    }
}

/// Both representations of the dominant-path amplitude for a solved path.
pub fn dopa_propagator(
    solution: &DopaSolution,
    bd: &BoundaryData,
    params: &ModelParams,
    opts: &DopaOptions,
) -> Result<DopaPropagator> {
    let action_form = action_representation(solution, bd, params, opts)?;
    let horizon_form = horizon_representation(solution, bd, params, opts)?;
    let discrepancy = (action_form - horizon_form).norm();
    if discrepancy > opts.agreement_tol {
        return Err(JcError::RepresentationMismatch { discrepancy });
    }
    Ok(DopaPropagator {
        element: PropagatorElement {
            value: horizon_form,
            method: Method::Dopa,
            time: bd.horizon,
            residual: discrepancy,
            tolerance: opts.agreement_tol,
        },
        action_form,
        horizon_form,
        discrepancy,
    })
}

/// Solves the boundary-value problem and evaluates the amplitude.
pub fn dopa_amplitude(
    bd: &BoundaryData,
    params: &ModelParams,
    opts: &DopaOptions,
) -> Result<(DopaSolution, DopaPropagator)> {
    let sol = shoot(bd, params, None, &opts.shoot)?;
    let prop = dopa_propagator(&sol, bd, params, opts)?;
    Ok((sol, prop))
}

/// Relative residual |∂_T K + iH(α(T), β″, ζ(T), η″) K| / |K| of the
/// action-form amplitude, with ∂_T from Richardson-extrapolated central
/// differences of steps `dt` and `dt/2`.
pub fn schrodinger_residual(bd: &BoundaryData, params: &ModelParams, dt: f64, opts: &DopaOptions) -> Result<f64> {
    let base = shoot(bd, params, None, &opts.shoot)?;
    let guess = Some((base.beta_initial, base.eta_initial));
    let k0 = action_representation(&base, bd, params, opts)?;
    let end = base.final_point();
    let h = hamiltonian_charted(
        &ChartedPoint { alpha: end.alpha, beta: bd.beta_final, zeta: end.zeta, eta: bd.eta_final },
        params,
    )?;
    let amplitude_at = |t: f64| -> Result<C64> {
        let sub = bd.with_horizon(t);
        let sol = shoot(&sub, params, guess, &opts.shoot)?;
        action_representation(&sol, &sub, params, opts)
    };
    let t = bd.horizon;
    let central = |step: f64| -> Result<C64> { Ok((amplitude_at(t + step)? - amplitude_at(t - step)?) / (2.0 * step)) };
    let d = (4.0 * central(0.5 * dt)? - central(dt)?) / 3.0;
    Ok((d + I * h * k0).norm() / k0.norm())
}
