//! Gaussian fluctuations about the north pole.
//!
//! The quadratic fluctuation Hamiltonian about |↑0⟩ reduces to
//! H₁ = −[(Δ/2)(aa† + b†b) + iλ(ab − a†b†)], disentangled as
//! U₁ = e^{μ a†b†} e^{ν ab} e^{ξ(aa† + b†b)}. The rate equations for
//! (μ, ν, ξ) form a 3×3 linear system solved pointwise by [`su11_rhs`].
//!
//! Two closed forms are provided for ξ. [`xi_closed_form`] uses
//! f(T) = cos ΩT − i(Δ/2Ω) sin ΩT with Ω = √(λ² + Δ²/4) and reproduces the
//! exact survival amplitude. [`xi_su11_solution`] is what the rate
//! equations actually integrate to: −log[cosh Ω_N T − i(Δ/2Ω_N) sinh Ω_N T]
//! with Ω_N = √(λ² − Δ²/4). The two agree through third order in T.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{JcError, Result};
use crate::model::{Method, ModelParams, PropagatorElement, I};
use crate::ode::{integrate, OdeOptions};

/// Second-order expansion coefficients of H in the fluctuation
/// coordinates (x_a, y_a, x̃_b, ỹ_b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoefficients {
    pub a1: C64,
    pub a2: C64,
    pub a3: C64,
    pub b1: C64,
    pub b2: C64,
    pub b3: C64,
    pub c1: C64,
    pub c2: C64,
    pub c3: C64,
    pub c4: C64,
}

/// Real labels (ϑ, φ, p, q) of a point on the dominant path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePoint {
    pub theta: f64,
    pub phi: f64,
    pub p: f64,
    pub q: f64,
}

/// ⟨ϑφpq|H|ϑφpq⟩ = ½(p²+q²) + ((1+Δ)/2) cos ϑ + (λ/√2) sin ϑ (q cos φ − p sin φ).
pub fn real_hamiltonian(pt: &AnglePoint, params: &ModelParams) -> f64 {
    0.5 * (pt.p * pt.p + pt.q * pt.q)
        + 0.5 * (1.0 + params.delta) * pt.theta.cos()
        + params.lambda / SQRT_2 * pt.theta.sin() * (pt.q * pt.phi.cos() - pt.p * pt.phi.sin())
}

/// Coefficients at a non-polar point, with second derivatives taken in
/// (cos ϑ, φ, p, q). At a pole the rotated-chart constants are returned when
/// `rotate_at_pole` is set; otherwise the chart is singular.
pub fn quadratic_coefficients(
    pt: &AnglePoint,
    params: &ModelParams,
    rotate_at_pole: bool,
) -> Result<QuadraticCoefficients> {
    let sin = pt.theta.sin();
    if sin.abs() < 1e-12 {
        return if rotate_at_pole && pt.theta.cos() > 0.0 {
            Ok(north_pole_coefficients(params))
        } else {
            Err(JcError::ChartSingularity)
        };
    }
    let s = params.spin_s;
    let rs = s.sqrt();
    let cos = pt.theta.cos();
    let g = params.lambda / SQRT_2;
    let (sp, cp) = pt.phi.sin_cos();
    let drive = pt.q * cp - pt.p * sp;
    // derivatives of sin ϑ = √(1 − c²) in c = cos ϑ
    let d_sin = -cos / sin;
    let dd_sin = -1.0 / (sin * sin * sin);
    let h_cc = g * drive * dd_sin;
    let h_fc = g * (-pt.q * sp - pt.p * cp) * d_sin;
    let h_ff = -g * sin * drive;
    let h_pc = -g * sp * d_sin;
    let h_pf = -g * sin * cp;
    let h_qc = g * cp * d_sin;
    let h_qf = -g * sin * sp;
    let r = |x: f64| C64::new(x, 0.0);
    Ok(QuadraticCoefficients {
        a1: r(0.5),
        a2: r(0.0),
        a3: r(0.5),
        b1: r(sin * sin / (2.0 * s) * h_cc),
        b2: r(h_fc / s),
        b3: r(h_ff / (2.0 * s * sin * sin)),
        c1: r(sin / rs * h_pc),
        c2: r(h_pf / (rs * sin)),
        c3: r(sin / rs * h_qc),
        c4: r(h_qf / (rs * sin)),
    })
}

/// Constant coefficients about the north pole in the rotated chart:
/// H₀ = ½(P_a² + Q_a² − 1) − ((1+Δ)/2)(P_b² + Q_b² − 1) + λ(P_b Q_a + Q_b P_a).
pub fn north_pole_coefficients(params: &ModelParams) -> QuadraticCoefficients {
    let r = |x: f64| C64::new(x, 0.0);
    let b = -0.5 * (1.0 + params.delta);
    QuadraticCoefficients {
        a1: r(0.5),
        a2: r(0.0),
        a3: r(0.5),
        b1: r(b),
        b2: r(0.0),
        b3: r(b),
        c1: r(0.0),
        c2: r(params.lambda),
        c3: r(params.lambda),
        c4: r(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su11State {
    pub mu: C64,
    pub nu: C64,
    pub xi: C64,
    pub time: f64,
}

impl Su11State {
    pub fn origin() -> Self {
        Self { mu: C64::default(), nu: C64::default(), xi: C64::default(), time: 0.0 }
    }
}

/// (μ̇, ν̇, ξ̇) from
///
/// ```text
/// ⎛ λ  ⎞   ⎛ 1   μ²   −2μ(1−μν) ⎞ ⎛ μ̇ ⎞
/// ⎜ λ  ⎟ = ⎜ 0   −1   −2ν       ⎟ ⎜ ν̇ ⎟
/// ⎝ iΔ ⎠   ⎝ 0   −2μ  2(1−2μν)  ⎠ ⎝ ξ̇ ⎠
/// ```
pub fn su11_rhs(state: &Su11State, params: &ModelParams) -> Result<(C64, C64, C64)> {
    let (mu, nu) = (state.mu, state.nu);
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();
    let m = Matrix3::new(
        one,
        mu * mu,
        -2.0 * mu * (one - mu * nu),
        zero,
        -one,
        -2.0 * nu,
        zero,
        -2.0 * mu,
        2.0 * (one - 2.0 * mu * nu),
    );
    // det = −2(1 − 2μν) − 4μν = −2: the system is never singular, but
    // μ, ν blow up where the vacuum amplitude vanishes
    let rhs = Vector3::new(C64::new(params.lambda, 0.0), C64::new(params.lambda, 0.0), I * params.delta);
    let sol = m.lu().solve(&rhs).ok_or(JcError::SingularSu11 { t: state.time })?;
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(JcError::SingularSu11 { t: state.time });
    }
    Ok((sol[0], sol[1], sol[2]))
}

/// Integrates the rate equations from the origin to `t`.
pub fn integrate_su11(t: f64, params: &ModelParams, opts: &OdeOptions) -> Result<Su11State> {
    let path = integrate(
        |time, y, dy| {
            let st = Su11State { mu: y[0], nu: y[1], xi: y[2], time };
            let (a, b, c) = su11_rhs(&st, params)?;
            dy[0] = a;
            dy[1] = b;
            dy[2] = c;
            Ok(())
        },
        0.0,
        &[C64::default(); 3],
        t,
        opts,
    )
    .map_err(|_| JcError::SingularSu11 { t })?;
    let y = path.last();
    Ok(Su11State { mu: y[0], nu: y[1], xi: y[2], time: t })
}

/// Ω = √(λ² + Δ²/4).
pub fn fluctuation_frequency(params: &ModelParams) -> f64 {
    (params.lambda * params.lambda + 0.25 * params.delta * params.delta).sqrt()
}

/// cos ΩT − i(Δ/2Ω) sin ΩT.
pub fn survival_factor(t: f64, params: &ModelParams) -> C64 {
    let w = fluctuation_frequency(params);
    let (s, c) = (w * t).sin_cos();
    let sinc = if w == 0.0 { t } else { s / w };
    C64::new(c, -0.5 * params.delta * sinc)
}

/// cos ΩT − i(Δ/2) sin ΩT, without the 1/Ω in the sine coefficient.
pub fn survival_factor_half_delta(t: f64, params: &ModelParams) -> C64 {
    let w = fluctuation_frequency(params);
    let (s, c) = (w * t).sin_cos();
    C64::new(c, -0.5 * params.delta * s)
}

/// log f(T) continued from log f(0) = 0 along the time axis.
fn continuous_log<F: Fn(f64) -> C64>(f: F, t: f64, rate: f64) -> Result<C64> {
    let steps = ((t.abs() * rate.max(1.0)) / 0.05).ceil().max(1.0) as usize;
    let mut prev = f(0.0);
    let mut arg = prev.arg();
    for k in 1..=steps {
        let v = f(t * k as f64 / steps as f64);
        if v.norm() == 0.0 {
            return Err(JcError::SingularSu11 { t: t * k as f64 / steps as f64 });
        }
        let mut d = (v / prev).arg();
        // crossing an exact zero of a real f: continue through +iπ
        if (d.abs() - PI).abs() < 1e-12 {
            d = PI;
        }
        arg += d;
        prev = v;
    }
    Ok(C64::new(prev.norm().ln(), arg))
}

/// ξ(T) = iΔT + log[cos ΩT − i(Δ/2Ω) sin ΩT], branch continued from T = 0.
pub fn xi_closed_form(t: f64, params: &ModelParams) -> Result<C64> {
    let log = continuous_log(|s| survival_factor(s, params), t, fluctuation_frequency(params))?;
    Ok(I * params.delta * t + log)
}

/// ξ(T) built on [`survival_factor_half_delta`].
pub fn xi_half_delta_form(t: f64, params: &ModelParams) -> Result<C64> {
    let log = continuous_log(|s| survival_factor_half_delta(s, params), t, fluctuation_frequency(params))?;
    Ok(I * params.delta * t + log)
}

/// Solution of the rate equations in closed form:
/// ξ = −log[cosh Ω_N T − i(Δ/2Ω_N) sinh Ω_N T], Ω_N = √(λ² − Δ²/4).
pub fn xi_su11_solution(t: f64, params: &ModelParams) -> Result<C64> {
    let wn = C64::new(params.lambda * params.lambda - 0.25 * params.delta * params.delta, 0.0).sqrt();
    let g = |s: f64| {
        let x = wn * s;
        let sinhc = if wn.norm() == 0.0 { C64::new(s, 0.0) } else { x.sinh() / wn };
        x.cosh() - I * 0.5 * params.delta * sinhc
    };
    Ok(-continuous_log(g, t, wn.norm())?)
}

/// ⟨00|U₀(T)|00⟩ = e^{iΔT/2}[cos ΩT − i(Δ/2Ω) sin ΩT].
pub fn vacuum_amplitude(t: f64, params: &ModelParams) -> C64 {
    (I * 0.5 * params.delta * t).exp() * survival_factor(t, params)
}

/// Dominant-path survival at the north pole: e^{−i(1+Δ)T/2}.
pub fn dopa_survival(t: f64, params: &ModelParams) -> PropagatorElement {
    PropagatorElement {
        value: (-I * 0.5 * (1.0 + params.delta) * t).exp(),
        method: Method::Dopa,
        time: t,
        residual: 0.0,
        tolerance: 0.0,
    }
}

/// e^{−iT/2}[cos ΩT − i(Δ/2Ω) sin ΩT], the dominant-path phase times the
/// vacuum amplitude.
pub fn corrected_survival(t: f64, params: &ModelParams) -> PropagatorElement {
    let value = dopa_survival(t, params).value * vacuum_amplitude(t, params);
    PropagatorElement { value, method: Method::FluctuationCorrected, time: t, residual: 0.0, tolerance: 0.0 }
}

/// Generators aa† + b†b, ab, a†b† on two modes with occupations ≤ m.
/// Index of |n_a n_b⟩ is n_a(m+1) + n_b.
pub fn su11_generators(m: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    let d = (m + 1) * (m + 1);
    let idx = |a: usize, b: usize| a * (m + 1) + b;
    let mut k0 = DMatrix::zeros(d, d);
    let mut km = DMatrix::zeros(d, d);
    let mut kp = DMatrix::zeros(d, d);
    for a in 0..=m {
        for b in 0..=m {
            k0[(idx(a, b), idx(a, b))] = C64::new((a + b + 1) as f64, 0.0);
            if a >= 1 && b >= 1 {
                let amp = ((a * b) as f64).sqrt();
                km[(idx(a - 1, b - 1), idx(a, b))] = C64::new(amp, 0.0);
                kp[(idx(a, b), idx(a - 1, b - 1))] = C64::new(amp, 0.0);
            }
        }
    }
    (k0, km, kp)
}
