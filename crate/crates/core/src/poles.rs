//! Linearised flow about the two fixed points |↑0⟩ and |↓0⟩.
//!
//! Near either pole the flow splits into two 2×2 blocks, one an
//! initial-value problem and one a final-value problem (north) or both
//! initial/final-value problems (south). The solutions below are the exact
//! solutions of the linear systems for any detuning.
//!
//! North pole, variables (ζ, β) and (η, α), Ω_N = √(λ² − Δ²/4):
//!
//! ```text
//! d/dt(ζ, β) = i[[1+Δ, −λ], [λ, 1]](ζ, β)      ζ(0) = ζ′, β(T) = β″
//! d/dt(η, α) = i[[−1−Δ, λ], [−λ, −1]](η, α)    α(0) = α′, η(T) = η″
//! ```
//!
//! South pole, reciprocal variables (ρ, α) and (σ, β), Ω_S = √(λ² + Δ²/4):
//!
//! ```text
//! d/dt(ρ, α) = −i[[1+Δ, λ], [λ, 1]](ρ, α)      ρ(0) = 1/ζ′, α(0) = α′
//! d/dt(σ, β) = i[[1+Δ, λ], [λ, 1]](σ, β)       σ(T) = 1/η″, β(T) = β″
//! ```

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dopa::{shoot, BoundaryData, ShootOptions};
use crate::error::{JcError, Result};
use crate::model::{ChartedPoint, ModelParams, PhasePoint, SpinCoord, I};
use crate::ode::OdeOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleLinearization {
    pub pole: Pole,
    /// Generator in the variables (ζ, β, η, α) at the north pole and
    /// (ρ, α, σ, β) at the south pole.
    pub system_matrix: Matrix4<C64>,
    pub omega_m: f64,
    /// Ω_N (complex when Δ² > 4λ²) or Ω_S.
    pub omega_pole: C64,
}

pub fn omega_north(params: &ModelParams) -> C64 {
    C64::new(params.lambda * params.lambda - 0.25 * params.delta * params.delta, 0.0).sqrt()
}

pub fn omega_south(params: &ModelParams) -> f64 {
    (params.lambda * params.lambda + 0.25 * params.delta * params.delta).sqrt()
}

fn block_matrix(b1: [[C64; 2]; 2], b2: [[C64; 2]; 2]) -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = b1[r][c];
            m[(r + 2, c + 2)] = b2[r][c];
        }
    }
    m
}

pub fn north_matrix(params: &ModelParams) -> PoleLinearization {
    let (l, w) = (C64::from(params.lambda), C64::from(1.0 + params.delta));
    let one = C64::from(1.0);
    PoleLinearization {
        pole: Pole::North,
        system_matrix: block_matrix([[I * w, -I * l], [I * l, I * one]], [[-I * w, I * l], [-I * l, -I * one]]),
        omega_m: 1.0 + 0.5 * params.delta,
        omega_pole: omega_north(params),
    }
}

pub fn south_matrix(params: &ModelParams) -> PoleLinearization {
    let (l, w) = (C64::from(params.lambda), C64::from(1.0 + params.delta));
    let one = C64::from(1.0);
    PoleLinearization {
        pole: Pole::South,
        system_matrix: block_matrix([[-I * w, -I * l], [-I * l, -I * one]], [[I * w, I * l], [I * l, I * one]]),
        omega_m: 1.0 + 0.5 * params.delta,
        omega_pole: C64::from(omega_south(params)),
    }
}

/// cosh(Ωt) and sinh(Ωt)/Ω, finite as Ω → 0.
fn ch_sh(omega: C64, t: f64) -> (C64, C64) {
    let x = omega * t;
    let s = if x.norm() < 1e-8 { C64::from(t) * (1.0 + x * x / 6.0) } else { x.sinh() / omega };
    (x.cosh(), s)
}

/// Linear boundary-value solution about the north pole at time `t`.
pub fn north_bvp_solution(bd: &BoundaryData, params: &ModelParams, t: f64) -> Result<PhasePoint> {
    let (SpinCoord::Direct(z0), SpinCoord::Direct(e1)) = (bd.zeta_initial, bd.eta_final) else {
        return Err(JcError::InvalidParameter("north-pole data must be in the direct chart".into()));
    };
    let (a0, b1, tt) = (bd.alpha_initial, bd.beta_final, bd.horizon);
    let om = omega_north(params);
    let wm = 1.0 + 0.5 * params.delta;
    let hd = 0.5 * params.delta;
    let lam = params.lambda;
    let (ct, st) = ch_sh(om, t);
    let (cr, sr) = ch_sh(om, tt - t);
    let (cf, sf) = ch_sh(om, tt);
    let den = cf - I * hd * sf;
    let ph = |x: f64| C64::from_polar(1.0, x);
    let beta = (b1 * ph(-wm * (tt - t)) * (ct - I * hd * st) - I * lam * z0 * ph(wm * t) * sr) / den;
    let zeta = (z0 * ph(wm * t) * (cr - I * hd * sr) - I * lam * b1 * ph(-wm * (tt - t)) * st) / den;
    let alpha = (a0 * ph(-wm * t) * (cr - I * hd * sr) - I * lam * e1 * ph(wm * (tt - t)) * st) / den;
    let eta = (e1 * ph(wm * (tt - t)) * (ct - I * hd * st) - I * lam * a0 * ph(-wm * t) * sr) / den;
    Ok(PhasePoint::new(alpha, beta, zeta, eta))
}

/// Linear solution about the south pole at time `t`, as (ρ, α, σ, β) in a
/// [`ChartedPoint`] with reciprocal spin coordinates.
pub fn south_bvp_solution(bd: &BoundaryData, params: &ModelParams, t: f64) -> Result<ChartedPoint> {
    let (SpinCoord::Reciprocal(r0), SpinCoord::Reciprocal(s1)) = (bd.zeta_initial, bd.eta_final) else {
        return Err(JcError::InvalidParameter("south-pole data must be in the reciprocal chart".into()));
    };
    let (a0, b1, tt) = (bd.alpha_initial, bd.beta_final, bd.horizon);
    let om = omega_south(params);
    let wm = 1.0 + 0.5 * params.delta;
    let q = 0.5 * params.delta / om;
    let p = params.lambda / om;
    let (c, s) = ((om * t).cos(), (om * t).sin());
    let (cr, sr) = ((om * (tt - t)).cos(), (om * (tt - t)).sin());
    let e0 = C64::from_polar(1.0, -wm * t);
    let e1 = C64::from_polar(1.0, -wm * (tt - t));
    let alpha = e0 * ((c + I * q * s) * a0 - I * p * s * r0);
    let rho = e0 * ((c - I * q * s) * r0 - I * p * s * a0);
    let beta = e1 * ((cr + I * q * sr) * b1 - I * p * sr * s1);
    let sigma = e1 * ((cr - I * q * sr) * s1 - I * p * sr * b1);
    Ok(ChartedPoint { alpha, beta, zeta: SpinCoord::Reciprocal(rho), eta: SpinCoord::Reciprocal(sigma) })
}

/// Fixed unit-scale direction of the boundary data used by
/// [`nonlinear_vs_linear_error`].
const DIRECTION: [C64; 4] =
    [C64 { re: 0.6, im: 0.3 }, C64 { re: -0.4, im: 0.5 }, C64 { re: 0.5, im: -0.2 }, C64 { re: 0.3, im: 0.45 }];

/// Boundary data of size ε about `pole`.
pub fn pole_boundary(pole: Pole, epsilon: f64, horizon: f64) -> Result<BoundaryData> {
    let [a, z, b, e] = DIRECTION.map(|d| d * epsilon);
    let coord = |v| if pole == Pole::North { SpinCoord::Direct(v) } else { SpinCoord::Reciprocal(v) };
    BoundaryData::charted(a, coord(z), b, coord(e), horizon)
}

/// Largest deviation between the full boundary-value solution and the
/// linear one over `[0, T]`, for boundary data of size ε.
pub fn nonlinear_vs_linear_error(pole: Pole, epsilon: f64, params: &ModelParams, horizon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let bd = pole_boundary(pole, epsilon, horizon)?;
    let tol = 1e-6 * epsilon.powi(3);
    let opts = ShootOptions { tol, ode: OdeOptions::with_tol(tol.min(1e-11)), ..ShootOptions::default() };
    let sol = shoot(&bd, params, None, &opts)?;
    let mut worst = 0.0f64;
    for (&t, p) in sol.trajectory.times.iter().zip(&sol.trajectory.points) {
        let (full, lin) = match pole {
            Pole::North => (p.to_direct(), north_bvp_solution(&bd, params, t)?),
            Pole::South => {
                let l = south_bvp_solution(&bd, params, t)?;
                let as_rec = |c: SpinCoord| if c.is_reciprocal() { c.raw() } else { c.raw().inv() };
                (
                    PhasePoint::new(p.alpha, p.beta, as_rec(p.zeta), as_rec(p.eta)),
                    PhasePoint::new(l.alpha, l.beta, l.zeta.raw(), l.eta.raw()),
                )
            }
        };
        for d in [full.alpha - lin.alpha, full.beta - lin.beta, full.zeta - lin.zeta, full.eta - lin.eta] {
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector4;

    fn prm(l: f64, d: f64) -> ModelParams {
        ModelParams::new(l, d).unwrap()
    }

    fn north_bd() -> BoundaryData {
        pole_boundary(Pole::North, 0.7, 3.0).unwrap()
    }

    fn south_bd() -> BoundaryData {
        pole_boundary(Pole::South, 0.7, 3.0).unwrap()
    }

    fn vec_north(p: &PhasePoint) -> Vector4<C64> {
        Vector4::new(p.zeta, p.beta, p.eta, p.alpha)
    }

    fn vec_south(p: &ChartedPoint) -> Vector4<C64> {
        Vector4::new(p.zeta.raw(), p.alpha, p.eta.raw(), p.beta)
    }

    #[test]
    fn frequencies() {
        assert_eq!(north_matrix(&prm(0.4, 0.0)).omega_pole, C64::from(0.4));
        assert_eq!(south_matrix(&prm(0.4, 0.0)).omega_pole, C64::from(0.4));
        let om = north_matrix(&prm(0.1, 0.6)).omega_pole;
        assert!(om.re.abs() < 1e-16 && om.im > 0.0);
        assert!((om * om - C64::from(0.01 - 0.09)).norm() < 1e-15);
        let p = prm(0.7, 0.4);
        assert_eq!(omega_south(&p), crate::fluct::fluctuation_frequency(&p));
        assert_eq!(omega_south(&p), crate::exact::rabi_frequency(1, &p));
    }

    #[test]
    fn generators_traceless() {
        for p in [prm(0.3, 0.1), prm(1.0, -0.7), prm(0.05, 2.0)] {
            for lin in [north_matrix(&p), south_matrix(&p)] {
                let m = lin.system_matrix;
                assert!(m.trace().norm() < 1e-15);
                let b1 = m[(0, 0)] + m[(1, 1)];
                let b2 = m[(2, 2)] + m[(3, 3)];
                assert!((I * b1).im.abs() < 1e-15 && (I * b2).im.abs() < 1e-15);
                assert!(m.fixed_view::<2, 2>(0, 2).norm() == 0.0);
            }
        }
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        // eigenvalues of the north blocks are ±iω_m ± Ω_N, of the south ±iω_m ± iΩ_S
        for p in [prm(0.3, 0.1), prm(0.8, -0.5), prm(0.1, 0.9)] {
            let wm = 1.0 + 0.5 * p.delta;
            let on = omega_north(&p);
            let os = omega_south(&p);
            let north_expected = [I * wm + on, I * wm - on, -I * wm + on, -I * wm - on];
            let south_expected = [-I * wm + I * os, -I * wm - I * os, I * wm + I * os, I * wm - I * os];
            for (lin, expected) in [(north_matrix(&p), north_expected), (south_matrix(&p), south_expected)] {
                let ev = lin.system_matrix.eigenvalues().expect("complex Schur");
                for e in expected {
                    let nearest = ev.iter().map(|v| (v - e).norm()).fold(f64::INFINITY, f64::min);
                    assert!(nearest < 1e-10, "{e} missing from {ev:?}");
                }
            }
        }
    }

    #[test]
    fn north_boundary_conditions() {
        for p in [prm(0.3, 0.1), prm(0.1, 0.9), prm(0.5, 0.0)] {
            let bd = north_bd();
            let s0 = north_bvp_solution(&bd, &p, 0.0).unwrap();
            let s1 = north_bvp_solution(&bd, &p, bd.horizon).unwrap();
            assert!((s0.alpha - bd.alpha_initial).norm() < 1e-15);
            assert!((s0.zeta - bd.zeta_initial.raw()).norm() < 1e-15);
            assert!((s1.beta - bd.beta_final).norm() < 1e-15);
            assert!((s1.eta - bd.eta_final.raw()).norm() < 1e-15);
        }
    }

    #[test]
    fn south_boundary_conditions() {
        let bd = south_bd();
        let p = prm(0.3, 0.1);
        let s0 = south_bvp_solution(&bd, &p, 0.0).unwrap();
        let s1 = south_bvp_solution(&bd, &p, bd.horizon).unwrap();
        assert_eq!(s0.alpha, bd.alpha_initial);
        assert_eq!(s0.zeta, bd.zeta_initial);
        assert_eq!(s1.beta, bd.beta_final);
        assert_eq!(s1.eta, bd.eta_final);
    }

    fn fd_check<F: Fn(f64) -> Vector4<C64>>(f: F, m: &Matrix4<C64>, horizon: f64) {
        let h = 1e-3;
        for k in 1..10 {
            let t = horizon * k as f64 / 10.0;
            // fourth-order central difference
            let d = (f(t - 2.0 * h) - f(t - h) * C64::from(8.0) + f(t + h) * C64::from(8.0) - f(t + 2.0 * h))
                / C64::from(12.0 * h);
            let err = (d - m * f(t)).norm();
            assert!(err < 1e-9, "t={t} err={err:e}");
        }
    }

    #[test]
    fn north_solution_satisfies_flow() {
        for p in [prm(0.3, 0.1), prm(0.1, 0.9), prm(0.7, -0.4)] {
            let bd = north_bd();
            let m = north_matrix(&p).system_matrix;
            fd_check(|t| vec_north(&north_bvp_solution(&bd, &p, t).unwrap()), &m, bd.horizon);
        }
    }

    #[test]
    fn south_solution_satisfies_flow() {
        for p in [prm(0.3, 0.1), prm(0.1, 0.9), prm(0.7, -0.4)] {
            let bd = south_bd();
            let m = south_matrix(&p).system_matrix;
            fd_check(|t| vec_south(&south_bvp_solution(&bd, &p, t).unwrap()), &m, bd.horizon);
        }
    }

    #[test]
    fn resonant_north_solution_closed_form() {
        // at Δ = 0: β(t) = [β″e^{−i(T−t)}cosh λt − iζ′e^{it}sinh λ(T−t)]/cosh λT
        let p = prm(0.4, 0.0);
        let bd = north_bd();
        let (tt, t) = (bd.horizon, 1.3);
        let (z0, b1) = (bd.zeta_initial.raw(), bd.beta_final);
        let expected = (b1 * C64::from_polar(1.0, -(tt - t)) * (0.4 * t).cosh()
            - I * z0 * C64::from_polar(1.0, t) * (0.4 * (tt - t)).sinh())
            / (0.4 * tt).cosh();
        assert!((north_bvp_solution(&bd, &p, t).unwrap().beta - expected).norm() < 1e-14);
    }

    #[test]
    fn decoupled_limit() {
        let p = prm(0.0, 0.3);
        let bd = north_bd();
        let t = 1.7;
        let s = north_bvp_solution(&bd, &p, t).unwrap();
        assert!((s.alpha - bd.alpha_initial * C64::from_polar(1.0, -t)).norm() < 1e-14);
        assert!((s.zeta - bd.zeta_initial.raw() * C64::from_polar(1.0, 1.3 * t)).norm() < 1e-14);
        let s = south_bvp_solution(&south_bd(), &p, t).unwrap();
        assert!((s.alpha - south_bd().alpha_initial * C64::from_polar(1.0, -t)).norm() < 1e-14);
    }

    #[test]
    fn north_saturates_south_oscillates() {
        let p = prm(0.5, 0.1);
        let bd = north_bd();
        // far from both ends the hyperbolic solution is exponentially small
        let mid = north_bvp_solution(&bd.with_horizon(40.0), &p, 20.0).unwrap();
        assert!(mid.alpha.norm() < 1e-3 && mid.beta.norm() < 1e-3);
        let sb = south_bd().with_horizon(40.0);
        let bound = 2.0 * DIRECTION.iter().map(|d| d.norm()).sum::<f64>() * 0.7;
        for k in 0..=40 {
            let s = south_bvp_solution(&sb, &p, k as f64).unwrap();
            assert!(s.alpha.norm() < bound && s.zeta.raw().norm() < bound);
        }
    }

    #[test]
    fn zero_amplitude_error() {
        assert_eq!(nonlinear_vs_linear_error(Pole::North, 0.0, &prm(0.3, 0.1), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn linearisation_error_shrinks() {
        let p = prm(0.3, 0.1);
        for pole in [Pole::North, Pole::South] {
            let e1 = nonlinear_vs_linear_error(pole, 0.04, &p, 3.0).unwrap();
            let e2 = nonlinear_vs_linear_error(pole, 0.02, &p, 3.0).unwrap();
            assert!(e2 < e1 / 3.0, "{pole:?}: {e1:e} {e2:e}");
        }
    }
}
