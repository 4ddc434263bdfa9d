//! Weierstrass elliptic functions for complex argument and complex
//! invariants, and the cubic reduction of the classical spin-oscillator flow.
//!
//! Evaluation reduces the argument to the Voronoi cell of the period lattice,
//! sums the Laurent series of ℘ inside a disk well within its radius of
//! convergence, and climbs back with the duplication formulas
//!
//! ```text
//! ℘(2w) = −2℘ + (℘''/2℘')²      ζ(2w) = 2ζ + ℘''/2℘'      σ(2w) = −℘'σ⁴
//! ```
//!
//! Quasi-periodicity restores ζ_w and σ_w from the reduced argument. Lattice
//! half-periods come from Carlson's R_F and are accepted only when the
//! Legendre relation confirms a basis; otherwise evaluation proceeds without
//! reduction.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{JcError, Result};
use crate::model::{ConservedPair, ModelParams, I};

const LAURENT_TERMS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticConfig {
    /// Relative discriminant below which the closed degenerate forms are used.
    pub degenerate_tol: f64,
    /// Reduced arguments closer than this (relative to the lattice scale)
    /// to a lattice point count as poles.
    pub pole_tol: f64,
    /// Target relative residual of the inverse.
    pub inverse_tol: f64,
    pub inverse_max_iter: usize,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self { degenerate_tol: 1e-24, pole_tol: 1e-13, inverse_tol: 1e-12, inverse_max_iter: 60 }
    }
}

/// Coefficients of the monic cubic P(u) = u³ + a₂u² + a₁u + a₀ governing
/// the spin inversion u = (1−ζη)/(1+ζη) through ½u̇² = λ²P(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPotential {
    pub a0: C64,
    pub a1: C64,
    pub a2: C64,
}

impl CubicPotential {
    pub fn eval(&self, u: C64) -> C64 {
        ((u + self.a2) * u + self.a1) * u + self.a0
    }

    /// V(u) = −λ²P(u), so that ½u̇² + V(u) = 0.
    pub fn potential(&self, u: C64, params: &ModelParams) -> C64 {
        -params.lambda * params.lambda * self.eval(u)
    }
}

/// Cubic coefficients from the conserved pair.
///
/// With N the excitation integral and C the interaction integral,
///
/// ```text
/// a₀ = 2N − 2C²/λ²,   a₁ = −1 + 2ΔC/λ²,   a₂ = −2N − Δ²/(2λ²)
/// ```
///
/// These make the north pole (N = ½, C = Δ/2, u = 1) a double root.
pub fn cubic_from_constants(constants: &ConservedPair, params: &ModelParams) -> Result<CubicPotential> {
    let l2 = params.lambda * params.lambda;
    if l2 == 0.0 {
        return Err(JcError::ZeroCoupling);
    }
    let (n, c, d) = (constants.n_value, constants.c_value, params.delta);
    Ok(CubicPotential {
        a0: 2.0 * n - 2.0 * c * c / l2,
        a1: -1.0 + 2.0 * d * c / l2,
        a2: -2.0 * n - d * d / (2.0 * l2),
    })
}

/// g₂ = −4(a₁ − a₂²/3), g₃ = −(4/3)(2a₂²/9 − a₁)a₂ − 4a₀.
pub fn invariants_from_cubic(cubic: &CubicPotential) -> WeierstrassInvariants {
    let (a0, a1, a2) = (cubic.a0, cubic.a1, cubic.a2);
    let g2 = -4.0 * (a1 - a2 * a2 / 3.0);
    let g3 = -(4.0 / 3.0) * (2.0 * a2 * a2 / 9.0 - a1) * a2 - 4.0 * a0;
    WeierstrassInvariants::new(g2, g3)
}

/// ℘, ℘′, ζ_w and log σ_w at one point.
#[derive(Debug, Clone, Copy)]
pub struct WeierstrassValues {
    pub wp: C64,
    pub wp_prime: C64,
    pub zeta: C64,
    /// log σ_w, defined modulo 2πi.
    pub ln_sigma: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Lattice {
    /// Reduced half-period basis, |ω₁| ≤ |ω₃|.
    w1: C64,
    w3: C64,
    /// ζ_w(ω₁), ζ_w(ω₃).
    eta1: C64,
    eta3: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Degeneration {
    /// g₂ = g₃ = 0: ℘ = 1/z².
    Zero,
    /// Double root e, simple root −2e.
    DoubleRoot { e: C64, k: C64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassInvariants {
    pub g2: C64,
    pub g3: C64,
    pub discriminant: C64,
    /// (ω₁, ω₃) when the lattice is non-degenerate and its basis verified.
    pub half_periods: Option<(C64, C64)>,
    config: EllipticConfig,
    roots: [C64; 3],
    degeneration: Option<Degeneration>,
    lattice: Option<Lattice>,
    laurent: Vec<C64>,
    series_radius: f64,
}

impl WeierstrassInvariants {
    pub fn new(g2: C64, g3: C64) -> Self {
        Self::with_config(g2, g3, EllipticConfig::default())
    }

    pub fn with_config(g2: C64, g3: C64, config: EllipticConfig) -> Self {
        let discriminant = g2 * g2 * g2 - 27.0 * g3 * g3;
        let roots = cubic_roots(g2, g3);
        let scale = (g2.norm().powi(3)).max(g3.norm_sqr());
        let degeneration = if scale == 0.0 || (g2.norm() == 0.0 && g3.norm() == 0.0) {
            Some(Degeneration::Zero)
        } else if discriminant.norm() <= config.degenerate_tol * scale {
            let e = -1.5 * g3 / g2;
            Some(Degeneration::DoubleRoot { e, k: (3.0 * e).sqrt() })
        } else {
            None
        };

        let laurent = laurent_coefficients(g2, g3);
        let series_radius = series_radius(&laurent);
        let mut inv = Self {
            g2,
            g3,
            discriminant,
            half_periods: None,
            config,
            roots,
            degeneration,
            lattice: None,
            laurent,
            series_radius,
        };
        if inv.degeneration.is_none() {
            inv.lattice = inv.find_lattice();
            inv.half_periods = inv.lattice.map(|l| (l.w1, l.w3));
        }
        inv
    }

    pub fn is_degenerate(&self) -> bool {
        self.degeneration.is_some()
    }

    /// Roots e₁, e₂, e₃ of 4t³ − g₂t − g₃.
    pub fn roots(&self) -> [C64; 3] {
        self.roots
    }

    pub fn config(&self) -> &EllipticConfig {
        &self.config
    }

    /// ζ_w(ω₁), ζ_w(ω₃) for the verified basis.
    pub fn quasi_periods(&self) -> Option<(C64, C64)> {
        self.lattice.map(|l| (l.eta1, l.eta3))
    }

    /// Right-hand side 4p³ − g₂p − g₃ of the defining equation.
    pub fn cubic_rhs(&self, p: C64) -> C64 {
        4.0 * p * p * p - self.g2 * p - self.g3
    }

    /// All four functions at `z`.
    pub fn eval(&self, z: C64) -> Result<WeierstrassValues> {
        match self.degeneration {
            Some(Degeneration::Zero) => {
                if z.norm() < self.config.pole_tol {
                    return Err(JcError::LatticePole { z });
                }
                Ok(WeierstrassValues {
                    wp: (z * z).inv(),
                    wp_prime: -2.0 * (z * z * z).inv(),
                    zeta: z.inv(),
                    ln_sigma: z.ln(),
                })
            }
            Some(Degeneration::DoubleRoot { e, k }) => {
                let kz = k * z;
                let (s, c) = (kz.sinh(), kz.cosh());
                if s.norm() < self.config.pole_tol * (1.0 + kz.norm()) {
                    return Err(JcError::LatticePole { z });
                }
                let k2 = k * k;
                Ok(WeierstrassValues {
                    wp: e + k2 / (s * s),
                    wp_prime: -2.0 * k2 * k * c / (s * s * s),
                    zeta: -e * z + k * c / s,
                    ln_sigma: (s / k).ln() - 0.5 * e * z * z,
                })
            }
            None => self.eval_lattice(z),
        }
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        Ok(self.eval(z)?.wp)
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        Ok(self.eval(z)?.wp_prime)
    }

    pub fn w_zeta(&self, z: C64) -> Result<C64> {
        Ok(self.eval(z)?.zeta)
    }

    /// σ_w(z); zero on the lattice.
    pub fn w_sigma(&self, z: C64) -> C64 {
        match self.eval(z) {
            Ok(v) => v.ln_sigma.exp(),
            Err(_) => C64::default(),
        }
    }

    /// log σ_w(z) modulo 2πi.
    pub fn w_sigma_ln(&self, z: C64) -> Result<C64> {
        Ok(self.eval(z)?.ln_sigma)
    }

    fn eval_lattice(&self, z: C64) -> Result<WeierstrassValues> {
        let Some(lat) = self.lattice else {
            return self.eval_unreduced(z);
        };
        let (m, n) = nearest_lattice_point(z, lat.w1, lat.w3);
        let shift = 2.0 * (m as f64) * lat.w1 + 2.0 * (n as f64) * lat.w3;
        let zr = z - shift;
        if zr.norm() < self.config.pole_tol * lat.w1.norm() {
            return Err(JcError::LatticePole { z });
        }
        let mut v = self.eval_unreduced(zr)?;
        if m != 0 || n != 0 {
            let eta = 2.0 * (m as f64) * lat.eta1 + 2.0 * (n as f64) * lat.eta3;
            v.zeta += eta;
            let half_shift = (m as f64) * lat.w1 + (n as f64) * lat.w3;
            let parity = (m + n + m * n).rem_euclid(2) as f64;
            v.ln_sigma += eta * (zr + half_shift) + I * PI * parity;
        }
        Ok(v)
    }

    /// Laurent series in a small disk plus repeated duplication.
    fn eval_unreduced(&self, z: C64) -> Result<WeierstrassValues> {
        let r = z.norm();
        if r < self.config.pole_tol * self.series_radius.min(1.0) {
            return Err(JcError::LatticePole { z });
        }
        let mut doublings = 0;
        let mut w = z;
        while w.norm() > self.series_radius {
            w *= 0.5;
            doublings += 1;
            if doublings > 200 {
                return Err(JcError::LatticePole { z });
            }
        }
        let mut v = self.laurent_eval(w);
        for _ in 0..doublings {
            let p = v.wp;
            let d = v.wp_prime;
            if d.norm() == 0.0 || !d.is_finite() {
                return Err(JcError::LatticePole { z });
            }
            let s = 6.0 * p * p - 0.5 * self.g2;
            let q = s / (2.0 * d);
            let dq = (12.0 * p * d * d - s * s) / (2.0 * d * d);
            v = WeierstrassValues {
                wp: -2.0 * p + q * q,
                wp_prime: -d + q * dq,
                zeta: 2.0 * v.zeta + q,
                ln_sigma: (-d).ln() + 4.0 * v.ln_sigma,
            };
        }
        if !v.wp.is_finite() || !v.wp_prime.is_finite() {
            return Err(JcError::LatticePole { z });
        }
        Ok(v)
    }

    fn laurent_eval(&self, w: C64) -> WeierstrassValues {
        let w2 = w * w;
        let mut wp = w2.inv();
        let mut dp = -2.0 * w2.inv() / w;
        let mut zeta = w.inv();
        let mut ln_sigma = w.ln();
        // term index k ≥ 2 multiplies w^(2k−2)
        let mut pow = w2; // w^(2k−2) at k = 2
        for (idx, &c) in self.laurent.iter().enumerate() {
            // odd-indexed coefficients vanish when g₃ = 0, so no early exit
            let k = (idx + 2) as f64;
            let t = c * pow;
            wp += t;
            dp += (2.0 * k - 2.0) * t / w;
            zeta -= t * w / (2.0 * k - 1.0);
            ln_sigma -= t * w2 / ((2.0 * k - 1.0) * 2.0 * k);
            pow *= w2;
        }
        WeierstrassValues { wp, wp_prime: dp, zeta, ln_sigma }
    }

    fn find_lattice(&self) -> Option<Lattice> {
        let e = self.roots;
        let halves: Vec<C64> = (0..3)
            .filter_map(|j| {
                let (k, l) = ((j + 1) % 3, (j + 2) % 3);
                carlson_rf_any(C64::default(), e[j] - e[k], e[j] - e[l])
            })
            .collect();
        let mut best: Option<Lattice> = None;
        for a in 0..halves.len() {
            for b in (a + 1)..halves.len() {
                if let Some(lat) = self.try_basis(halves[a], halves[b]) {
                    best = Some(lat);
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
        best
    }

    fn try_basis(&self, h1: C64, h2: C64) -> Option<Lattice> {
        let (w1, w3) = gauss_reduce(h1, h2)?;
        let scale = self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(1e-300);
        for w in [w1, w3, w1 + w3] {
            let v = self.eval_unreduced(w).ok()?;
            // half-periods are critical points of ℘ at a root
            let near_root = self.roots.iter().any(|r| (v.wp - r).norm() < 1e-6 * scale.max(v.wp.norm()));
            if !near_root || v.wp_prime.norm() > 1e-6 * scale.powf(1.5).max(1e-12) {
                return None;
            }
        }
        let eta1 = self.eval_unreduced(w1).ok()?.zeta;
        let eta3 = self.eval_unreduced(w3).ok()?.zeta;
        let legendre = eta1 * w3 - eta3 * w1;
        if (legendre.norm() - 0.5 * PI).abs() > 1e-6 {
            return None;
        }
        // orient so that η₁ω₃ − η₃ω₁ = iπ/2
        let (w3, eta3) = if legendre.im < 0.0 { (-w3, -eta3) } else { (w3, eta3) };
        Some(Lattice { w1, w3, eta1, eta3 })
    }

    /// ℘⁻¹: principal preimage of `target`, mapped by ±z + lattice to the
    /// candidate nearest `branch_hint` (or the principal value itself when
    /// no hint is given).
    pub fn wp_inverse(&self, target: C64, branch_hint: Option<C64>) -> Result<C64> {
        let z = self.principal_inverse(target)?;
        match branch_hint {
            None => Ok(z),
            Some(h) => Ok(self.nearest_image(z, h)),
        }
    }

    /// Preimage of `target` whose ℘′ matches `derivative` (up to the sign
    /// ambiguity when ℘′ vanishes), nearest `branch_hint`.
    pub fn wp_inverse_matching(&self, target: C64, derivative: C64, branch_hint: Option<C64>) -> Result<C64> {
        let z = self.principal_inverse(target)?;
        let dz = self.wp_prime(z)?;
        let z = if (dz + derivative).norm() < (dz - derivative).norm() { -z } else { z };
        Ok(match branch_hint {
            None => z,
            Some(h) => self.nearest_translate(z, h),
        })
    }

    fn principal_inverse(&self, target: C64) -> Result<C64> {
        if !target.is_finite() {
            return Err(JcError::InverseNotConverged { residual: f64::INFINITY });
        }
        let e = self.roots;
        let tol = self.config.inverse_tol;
        let scale = 1.0 + target.norm();
        let mut starts = Vec::new();
        if let Some(z) = carlson_rf_any(target - e[0], target - e[1], target - e[2]) {
            starts.push(z);
        }
        if target.norm() > 0.0 {
            starts.push(target.sqrt().inv());
        }
        if let Some(l) = self.lattice {
            for i in 0..4 {
                for j in 0..4 {
                    starts.push(l.w1 * (0.25 + 0.5 * i as f64) + l.w3 * (0.25 + 0.5 * j as f64));
                }
            }
        }
        let mut best = (f64::INFINITY, C64::default());
        for z0 in starts {
            let mut z = z0;
            for _ in 0..self.config.inverse_max_iter {
                let Ok(v) = self.eval(z) else { break };
                let res = v.wp - target;
                if res.norm() < best.0 {
                    best = (res.norm(), z);
                }
                if res.norm() <= 1e-3 * tol * scale {
                    break;
                }
                if v.wp_prime.norm() == 0.0 {
                    break;
                }
                let step = res / v.wp_prime;
                z -= step;
                if step.norm() < 1e-16 * (1.0 + z.norm()) {
                    break;
                }
            }
            if best.0 <= tol * scale {
                return Ok(best.1);
            }
        }
        // near a root of ℘′ Newton is linear; accept a looser but finite residual
        if best.0 <= 1e3 * tol * scale {
            return Ok(best.1);
        }
        Err(JcError::InverseNotConverged { residual: best.0 })
    }

    fn nearest_translate(&self, z: C64, hint: C64) -> C64 {
        match self.lattice {
            Some(l) => {
                let (m, n) = nearest_lattice_point(hint - z, l.w1, l.w3);
                z + 2.0 * (m as f64) * l.w1 + 2.0 * (n as f64) * l.w3
            }
            None => match self.degeneration {
                Some(Degeneration::DoubleRoot { k, .. }) if k.norm() > 0.0 => {
                    let period = I * PI / k;
                    let m = ((hint - z) / period).re.round();
                    z + m * period
                }
                _ => z,
            },
        }
    }

    fn nearest_image(&self, z: C64, hint: C64) -> C64 {
        let a = self.nearest_translate(z, hint);
        let b = self.nearest_translate(-z, hint);
        if (a - hint).norm() <= (b - hint).norm() {
            a
        } else {
            b
        }
    }
}

fn laurent_coefficients(g2: C64, g3: C64) -> Vec<C64> {
    // c[k] for k = 2..; stored from index 0
    let mut c = vec![C64::default(); LAURENT_TERMS];
    c[0] = g2 / 20.0;
    c[1] = g3 / 28.0;
    for k in 4..(LAURENT_TERMS + 2) {
        let mut s = C64::default();
        for m in 2..=(k - 2) {
            s += c[m - 2] * c[k - m - 2];
        }
        c[k - 2] = 3.0 * s / (((2 * k + 1) * (k - 3)) as f64);
    }
    c
}

/// Radius for direct summation, a fraction of the root-test estimate of the
/// distance to the nearest non-zero lattice point.
fn series_radius(c: &[C64]) -> f64 {
    let mut est = f64::INFINITY;
    for (idx, ck) in c.iter().enumerate().skip(c.len() / 2) {
        let k = (idx + 2) as f64;
        if ck.norm() > 0.0 {
            est = est.min(ck.norm().powf(-1.0 / (2.0 * k - 2.0)));
        }
    }
    if !est.is_finite() {
        // invariants too small to resolve: fall back to the leading terms
        let g = c[0].norm().max(c[1].norm());
        est = if g > 0.0 { g.powf(-0.25) } else { 1e6 };
    }
    0.4 * est
}

/// Roots of 4t³ − g₂t − g₃ by Cardano, polished by Newton.
fn cubic_roots(g2: C64, g3: C64) -> [C64; 3] {
    let p = -g2 / 4.0;
    let q = -g3 / 4.0;
    if p.norm() == 0.0 && q.norm() == 0.0 {
        return [C64::default(); 3];
    }
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let a = -q / 2.0 + disc;
    let b = -q / 2.0 - disc;
    let base = if a.norm() >= b.norm() { a } else { b };
    let u = base.powf(1.0 / 3.0);
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut roots = [C64::default(); 3];
    let mut uk = u;
    for r in roots.iter_mut() {
        *r = if uk.norm() == 0.0 { C64::default() } else { uk - p / (3.0 * uk) };
        uk *= omega;
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = 4.0 * *r * *r * *r - g2 * *r - g3;
            let df = 12.0 * *r * *r - g2;
            if df.norm() < 1e-14 * (g2.norm() + 1e-300) {
                break;
            }
            let step = f / df;
            *r -= step;
        }
    }
    roots
}

/// Carlson's symmetric integral R_F(x, y, z) by duplication, principal
/// square roots throughout.
pub fn carlson_rf(x: C64, y: C64, z: C64) -> Option<C64> {
    let zeros = [x, y, z].iter().filter(|v| v.norm() == 0.0).count();
    if zeros > 1 {
        return None;
    }
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..200 {
        let a = (x + y + z) / 3.0;
        let dev = [(a - x), (a - y), (a - z)].iter().map(|d| d.norm()).fold(0.0, f64::max) / a.norm();
        if dev < 1e-4 {
            let xd = (a - x) / a;
            let yd = (a - y) / a;
            let zd = -(xd + yd);
            let e2 = xd * yd - zd * zd;
            let e3 = xd * yd * zd;
            let series = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0;
            let out = series / a.sqrt();
            return out.is_finite().then_some(out);
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
    }
    None
}

/// R_F, rotating the arguments off the negative real axis when needed.
/// The result is determined up to sign, which is all ℘⁻¹ needs.
fn carlson_rf_any(x: C64, y: C64, z: C64) -> Option<C64> {
    let on_cut = |v: &C64| v.im.abs() <= 1e-14 * v.norm() && v.re < 0.0;
    if ![x, y, z].iter().any(on_cut) {
        return carlson_rf(x, y, z);
    }
    // R_F(cx, cy, cz) = c^{−1/2} R_F(x, y, z)
    for angle in [0.5, -0.5, 1.0, -1.0, 0.25] {
        let c = C64::from_polar(1.0, angle * PI * 0.5);
        let (cx, cy, cz) = (c * x, c * y, c * z);
        if ![cx, cy, cz].iter().any(on_cut) {
            return carlson_rf(cx, cy, cz).map(|v| v * c.sqrt());
        }
    }
    None
}

/// Lagrange–Gauss reduction of the lattice spanned by 2h₁, 2h₂; returns
/// the reduced half-period basis.
fn gauss_reduce(h1: C64, h2: C64) -> Option<(C64, C64)> {
    let (mut a, mut b) = (h1, h2);
    if (b / a).im.abs() < 1e-10 {
        return None;
    }
    for _ in 0..100 {
        if a.norm() > b.norm() {
            std::mem::swap(&mut a, &mut b);
        }
        let mu = ((b * a.conj()).re / a.norm_sqr()).round();
        if mu == 0.0 {
            return Some((a, b));
        }
        b -= mu * a;
    }
    None
}

/// Integer (m, n) minimising |z − 2mω₁ − 2nω₃|.
fn nearest_lattice_point(z: C64, w1: C64, w3: C64) -> (i64, i64) {
    let (b1, b3) = (2.0 * w1, 2.0 * w3);
    // solve z = x·b1 + y·b3 over the reals
    let det = b1.re * b3.im - b1.im * b3.re;
    let x = (z.re * b3.im - z.im * b3.re) / det;
    let y = (b1.re * z.im - b1.im * z.re) / det;
    let (m0, n0) = (x.round() as i64, y.round() as i64);
    let mut best = (f64::INFINITY, (m0, n0));
    for dm in -1..=1 {
        for dn in -1..=1 {
            let (m, n) = (m0 + dm, n0 + dn);
            let d = (z - (m as f64) * b1 - (n as f64) * b3).norm();
            if d < best.0 {
                best = (d, (m, n));
            }
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate, OdeOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_c(rng: &mut ChaCha8Rng, r: f64) -> C64 {
        c(rng.gen_range(-r..r), rng.gen_range(-r..r))
    }

    #[test]
    fn degenerate_zero_invariants() {
        let inv = WeierstrassInvariants::new(C64::default(), C64::default());
        assert!((inv.wp(c(0.1, 0.0)).unwrap() - c(100.0, 0.0)).norm() <= 1e-12);
        let z = c(0.3, -0.7);
        assert!((inv.w_zeta(z).unwrap() - z.inv()).norm() < 1e-15);
        assert!((inv.w_sigma(z) - z).norm() < 1e-15);
        let back = inv.wp_inverse(c(100.0, 0.0), None).unwrap();
        assert!((back - c(0.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cubic_examples() {
        let prm = ModelParams::new(0.5, 0.0).unwrap();
        let north = ConservedPair { n_value: c(0.5, 0.0), c_value: c(0.0, 0.0) };
        let cub = cubic_from_constants(&north, &prm).unwrap();
        assert_eq!((cub.a0, cub.a1, cub.a2), (c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)));
        let prm1 = ModelParams::new(1.0, 0.0).unwrap();
        let south = ConservedPair { n_value: c(-0.5, 0.0), c_value: c(0.0, 0.0) };
        let cub = cubic_from_constants(&south, &prm1).unwrap();
        assert_eq!((cub.a0, cub.a1, cub.a2), (c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)));
        let zero = ModelParams::new(0.0, 0.2).unwrap();
        assert_eq!(cubic_from_constants(&north, &zero), Err(JcError::ZeroCoupling));
    }

    #[test]
    fn north_pole_is_double_root() {
        for &(l, d) in &[(0.3, 0.1), (0.5, -0.4), (1.0, 0.7)] {
            let prm = ModelParams::new(l, d).unwrap();
            let np = ConservedPair { n_value: c(0.5, 0.0), c_value: c(0.5 * d, 0.0) };
            let cub = cubic_from_constants(&np, &prm).unwrap();
            let one = c(1.0, 0.0);
            assert!(cub.eval(one).norm() < 1e-13);
            let slope = 3.0 + 2.0 * cub.a2 + cub.a1;
            assert!(slope.norm() < 1e-13);
        }
    }

    #[test]
    fn invariants_example() {
        let cub = CubicPotential { a0: c(-1.0, 0.0), a1: c(1.0, 0.0), a2: c(1.0, 0.0) };
        let inv = invariants_from_cubic(&cub);
        assert!((inv.g2 - c(-8.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!((inv.g3 - c(136.0 / 27.0, 0.0)).norm() < 1e-14);
        assert!((inv.discriminant - (inv.g2.powi(3) - 27.0 * inv.g3 * inv.g3)).norm() < 1e-12);
    }

    /// 4v³ − g₂v − g₃ = 4P(v − a₂/3) as polynomials in v, compared at
    /// four nodes (enough for a cubic).
    #[test]
    fn shifted_cubic_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let cub = CubicPotential {
                a0: random_c(&mut rng, 2.0),
                a1: random_c(&mut rng, 2.0),
                a2: random_c(&mut rng, 2.0),
            };
            let inv = invariants_from_cubic(&cub);
            for v in [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.5), c(0.3, 2.0)] {
                let lhs = inv.cubic_rhs(v);
                let rhs = 4.0 * cub.eval(v - cub.a2 / 3.0);
                assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn laurent_leading_terms() {
        let (g2, g3) = (c(1.3, -0.4), c(-0.7, 0.9));
        let inv = WeierstrassInvariants::new(g2, g3);
        let z = c(0.01, 0.004);
        let approx = (z * z).inv() + g2 * z * z / 20.0 + g3 * z.powi(4) / 28.0;
        let diff = inv.wp(z).unwrap() - approx;
        assert!(diff.norm() < 10.0 * z.norm().powi(6));
    }

    /// Independent oracle: seed ℘, ℘′ from a locally summed Laurent series
    /// at a small point on a ray, then integrate ℘'' = 6℘² − g₂/2 along it.
    fn ode_oracle(g2: C64, g3: C64, target: C64) -> C64 {
        let mut coef = vec![g2 / 20.0, g3 / 28.0];
        for k in 4..40usize {
            let s: C64 = (2..=k - 2).map(|m| coef[m - 2] * coef[k - m - 2]).sum();
            coef.push(3.0 * s / (((2 * k + 1) * (k - 3)) as f64));
        }
        let dir = target / target.norm();
        let w = 0.2 * dir;
        let (mut p, mut d) = ((w * w).inv(), -2.0 / (w * w * w));
        for (i, ck) in coef.iter().enumerate() {
            let k = (i + 2) as i32;
            p += ck * w.powi(2 * k - 2);
            d += ck * (2 * k - 2) as f64 * w.powi(2 * k - 3);
        }
        let opts = OdeOptions { rtol: 1e-13, atol: 1e-13, h_max: 0.01, h_min: 1e-16, ..OdeOptions::default() };
        // s is arc length along the ray; d/ds = dir · d/dz
        let path = integrate(
            |_, y, dy| {
                dy[0] = dir * y[1];
                dy[1] = dir * (6.0 * y[0] * y[0] - 0.5 * g2);
                Ok(())
            },
            0.2,
            &[p, d],
            target.norm(),
            &opts,
        )
        .unwrap();
        path.last()[0]
    }

    #[test]
    fn matches_ode_continuation() {
        for (g2, g3, z) in [
            (c(4.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
            (c(1.5, -0.5), c(0.3, 0.8), c(0.6, 0.7)),
            (c(-2.0, 1.0), c(1.0, 0.0), c(-0.9, 0.2)),
        ] {
            let oracle = ode_oracle(g2, g3, z);
            let val = WeierstrassInvariants::new(g2, g3).wp(z).unwrap();
            assert!((val - oracle).norm() < 1e-10 * (1.0 + oracle.norm()), "{val} vs {oracle}");
        }
    }

    #[test]
    fn lemniscatic_value() {
        // g₂ = 4, g₃ = 0: ℘(1) = −1 + 2/sn²(√2, ½)
        let inv = WeierstrassInvariants::new(c(4.0, 0.0), c(0.0, 0.0));
        assert!((inv.wp(c(1.0, 0.0)).unwrap() - c(1.213_755_986_338_774_6, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn defining_equation_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let inv = WeierstrassInvariants::new(random_c(&mut rng, 10.0), random_c(&mut rng, 10.0));
            let r = rng.gen_range(0.05..3.0);
            let z = C64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
            let Ok(v) = inv.eval(z) else { continue };
            let res = v.wp_prime * v.wp_prime - inv.cubic_rhs(v.wp);
            assert!(res.norm() < 1e-9 * (1.0 + v.wp.norm().powi(3)), "{:?} at {z}: {res}", (inv.g2, inv.g3));
        }
    }

    #[test]
    fn lattice_found_and_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let inv = WeierstrassInvariants::new(random_c(&mut rng, 10.0), random_c(&mut rng, 10.0));
            let (w1, w3) = inv.half_periods.expect("basis");
            let z = random_c(&mut rng, 1.0);
            let p = inv.wp(z).unwrap();
            for w in [w1, w3] {
                let shifted = inv.eval_unreduced(z + 2.0 * w).unwrap().wp;
                assert!((shifted - p).norm() < 1e-8 * (1.0 + p.norm()));
            }
        }
    }

    #[test]
    fn parity_and_derivatives() {
        let inv = WeierstrassInvariants::new(c(2.0, 1.0), c(-1.5, 0.3));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = 1e-3;
        for _ in 0..100 {
            let z = C64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..2.0 * PI));
            let Ok(v) = inv.eval(z) else { continue };
            assert!((inv.w_sigma(-z) + inv.w_sigma(z)).norm() < 1e-12 * (1.0 + inv.w_sigma(z).norm()));
            // fourth-order central differences
            let d = |f: &dyn Fn(C64) -> C64| {
                (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
            };
            let dzeta = d(&|x| inv.w_zeta(x).unwrap());
            assert!((dzeta + v.wp).norm() < 1e-8 * (1.0 + v.wp.norm()));
            let dlnsig = d(&|x| inv.w_sigma(x));
            let sig = inv.w_sigma(z);
            assert!((dlnsig / sig - v.zeta).norm() < 1e-8 * (1.0 + v.zeta.norm()));
            let dwp = d(&|x| inv.wp(x).unwrap());
            assert!((dwp - v.wp_prime).norm() < 1e-8 * (1.0 + v.wp_prime.norm()));
        }
    }

    #[test]
    fn homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let (g2, g3) = (random_c(&mut rng, 3.0), random_c(&mut rng, 3.0));
            let k = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
            let a = WeierstrassInvariants::new(g2, g3);
            let b = WeierstrassInvariants::new(g2 / k.powi(4), g3 / k.powi(6));
            let z = random_c(&mut rng, 1.0);
            let lhs = b.wp(k * z).unwrap();
            let rhs = a.wp(z).unwrap() / (k * k);
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let inv = WeierstrassInvariants::new(random_c(&mut rng, 5.0), random_c(&mut rng, 5.0));
            let z0 = C64::from_polar(rng.gen_range(0.1..1.5), rng.gen_range(0.0..2.0 * PI));
            let Ok(p) = inv.wp(z0) else { continue };
            let z = inv.wp_inverse(p, Some(z0)).unwrap();
            assert!((z - z0).norm() < 1e-10 * (1.0 + z0.norm()), "{z} vs {z0}");
        }
    }

    #[test]
    fn inverse_matching_derivative() {
        let inv = WeierstrassInvariants::new(c(1.0, 0.5), c(0.2, -0.3));
        let z0 = c(0.4, 0.3);
        let v = inv.eval(z0).unwrap();
        let z = inv.wp_inverse_matching(v.wp, v.wp_prime, Some(z0)).unwrap();
        assert!((z - z0).norm() < 1e-10);
        let zm = inv.wp_inverse_matching(v.wp, -v.wp_prime, Some(-z0)).unwrap();
        assert!((zm + z0).norm() < 1e-10);
    }

    #[test]
    fn double_root_degeneration() {
        // roots (e, e, −2e) with e = 1/3
        let e = c(1.0 / 3.0, 0.0);
        let inv = WeierstrassInvariants::new(12.0 * e * e, -8.0 * e * e * e);
        assert!(inv.is_degenerate());
        let z = c(0.7, 0.2);
        let v = inv.eval(z).unwrap();
        let res = v.wp_prime * v.wp_prime - inv.cubic_rhs(v.wp);
        assert!(res.norm() < 1e-12 * (1.0 + v.wp.norm().powi(3)));
        let back = inv.wp_inverse(v.wp, Some(z)).unwrap();
        assert!((back - z).norm() < 1e-10);
    }

    #[test]
    fn carlson_known_value() {
        // R_F(0, 1, 2) = 1.3110287771461 (DLMF 19.20.2 lemniscate value)
        let v = carlson_rf(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((v - c(1.311_028_777_146_059_9, 0.0)).norm() < 1e-14);
    }
}
