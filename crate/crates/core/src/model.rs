//! Jaynes-Cummings model: parameters, coherent-state labels, the complexified
//! phase-space symbol of the Hamiltonian and its two integrals of motion.
//!
//! Units are ω = ℏ = 1. The Hamiltonian is
//!
//! ```text
//! H = a†a + (1+Δ) S_z + λ (a S₊ + a† S₋)
//! ```
//!
//! and its coherent-state symbol in the complex variables (α, β, ζ, η) is
//!
//! ```text
//! H(α,β,ζ,η) = αβ + (1+Δ)/2 · (1−ζη)/(1+ζη) + λ (αζ + βη)/(1+ζη)
//! ```
//!
//! The spin variables may be stored in the reciprocal chart ρ = 1/ζ,
//! σ = 1/η near the south pole; see [`ChartedPoint`].

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{JcError, Result};

/// Smallest admissible `|1 + ζη|` (or its reciprocal-chart analogue).
pub const CHART_TOL: f64 = 1e-10;

/// Coordinates switch to the reciprocal chart above this modulus.
pub const CHART_SWITCH: f64 = 10.0;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling g/ω.
    pub lambda: f64,
    /// Detuning (ω₀ − ω)/ω.
    pub delta: f64,
    /// Formal spin length of the semiclassical expansion. Only the
    /// fluctuation coefficients use it; propagators assume s = 1/2.
    pub spin_s: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        Self::with_spin(lambda, delta, 0.5)
    }

    pub fn with_spin(lambda: f64, delta: f64, spin_s: f64) -> Result<Self> {
        if !lambda.is_finite() || !delta.is_finite() {
            return Err(JcError::InvalidParameter(format!("lambda and delta must be finite (got {lambda}, {delta})")));
        }
        if !spin_s.is_finite() || spin_s <= 0.0 {
            return Err(JcError::InvalidParameter(format!("spin_s must be positive (got {spin_s})")));
        }
        Ok(Self { lambda, delta, spin_s })
    }

    /// Same detuning and spin, different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }
}

/// Spin coherent state `e^{−iφS_z} e^{−iθS_y} |↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinCoherentState {
    pub theta: f64,
    pub phi: f64,
}

impl SpinCoherentState {
    /// Validates `θ ∈ [0, π]` and wraps `φ` into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(JcError::InvalidParameter(format!("spin angles out of range: theta = {theta}, phi = {phi}")));
        }
        Ok(Self { theta, phi: phi.rem_euclid(2.0 * PI) })
    }

    pub fn up() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn down() -> Self {
        Self { theta: PI, phi: 0.0 }
    }

    /// Poles are singular for the azimuthal angle.
    pub fn is_chart_singular(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }

    /// Amplitudes on (|↑⟩, |↓⟩).
    pub fn amplitudes(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [C64::from_polar(c, -0.5 * self.phi), C64::from_polar(s, 0.5 * self.phi)]
    }
}

/// Canonical coherent state `e^{i(pQ − qP)} |0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCoherentState {
    pub p: f64,
    pub q: f64,
}

impl CanonicalCoherentState {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(JcError::InvalidParameter(format!("non-finite oscillator coordinates ({p}, {q})")));
        }
        Ok(Self { p, q })
    }

    pub fn vacuum() -> Self {
        Self { p: 0.0, q: 0.0 }
    }

    pub fn from_amplitude(alpha: C64) -> Self {
        Self { q: alpha.re * 2f64.sqrt(), p: alpha.im * 2f64.sqrt() }
    }

    /// α = (q + ip)/√2.
    pub fn amplitude(&self) -> C64 {
        C64::new(self.q, self.p) * FRAC_1_SQRT_2
    }
}

/// Complexified classical state. β and η are independent of α and ζ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: C64,
    pub beta: C64,
    pub zeta: C64,
    pub eta: C64,
}

impl PhasePoint {
    pub fn new(alpha: C64, beta: C64, zeta: C64, eta: C64) -> Self {
        Self { alpha, beta, zeta, eta }
    }

    pub fn north_pole() -> Self {
        Self::new(C64::default(), C64::default(), C64::default(), C64::default())
    }

    /// Point with β = α*, η = ζ* built from real coherent-state labels.
    pub fn physical(field: &CanonicalCoherentState, spin: &SpinCoherentState) -> Result<Self> {
        let alpha = field.amplitude();
        let (zeta, eta) = stereographic_from_angles(spin)?;
        Ok(Self::new(alpha, alpha.conj(), zeta, eta))
    }

    pub fn charted(&self) -> ChartedPoint {
        ChartedPoint {
            alpha: self.alpha,
            beta: self.beta,
            zeta: SpinCoord::Direct(self.zeta),
            eta: SpinCoord::Direct(self.eta),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha, self.beta, self.zeta, self.eta].iter().all(|z| z.is_finite())
    }
}

/// A stereographic spin coordinate, stored either directly or as its
/// reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpinCoord {
    Direct(C64),
    Reciprocal(C64),
}

impl SpinCoord {
    pub fn raw(&self) -> C64 {
        match *self {
            SpinCoord::Direct(z) | SpinCoord::Reciprocal(z) => z,
        }
    }

    pub fn is_reciprocal(&self) -> bool {
        matches!(self, SpinCoord::Reciprocal(_))
    }

    /// Value in the direct chart (infinite at the reciprocal origin).
    pub fn direct(&self) -> C64 {
        match *self {
            SpinCoord::Direct(z) => z,
            SpinCoord::Reciprocal(r) => r.inv(),
        }
    }

    /// Switches chart when the stored modulus exceeds [`CHART_SWITCH`].
    pub fn rechart(self) -> Self {
        match self {
            SpinCoord::Direct(z) if z.norm() > CHART_SWITCH => SpinCoord::Reciprocal(z.inv()),
            SpinCoord::Reciprocal(r) if r.norm() > CHART_SWITCH => SpinCoord::Direct(r.inv()),
            other => other,
        }
    }
}

/// Phase point whose spin coordinates may live in either chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartedPoint {
    pub alpha: C64,
    pub beta: C64,
    pub zeta: SpinCoord,
    pub eta: SpinCoord,
}

/// Chart-independent spin combinations of a [`ChartedPoint`].
#[derive(Debug, Clone, Copy)]
pub struct SpinTerms {
    /// u = (1 − ζη)/(1 + ζη).
    pub u: C64,
    /// ζ/(1 + ζη).
    pub zeta_frac: C64,
    /// η/(1 + ζη).
    pub eta_frac: C64,
}

impl ChartedPoint {
    /// South pole |↓0⟩ in the reciprocal chart.
    pub fn south_pole() -> Self {
        Self {
            alpha: C64::default(),
            beta: C64::default(),
            zeta: SpinCoord::Reciprocal(C64::default()),
            eta: SpinCoord::Reciprocal(C64::default()),
        }
    }

    pub fn to_direct(&self) -> PhasePoint {
        PhasePoint::new(self.alpha, self.beta, self.zeta.direct(), self.eta.direct())
    }

    pub fn rechart(&self) -> Self {
        Self { zeta: self.zeta.rechart(), eta: self.eta.rechart(), ..*self }
    }

    pub fn spin_terms(&self) -> Result<SpinTerms> {
        use SpinCoord::*;
        let one = C64::new(1.0, 0.0);
        let (den, u_num, zf, ef) = match (self.zeta, self.eta) {
            (Direct(z), Direct(e)) => (one + z * e, one - z * e, z, e),
            (Reciprocal(r), Reciprocal(s)) => (r * s + one, r * s - one, s, r),
            (Reciprocal(r), Direct(e)) => (r + e, r - e, one, r * e),
            (Direct(z), Reciprocal(s)) => (s + z, s - z, z * s, one),
        };
        if den.norm() < CHART_TOL {
            return Err(JcError::DegenerateChart { magnitude: den.norm() });
        }
        let inv = den.inv();
        Ok(SpinTerms { u: u_num * inv, zeta_frac: zf * inv, eta_frac: ef * inv })
    }
}

/// Which computation produced an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Dopa,
    Linearized,
    FluctuationCorrected,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Dopa => "dopa",
            Method::Linearized => "linearized",
            Method::FluctuationCorrected => "fluctuation-corrected",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One amplitude ⟨final|U(T)|initial⟩ with the accuracy actually reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorElement {
    pub value: C64,
    pub method: Method,
    pub time: f64,
    /// Method-specific achieved error indicator (truncation weight,
    /// shooting residual, representation discrepancy, ...).
    pub residual: f64,
    pub tolerance: f64,
}

/// Conserved excitation and interaction integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedPair {
    pub n_value: C64,
    pub c_value: C64,
}

pub fn hamiltonian(point: &PhasePoint, params: &ModelParams) -> Result<C64> {
    hamiltonian_charted(&point.charted(), params)
}

pub fn hamiltonian_charted(point: &ChartedPoint, params: &ModelParams) -> Result<C64> {
    let s = point.spin_terms()?;
    Ok(point.alpha * point.beta
        + 0.5 * (1.0 + params.delta) * s.u
        + params.lambda * (point.alpha * s.zeta_frac + point.beta * s.eta_frac))
}

pub fn conserved_n(point: &PhasePoint) -> Result<C64> {
    conserved_n_charted(&point.charted())
}

pub fn conserved_n_charted(point: &ChartedPoint) -> Result<C64> {
    let s = point.spin_terms()?;
    Ok(point.alpha * point.beta + 0.5 * s.u)
}

/// C = λ(αζ + βη)/(1+ζη) + (Δ/2)(1−ζη)/(1+ζη), so that H = N + C.
pub fn conserved_c(point: &PhasePoint, params: &ModelParams) -> Result<C64> {
    conserved_c_charted(&point.charted(), params)
}

pub fn conserved_c_charted(point: &ChartedPoint, params: &ModelParams) -> Result<C64> {
    let s = point.spin_terms()?;
    Ok(params.lambda * (point.alpha * s.zeta_frac + point.beta * s.eta_frac) + 0.5 * params.delta * s.u)
}

pub fn conserved_pair(point: &ChartedPoint, params: &ModelParams) -> Result<ConservedPair> {
    Ok(ConservedPair { n_value: conserved_n_charted(point)?, c_value: conserved_c_charted(point, params)? })
}

/// ζ = tan(θ/2)e^{iφ}, η = tan(θ/2)e^{−iφ}.
pub fn stereographic_from_angles(state: &SpinCoherentState) -> Result<(C64, C64)> {
    if state.theta >= PI {
        return Err(JcError::ChartSingularity);
    }
    let t = (0.5 * state.theta).tan();
    Ok((C64::from_polar(t, state.phi), C64::from_polar(t, -state.phi)))
}

/// Inverse of [`stereographic_from_angles`] for a physical ζ (η = ζ*).
pub fn angles_from_stereographic(zeta: C64) -> SpinCoherentState {
    let theta = 2.0 * zeta.norm().atan();
    let phi = if zeta.norm() == 0.0 { 0.0 } else { zeta.arg().rem_euclid(2.0 * PI) };
    SpinCoherentState { theta, phi }
}

/// ⟨θ″φ″|θ′φ′⟩.
pub fn spin_overlap(fin: &SpinCoherentState, init: &SpinCoherentState) -> C64 {
    let (s2, c2) = (0.5 * fin.theta).sin_cos();
    let (s1, c1) = (0.5 * init.theta).sin_cos();
    let half = 0.5 * (fin.phi - init.phi);
    C64::from_polar(c2 * c1, half) + C64::from_polar(s2 * s1, -half)
}

/// ⟨p″q″|p′q′⟩ = exp{−½|α′|² − ½|β″|² + β″α′} with β″ = (α″)*.
pub fn canonical_overlap(fin: &CanonicalCoherentState, init: &CanonicalCoherentState) -> C64 {
    let a1 = init.amplitude();
    let b2 = fin.amplitude().conj();
    (-0.5 * a1.norm_sqr() - 0.5 * b2.norm_sqr() + b2 * a1).exp()
}

/// Product state ⟨θ″φ″p″q″|θ′φ′p′q′⟩.
pub fn product_overlap(
    fin: (&SpinCoherentState, &CanonicalCoherentState),
    init: (&SpinCoherentState, &CanonicalCoherentState),
) -> C64 {
    spin_overlap(fin.0, init.0) * canonical_overlap(fin.1, init.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// ⟨θφpq|H|θφpq⟩ in real coordinates.
    fn hamiltonian_real(theta: f64, phi: f64, p: f64, q: f64, prm: &ModelParams) -> f64 {
        let osc = 0.5 * (p * p + q * q);
        let spin = 0.5 * (1.0 + prm.delta) * theta.cos();
        let coupling = prm.lambda / (2.0 * 2f64.sqrt())
            * (theta.sin() * C64::from_polar(1.0, phi) * c(q, p) + theta.sin() * C64::from_polar(1.0, -phi) * c(q, -p))
                .re;
        osc + spin + coupling
    }

    #[test]
    fn north_pole_values() {
        let prm = ModelParams::new(0.7, 0.3).unwrap();
        let np = PhasePoint::north_pole();
        assert!((hamiltonian(&np, &prm).unwrap() - c(0.65, 0.0)).norm() < 1e-15);
        assert!((conserved_n(&np).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((conserved_c(&np, &prm).unwrap() - c(0.15, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn south_pole_values_via_reciprocal_chart() {
        let prm = ModelParams::new(0.4, 0.0).unwrap();
        let sp = ChartedPoint::south_pole();
        assert!((hamiltonian_charted(&sp, &prm).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((conserved_n_charted(&sp).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn symbol_matches_real_coordinate_form() {
        let prm = ModelParams::new(0.5, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let theta = rng.gen_range(0.0..3.0);
            let phi = rng.gen_range(0.0..6.0);
            let p = rng.gen_range(-2.0..2.0);
            let q = rng.gen_range(-2.0..2.0);
            let spin = SpinCoherentState::new(theta, phi).unwrap();
            let field = CanonicalCoherentState::new(p, q).unwrap();
            let pt = PhasePoint::physical(&field, &spin).unwrap();
            let h = hamiltonian(&pt, &prm).unwrap();
            assert!((h.re - hamiltonian_real(theta, phi, p, q, &prm)).abs() < 1e-12);
            assert!(h.im.abs() < 1e-12);
        }
    }

    #[test]
    fn h_equals_n_plus_c() {
        let prm = ModelParams::new(0.37, -0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 10_000 {
            let mut z = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let pt = PhasePoint::new(z(), z(), z(), z());
            if (C64::new(1.0, 0.0) + pt.zeta * pt.eta).norm() <= 0.1 {
                continue;
            }
            let h = hamiltonian(&pt, &prm).unwrap();
            let nc = conserved_n(&pt).unwrap() + conserved_c(&pt, &prm).unwrap();
            assert!((h - nc).norm() < 1e-12 * (1.0 + h.norm()));
            checked += 1;
        }
    }

    #[test]
    fn charts_agree() {
        let prm = ModelParams::new(0.5, 0.1).unwrap();
        let pt = PhasePoint::new(c(0.3, 0.1), c(-0.2, 0.4), c(12.0, -3.0), c(0.02, 0.5));
        let direct = pt.charted();
        let mixed = direct.rechart();
        assert!(mixed.zeta.is_reciprocal() && !mixed.eta.is_reciprocal());
        let h1 = hamiltonian_charted(&direct, &prm).unwrap();
        let h2 = hamiltonian_charted(&mixed, &prm).unwrap();
        assert!((h1 - h2).norm() < 1e-13);
        let both = ChartedPoint {
            zeta: SpinCoord::Reciprocal(pt.zeta.inv()),
            eta: SpinCoord::Reciprocal(pt.eta.inv()),
            ..direct
        };
        assert!((hamiltonian_charted(&both, &prm).unwrap() - h1).norm() < 1e-12);
        let swapped =
            ChartedPoint { zeta: SpinCoord::Direct(pt.zeta), eta: SpinCoord::Reciprocal(pt.eta.inv()), ..direct };
        assert!((hamiltonian_charted(&swapped, &prm).unwrap() - h1).norm() < 1e-12);
    }

    #[test]
    fn degenerate_chart_is_an_error() {
        let prm = ModelParams::new(0.5, 0.0).unwrap();
        let pt = PhasePoint::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0));
        assert!(matches!(hamiltonian(&pt, &prm), Err(JcError::DegenerateChart { .. })));
    }

    #[test]
    fn stereographic_examples() {
        let (z, e) = stereographic_from_angles(&SpinCoherentState::new(0.0, 1.3).unwrap()).unwrap();
        assert_eq!((z, e), (C64::default(), C64::default()));
        let (z, e) = stereographic_from_angles(&SpinCoherentState::new(PI / 2.0, 0.0).unwrap()).unwrap();
        assert!((z - c(1.0, 0.0)).norm() < 1e-15 && (e - c(1.0, 0.0)).norm() < 1e-15);
        let (z, e) = stereographic_from_angles(&SpinCoherentState::new(PI / 2.0, PI / 2.0).unwrap()).unwrap();
        assert!((z - c(0.0, 1.0)).norm() < 1e-15 && (e - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(stereographic_from_angles(&SpinCoherentState::down()), Err(JcError::ChartSingularity));
    }

    #[test]
    fn angle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let s = SpinCoherentState::new(rng.gen_range(0.01..3.1), rng.gen_range(0.0..6.0)).unwrap();
            let (z, _) = stereographic_from_angles(&s).unwrap();
            let back = angles_from_stereographic(z);
            assert!((back.theta - s.theta).abs() < 1e-12);
            assert!((back.phi - s.phi).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_examples() {
        let s = SpinCoherentState::new(1.1, 0.4).unwrap();
        assert!((spin_overlap(&s, &s).norm() - 1.0).abs() < 1e-15);
        assert!(spin_overlap(&SpinCoherentState::down(), &SpinCoherentState::up()).norm() < 1e-15);

        let f = CanonicalCoherentState::new(0.3, -1.2).unwrap();
        assert!((canonical_overlap(&f, &f).norm() - 1.0).abs() < 1e-15);
        let unit = CanonicalCoherentState::from_amplitude(c(1.0, 0.0));
        let v = canonical_overlap(&CanonicalCoherentState::vacuum(), &unit);
        assert!((v - c((-0.5f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spin_overlap_matches_amplitudes() {
        let a = SpinCoherentState::new(0.9, 2.1).unwrap();
        let b = SpinCoherentState::new(2.3, 5.0).unwrap();
        let (fa, fb) = (a.amplitudes(), b.amplitudes());
        let direct = fa[0].conj() * fb[0] + fa[1].conj() * fb[1];
        assert!((direct - spin_overlap(&a, &b)).norm() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn overlaps_bounded(t1 in 0.0..PI, p1 in 0.0..6.0f64, t2 in 0.0..PI, p2 in 0.0..6.0f64,
                            x1 in -3.0..3.0f64, y1 in -3.0..3.0f64, x2 in -3.0..3.0f64, y2 in -3.0..3.0f64) {
            let s1 = SpinCoherentState::new(t1, p1).unwrap();
            let s2 = SpinCoherentState::new(t2, p2).unwrap();
            proptest::prop_assert!(spin_overlap(&s1, &s2).norm() <= 1.0 + 1e-14);
            let f1 = CanonicalCoherentState::new(x1, y1).unwrap();
            let f2 = CanonicalCoherentState::new(x2, y2).unwrap();
            let ov = canonical_overlap(&f2, &f1);
            proptest::prop_assert!(ov.norm() <= 1.0 + 1e-14);
            let law = (-(f2.amplitude() - f1.amplitude()).norm_sqr()).exp();
            proptest::prop_assert!((ov.norm_sqr() - law).abs() < 1e-13);
        }
    }
}
