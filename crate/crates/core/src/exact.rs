//! Exact propagator from the 2×2 invariant blocks, and a dense
//! matrix-exponential oracle on a truncated Fock space.
//!
//! Basis ordering: |↑n⟩ has index 2n and |↓n⟩ has index 2n+1, for
//! n = 0..=n_max. Block n ≥ 1 is spanned by |↑ n−1⟩ and |↓ n⟩ and carries
//! excitation number n − ½; |↓0⟩ is uncoupled.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{JcError, Result};
use crate::model::{CanonicalCoherentState, Method, ModelParams, PropagatorElement, SpinCoherentState, I};

pub const DEFAULT_N_MAX: usize = 32;
/// Largest occupation weight tolerated above the truncation.
pub const TAIL_TOL: f64 = 1e-12;

/// Ω_n = √(λ²n + Δ²/4).
pub fn rabi_frequency(n: usize, params: &ModelParams) -> f64 {
    (params.lambda * params.lambda * n as f64 + 0.25 * params.delta * params.delta).sqrt()
}

/// e^{−iCT} restricted to block n, as [[a, b], [−b*, a*]] in the basis
/// {|↑ n−1⟩, |↓ n⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPropagator {
    pub n: usize,
    pub a_t: C64,
    pub b_t: C64,
    pub time: f64,
}

impl BlockPropagator {
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [[self.a_t, self.b_t], [-self.b_t.conj(), self.a_t.conj()]]
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.a_t.norm_sqr() + self.b_t.norm_sqr() - 1.0).abs()
    }

    /// Full block of U(T), including the excitation phase e^{−i(n−½)T}.
    pub fn with_number_phase(&self) -> [[C64; 2]; 2] {
        let ph = (-I * (self.n as f64 - 0.5) * self.time).exp();
        let m = self.matrix();
        [[ph * m[0][0], ph * m[0][1]], [ph * m[1][0], ph * m[1][1]]]
    }
}

pub fn block_c_propagator(n: usize, t: f64, params: &ModelParams) -> Result<BlockPropagator> {
    if n == 0 {
        return Err(JcError::InvalidParameter("block index starts at 1".into()));
    }
    let omega = rabi_frequency(n, params);
    let (s, c) = (omega * t).sin_cos();
    // sin(Ωt)/Ω stays finite as Ω → 0
    let sinc = if omega == 0.0 { t } else { s / omega };
    let a_t = C64::new(c, -0.5 * params.delta * sinc);
    let b_t = C64::new(0.0, -params.lambda * (n as f64).sqrt() * sinc);
    Ok(BlockPropagator { n, a_t, b_t, time: t })
}

/// Truncated Hamiltonian matrix on n ≤ n_max.
#[derive(Debug, Clone)]
pub struct FockTruncation {
    pub n_max: usize,
    pub hamiltonian: DMatrix<f64>,
}

impl FockTruncation {
    pub fn new(params: &ModelParams, n_max: usize) -> Self {
        let dim = 2 * (n_max + 1);
        let mut h = DMatrix::zeros(dim, dim);
        let e = 0.5 * (1.0 + params.delta);
        for n in 0..=n_max {
            h[(up(n), up(n))] = n as f64 + e;
            h[(down(n), down(n))] = n as f64 - e;
            if n >= 1 {
                let g = params.lambda * (n as f64).sqrt();
                h[(up(n - 1), down(n))] = g;
                h[(down(n), up(n - 1))] = g;
            }
        }
        Self { n_max, hamiltonian: h }
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.hamiltonian - self.hamiltonian.transpose()).amax()
    }
}

pub fn up(n: usize) -> usize {
    2 * n
}

pub fn down(n: usize) -> usize {
    2 * n + 1
}

/// e^{−iHT} on the truncated space by eigendecomposition of the real
/// symmetric H.
pub fn dense_oracle(t: f64, params: &ModelParams, n_max: usize) -> DMatrix<C64> {
    let fock = FockTruncation::new(params, n_max);
    let eig = SymmetricEigen::new(fock.hamiltonian);
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        fock_dim(n_max),
        eig.eigenvalues.iter().map(|&e| (-I * e * t).exp()),
    ));
    &v * phases * v.transpose()
}

fn fock_dim(n_max: usize) -> usize {
    2 * (n_max + 1)
}

/// Block closed form assembled into the truncated basis. The boundary
/// level |↑ n_max⟩, whose partner lies outside the truncation, evolves with
/// its diagonal truncated energy.
pub fn closed_form_matrix(t: f64, params: &ModelParams, n_max: usize) -> DMatrix<C64> {
    let mut u = DMatrix::zeros(fock_dim(n_max), fock_dim(n_max));
    u[(down(0), down(0))] = (I * 0.5 * (1.0 + params.delta) * t).exp();
    for n in 1..=n_max {
        let b = block_c_propagator(n, t, params).expect("n ≥ 1").with_number_phase();
        let idx = [up(n - 1), down(n)];
        for r in 0..2 {
            for c in 0..2 {
                u[(idx[r], idx[c])] = b[r][c];
            }
        }
    }
    u[(up(n_max), up(n_max))] = (-I * (n_max as f64 + 0.5 * (1.0 + params.delta)) * t).exp();
    u
}

/// max |A_ij − B_ij|.
pub fn max_deviation(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).camax()
}

/// Endpoint of a matrix element: a basis ket or a product coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JcState {
    Basis { spin_up: bool, n: usize },
    Coherent { field: CanonicalCoherentState, spin: SpinCoherentState },
}

impl JcState {
    pub fn up_vacuum() -> Self {
        JcState::Basis { spin_up: true, n: 0 }
    }

    pub fn down_vacuum() -> Self {
        JcState::Basis { spin_up: false, n: 0 }
    }

    /// Amplitudes in the truncated basis and the norm weight left above it.
    pub fn amplitudes(&self, n_max: usize) -> (DVector<C64>, f64) {
        let mut v = DVector::zeros(fock_dim(n_max));
        match *self {
            JcState::Basis { spin_up, n } => {
                if n > n_max {
                    return (v, 1.0);
                }
                v[if spin_up { up(n) } else { down(n) }] = C64::new(1.0, 0.0);
                (v, 0.0)
            }
            JcState::Coherent { field, spin } => {
                let alpha = field.amplitude();
                let [cu, cd] = spin.amplitudes();
                let mut fock = (-0.5 * alpha.norm_sqr()).exp() * C64::new(1.0, 0.0);
                for n in 0..=n_max {
                    if n > 0 {
                        fock *= alpha / (n as f64).sqrt();
                    }
                    v[up(n)] = cu * fock;
                    v[down(n)] = cd * fock;
                }
                (v, poisson_tail(alpha.norm_sqr(), n_max))
            }
        }
    }
}

/// Σ_{n > n_max} e^{−x} xⁿ/n!, summed directly to avoid cancellation.
pub fn poisson_tail(x: f64, n_max: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut ln_term = -x;
    for n in 1..=n_max + 1 {
        ln_term += x.ln() - (n as f64).ln();
    }
    let mut term = ln_term.exp();
    let mut total = 0.0;
    let mut n = n_max + 1;
    while term > 1e-300 && (term > 1e-18 * total || total == 0.0) {
        total += term;
        n += 1;
        term *= x / n as f64;
        if n > n_max + 10_000 {
            break;
        }
    }
    total
}

/// U(T)ψ applied block by block.
pub fn evolve(state: &DVector<C64>, t: f64, params: &ModelParams, n_max: usize) -> DVector<C64> {
    let mut out = DVector::zeros(state.len());
    out[down(0)] = (I * 0.5 * (1.0 + params.delta) * t).exp() * state[down(0)];
    for n in 1..=n_max {
        let b = block_c_propagator(n, t, params).expect("n ≥ 1").with_number_phase();
        let (i, j) = (up(n - 1), down(n));
        out[i] = b[0][0] * state[i] + b[0][1] * state[j];
        out[j] = b[1][0] * state[i] + b[1][1] * state[j];
    }
    out[up(n_max)] = (-I * (n_max as f64 + 0.5 * (1.0 + params.delta)) * t).exp() * state[up(n_max)];
    out
}

/// ⟨final|U(T)|initial⟩ from the block closed form. The residual reports
/// the larger truncation tail weight of the two states.
pub fn full_propagator_element(
    fin: &JcState,
    init: &JcState,
    t: f64,
    params: &ModelParams,
    n_max: usize,
) -> Result<PropagatorElement> {
    let (vi, tail_i) = init.amplitudes(n_max);
    let (vf, tail_f) = fin.amplitudes(n_max);
    let tail = tail_i.max(tail_f);
    if tail > TAIL_TOL {
        log::warn!("truncation n_max = {n_max} leaves occupation weight {tail:.3e}");
    }
    let evolved = evolve(&vi, t, params, n_max);
    let value = vf.dotc(&evolved);
    Ok(PropagatorElement { value, method: Method::Exact, time: t, residual: tail, tolerance: TAIL_TOL })
}
