use thiserror::Error;

/// Errors raised by the propagator and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `|1 + ζη|` fell below the chart tolerance.
    #[error("degenerate spin chart: |1 + zeta*eta| = {magnitude:e}")]
    DegenerateChart { magnitude: f64 },

    #[error("stereographic chart singular at theta = pi")]
    ChartSingularity,

    #[error("cubic reduction undefined at zero coupling")]
    ZeroCoupling,

    #[error("argument {z} lies on the period lattice")]
    LatticePole { z: num_complex::Complex64 },

    #[error("inverse Weierstrass function did not converge (residual {residual:e})")]
    InverseNotConverged { residual: f64 },

    #[error("integration step failed at t = {t} (step {step:e})")]
    StepFailure { t: f64, step: f64 },

    #[error("shooting did not converge after {iterations} iterations (best residual {best_residual:e})")]
    ShootingNotConverged { iterations: usize, best_residual: f64 },

    #[error("branch tracking failed at t = {t}")]
    BranchResolution { t: f64 },

    #[error("propagator representations disagree by {discrepancy:e}")]
    RepresentationMismatch { discrepancy: f64 },

    #[error("singular su(1,1) system at t = {t}")]
    SingularSu11 { t: f64 },

    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T> = std::result::Result<T, JcError>;
