use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),

    #[error("resonant boundary time: |sin(Omega t)| = {sin_omega_t:e} is below {threshold:e}")]
    ResonantBoundaryValue { sin_omega_t: f64, threshold: f64 },

    #[error("trajectories do not share t_final and Omega")]
    MismatchedTrajectories,

    #[error("kernel is log-divergent at tau = {0}; tau must be > 0")]
    DivergentAtZero(f64),

    #[error("quadrature did not converge: value {value:e}, error estimate {abs_err:e} after {evaluations} evaluations")]
    QuadratureNoConvergence {
        value: f64,
        abs_err: f64,
        evaluations: usize,
    },

    #[error("cutoff Lambda collides with Matsubara frequency nu_{n} = {nu_n:e}")]
    PoleCollision { n: usize, nu_n: f64 },

    #[error("series not converged after {terms} terms (last term {last_term:e}, partial sum {partial_sum:e})")]
    SeriesNoConvergence {
        terms: usize,
        last_term: f64,
        partial_sum: f64,
    },

    #[error("invalid frequency range [{lo}, {hi}] with {count} bins")]
    InvalidRange { lo: f64, hi: f64, count: usize },

    #[error("separation must be strictly positive, got {0}")]
    NonPositiveSeparation(f64),

    #[error("Fock truncation dim {dim} too small: weight deficit {deficit:e} exceeds {tol:e}")]
    TruncationTooSmall { dim: usize, deficit: f64, tol: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid configuration value for `{0}`: {1}")]
    InvalidArgument(&'static str, String),
}
