use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("product dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("operator flagged Hermitian has defect {defect:e} (scale {scale:e})")]
    NotHermitian { defect: f64, scale: f64 },

    #[error("state is not normalized: |psi|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("ambiguous dressed-state label for eigenvector {index}: overlaps {best:.6} and {second:.6}")]
    AmbiguousLabel { index: usize, best: f64, second: f64 },

    #[error("photon ladder incomplete: no dressed state dominated by |0, {photons}>")]
    LadderIncomplete { photons: usize },

    #[error("reference rate R_02 vanishes ({value:e})")]
    ZeroReference { value: f64 },

    #[error("outside perturbative validity: score {score:.3} > {limit}")]
    OutsideValidity { score: f64, limit: f64 },

    #[error("no resonance in bracket [{lo}, {hi}] (growth ratio {ratio:.3})")]
    NoResonance { lo: f64, hi: f64, ratio: f64 },

    #[error("time step {dt} exceeds the limit {limit} set by fast frequency {fast_frequency}")]
    StepTooLarge { dt: f64, limit: f64, fast_frequency: f64 },

    #[error("norm drift {drift:e} at t = {t} exceeds abort threshold {threshold:e}; reduce dt or raise n_max")]
    NormDrift { t: f64, drift: f64, threshold: f64 },

    #[error("truncation not converged: tail probability {tail:e} at n_max = {n_max}")]
    TruncationNotConverged { n_max: usize, tail: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// Validation-type errors map to CLI exit code 2, convergence failures to 3.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::TruncationNotConverged { .. }
                | Error::NormDrift { .. }
                | Error::NoResonance { .. }
                | Error::Eigensolver(_)
        )
    }
}
