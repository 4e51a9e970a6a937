//! Error taxonomy shared by all solver stages.
//!
//! The four solver outcomes (`hypothesis-refused`, `diverged`, `not-converged`,
//! `inside-I-eps`) are part of the public contract: sweep outputs and CLI exit
//! codes aggregate runs by [`OutcomeTag`].

use thiserror::Error;

/// Outcome class of a run, stable across the JSON/CSV surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeTag {
    Ok,
    HypothesisRefused,
    Diverged,
    NotConverged,
    InsideIEps,
}

impl OutcomeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeTag::Ok => "ok",
            OutcomeTag::HypothesisRefused => "hypothesis-refused",
            OutcomeTag::Diverged => "diverged",
            OutcomeTag::NotConverged => "not-converged",
            OutcomeTag::InsideIEps => "inside-I-eps",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Basis vectors fail a structural requirement (zero vector, dependence,
    /// dimension overflow).
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input fails a hypothesis the construction needs (Diophantine quality,
    /// gauge invariance, geometric flags); the run is refused, not attempted.
    #[error("hypothesis refused: {0}")]
    HypothesisRefused(String),

    /// An iteration left the ball where contraction is certified.
    #[error("diverged in {stage}: {detail}")]
    Diverged { stage: &'static str, detail: String },

    #[error("{stage} did not converge after {iterations} iterations (last step {last_delta:e})")]
    NotConverged {
        stage: &'static str,
        iterations: usize,
        last_delta: f64,
    },

    /// Amplitude vector landed in the excluded set I_ε = {|det A(a)| ≤ ε^{1/6}}.
    #[error("amplitudes inside I_eps: det A(a) = {det:e}, within cutoff {cutoff:e}")]
    InsideIEps { det: f64, cutoff: f64 },

    /// Exactly vanishing small divisor at a non-resonant site: ρ cannot satisfy
    /// the assumed Diophantine structure, or ω drifted too far from ω_0.
    #[error("zero divisor at non-resonant k = {k:?}")]
    ZeroDivisor { k: Vec<i64> },

    /// A consistency check that should hold for every valid input failed;
    /// indicates a bug, not a bad input.
    #[error("internal verification failed: {0}")]
    Verification(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Collapse onto the public outcome taxonomy (usage-level errors map onto
    /// `hypothesis-refused`'s gatekeeping slot only at the CLI layer; here they
    /// are reported as refusals of the run).
    pub fn outcome(&self) -> OutcomeTag {
        match self {
            Error::Diverged { .. } => OutcomeTag::Diverged,
            Error::NotConverged { .. } => OutcomeTag::NotConverged,
            Error::InsideIEps { .. } => OutcomeTag::InsideIEps,
            _ => OutcomeTag::HypothesisRefused,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
