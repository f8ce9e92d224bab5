use thiserror::Error;

/// Errors raised by state construction, detector modelling and breeding.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: truncated norm {norm:.3e} is below 1 - {tail_tol:.1e}; increase the truncation")]
    TruncationOverflow {
        op: &'static str,
        norm: f64,
        tail_tol: f64,
    },

    #[error("{op}: padded squeezing lost too much norm (kept {norm:.3e})")]
    PadInsufficient { op: &'static str, norm: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("conditioning on {k} clicks has success probability {p_succ:.3e}")]
    DegenerateCondition { k: usize, p_succ: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid detector spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {cases:.3e} placements exceeds the brute-force bound")]
    EnumerationBound { cases: f64 },

    #[error("series did not converge: estimated tail {tail:.3e}")]
    SeriesNotConverged { tail: f64 },

    #[error("pair-correlated detectors need an even detector count, got {0}")]
    OddDetectorCount(usize),

    #[error("oracle outside its domain: {0}")]
    OracleDomain(String),
}

impl Error {
    /// Short name of the failing operation, used by the experiment runner.
    pub fn operation(&self) -> &'static str {
        match self {
            Error::TruncationOverflow { op, .. } | Error::PadInsufficient { op, .. } => op,
            Error::DegenerateInput(_) => "state construction",
            Error::DegenerateCondition { .. } => "condition_on_clicks",
            Error::DimensionMismatch { .. } => "dimension check",
            Error::InvalidSpec(_) => "detector spec",
            Error::InvalidParameter(_) => "parameter check",
            Error::EnumerationBound { .. } => "brute_force_click_oracle",
            Error::SeriesNotConverged { .. } => "squeezed_click_formula",
            Error::OddDetectorCount(_) => "correlated_click_transform",
            Error::OracleDomain(_) => "gps_ideal_k2_oracle",
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationOverflow { .. }
                | Error::PadInsufficient { .. }
                | Error::DegenerateCondition { .. }
                | Error::SeriesNotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
