use thiserror::Error;

/// Which density-band condition a candidate band violates.
#[derive(Debug, Clone, PartialEq)]
pub enum BandViolation {
    /// `lower[k] < 0` or `lower[k] > upper[k]` (or a NaN sample).
    Ordering { k: usize, lower: f64, upper: f64 },
    /// `<lower, mu>` exceeds one.
    LowerMass { mass: f64 },
    /// `<upper, mu>` falls short of one.
    UpperMass { mass: f64 },
}

impl std::fmt::Display for BandViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandViolation::Ordering { k, lower, upper } => {
                write!(f, "bound ordering violated at grid point {k}: lower {lower}, upper {upper}")
            }
            BandViolation::LowerMass { mass } => write!(f, "lower bound mass {mass} exceeds 1"),
            BandViolation::UpperMass { mass } => write!(f, "upper bound mass {mass} is below 1"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },

    #[error("infeasible band for density {density}: {violation}")]
    InfeasibleBand { density: usize, violation: BandViolation },

    #[error("invalid bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("numerical evaluation failed for density {n} at grid point {k}: {detail}")]
    Numerical { n: usize, k: usize, detail: String },

    #[error("root function returned NaN at x = {x}")]
    NanEvaluation { x: f64 },

    #[error("proximal inner solve failed at outer iteration {outer}: {detail}")]
    InnerStalled { outer: usize, detail: String },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
