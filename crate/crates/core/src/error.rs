use std::fmt;

/// Named side conditions checked by the parameter selector and the cutoff builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Condition {
    /// `Δ^n < K T^{n-1}`
    C1,
    /// `0 < r ≤ Q^{-2η} min(Kδ, Δ/K)`
    C2,
    /// `Δ ≥ Q^{η-1}`
    C3,
    /// `Q^{η-1} K^{-1} ≤ r ≤ Q^{-2η} K δ`
    C4,
    /// `r ≥ Q^{η-1}`
    RadiusLowerBound,
    /// `K ≤ 1`
    KAtMostOne,
    /// `η` above the cap of the requested regime.
    EtaCap,
    /// `δ` outside the admissible window.
    DeltaRange,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::RadiusLowerBound => "r>=Q^(eta-1)",
            Condition::KAtMostOne => "K<=1",
            Condition::EtaCap => "eta-cap",
            Condition::DeltaRange => "delta-range",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("condition {condition} violated: {detail}")]
    Condition { condition: Condition, detail: String },
    #[error("resource error: {what} needs {required}, budget is {budget}")]
    Resource {
        what: String,
        required: u128,
        budget: u128,
    },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("resolution error: {0}")]
    Resolution(String),
}

impl Error {
    pub(crate) fn condition(condition: Condition, detail: impl Into<String>) -> Self {
        Error::Condition {
            condition,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
