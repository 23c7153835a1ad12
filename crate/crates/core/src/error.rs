use thiserror::Error;

/// Errors raised by the link model, the count engine, the codec and the
/// analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter lies outside its valid domain.
    #[error("{field} = {value} is out of range: {reason}")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A trace is too short for the requested operation.
    #[error("insufficient trace length: {0}")]
    Length(String),

    /// Two inputs disagree in shape or geometry.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A statistic is undefined because its input has no spread.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    /// The decoder could not separate the calibration levels.
    #[error("calibration failure: level separation {separation:.3} below combined std {combined_std:.3}")]
    Calibration { separation: f64, combined_std: f64 },

    /// Malformed message, schedule or clock layout.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Failure reading or writing a serialized artifact.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

pub(crate) fn check_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn check_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must be finite",
        })
    }
}
