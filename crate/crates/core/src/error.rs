use thiserror::Error;

pub type Result<T> = std::result::Result<T, DomainError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("connected vehicle at index {index} has no predicted position")]
    MissingPrediction { index: usize },
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e} > tolerance {tolerance:e}")]
    QuadratureFailed {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },
}

/// Reject NaN and anything below `min`.
pub(crate) fn at_least(name: &'static str, value: f64, min: f64) -> Result<f64> {
    if value.is_finite() && value >= min {
        Ok(value)
    } else {
        Err(DomainError::OutOfRange {
            name,
            requirement: if min == 0.0 { "finite and >= 0" } else { "finite and above its lower limit" },
            value,
        })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DomainError::OutOfRange {
            name,
            requirement: "finite and > 0",
            value,
        })
    }
}

pub(crate) fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(DomainError::OutOfRange {
            name,
            requirement: "in [0, 1]",
            value,
        })
    }
}
