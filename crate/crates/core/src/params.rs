//! Physical configuration shared by every module.

use thiserror::Error;

/// How the infinite photon-number sums are truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Sum a fixed number of terms `n = 0..=N`.
    FixedOrder(usize),
    /// Pick the smallest order whose certified tail bound is at most `tol`,
    /// uniformly over the series and their first two derivatives.
    Certified(f64),
}

/// Model parameters: dimensionless inverse temperature and the truncation
/// policy all series evaluations follow.
///
/// `beta` is in units of the inverse photon energy and must be positive and
/// finite; the zero-temperature limit is reached through large `beta`
/// (`beta = 20` already bounds thermal corrections by ~2e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub trunc: Truncation,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("certified tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
}

impl ModelParams {
    /// Parameters with the default certified truncation tolerance of 1e-12.
    pub fn new(beta: f64) -> Result<Self, ParamsError> {
        Self::with_truncation(beta, Truncation::Certified(1e-12))
    }

    pub fn with_truncation(beta: f64, trunc: Truncation) -> Result<Self, ParamsError> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(ParamsError::InvalidBeta(beta));
        }
        if let Truncation::Certified(tol) = trunc {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(ParamsError::InvalidTolerance(tol));
            }
        }
        Ok(ModelParams { beta, trunc })
    }
}
