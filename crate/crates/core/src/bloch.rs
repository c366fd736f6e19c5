//! Closed-form Bloch-vector evolution under the resonant thermal coupling
//! and uniform trajectory sampling.

use rayon::prelude::*;
use thiserror::Error;

use crate::params::ModelParams;
use crate::series::{eval_l, LValues};
use crate::vec3::BlochVector;

/// Slack on the unit-norm check for initial states; rounding from upstream
/// state preparation is tolerated, anything larger is rejected rather than
/// silently renormalized.
pub const NORM_SLACK: f64 = 1e-12;

/// Default cap on the number of grid points a sampled trajectory may hold.
pub const DEFAULT_GRID_CAP: usize = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum BlochError {
    #[error("initial state norm {0} exceeds 1 (not a physical state)")]
    InvalidState(f64),
    #[error("grid spacing must be positive, got {0}")]
    InvalidStep(f64),
    #[error("t_max must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("grid would hold {requested} points, cap is {cap}")]
    GridTooLong { requested: usize, cap: usize },
}

/// A uniformly sampled trajectory of the Bloch vector, with analytic
/// velocities at every sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub s0: BlochVector,
    pub times: Vec<f64>,
    pub points: Vec<BlochVector>,
    /// Time derivative of the Bloch vector along the trajectory, from the
    /// analytic series derivatives (never finite differences).
    pub velocities: Vec<BlochVector>,
    /// Uniform series truncation bound shared by every sample.
    pub err_bound: f64,
}

fn check_state(s0: BlochVector) -> Result<(), BlochError> {
    let n = s0.norm();
    if !n.is_finite() || n > 1.0 + NORM_SLACK {
        return Err(BlochError::InvalidState(n));
    }
    Ok(())
}

/// Apply the closed-form evolution map to an initial Bloch vector:
/// `(L1 x0, L1 y0, L3 z0 + L4)`.
pub fn evolve_bloch(s0: BlochVector, t: f64, params: &ModelParams) -> Result<BlochVector, BlochError> {
    check_state(s0)?;
    Ok(apply_map(s0, &eval_l(params, t)))
}

/// The evolution map for precomputed coefficients; shared by the Bloch and
/// Lagrangian-flow entry points so both use identical arithmetic.
pub fn apply_map(s0: BlochVector, lv: &LValues) -> BlochVector {
    BlochVector::new(lv.l1 * s0.x, lv.l1 * s0.y, lv.l3 * s0.z + lv.l4)
}

/// Velocity of the evolved state for precomputed coefficients:
/// `(dL1 x0, dL1 y0, dL3 z0 + dL4)`.
pub fn apply_map_velocity(s0: BlochVector, lv: &LValues) -> BlochVector {
    BlochVector::new(lv.dl1 * s0.x, lv.dl1 * s0.y, lv.dl3 * s0.z + lv.dl4)
}

/// Sample the trajectory on the uniform grid `0, dt, ..., <= t_max` with the
/// default point cap.
pub fn sample_trajectory(
    s0: BlochVector,
    t_max: f64,
    dt: f64,
    params: &ModelParams,
) -> Result<Trajectory, BlochError> {
    sample_trajectory_with_cap(s0, t_max, dt, params, DEFAULT_GRID_CAP)
}

/// Sample the trajectory on the uniform grid `0, dt, ..., <= t_max`.
///
/// Grid times are `i * dt` (not accumulated sums) so the grid is exactly
/// reproducible. A small relative guard keeps `t_max / dt` from losing its
/// final point to rounding.
pub fn sample_trajectory_with_cap(
    s0: BlochVector,
    t_max: f64,
    dt: f64,
    params: &ModelParams,
    cap: usize,
) -> Result<Trajectory, BlochError> {
    check_state(s0)?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(BlochError::InvalidStep(dt));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(BlochError::InvalidHorizon(t_max));
    }
    let steps = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    let n_points = steps + 1;
    if n_points > cap {
        return Err(BlochError::GridTooLong { requested: n_points, cap });
    }

    let samples: Vec<(f64, BlochVector, BlochVector, f64)> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * dt;
            let lv = eval_l(params, t);
            (t, apply_map(s0, &lv), apply_map_velocity(s0, &lv), lv.err_bound)
        })
        .collect();

    let err_bound = samples[0].3;
    Ok(Trajectory {
        params: *params,
        s0,
        times: samples.iter().map(|s| s.0).collect(),
        points: samples.iter().map(|s| s.1).collect(),
        velocities: samples.iter().map(|s| s.2).collect(),
        err_bound,
    })
}
