//! Self-intersections of the projected trajectory in the xz-plane.
//!
//! The projected curve crosses itself even though the underlying dynamics
//! is deterministic: the crossing times carry different velocities, so the
//! two states are distinct in phase space. Detection runs in two stages:
//! a segment-pair scan over the sampled polyline with filtered orientation
//! predicates, then Newton refinement of each candidate using the analytic
//! velocity Jacobian.

use rayon::prelude::*;
use thiserror::Error;

use crate::bloch::{evolve_bloch, BlochError, Trajectory};
use crate::params::ModelParams;
use crate::series::eval_l;
use crate::vec3::BlochVector;

/// Trajectories are considered planar when every |y| stays below this.
pub const PLANAR_TOL: f64 = 1e-12;

/// Default convergence tolerance of the Newton refinement.
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;

const MAX_NEWTON_ITERATIONS: usize = 50;
const MIN_TIME_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum IntersectError {
    #[error("trajectory leaves the xz-plane (max |y| = {0:e})")]
    NonPlanar(f64),
    #[error("need at least 2 segments, trajectory has {0}")]
    TooFewSegments(usize),
    #[error("Newton refinement did not converge after {iterations} iterations (|F| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian is degenerate (det = {det:e}): tangential contact or coincident times")]
    DegenerateJacobian { det: f64 },
    #[error(transparent)]
    Sampling(#[from] BlochError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A pair of non-adjacent polyline segments that properly intersect, with
/// chord-interpolated time guesses for the refinement stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub seg_a: usize,
    pub seg_b: usize,
    pub t1_guess: f64,
    pub t2_guess: f64,
}

/// A refined self-intersection of the projected trajectory.
#[derive(Debug, Clone, Copy)]
pub struct IntersectionEvent {
    pub t1: f64,
    pub t2: f64,
    /// Crossing point `(S_x, S_z)`.
    pub point: [f64; 2],
    pub v_at_t1: [f64; 2],
    pub v_at_t2: [f64; 2],
    /// Euclidean distance between the two `(position, velocity)` pairs in
    /// the four-dimensional projected phase space; strictly positive for
    /// every reported event.
    pub phase_gap: f64,
}

/// Orientation of `c` relative to the directed line `a -> b`, with a static
/// floating-point filter: the sign is certain when nonzero, and `0.0` is
/// returned whenever rounding could make the sign ambiguous.
fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let detleft = (a[0] - c[0]) * (b[1] - c[1]);
    let detright = (a[1] - c[1]) * (b[0] - c[0]);
    let det = detleft - detright;
    let errbound = 3.3306690738754716e-16 * (detleft.abs() + detright.abs());
    if det.abs() >= errbound {
        det
    } else {
        0.0
    }
}

fn proper_crossing(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = orient2d(p3, p4, p1);
    let d2 = orient2d(p3, p4, p2);
    let d3 = orient2d(p1, p2, p3);
    let d4 = orient2d(p1, p2, p4);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Chord parameter in `[0, 1]` of the crossing along `p1 -> p2`.
fn crossing_parameter(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> f64 {
    let d1 = orient2d(p3, p4, p1);
    let d2 = orient2d(p3, p4, p2);
    d1 / (d1 - d2)
}

/// Find every pair of non-adjacent polyline segments of the projected
/// trajectory that properly intersect, in deterministic `(seg_a, seg_b)`
/// order.
///
/// Requires a planar trajectory (`y` identically zero) with at least two
/// segments. Grazing contacts below the predicate filter resolution are
/// not reported.
pub fn scan_candidates(traj: &Trajectory) -> Result<Vec<CandidatePair>, IntersectError> {
    let n_pts = traj.points.len();
    if n_pts < 3 {
        return Err(IntersectError::TooFewSegments(n_pts.saturating_sub(1)));
    }
    let max_y = traj.points.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
    if max_y > PLANAR_TOL {
        return Err(IntersectError::NonPlanar(max_y));
    }

    let pts: Vec<[f64; 2]> = traj.points.iter().map(|p| [p.x, p.z]).collect();
    let boxes: Vec<[f64; 4]> = pts
        .windows(2)
        .map(|w| {
            [
                w[0][0].min(w[1][0]),
                w[0][0].max(w[1][0]),
                w[0][1].min(w[1][1]),
                w[0][1].max(w[1][1]),
            ]
        })
        .collect();
    let n_seg = boxes.len();

    let mut rows: Vec<Vec<CandidatePair>> = Vec::new();
    (0..n_seg)
        .into_par_iter()
        .map(|i| {
            let mut found = Vec::new();
            let bi = boxes[i];
            for j in (i + 2)..n_seg {
                let bj = boxes[j];
                if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                    continue;
                }
                let (p1, p2, p3, p4) = (pts[i], pts[i + 1], pts[j], pts[j + 1]);
                if proper_crossing(p1, p2, p3, p4) {
                    let s = crossing_parameter(p1, p2, p3, p4);
                    let u = crossing_parameter(p3, p4, p1, p2);
                    found.push(CandidatePair {
                        seg_a: i,
                        seg_b: j,
                        t1_guess: traj.times[i] + s * (traj.times[i + 1] - traj.times[i]),
                        t2_guess: traj.times[j] + u * (traj.times[j + 1] - traj.times[j]),
                    });
                }
            }
            found
        })
        .collect_into_vec(&mut rows);
    Ok(rows.into_iter().flatten().collect())
}

/// Newton-refine a bracketed candidate crossing.
///
/// Solves `S_xz(t1) = S_xz(t2)` with the analytic velocity Jacobian,
/// declaring convergence at `|F| <= tol`. Tangential contacts and
/// coincident times surface as [`IntersectError::DegenerateJacobian`].
pub fn refine_event(
    t1_guess: f64,
    t2_guess: f64,
    params: &ModelParams,
    s0: BlochVector,
    tol: f64,
) -> Result<IntersectionEvent, IntersectError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(IntersectError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if s0.y.abs() > PLANAR_TOL {
        return Err(IntersectError::InvalidInput(
            "initial state is off the xz-plane; the projected refinement needs y0 = 0".into(),
        ));
    }
    evolve_bloch(s0, 0.0, params)?; // validates |s0| <= 1

    let state = |t: f64| -> ([f64; 2], [f64; 2]) {
        let lv = eval_l(params, t);
        (
            [lv.l1 * s0.x, lv.l3 * s0.z + lv.l4],
            [lv.dl1 * s0.x, lv.dl3 * s0.z + lv.dl4],
        )
    };

    let mut t1 = t1_guess;
    let mut t2 = t2_guess;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (p1, v1) = state(t1);
        let (p2, v2) = state(t2);
        let f = [p1[0] - p2[0], p1[1] - p2[1]];
        let residual = (f[0] * f[0] + f[1] * f[1]).sqrt();
        if residual <= tol {
            if (t1 - t2).abs() < MIN_TIME_SEPARATION {
                return Err(IntersectError::DegenerateJacobian { det: 0.0 });
            }
            let (lo, hi, v_lo, v_hi) =
                if t1 < t2 { (t1, t2, v1, v2) } else { (t2, t1, v2, v1) };
            let point = [0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1])];
            let dv = [v_lo[0] - v_hi[0], v_lo[1] - v_hi[1]];
            let phase_gap =
                (f[0] * f[0] + f[1] * f[1] + dv[0] * dv[0] + dv[1] * dv[1]).sqrt();
            return Ok(IntersectionEvent {
                t1: lo,
                t2: hi,
                point,
                v_at_t1: v_lo,
                v_at_t2: v_hi,
                phase_gap,
            });
        }
        // J = [v(t1), -v(t2)] columnwise
        let det = -v1[0] * v2[1] + v2[0] * v1[1];
        if det.abs() < 1e-14 {
            return Err(IntersectError::DegenerateJacobian { det });
        }
        let dt1 = (-v2[1] * f[0] + v2[0] * f[1]) / det;
        let dt2 = (-v1[1] * f[0] + v1[0] * f[1]) / det;
        t1 -= dt1;
        t2 -= dt2;
        if !t1.is_finite() || !t2.is_finite() {
            return Err(IntersectError::NoConvergence {
                iterations: MAX_NEWTON_ITERATIONS,
                residual: f64::INFINITY,
            });
        }
    }
    let (p1, _) = state(t1);
    let (p2, _) = state(t2);
    let f = [p1[0] - p2[0], p1[1] - p2[1]];
    Err(IntersectError::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: (f[0] * f[0] + f[1] * f[1]).sqrt(),
    })
}

/// Sample, scan, filter near-self pairs, refine, deduplicate and sort all
/// self-intersections of the trajectory from `s0` over `[0, t_max]`.
pub fn find_intersections(
    s0: BlochVector,
    t_max: f64,
    dt: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<IntersectionEvent>, IntersectError> {
    let traj = crate::bloch::sample_trajectory(s0, t_max, dt, params)?;
    let candidates = scan_candidates(&traj)?;
    let mut events: Vec<IntersectionEvent> = Vec::new();
    for cand in candidates {
        // near-self matches are artifacts of the sampling, not crossings
        if (cand.t2_guess - cand.t1_guess).abs() < 10.0 * dt {
            continue;
        }
        let ev = refine_event(cand.t1_guess, cand.t2_guess, params, s0, tol)?;
        let duplicate = events
            .iter()
            .any(|e| (e.t1 - ev.t1).abs() < 1e-6 && (e.t2 - ev.t2).abs() < 1e-6);
        if !duplicate {
            events.push(ev);
        }
    }
    events.sort_by(|a, b| (a.t1, a.t2).partial_cmp(&(b.t1, b.t2)).expect("finite times"));
    Ok(events)
}
