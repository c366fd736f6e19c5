//! Closed-form Bloch-vector dynamics of a two-level atom coupled resonantly
//! to a thermal cavity mode, together with the equivalent compressible,
//! inviscid, irrotational flow picture of that dynamics.
//!
//! The atom's reduced state evolves through three thermally weighted
//! trigonometric series `L1`, `L3`, `L4` over photon numbers. Everything in
//! this crate is built on top of those series:
//!
//! * [`series`] evaluates the series and their first two time derivatives
//!   with certified truncation error bounds,
//! * [`bloch`] applies the closed-form evolution map and samples
//!   trajectories,
//! * [`fluid`] exposes the same map as a Lagrangian flow and computes the
//!   Eulerian velocity, potential, density, pressure and body force,
//! * [`oracle`] independently re-derives the Bloch vector by exact evolution
//!   of the joint atom-field density operator in a truncated Fock space,
//! * [`flow`] treats the Eulerian field as an honest flow: particle
//!   advection, momentum/continuity residuals and the field Hamiltonian,
//! * [`intersect`] locates and refines self-intersections of the projected
//!   trajectory.
//!
//! Units are dimensionless throughout: time in units of the inverse coupling
//! strength, inverse temperature `beta` in units of the inverse photon
//! energy.

pub mod bloch;
pub mod fluid;
pub mod flow;
pub mod intersect;
pub mod oracle;
pub mod params;
pub mod series;
pub mod vec3;

pub use bloch::{evolve_bloch, sample_trajectory, BlochError, Trajectory};
pub use fluid::{
    density_by_quadrature, density_closed_form, inverse_map, lagrangian_map, sample_field,
    EquationOfState, FluidError, FluidSample, EPS_SING,
};
pub use flow::{
    advect, continuity_residual, energy_functional, ns_residual, AdvectionResult, EnergyEstimate,
    FlowError,
};
pub use intersect::{
    find_intersections, refine_event, scan_candidates, CandidatePair, IntersectError,
    IntersectionEvent,
};
pub use oracle::{
    compare_with_closed_form, evolve_exact, thermal_weights, AtomState, ComparisonReport,
    FockConfig, OracleError,
};
pub use params::{ModelParams, ParamsError, Truncation};
pub use series::{eval_l, tail_bound, truncation_order, LValues};
pub use vec3::{BlochVector, Vec3};
