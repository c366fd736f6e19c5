//! Cross-validation of the closed-form evolution against the exact
//! truncated-Fock-space oracle.

use jcmflow_core::{
    compare_with_closed_form, evolve_exact, sample_trajectory, AtomState, FockConfig,
    ModelParams, Vec3,
};

#[test]
fn closed_form_matches_exact_evolution_on_long_grid() {
    let params = ModelParams::new(1.0).unwrap();
    let cfg = FockConfig::new(1.0, 200).unwrap();
    let atom = AtomState::from_bloch(Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let grid: Vec<f64> = (0..=500).map(|i| i as f64 * 0.05).collect();
    let report = compare_with_closed_form(&atom, &grid, &params, &cfg).unwrap();
    assert!(
        report.max_deviation <= 1e-9,
        "max deviation {:e}",
        report.max_deviation
    );
    // the certified budget is far smaller than the deviation threshold
    assert!(report.budget() < 1e-12);
    assert_eq!(report.deviations.len(), grid.len());
}

#[test]
fn sampled_trajectory_agrees_with_oracle_at_every_grid_time() {
    let params = ModelParams::new(1.0).unwrap();
    let cfg = FockConfig::new(1.0, 120).unwrap();
    let s0 = Vec3::new(0.0, 0.0, 1.0);
    let atom = AtomState::from_bloch(s0).unwrap();
    let traj = sample_trajectory(s0, 10.0, 0.05, &params).unwrap();
    for (i, &t) in traj.times.iter().enumerate() {
        let exact = evolve_exact(&atom, t, &cfg);
        let dev = (exact - traj.points[i]).norm();
        assert!(dev <= 1e-9, "t={t}: deviation {dev:e}");
    }
}

#[test]
fn general_mixed_state_agrees_with_oracle() {
    let params = ModelParams::new(0.7).unwrap();
    let cfg = FockConfig::new(0.7, 60).unwrap();
    let s0 = Vec3::new(0.3, -0.5, 0.2);
    let atom = AtomState::from_bloch(s0).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.11).collect();
    let report = compare_with_closed_form(&atom, &grid, &params, &cfg).unwrap();
    assert!(
        report.max_deviation <= 1e-9,
        "max deviation {:e}",
        report.max_deviation
    );
}
