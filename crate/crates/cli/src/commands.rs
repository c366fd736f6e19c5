//! One runner per subcommand: resolve configuration, compute, write
//! artifacts (data file, optional plot script, manifest), print a one-line
//! summary.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use jcmflow_core as core;
use jcmflow_core::{
    BlochError, EquationOfState, FlowError, FluidError, IntersectError, ModelParams, Vec3,
};

use crate::config::{
    build_params, check_positive, check_state_norm, resolve, resolve_opt, CliError, EosArg,
    FileConfig, OutputFormat, TimesArg, VecArg,
};
use crate::manifest::{ErrorBudget, RunManifest};
use crate::output::{
    field_plot_script, fmt_f64, join_row, plot_script_path, trajectory_plot_script, write_csv,
    write_json,
};

const COMMON_KEYS: &[&str] = &["beta", "tol", "n-terms", "output", "format"];

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Flat `key = value` config file; command-line flags take precedence
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,
    /// Dimensionless inverse temperature
    #[arg(long)]
    pub beta: Option<f64>,
    /// Certified series truncation tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixed series truncation order (overrides --tol)
    #[arg(long, value_name = "N")]
    pub n_terms: Option<usize>,
    /// Output data file
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

struct Common {
    file: FileConfig,
    beta: f64,
    params: ModelParams,
    output: PathBuf,
    format: OutputFormat,
}

fn resolve_common(
    args: &CommonArgs,
    extra_keys: &[&str],
    default_output: &str,
    default_format: OutputFormat,
) -> Result<Common, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let mut allowed: Vec<&str> = COMMON_KEYS.to_vec();
    allowed.extend_from_slice(extra_keys);
    file.check_keys(&allowed)?;

    let beta = resolve(args.beta, &file, "beta", 1.0)?;
    let tol = resolve(args.tol, &file, "tol", 1e-12)?;
    let n_terms = resolve_opt(args.n_terms, &file, "n-terms")?;
    check_positive("beta", beta)?;
    check_positive("tol", tol)?;
    let params = build_params(beta, tol, n_terms)?;
    let output = resolve(args.output.clone(), &file, "output", PathBuf::from(default_output))?;
    let format = resolve(args.format, &file, "format", default_format)?;
    Ok(Common { file, beta, params, output, format })
}

fn series_budget(params: &ModelParams) -> ErrorBudget {
    let order = core::series::resolved_order(params);
    let bound = (0..=2)
        .map(|ord| core::tail_bound(params.beta, order, ord))
        .fold(0.0, f64::max);
    ErrorBudget { series_err_bound: bound, series_order: order, fock_deficit: None }
}

fn numerical_from_flow(e: FlowError) -> CliError {
    match e {
        FlowError::OutsideBall(_) | FlowError::InvalidInput(_) => CliError::Usage(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn numerical_from_fluid(e: FluidError) -> CliError {
    match e {
        FluidError::OutsideBall(_) | FluidError::InvalidInput(_) => CliError::Usage(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn usage_from_bloch(e: BlochError) -> CliError {
    CliError::Usage(e.to_string())
}

fn grid_times(t_max: f64, dt: f64) -> Vec<f64> {
    let steps = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    (0..=steps).map(|i| i as f64 * dt).collect()
}

// ---------------------------------------------------------------- trajectory

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial Bloch vector, comma separated
    #[arg(long, value_name = "X,Y,Z")]
    s0: Option<VecArg>,
    /// End of the sampling window
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid spacing
    #[arg(long)]
    dt: Option<f64>,
}

pub fn run_trajectory(args: &TrajectoryArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(&args.common, &["s0", "t-max", "dt"], "trajectory.csv", OutputFormat::Csv)?;
    let s0 = resolve(args.s0, &c.file, "s0", VecArg(Vec3::new(1.0, 0.0, 0.0)))?.0;
    let t_max = resolve(args.t_max, &c.file, "t-max", 250.0)?;
    let dt = resolve(args.dt, &c.file, "dt", 0.01)?;
    check_state_norm(s0)?;
    check_positive("t-max", t_max)?;
    check_positive("dt", dt)?;

    let traj = core::sample_trajectory(s0, t_max, dt, &c.params).map_err(usage_from_bloch)?;

    match c.format {
        OutputFormat::Csv => {
            let rows = traj.times.iter().enumerate().map(|(i, &t)| {
                let p = traj.points[i];
                let v = traj.velocities[i];
                join_row(&[
                    fmt_f64(t),
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                    fmt_f64(p.z),
                    fmt_f64(v.x),
                    fmt_f64(v.y),
                    fmt_f64(v.z),
                    fmt_f64(traj.err_bound),
                ])
            });
            write_csv(&c.output, "t,Sx,Sy,Sz,vx,vy,vz,err_bound", rows)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                t: f64,
                s: [f64; 3],
                v: [f64; 3],
            }
            #[derive(Serialize)]
            struct Report {
                beta: f64,
                s0: [f64; 3],
                t_max: f64,
                dt: f64,
                err_bound: f64,
                rows: Vec<Row>,
            }
            let rows = traj
                .times
                .iter()
                .enumerate()
                .map(|(i, &t)| Row {
                    t,
                    s: traj.points[i].to_array(),
                    v: traj.velocities[i].to_array(),
                })
                .collect();
            write_json(
                &c.output,
                &Report { beta: c.beta, s0: s0.to_array(), t_max, dt, err_bound: traj.err_bound, rows },
            )?;
        }
    }

    let config = json!({
        "command": "trajectory",
        "beta": c.beta,
        "s0": s0.to_array(),
        "t_max": t_max,
        "dt": dt,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("trajectory", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let script = plot_script_path(&c.output);
    std::fs::write(
        &script,
        trajectory_plot_script(&c.output.file_name().unwrap_or_default().to_string_lossy()),
    )?;
    manifest.record_artifact(&script)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "trajectory: {} points, err_bound {:e} -> {}, {}, {}",
        traj.points.len(),
        traj.err_bound,
        c.output.display(),
        script.display(),
        manifest_file.display()
    );
    Ok(())
}

// --------------------------------------------------------------------- field

#[derive(Args, Debug)]
pub struct FieldArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample time or comma-separated list of times
    #[arg(long, value_name = "T[,T...]")]
    t: Option<TimesArg>,
    /// Points per axis of the half-disk lattice
    #[arg(long)]
    grid: Option<usize>,
    /// Equation of state: isothermal:C or polytropic:A,GAMMA
    #[arg(long)]
    eos: Option<EosArg>,
    /// Reference density
    #[arg(long)]
    rho0: Option<f64>,
}

pub fn run_field(args: &FieldArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(&args.common, &["t", "grid", "eos", "rho0"], "field.csv", OutputFormat::Csv)?;
    let times = resolve(args.t.clone(), &c.file, "t", TimesArg(vec![0.5]))?.0;
    let grid = resolve(args.grid, &c.file, "grid", 21usize)?;
    let eos = resolve(args.eos, &c.file, "eos", EosArg(EquationOfState::Isothermal { c: 1.0 }))?.0;
    let rho0 = resolve(args.rho0, &c.file, "rho0", 1.0)?;
    if grid < 2 {
        return Err(CliError::Usage(format!("grid must have at least 2 points per axis, got {grid}")));
    }
    check_positive("rho0", rho0)?;
    for &t in &times {
        if !t.is_finite() {
            return Err(CliError::Usage(format!("non-finite sample time {t}")));
        }
    }

    // lattice over the lower half-disk of the xz-plane: |x| <= 1, z <= 0
    let mut samples = Vec::new();
    for &t in &times {
        let lv = core::eval_l(&c.params, t);
        let points: Vec<Vec3> = (0..grid)
            .flat_map(|ix| {
                let x = -1.0 + 2.0 * ix as f64 / (grid - 1) as f64;
                (0..grid).map(move |iz| {
                    let z = -1.0 + iz as f64 / (grid - 1) as f64;
                    Vec3::new(x, 0.0, z)
                })
            })
            .filter(|p| p.dot(*p) <= 1.0 + 1e-12)
            .collect();
        let mut row_samples: Vec<core::FluidSample> = Vec::new();
        points
            .into_par_iter()
            .map(|p| core::fluid::sample_field_with(&lv, p, &eos, rho0))
            .collect_into_vec(&mut row_samples);
        samples.extend(row_samples);
    }
    let singular_count = samples.iter().filter(|s| s.singular).count();

    match c.format {
        OutputFormat::Csv => {
            let rows = samples.iter().map(|s| {
                join_row(&[
                    fmt_f64(s.t),
                    fmt_f64(s.x.x),
                    fmt_f64(s.x.z),
                    fmt_f64(s.v.x),
                    fmt_f64(s.v.z),
                    fmt_f64(s.div_v),
                    fmt_f64(s.rho),
                    fmt_f64(s.p),
                    fmt_f64(s.k_force.x),
                    fmt_f64(s.k_force.z),
                    s.singular.to_string(),
                ])
            });
            write_csv(&c.output, "t,x,z,vx,vz,div,rho,p,Kx,Kz,singular", rows)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                t: f64,
                x: f64,
                z: f64,
                vx: f64,
                vz: f64,
                div: f64,
                rho: f64,
                p: f64,
                kx: f64,
                kz: f64,
                singular: bool,
            }
            #[derive(Serialize)]
            struct Report {
                beta: f64,
                times: Vec<f64>,
                grid: usize,
                eos: String,
                rho0: f64,
                rows: Vec<Row>,
            }
            let rows = samples
                .iter()
                .map(|s| Row {
                    t: s.t,
                    x: s.x.x,
                    z: s.x.z,
                    vx: s.v.x,
                    vz: s.v.z,
                    div: s.div_v,
                    rho: s.rho,
                    p: s.p,
                    kx: s.k_force.x,
                    kz: s.k_force.z,
                    singular: s.singular,
                })
                .collect();
            write_json(
                &c.output,
                &Report {
                    beta: c.beta,
                    times: times.clone(),
                    grid,
                    eos: EosArg(eos).to_string(),
                    rho0,
                    rows,
                },
            )?;
        }
    }

    let config = json!({
        "command": "field",
        "beta": c.beta,
        "t": times,
        "grid": grid,
        "eos": EosArg(eos).to_string(),
        "rho0": rho0,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("field", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let script = plot_script_path(&c.output);
    std::fs::write(
        &script,
        field_plot_script(&c.output.file_name().unwrap_or_default().to_string_lossy()),
    )?;
    manifest.record_artifact(&script)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "field: {} samples over {} time(s), {} singular -> {}, {}, {}",
        samples.len(),
        times.len(),
        singular_count,
        c.output.display(),
        script.display(),
        manifest_file.display()
    );
    Ok(())
}

// -------------------------------------------------------------- oracle-check

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial Bloch vector, comma separated
    #[arg(long, value_name = "X,Y,Z")]
    s0: Option<VecArg>,
    /// End of the comparison grid
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid spacing
    #[arg(long)]
    dt: Option<f64>,
    /// Photon-number cutoff (default chosen from beta)
    #[arg(long, value_name = "N")]
    fock_cutoff: Option<usize>,
}

#[derive(Serialize)]
struct OracleReport {
    beta: f64,
    s0: [f64; 3],
    t_max: f64,
    dt: f64,
    fock_cutoff: usize,
    max_deviation: f64,
    series_err_bound: f64,
    fock_deficit: f64,
    budget: f64,
    samples: Vec<OracleSample>,
}

#[derive(Serialize)]
struct OracleSample {
    t: f64,
    deviation: f64,
}

pub fn run_oracle_check(args: &OracleCheckArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(
        &args.common,
        &["s0", "t-max", "dt", "fock-cutoff"],
        "oracle_check.json",
        OutputFormat::Json,
    )?;
    let s0 = resolve(args.s0, &c.file, "s0", VecArg(Vec3::new(1.0, 0.0, 0.0)))?.0;
    let t_max = resolve(args.t_max, &c.file, "t-max", 25.0)?;
    let dt = resolve(args.dt, &c.file, "dt", 0.05)?;
    let cutoff = resolve_opt(args.fock_cutoff, &c.file, "fock-cutoff")?;
    check_state_norm(s0)?;
    check_positive("t-max", t_max)?;
    check_positive("dt", dt)?;

    let cfg = match cutoff {
        Some(n) => core::FockConfig::new(c.beta, n).map_err(|e| CliError::Usage(e.to_string()))?,
        None => core::FockConfig::for_beta(c.beta).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let atom = core::AtomState::from_bloch(s0).map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = grid_times(t_max, dt);
    let report = core::compare_with_closed_form(&atom, &grid, &c.params, &cfg)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let out = OracleReport {
        beta: c.beta,
        s0: s0.to_array(),
        t_max,
        dt,
        fock_cutoff: cfg.n_max,
        max_deviation: report.max_deviation,
        series_err_bound: report.series_err_bound,
        fock_deficit: report.fock_deficit,
        budget: report.budget(),
        samples: report
            .times
            .iter()
            .zip(&report.deviations)
            .map(|(&t, &deviation)| OracleSample { t, deviation })
            .collect(),
    };
    match c.format {
        OutputFormat::Json => write_json(&c.output, &out)?,
        OutputFormat::Csv => {
            let rows = out
                .samples
                .iter()
                .map(|s| join_row(&[fmt_f64(s.t), fmt_f64(s.deviation)]));
            write_csv(&c.output, "t,deviation", rows)?;
        }
    }

    let config = json!({
        "command": "oracle-check",
        "beta": c.beta,
        "s0": s0.to_array(),
        "t_max": t_max,
        "dt": dt,
        "fock_cutoff": cfg.n_max,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut budget = series_budget(&c.params);
    budget.fock_deficit = Some(cfg.deficit());
    let mut manifest = RunManifest::new("oracle-check", config, budget);
    manifest.record_artifact(&c.output)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "oracle-check: max deviation {:e} over {} times (budget {:e}) -> {}, {}",
        out.max_deviation,
        out.samples.len(),
        out.budget,
        c.output.display(),
        manifest_file.display()
    );
    Ok(())
}

// ------------------------------------------------------------- intersections

#[derive(Args, Debug)]
pub struct IntersectionsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial Bloch vector (must lie in the xz-plane)
    #[arg(long, value_name = "X,Y,Z")]
    s0: Option<VecArg>,
    /// End of the scanned window
    #[arg(long)]
    t_max: Option<f64>,
    /// Trajectory sampling step for the segment scan
    #[arg(long)]
    dt: Option<f64>,
    /// Newton convergence tolerance on |S(t1) - S(t2)|
    #[arg(long)]
    refine_tol: Option<f64>,
}

#[derive(Serialize)]
struct IntersectionsReport {
    beta: f64,
    s0: [f64; 3],
    t_max: f64,
    dt: f64,
    refine_tol: f64,
    events: Vec<EventOut>,
}

#[derive(Serialize)]
struct EventOut {
    t1: f64,
    t2: f64,
    point: [f64; 2],
    v_at_t1: [f64; 2],
    v_at_t2: [f64; 2],
    phase_gap: f64,
}

pub fn run_intersections(args: &IntersectionsArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(
        &args.common,
        &["s0", "t-max", "dt", "refine-tol"],
        "intersections.json",
        OutputFormat::Json,
    )?;
    let s0 = resolve(args.s0, &c.file, "s0", VecArg(Vec3::new(1.0, 0.0, 0.0)))?.0;
    let t_max = resolve(args.t_max, &c.file, "t-max", 5.0)?;
    let dt = resolve(args.dt, &c.file, "dt", 0.005)?;
    let refine_tol = resolve(args.refine_tol, &c.file, "refine-tol", 1e-10)?;
    check_state_norm(s0)?;
    check_positive("t-max", t_max)?;
    check_positive("dt", dt)?;
    check_positive("refine-tol", refine_tol)?;
    if s0.y != 0.0 {
        return Err(CliError::Usage(
            "intersection analysis is defined on the xz-plane; s0 must have y = 0".into(),
        ));
    }

    let events = core::find_intersections(s0, t_max, dt, &c.params, refine_tol).map_err(|e| {
        match e {
            IntersectError::NoConvergence { .. } | IntersectError::DegenerateJacobian { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    })?;

    let out = IntersectionsReport {
        beta: c.beta,
        s0: s0.to_array(),
        t_max,
        dt,
        refine_tol,
        events: events
            .iter()
            .map(|e| EventOut {
                t1: e.t1,
                t2: e.t2,
                point: e.point,
                v_at_t1: e.v_at_t1,
                v_at_t2: e.v_at_t2,
                phase_gap: e.phase_gap,
            })
            .collect(),
    };
    match c.format {
        OutputFormat::Json => write_json(&c.output, &out)?,
        OutputFormat::Csv => {
            let rows = out.events.iter().map(|e| {
                join_row(&[
                    fmt_f64(e.t1),
                    fmt_f64(e.t2),
                    fmt_f64(e.point[0]),
                    fmt_f64(e.point[1]),
                    fmt_f64(e.v_at_t1[0]),
                    fmt_f64(e.v_at_t1[1]),
                    fmt_f64(e.v_at_t2[0]),
                    fmt_f64(e.v_at_t2[1]),
                    fmt_f64(e.phase_gap),
                ])
            });
            write_csv(&c.output, "t1,t2,Sx,Sz,vx1,vz1,vx2,vz2,phase_gap", rows)?;
        }
    }

    let config = json!({
        "command": "intersections",
        "beta": c.beta,
        "s0": s0.to_array(),
        "t_max": t_max,
        "dt": dt,
        "refine_tol": refine_tol,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("intersections", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    print!("intersections: {} event(s)", out.events.len());
    if let Some(first) = out.events.first() {
        print!(" (first at t1={:.6}, t2={:.6})", first.t1, first.t2);
    }
    println!(" -> {}, {}", c.output.display(), manifest_file.display());
    Ok(())
}

// ----------------------------------------------------------------- residuals

#[derive(Args, Debug)]
pub struct ResidualsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random sample points
    #[arg(long)]
    samples: Option<usize>,
    /// Samples are drawn with t in (0, t-max]
    #[arg(long)]
    t_max: Option<f64>,
    /// Central-difference step
    #[arg(long)]
    fd_step: Option<f64>,
    /// Screening margin on min(|L1|, |L3|)
    #[arg(long)]
    margin: Option<f64>,
    /// Reference density
    #[arg(long)]
    rho0: Option<f64>,
    /// Sampler seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ResidualsReport {
    beta: f64,
    samples: usize,
    t_max: f64,
    fd_step: f64,
    margin: f64,
    rho0: f64,
    seed: u64,
    max_ns_residual: f64,
    max_continuity_residual: f64,
    rows: Vec<ResidualRow>,
}

#[derive(Serialize)]
struct ResidualRow {
    t: f64,
    x: [f64; 3],
    ns: [f64; 3],
    continuity: f64,
}

pub fn run_residuals(args: &ResidualsArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(
        &args.common,
        &["samples", "t-max", "fd-step", "margin", "rho0", "seed"],
        "residuals.csv",
        OutputFormat::Csv,
    )?;
    let n_samples = resolve(args.samples, &c.file, "samples", 1000usize)?;
    let t_max = resolve(args.t_max, &c.file, "t-max", 6.0)?;
    let fd_step = resolve(args.fd_step, &c.file, "fd-step", 1e-4)?;
    let margin = resolve(args.margin, &c.file, "margin", 0.4)?;
    let rho0 = resolve(args.rho0, &c.file, "rho0", 1.0)?;
    let seed = resolve(args.seed, &c.file, "seed", 0u64)?;
    check_positive("t-max", t_max)?;
    check_positive("fd-step", fd_step)?;
    check_positive("margin", margin)?;
    check_positive("rho0", rho0)?;
    if n_samples == 0 {
        return Err(CliError::Usage("samples must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_samples);
    let mut draws = 0usize;
    while rows.len() < n_samples {
        draws += 1;
        if draws > 1_000_000 {
            return Err(CliError::Numerical(format!(
                "could not find {n_samples} samples with margin {margin} in (0, {t_max}]"
            )));
        }
        let t = rng.gen_range(fd_step..t_max);
        if core::eval_l(&c.params, t).min_coeff() < margin {
            continue;
        }
        let x = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if x.norm() > 1.0 {
            continue;
        }
        let ns = core::ns_residual(t, x, &c.params, fd_step).map_err(numerical_from_flow)?;
        let cont =
            core::continuity_residual(t, &c.params, rho0, fd_step).map_err(numerical_from_flow)?;
        rows.push(ResidualRow { t, x: x.to_array(), ns: ns.to_array(), continuity: cont });
    }
    let max_ns = rows.iter().map(|r| r.ns.iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
    let max_cont = rows.iter().map(|r| r.continuity.abs()).fold(0.0, f64::max);

    match c.format {
        OutputFormat::Csv => {
            let lines = rows.iter().map(|r| {
                join_row(&[
                    fmt_f64(r.t),
                    fmt_f64(r.x[0]),
                    fmt_f64(r.x[1]),
                    fmt_f64(r.x[2]),
                    fmt_f64(r.ns[0]),
                    fmt_f64(r.ns[1]),
                    fmt_f64(r.ns[2]),
                    fmt_f64(r.continuity),
                ])
            });
            write_csv(&c.output, "t,x,y,z,ns_x,ns_y,ns_z,continuity", lines)?;
        }
        OutputFormat::Json => {
            write_json(
                &c.output,
                &ResidualsReport {
                    beta: c.beta,
                    samples: n_samples,
                    t_max,
                    fd_step,
                    margin,
                    rho0,
                    seed,
                    max_ns_residual: max_ns,
                    max_continuity_residual: max_cont,
                    rows,
                },
            )?;
        }
    }

    let config = json!({
        "command": "residuals",
        "beta": c.beta,
        "samples": n_samples,
        "t_max": t_max,
        "fd_step": fd_step,
        "margin": margin,
        "rho0": rho0,
        "seed": seed,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("residuals", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "residuals: max |NS| {max_ns:e}, max |continuity| {max_cont:e} over {n_samples} samples -> {}, {}",
        c.output.display(),
        manifest_file.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- density

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// End of the density comparison window
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid spacing of the comparison times
    #[arg(long)]
    dt: Option<f64>,
    /// Simpson subintervals per quadrature
    #[arg(long)]
    n_steps: Option<usize>,
    /// Reference density
    #[arg(long)]
    rho0: Option<f64>,
}

pub fn run_density(args: &DensityArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(
        &args.common,
        &["t-max", "dt", "n-steps", "rho0"],
        "density.csv",
        OutputFormat::Csv,
    )?;
    let t_max = resolve(args.t_max, &c.file, "t-max", 0.8)?;
    let dt = resolve(args.dt, &c.file, "dt", 0.05)?;
    let n_steps = resolve(args.n_steps, &c.file, "n-steps", 4096usize)?;
    let rho0 = resolve(args.rho0, &c.file, "rho0", 1.0)?;
    check_positive("t-max", t_max)?;
    check_positive("dt", dt)?;
    check_positive("rho0", rho0)?;
    if n_steps < 2 {
        return Err(CliError::Usage(format!("n-steps must be at least 2, got {n_steps}")));
    }

    #[derive(Serialize)]
    struct Row {
        t: f64,
        rho_closed: f64,
        rho_quadrature: f64,
        abs_diff: f64,
    }
    let mut rows = Vec::new();
    for t in grid_times(t_max, dt) {
        let closed = core::density_closed_form(t, &c.params, rho0);
        let quad = core::density_by_quadrature(t, &c.params, rho0, n_steps)
            .map_err(numerical_from_fluid)?;
        rows.push(Row { t, rho_closed: closed, rho_quadrature: quad, abs_diff: (closed - quad).abs() });
    }
    let max_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);

    match c.format {
        OutputFormat::Csv => {
            let lines = rows.iter().map(|r| {
                join_row(&[
                    fmt_f64(r.t),
                    fmt_f64(r.rho_closed),
                    fmt_f64(r.rho_quadrature),
                    fmt_f64(r.abs_diff),
                ])
            });
            write_csv(&c.output, "t,rho_closed,rho_quadrature,abs_diff", lines)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report {
                beta: f64,
                t_max: f64,
                dt: f64,
                n_steps: usize,
                rho0: f64,
                max_abs_diff: f64,
                rows: Vec<Row>,
            }
            write_json(
                &c.output,
                &Report { beta: c.beta, t_max, dt, n_steps, rho0, max_abs_diff: max_diff, rows },
            )?;
        }
    }

    let config = json!({
        "command": "density",
        "beta": c.beta,
        "t_max": t_max,
        "dt": dt,
        "n_steps": n_steps,
        "rho0": rho0,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("density", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "density: max |closed - quadrature| {max_diff:e} -> {}, {}",
        c.output.display(),
        manifest_file.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- energy

#[derive(Args, Debug)]
pub struct EnergyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Evaluation time or comma-separated list of times
    #[arg(long, value_name = "T[,T...]")]
    t: Option<TimesArg>,
    /// Equation of state: isothermal:C or polytropic:A,GAMMA
    #[arg(long)]
    eos: Option<EosArg>,
    /// Reference density
    #[arg(long)]
    rho0: Option<f64>,
    /// Monte Carlo samples per time
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Monte Carlo seed
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run_energy(args: &EnergyArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let c = resolve_common(
        &args.common,
        &["t", "eos", "rho0", "mc-samples", "seed"],
        "energy.json",
        OutputFormat::Json,
    )?;
    let times = resolve(args.t.clone(), &c.file, "t", TimesArg(vec![0.0]))?.0;
    let eos = resolve(args.eos, &c.file, "eos", EosArg(EquationOfState::Isothermal { c: 1.0 }))?.0;
    let rho0 = resolve(args.rho0, &c.file, "rho0", 1.0)?;
    let mc_samples = resolve(args.mc_samples, &c.file, "mc-samples", 1_000_000usize)?;
    let seed = resolve(args.seed, &c.file, "seed", 0u64)?;
    check_positive("rho0", rho0)?;
    if mc_samples == 0 {
        return Err(CliError::Usage("mc-samples must be positive".into()));
    }

    #[derive(Serialize)]
    struct Row {
        t: f64,
        value: f64,
        std_error: f64,
    }
    let mut rows = Vec::new();
    for &t in &times {
        let est = core::energy_functional(t, &c.params, &eos, rho0, mc_samples, seed)
            .map_err(numerical_from_flow)?;
        rows.push(Row { t, value: est.value, std_error: est.std_error });
    }

    match c.format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report {
                beta: f64,
                eos: String,
                rho0: f64,
                mc_samples: usize,
                seed: u64,
                results: Vec<Row>,
            }
            write_json(
                &c.output,
                &Report {
                    beta: c.beta,
                    eos: EosArg(eos).to_string(),
                    rho0,
                    mc_samples,
                    seed,
                    results: rows,
                },
            )?;
        }
        OutputFormat::Csv => {
            let lines = rows
                .iter()
                .map(|r| join_row(&[fmt_f64(r.t), fmt_f64(r.value), fmt_f64(r.std_error)]));
            write_csv(&c.output, "t,value,std_error", lines)?;
        }
    }

    let config = json!({
        "command": "energy",
        "beta": c.beta,
        "t": times,
        "eos": EosArg(eos).to_string(),
        "rho0": rho0,
        "mc_samples": mc_samples,
        "seed": seed,
        "truncation": format!("{:?}", c.params.trunc),
        "output": c.output.display().to_string(),
        "format": c.format.to_string(),
    });
    let mut manifest = RunManifest::new("energy", config, series_budget(&c.params));
    manifest.record_artifact(&c.output)?;
    let manifest_file = manifest.write(&c.output, started.elapsed().as_secs_f64())?;

    println!(
        "energy: {} time(s), {} samples each -> {}, {}",
        times.len(),
        mc_samples,
        c.output.display(),
        manifest_file.display()
    );
    Ok(())
}
