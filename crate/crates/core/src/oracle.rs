//! Independent re-derivation of the reduced atomic Bloch vector by exact
//! evolution of the joint atom-field density operator in a truncated Fock
//! space.
//!
//! At resonance the interaction-picture coupling is time independent and
//! block diagonal: it only mixes the pair `{|0,n>, |1,n+1>}` with strength
//! `sqrt(n+1)` (couplings in units of the interaction strength), and leaves
//! `|1,0>` alone. Each retained initial component therefore evolves exactly
//! inside its two-dimensional block, and the only truncation error is the
//! discarded thermal weight `e^{-(n_max+1) beta}`. The free evolution
//! factorizes off and cancels in the reduced atomic state, which is why the
//! closed-form coefficients are phase free.
//!
//! Per-block propagators are built by numeric diagonalization of the 2x2
//! symmetric block Hamiltonian; no code is shared with the series module,
//! which is the point: this module is the oracle those series are tested
//! against.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::bloch::evolve_bloch;
use crate::params::ModelParams;
use crate::series::{resolved_order, tail_bound};
use crate::vec3::{BlochVector, Vec3};

/// Default bound on the discarded thermal tail weight.
pub const DEFAULT_DEFICIT_BOUND: f64 = 1e-12;

/// Cap on automatically chosen photon cutoffs.
pub const MAX_AUTO_CUTOFF: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("invalid atom state: {0}")]
    InvalidState(String),
    #[error("photon cutoff {n_max} leaves thermal deficit {deficit:e} above the bound {bound:e}")]
    CutoffTooLow { n_max: usize, deficit: f64, bound: f64 },
    #[error("inverse temperature mismatch: params have {params}, Fock config has {cfg}")]
    BetaMismatch { params: f64, cfg: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Truncated-Fock-space configuration: photon cutoff and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    pub n_max: usize,
    pub beta: f64,
    /// Bound the discarded thermal weight must satisfy.
    pub deficit_bound: f64,
}

impl FockConfig {
    /// Configuration with the default deficit bound of 1e-12; fails if the
    /// cutoff leaves more thermal weight discarded than that.
    pub fn new(beta: f64, n_max: usize) -> Result<Self, OracleError> {
        Self::with_deficit_bound(beta, n_max, DEFAULT_DEFICIT_BOUND)
    }

    pub fn with_deficit_bound(beta: f64, n_max: usize, bound: f64) -> Result<Self, OracleError> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(OracleError::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        let cfg = FockConfig { n_max, beta, deficit_bound: bound };
        let deficit = cfg.deficit();
        if deficit > bound {
            return Err(OracleError::CutoffTooLow { n_max, deficit, bound });
        }
        Ok(cfg)
    }

    /// Smallest cutoff meeting the default deficit bound, capped at
    /// [`MAX_AUTO_CUTOFF`].
    pub fn for_beta(beta: f64) -> Result<Self, OracleError> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(OracleError::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        let needed = (-DEFAULT_DEFICIT_BOUND.ln() / beta - 1.0).ceil().max(0.0) as usize;
        let mut n = needed.min(MAX_AUTO_CUTOFF);
        while (-((n + 1) as f64) * beta).exp() > DEFAULT_DEFICIT_BOUND && n < MAX_AUTO_CUTOFF {
            n += 1;
        }
        Ok(FockConfig { n_max: n, beta, deficit_bound: DEFAULT_DEFICIT_BOUND })
    }

    /// Discarded thermal weight `e^{-(n_max+1) beta}`.
    pub fn deficit(&self) -> f64 {
        (-((self.n_max + 1) as f64) * self.beta).exp()
    }
}

/// A 2x2 atomic density matrix: Hermitian, unit trace, positive
/// semidefinite (within small tolerances).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState {
    m: [[C64; 2]; 2],
}

const STATE_TOL: f64 = 1e-12;

impl AtomState {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self, OracleError> {
        let herm_defect = (m[0][1] - m[1][0].conj()).norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm_defect > STATE_TOL {
            return Err(OracleError::InvalidState(format!(
                "matrix is not Hermitian (defect {herm_defect:e})"
            )));
        }
        let trace = m[0][0].re + m[1][1].re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(OracleError::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let gap = ((m[0][0].re - m[1][1].re).powi(2) + 4.0 * m[0][1].norm_sqr()).sqrt();
        let min_eig = 0.5 * (trace - gap);
        if min_eig < -STATE_TOL {
            return Err(OracleError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(AtomState { m })
    }

    /// Density matrix `(I + S . sigma) / 2` of a Bloch vector.
    pub fn from_bloch(s: BlochVector) -> Result<Self, OracleError> {
        let n = s.norm();
        if !n.is_finite() || n > 1.0 + STATE_TOL {
            return Err(OracleError::InvalidState(format!("Bloch norm {n} exceeds 1")));
        }
        Self::new([
            [C64::new(0.5 * (1.0 + s.z), 0.0), C64::new(0.5 * s.x, -0.5 * s.y)],
            [C64::new(0.5 * s.x, 0.5 * s.y), C64::new(0.5 * (1.0 - s.z), 0.0)],
        ])
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_of(&self.m)
    }
}

fn bloch_of(m: &[[C64; 2]; 2]) -> Vec3 {
    Vec3::new(
        (m[0][1] + m[1][0]).re,
        (C64::i() * (m[0][1] - m[1][0])).re,
        m[0][0].re - m[1][1].re,
    )
}

/// Bose-Einstein thermal occupation weights `(1 - e^-beta) e^{-n beta}` for
/// `n = 0..=n_max`. Deliberately not renormalized: the missing weight is
/// the certified truncation error of the oracle.
pub fn thermal_weights(cfg: &FockConfig) -> Vec<f64> {
    let norm = -(-cfg.beta).exp_m1();
    (0..=cfg.n_max)
        .map(|n| norm * (-(n as f64) * cfg.beta).exp())
        .collect()
}

/// Eigen-decomposition of a real symmetric 2x2 matrix `[[a, b], [b, c]]` by
/// a Jacobi rotation. Returns eigenvalues and the orthonormal eigenvector
/// columns.
fn eigh2(a: f64, b: f64, c: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    if b == 0.0 {
        return ([a, c], [[1.0, 0.0], [0.0, 1.0]]);
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (sn, cs) = theta.sin_cos();
    let l1 = a * cs * cs + 2.0 * b * cs * sn + c * sn * sn;
    let l2 = a * sn * sn - 2.0 * b * cs * sn + c * cs * cs;
    ([l1, l2], [[cs, -sn], [sn, cs]])
}

/// Propagator `exp(-i H t)` of one interaction block with coupling `g`,
/// built from the numeric eigen-decomposition of `H = [[0, g], [g, 0]]`.
fn block_propagator(g: f64, t: f64) -> [[C64; 2]; 2] {
    let (lambda, v) = eigh2(0.0, g, 0.0);
    let mut u = [[C64::new(0.0, 0.0); 2]; 2];
    for (m, &lm) in lambda.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lm * t);
        for j in 0..2 {
            for k in 0..2 {
                u[j][k] += phase * v[j][m] * v[k][m];
            }
        }
    }
    u
}

/// One evolved basis ket in sparse form: up to two
/// `(atom index, photon number, amplitude)` entries.
type SparseKet = [(usize, usize, C64); 2];

/// Exact reduced density matrix at time `t`. May be sub-normalized by the
/// thermal deficit of the cutoff.
pub fn evolve_reduced(atom0: &AtomState, t: f64, cfg: &FockConfig) -> [[C64; 2]; 2] {
    let rho = atom0.entries();
    let weights = thermal_weights(cfg);
    let mut reduced = [[C64::new(0.0, 0.0); 2]; 2];
    for (n, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        // U|0,n> from block {|0,n>, |1,n+1>}
        let u_n = block_propagator(((n + 1) as f64).sqrt(), t);
        let ket0: SparseKet = [(0, n, u_n[0][0]), (1, n + 1, u_n[1][0])];
        // U|1,n>: block {|0,n-1>, |1,n>} for n >= 1, stationary for n = 0
        let ket1: SparseKet = if n == 0 {
            [(1, 0, C64::new(1.0, 0.0)), (1, 0, C64::new(0.0, 0.0))]
        } else {
            let u_prev = block_propagator((n as f64).sqrt(), t);
            [(0, n - 1, u_prev[0][1]), (1, n, u_prev[1][1])]
        };
        let kets = [ket0, ket1];
        // w * rho_ij * U|i,n><j,n|U^dag, photon-traced on the fly
        for i in 0..2 {
            for j in 0..2 {
                let coeff = rho[i][j] * w;
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(ai, pi, amp_i) in &kets[i] {
                    for &(aj, pj, amp_j) in &kets[j] {
                        if pi == pj {
                            reduced[ai][aj] += coeff * amp_i * amp_j.conj();
                        }
                    }
                }
            }
        }
    }
    reduced
}

/// Bloch vector of the exactly evolved reduced state.
pub fn evolve_exact(atom0: &AtomState, t: f64, cfg: &FockConfig) -> BlochVector {
    bloch_of(&evolve_reduced(atom0, t, cfg))
}

/// Deviation report between the exact evolution and the closed form.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// Euclidean distance between the two Bloch vectors per time.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// Certified series truncation bound of the closed form.
    pub series_err_bound: f64,
    /// Discarded thermal weight of the oracle cutoff.
    pub fock_deficit: f64,
}

impl ComparisonReport {
    /// Total certified error budget both routes are allowed between them.
    pub fn budget(&self) -> f64 {
        self.series_err_bound + self.fock_deficit
    }
}

/// Evolve both routes over a time grid and report their deviations.
pub fn compare_with_closed_form(
    atom0: &AtomState,
    t_grid: &[f64],
    params: &ModelParams,
    cfg: &FockConfig,
) -> Result<ComparisonReport, OracleError> {
    if params.beta != cfg.beta {
        return Err(OracleError::BetaMismatch { params: params.beta, cfg: cfg.beta });
    }
    let s0 = atom0.bloch();
    let deviations: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let exact = evolve_exact(atom0, t, cfg);
            let closed = evolve_bloch(s0, t, params)
                .expect("Bloch vector of a valid atom state is a valid initial state");
            (exact - closed).norm()
        })
        .collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    // only the undifferentiated values enter the comparison
    let series_err_bound = tail_bound(params.beta, resolved_order(params), 0);
    Ok(ComparisonReport {
        times: t_grid.to_vec(),
        deviations,
        max_deviation,
        series_err_bound,
        fock_deficit: cfg.deficit(),
    })
}
