//! Thermal coefficient series `L1`, `L3`, `L4` and their first two time
//! derivatives, with certified truncation error bounds.
//!
//! The three series are thermally weighted sums of cosines at the
//! incommensurate frequencies `sqrt(n)` / `2 sqrt(n)`:
//!
//! ```text
//! L1(t) = (1 - e^-b) sum_{n>=0} cos(sqrt(n+1) t) cos(sqrt(n) t) e^{-n b}
//! L3(t) =  (1 - e^-b)/2 + sinh(b)      sum_{n>=1} cos(2 sqrt(n) t) e^{-n b}
//! L4(t) = -(1 - e^-b)/2 + (cosh(b)-1)  sum_{n>=1} cos(2 sqrt(n) t) e^{-n b}
//! ```
//!
//! Derivatives are taken term by term, which is justified by uniform
//! convergence of the differentiated series (geometric weights beat the
//! polynomial frequency factors). Summation runs in descending `n`, smallest
//! terms first, in plain `f64`, so results are bit-reproducible for a given
//! truncation order.
//!
//! All formulas are even (values, second derivatives) or odd (first
//! derivatives) in `t`, so negative times are accepted and well defined even
//! though the physical evolution starts at `t = 0`.

use crate::params::{ModelParams, Truncation};

/// The three coefficient values with first and second time derivatives at a
/// single time, plus one uniform truncation error bound covering all nine
/// numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LValues {
    pub t: f64,
    pub l1: f64,
    pub l3: f64,
    pub l4: f64,
    pub dl1: f64,
    pub dl3: f64,
    pub dl4: f64,
    pub ddl1: f64,
    pub ddl3: f64,
    pub ddl4: f64,
    /// Uniform bound on the truncation error of every field above.
    pub err_bound: f64,
}

impl LValues {
    /// Divergence of the Eulerian velocity field, `2 dL1/L1 + dL3/L3`;
    /// depends on time only.
    pub fn divergence(&self) -> f64 {
        2.0 * self.dl1 / self.l1 + self.dl3 / self.l3
    }

    /// Smaller of `|L1|` and `|L3|`, the quantity all singularity screens
    /// look at.
    pub fn min_coeff(&self) -> f64 {
        self.l1.abs().min(self.l3.abs())
    }
}

/// Upper bound on the magnitude of the discarded tail `n > trunc_n` of the
/// series of the given derivative `order` (0, 1 or 2), valid simultaneously
/// for `L1`, `L3` and `L4`.
///
/// Order 0 uses the geometric tail: the `L1` prefactor cancels the geometric
/// sum exactly, giving `e^{-(N+1) b}`.
///
/// For orders 1 and 2 the term magnitudes are bounded by
/// `2 sqrt(n+1) e^{-n b} <= 2 (n+1) e^{-n b}` and `4 (n+1) e^{-n b}`
/// respectively, the exact weighted geometric sum
/// `sum_{n>N} (n+1) x^n = x^{N+1} [(N+2) - (N+1) x] / (1-x)^2` is applied,
/// and the result is scaled by the largest of the three series prefactors,
/// which is `sinh(b)`. Looser than the true tail, but closed form and
/// certifiable.
pub fn tail_bound(beta: f64, trunc_n: usize, order: usize) -> f64 {
    assert!(beta > 0.0, "tail_bound requires beta > 0");
    let n = trunc_n as f64;
    match order {
        0 => (-(n + 1.0) * beta).exp(),
        1 | 2 => {
            let x = (-beta).exp();
            let weighted_tail = x.powi(trunc_n as i32 + 1) * ((n + 2.0) - (n + 1.0) * x)
                / ((1.0 - x) * (1.0 - x));
            let scale = if order == 1 { 2.0 } else { 4.0 };
            beta.sinh() * scale * weighted_tail
        }
        _ => panic!("derivative order must be 0, 1 or 2, got {order}"),
    }
}

/// Smallest truncation order `N` whose [`tail_bound`] at the given
/// derivative `order` does not exceed the certified tolerance.
///
/// Requires a [`Truncation::Certified`] policy; such an `N` always exists
/// because the bounds decay geometrically.
pub fn truncation_order(params: &ModelParams, order: usize) -> usize {
    let Truncation::Certified(tol) = params.trunc else {
        panic!("truncation_order requires a Certified truncation policy");
    };
    let beta = params.beta;
    // Analytic seed from the order-0 bound, then adjust against the actual
    // bound so floating-point rounding cannot put us off by one.
    let seed = (-tol.ln() / beta - 1.0).ceil().max(0.0) as usize;
    let mut n = seed;
    while tail_bound(beta, n, order) > tol {
        n += 1;
    }
    while n > 0 && tail_bound(beta, n - 1, order) <= tol {
        n -= 1;
    }
    n
}

/// Truncation order actually used by [`eval_l`]: the policy's fixed order,
/// or for certified policies the largest order needed by any derivative
/// level, so one error bound covers all nine values.
pub fn resolved_order(params: &ModelParams) -> usize {
    match params.trunc {
        Truncation::FixedOrder(n) => n,
        Truncation::Certified(_) => (0..=2)
            .map(|ord| truncation_order(params, ord))
            .max()
            .expect("order range is non-empty"),
    }
}

/// Evaluate all nine coefficient values at time `t`.
///
/// Summation order is fixed (descending `n`, smallest terms first) so equal
/// inputs give bit-identical results. Thermal weights are computed per term
/// as `exp(-n beta)`; underflowed weights contribute exact zeros.
pub fn eval_l(params: &ModelParams, t: f64) -> LValues {
    let beta = params.beta;
    let n_trunc = resolved_order(params);
    let err_bound = (0..=2)
        .map(|ord| tail_bound(beta, n_trunc, ord))
        .fold(0.0, f64::max);

    // 1 - e^-b via exp_m1 to keep accuracy at small beta; cosh(b) - 1 as
    // 2 sinh^2(b/2) for the same reason.
    let one_minus = -(-beta).exp_m1();
    let pref3 = beta.sinh();
    let pref4 = 2.0 * (0.5 * beta).sinh().powi(2);

    let mut l1 = 0.0;
    let mut dl1 = 0.0;
    let mut ddl1 = 0.0;
    for n in (0..=n_trunc).rev() {
        let w = (-(n as f64) * beta).exp();
        let fa = ((n + 1) as f64).sqrt();
        let fb = (n as f64).sqrt();
        let (sa, ca) = (fa * t).sin_cos();
        let (sb, cb) = (fb * t).sin_cos();
        l1 += ca * cb * w;
        dl1 += (-fa * sa * cb - fb * ca * sb) * w;
        ddl1 += (-(fa * fa + fb * fb) * ca * cb + 2.0 * fa * fb * sa * sb) * w;
    }
    l1 *= one_minus;
    dl1 *= one_minus;
    ddl1 *= one_minus;

    // L3 and L4 share one sum over cos(2 sqrt(n) t).
    let mut s = 0.0;
    let mut ds = 0.0;
    let mut dds = 0.0;
    for n in (1..=n_trunc).rev() {
        let w = (-(n as f64) * beta).exp();
        let f = (n as f64).sqrt();
        let (s2, c2) = (2.0 * f * t).sin_cos();
        s += c2 * w;
        ds += -2.0 * f * s2 * w;
        dds += -4.0 * (n as f64) * c2 * w;
    }

    LValues {
        t,
        l1,
        l3: 0.5 * one_minus + pref3 * s,
        l4: -0.5 * one_minus + pref4 * s,
        dl1,
        dl3: pref3 * ds,
        dl4: pref4 * ds,
        ddl1,
        ddl3: pref3 * dds,
        ddl4: pref4 * dds,
        err_bound,
    }
}
