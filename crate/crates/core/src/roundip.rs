//! Rounding a real point to a nearby integer point with small per-row
//! overhead `|A_i (z - x0)|`.
//!
//! The fractional part of `x0` is pushed towards the cube vertices by
//! repeated edge walks, each of which freezes at least half of the remaining
//! active coordinates; a failed walk is simply retried. The remaining
//! fractional values are then rounded independently at random.

use serde::{Deserialize, Serialize};

use crate::edgewalk::{edge_walk, PartialColoringState, WalkBudget, WalkConfig, WalkOutcome};
use crate::error::{Error, Result};
use crate::model::{in_exponential_regime, PolytopeInstance};
use crate::numerics::{GaussianMatrix, RngStream};

/// Smallest freezing tolerance ever used.
pub const DELTA_FLOOR: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundIpConfig {
    pub walk: WalkConfig,
    /// Total edge-walk calls allowed; `None` means `200 * max(1, ceil(log2 n))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<u32>,
}

impl RoundIpConfig {
    pub fn attempt_cap(&self, n: usize) -> u32 {
        self.max_attempts
            .unwrap_or_else(|| 200 * ceil_log2(n).max(1))
    }
}

pub(crate) fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// `delta = 1/(8 ln m)`, capped at 1/2 and floored at 2^-20.
pub fn freeze_tolerance(m: usize) -> f64 {
    (1.0 / (8.0 * (m as f64).ln())).clamp(DELTA_FLOOR, 0.5)
}

/// Per-row budget coefficient `8 sqrt(ln(max(m/|B|, 16e)))`.
///
/// Below `m/|B| = 16e` the log argument is held at `16e`, which keeps
/// `m exp(-c^2/16) <= |B|/16` for every ratio.
pub fn budget_coefficient(m: usize, active: usize) -> f64 {
    let ratio = m as f64 / active as f64;
    8.0 * ratio.max(16.0 * std::f64::consts::E).ln().sqrt()
}

/// A value together with whether `(n, m)` lies where its guarantee holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeValue {
    pub value: f64,
    pub in_regime: bool,
}

/// `480 sigma (sqrt(n ln(m/n)) + sqrt(ln m ln(mn) ln(m / ln m)))`, the
/// per-row overhead the rounding stays under with high probability when
/// `2n <= m <= 2^n`.
pub fn overhead_bound(n: usize, m: usize, sigma: f64) -> Result<RegimeValue> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if m <= n {
        return Err(Error::Domain(format!(
            "overhead bound needs m > n (got n = {n}, m = {m})"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    let ln_m = mf.ln();
    let head = (nf * (mf / nf).ln()).sqrt();
    let tail = (ln_m * (mf * nf).ln() * (mf / ln_m).ln()).max(0.0).sqrt();
    Ok(RegimeValue {
        value: 480.0 * sigma * (head + tail),
        in_regime: in_exponential_regime(n, m, 2),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingCertificate {
    pub z: Vec<i64>,
    /// `|A_i (z - x0)|` per row.
    pub overhead: Vec<f64>,
    /// `None` when `m <= n`, where the bound is undefined.
    pub bound: Option<RegimeValue>,
    pub within_bound: bool,
    /// Successful edge walks.
    pub rounds: u32,
    /// All edge-walk calls, successful or not.
    pub attempts: u32,
    /// `|B(x)|` at entry and after every successful walk.
    pub phase_sizes: Vec<usize>,
    /// Fractional point right before the randomized rounding.
    pub fractional: Vec<f64>,
    pub delta: f64,
    pub walk_steps: u64,
}

impl RoundingCertificate {
    pub fn overhead_max(&self) -> f64 {
        self.overhead.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            z: self.z.clone(),
            overhead_max: self.overhead_max(),
            bound: self.bound.map(|b| b.value),
            within_bound: self.within_bound,
            rounds: self.rounds,
            attempts: self.attempts,
            phase_b_sizes: self.phase_sizes.clone(),
        }
    }
}

/// Serialized form of a [`RoundingCertificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub z: Vec<i64>,
    pub overhead_max: f64,
    pub bound: Option<f64>,
    pub within_bound: bool,
    pub rounds: u32,
    pub attempts: u32,
    #[serde(rename = "phase_B_sizes")]
    pub phase_b_sizes: Vec<usize>,
}

/// `|A_i (z - x0)|` for every row.
pub fn overheads(a: &GaussianMatrix, z: &[i64], x0: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = z.iter().zip(x0).map(|(&zi, xi)| zi as f64 - xi).collect();
    a.mul_vec(&diff).into_iter().map(f64::abs).collect()
}

/// Rounds every coordinate of `x0` up or down, keeping `|A_i (z - x0)|`
/// small for all rows simultaneously.
pub fn round_ip(
    a: &GaussianMatrix,
    x0: &[f64],
    rng: &mut RngStream,
    cfg: &RoundIpConfig,
) -> Result<RoundingCertificate> {
    let (m, n) = (a.rows(), a.cols());
    if m < 2 {
        return Err(Error::invalid(format!(
            "rounding needs at least 2 rows, got {m}"
        )));
    }
    if x0.len() != n {
        return Err(Error::invalid(format!(
            "x0 has length {}, matrix has {n} columns",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x0 must be finite"));
    }

    let floor: Vec<f64> = x0.iter().map(|v| v.floor()).collect();
    let frac: Vec<f64> = x0
        .iter()
        .zip(&floor)
        .map(|(v, f)| (v - f).clamp(0.0, 1.0))
        .collect();
    let delta = freeze_tolerance(m);
    let mut state = PartialColoringState::new(frac, delta)?;
    let cap = cfg.attempt_cap(n);
    let mut phase_sizes = vec![state.active().len()];
    let mut rounds = 0u32;
    let mut attempts = 0u32;
    let mut walk_steps = 0u64;

    while !state.active().is_empty() {
        let c = budget_coefficient(m, state.active().len());
        let budget = WalkBudget::uniform(m, c, cap);
        loop {
            if attempts >= cap {
                return Err(Error::AlgorithmFailure {
                    attempts,
                    rounds,
                    phase_sizes,
                });
            }
            attempts += 1;
            let attempt = edge_walk(&state, a, &budget, rng, &cfg.walk)?;
            walk_steps += attempt.stats.steps;
            if let WalkOutcome::Success(next) = attempt.outcome {
                state = next;
                rounds += 1;
                phase_sizes.push(state.active().len());
                break;
            }
        }
    }

    let fractional = state.into_x();
    let z: Vec<i64> = fractional
        .iter()
        .zip(&floor)
        .map(|(&p, &f)| f as i64 + i64::from(rng.bernoulli(p)))
        .collect();
    let overhead = overheads(a, &z, x0);
    let bound = if m > n {
        Some(overhead_bound(n, m, a.sigma())?)
    } else {
        None
    };
    let max = overhead.iter().copied().fold(0.0, f64::max);
    Ok(RoundingCertificate {
        within_bound: bound.is_some_and(|b| max <= b.value),
        z,
        overhead,
        bound,
        rounds,
        attempts,
        phase_sizes,
        fractional,
        delta,
        walk_steps,
    })
}

/// Result of searching one polytope with the rounding algorithm.
#[derive(Clone, Debug)]
pub struct Search {
    /// The rounded point, when it lies in the polytope.
    pub found: Option<Vec<i64>>,
    pub certificate: RoundingCertificate,
}

/// Rounds `x0` and reports the point when it satisfies `A z <= b`.
pub fn find_integer_point(
    p: &PolytopeInstance,
    rng: &mut RngStream,
    cfg: &RoundIpConfig,
) -> Result<Search> {
    let certificate = round_ip(p.matrix(), p.x0(), rng, cfg)?;
    let found = p
        .contains_int(&certificate.z)
        .then(|| certificate.z.clone());
    Ok(Search { found, certificate })
}
