//! Partial coloring by a discretized Gaussian edge walk.
//!
//! Starting from `x` in `[0,1]^n`, the walk moves only the active
//! coordinates `B(x) = {j : delta < x_j < 1 - delta}`. Each step draws a
//! standard Gaussian on the coordinates still free, removes the components
//! along the normals of every tight discrepancy constraint, and moves by
//! `gamma` times the result. A coordinate reaching `delta` or `1 - delta`
//! freezes where it is; a row whose drift `|A_i (x - x_entry)|` comes within
//! `gamma ||A_i|_{B(x)}||` of its budget `c_i ||A_i|_{B(x)}||` becomes tight. Steps
//! are truncated so that neither kind of constraint is ever crossed, which
//! makes clamping a numerical safety net only.
//!
//! The walk stops once half of the entry active set is frozen, when the free
//! subspace collapses, or after the step cap. Its output is always checked
//! by [`verify_partial`] before being reported as a success.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    extend_orthonormal, norm, project_out_orthonormal, restricted_norm_unchecked, GaussianMatrix,
    RngStream,
};

/// Relative slack used by [`verify_partial`] on the discrepancy condition.
pub const VERIFY_TOL: f64 = 1e-9;

/// A point of the unit cube together with its freezing tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialColoringState {
    x: Vec<f64>,
    delta: f64,
    active: Vec<usize>,
}

impl PartialColoringState {
    pub fn new(x: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 0.5], got {delta}"
            )));
        }
        if let Some(j) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "x[{j}] = {} is outside [0, 1]",
                x[j]
            )));
        }
        let active = active_set(&x, delta);
        Ok(Self { x, delta, active })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `B(x)` in increasing order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }
}

/// `{j : delta < x_j < 1 - delta}`; points exactly at `delta` or `1 - delta`
/// count as frozen.
pub fn active_set(x: &[f64], delta: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| delta < v && v < 1.0 - delta)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkBudget {
    /// Per-row overhead coefficients.
    pub c: Vec<f64>,
    /// Retry allowance for callers that repeat failed walks.
    pub max_retries: u32,
}

impl WalkBudget {
    pub fn uniform(m: usize, c: f64, max_retries: u32) -> Self {
        Self {
            c: vec![c; m],
            max_retries,
        }
    }

    /// `sum_i exp(-c_i^2 / 16)`.
    pub fn mass(&self) -> f64 {
        self.c.iter().map(|c| (-c * c / 16.0).exp()).sum()
    }

    /// The walk entry condition `sum_i exp(-c_i^2/16) <= |B(x)| / 16`.
    pub fn admits(&self, active: usize) -> bool {
        self.mass() <= active as f64 / 16.0
    }
}

/// Step-size schedule: `gamma = delta / (step_divisor * sqrt(ln(8 m n / delta)))`
/// and at most `ceil(horizon / gamma^2)` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub step_divisor: f64,
    pub horizon: f64,
    /// Hard override of the step cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            step_divisor: 1.0,
            horizon: 16.0,
            max_steps: None,
        }
    }
}

impl WalkConfig {
    /// The schedule with divisor 8, i.e. steps eight times shorter than the
    /// default. Much slower; kept for comparison runs.
    pub fn conservative() -> Self {
        Self {
            step_divisor: 8.0,
            ..Self::default()
        }
    }

    pub fn step_size(&self, delta: f64, m: usize, n: usize) -> f64 {
        let arg = (8.0 * m as f64 * n as f64 / delta).ln().max(1.0);
        delta / (self.step_divisor * arg.sqrt())
    }

    pub fn step_cap(&self, gamma: f64) -> u64 {
        self.max_steps
            .unwrap_or_else(|| (self.horizon / (gamma * gamma)).ceil() as u64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_divisor.is_finite() && self.step_divisor > 0.0) {
            return Err(Error::invalid("step divisor must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("walk horizon must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub steps: u64,
    pub gamma: f64,
    pub coords_frozen: usize,
    pub rows_tight: usize,
    pub truncated_steps: u64,
    pub clamps: u64,
    pub row_refreshes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Half of the entry active set is frozen.
    Halved,
    /// Tight rows span every free direction.
    Stalled,
    StepLimit,
}

#[derive(Clone, Debug)]
pub enum WalkOutcome {
    Success(PartialColoringState),
    Failure {
        stop: StopReason,
        report: VerifyReport,
    },
}

#[derive(Clone, Debug)]
pub struct WalkAttempt {
    pub outcome: WalkOutcome,
    pub stats: WalkStats,
}

impl WalkAttempt {
    pub fn is_success(&self) -> bool {
        matches!(self.outcome, WalkOutcome::Success(_))
    }
}

/// One of the three walk postconditions (plus the cube constraint).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Discrepancy,
    Halving,
    FrozenUnchanged,
    InCube,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSlack {
    pub row: usize,
    pub drift: f64,
    pub allowed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub violating_rows: Vec<RowSlack>,
    pub active_before: usize,
    pub active_after: usize,
    pub moved_frozen: Vec<usize>,
    pub outside_cube: Vec<usize>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failed_conditions().is_empty()
    }

    pub fn failed_conditions(&self) -> Vec<Condition> {
        let mut out = Vec::new();
        if !self.violating_rows.is_empty() {
            out.push(Condition::Discrepancy);
        }
        if 2 * self.active_after > self.active_before {
            out.push(Condition::Halving);
        }
        if !self.moved_frozen.is_empty() {
            out.push(Condition::FrozenUnchanged);
        }
        if !self.outside_cube.is_empty() {
            out.push(Condition::InCube);
        }
        out
    }
}

/// Checks a candidate `y` against the walk postconditions relative to `x`:
/// row drift within budget (up to [`VERIFY_TOL`] relative), at least half of
/// `B(x)` frozen, coordinates outside `B(x)` untouched, and `y` in the cube.
pub fn verify_partial(
    x: &PartialColoringState,
    y: &[f64],
    a: &GaussianMatrix,
    budget: &WalkBudget,
) -> VerifyReport {
    assert_eq!(x.x.len(), y.len(), "x and y differ in length");
    let entry = &x.active;
    let mut violating_rows = Vec::new();
    for (i, row) in a.row_iter().enumerate() {
        let drift: f64 = row
            .iter()
            .zip(y.iter().zip(&x.x))
            .map(|(a, (yj, xj))| a * (yj - xj))
            .sum::<f64>()
            .abs();
        let allowed = budget.c[i] * restricted_norm_unchecked(row, entry);
        if drift > allowed * (1.0 + VERIFY_TOL) {
            violating_rows.push(RowSlack {
                row: i,
                drift,
                allowed,
            });
        }
    }
    let mut in_entry = vec![false; y.len()];
    for &j in entry {
        in_entry[j] = true;
    }
    let moved_frozen = (0..y.len())
        .filter(|&j| !in_entry[j] && y[j] != x.x[j])
        .collect();
    let outside_cube = (0..y.len())
        .filter(|&j| !(0.0..=1.0).contains(&y[j]))
        .collect();
    VerifyReport {
        violating_rows,
        active_before: entry.len(),
        active_after: active_set(y, x.delta).len(),
        moved_frozen,
        outside_cube,
    }
}

/// Heap key: path length at which a row must be re-examined.
#[derive(Clone, Copy, PartialEq)]
struct Due(f64);

impl Eq for Due {}

impl PartialOrd for Due {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Due {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

enum Hit {
    Coord(usize),
    Row(usize),
}

/// Runs one walk from `state` and self-verifies the result.
///
/// Returns a contract error when `B(x)` is empty or the budget violates the
/// entry condition; a walk that ends without meeting the postconditions is a
/// [`WalkOutcome::Failure`], never an invalid point.
pub fn edge_walk(
    state: &PartialColoringState,
    a: &GaussianMatrix,
    budget: &WalkBudget,
    rng: &mut RngStream,
    cfg: &WalkConfig,
) -> Result<WalkAttempt> {
    let (m, n) = (a.rows(), a.cols());
    if state.x.len() != n {
        return Err(Error::invalid(format!(
            "state has {} coordinates, matrix has {n} columns",
            state.x.len()
        )));
    }
    if budget.c.len() != m {
        return Err(Error::invalid(format!(
            "budget has {} coefficients for {m} rows",
            budget.c.len()
        )));
    }
    if budget.c.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Contract(
            "budget coefficients must be finite and >= 0".into(),
        ));
    }
    cfg.validate()?;
    let entry = &state.active;
    let k0 = entry.len();
    if k0 == 0 {
        return Err(Error::Contract("no active coordinates to walk on".into()));
    }
    if !budget.admits(k0) {
        return Err(Error::Contract(format!(
            "sum exp(-c_i^2/16) = {:.6e} exceeds |B(x)|/16 = {}",
            budget.mass(),
            k0 as f64 / 16.0
        )));
    }

    let delta = state.delta;
    let gamma = cfg.step_size(delta, m, n);
    let cap = cfg.step_cap(gamma);
    let mut stats = WalkStats {
        gamma,
        ..WalkStats::default()
    };

    let x_entry = &state.x;
    let mut x = state.x.clone();
    // rows whose restriction to B(x) vanishes can never move
    let scale: Vec<f64> = a
        .row_iter()
        .map(|row| restricted_norm_unchecked(row, entry))
        .collect();
    let limit: Vec<f64> = scale.iter().zip(&budget.c).map(|(s, c)| c * s).collect();
    let soft: Vec<f64> = scale
        .iter()
        .zip(&limit)
        .map(|(s, l)| l - gamma * s)
        .collect();

    let mut tight = vec![false; m];
    let mut tight_rows: Vec<usize> = Vec::new();
    let mut due: BinaryHeap<Reverse<(Due, usize)>> = BinaryHeap::new();
    for i in 0..m {
        if scale[i] == 0.0 {
            continue;
        }
        if soft[i] <= 0.0 {
            tight[i] = true;
            tight_rows.push(i);
        } else {
            due.push(Reverse((Due(soft[i] / scale[i]), i)));
        }
    }

    let mut free: Vec<usize> = entry.clone();
    let mut basis = restricted_basis(a, &tight_rows, &free);
    let mut path = 0.0f64;
    let mut candidates: Vec<usize> = Vec::new();
    let mut drift_now: Vec<f64> = Vec::new();
    let mut drift_step: Vec<f64> = Vec::new();
    let mut dir: Vec<f64> = Vec::with_capacity(k0);

    let stop = loop {
        if 2 * free.len() <= k0 {
            break StopReason::Halved;
        }
        if stats.steps >= cap {
            break StopReason::StepLimit;
        }
        if basis.len() >= free.len() {
            break StopReason::Stalled;
        }

        dir.clear();
        dir.extend((0..free.len()).map(|_| rng.gaussian()));
        project_out_orthonormal(&mut dir, &basis);
        let len = norm(&dir);
        if len <= 1e-12 {
            break StopReason::Stalled;
        }
        dir.iter_mut().for_each(|v| *v *= gamma);
        let step_len = gamma * len;

        candidates.clear();
        while let Some(Reverse((Due(at), i))) = due.peek().copied() {
            if at > path + step_len {
                break;
            }
            due.pop();
            candidates.push(i);
        }
        stats.row_refreshes += candidates.len() as u64;
        drift_now.clear();
        drift_step.clear();
        for &i in &candidates {
            let row = a.row(i);
            drift_now.push(entry.iter().map(|&j| row[j] * (x[j] - x_entry[j])).sum());
            drift_step.push(free.iter().zip(&dir).map(|(&j, s)| row[j] * s).sum());
        }

        let mut alpha = 1.0f64;
        let mut hit = None;
        for (p, (&j, &s)) in free.iter().zip(&dir).enumerate() {
            let t = if s < 0.0 {
                (x[j] - delta) / -s
            } else if s > 0.0 {
                (1.0 - delta - x[j]) / s
            } else {
                continue;
            };
            if t < alpha {
                alpha = t.max(0.0);
                hit = Some(Hit::Coord(p));
            }
        }
        for (c, &i) in candidates.iter().enumerate() {
            let (d, ds) = (drift_now[c], drift_step[c]);
            if (d + ds).abs() > limit[i] {
                let t = if ds > 0.0 {
                    (limit[i] - d) / ds
                } else {
                    (-limit[i] - d) / ds
                };
                if t < alpha {
                    alpha = t.max(0.0);
                    hit = Some(Hit::Row(i));
                }
            }
        }

        for (&j, s) in free.iter().zip(&dir) {
            x[j] += alpha * s;
        }
        path += alpha * step_len;
        stats.steps += 1;
        if alpha < 1.0 {
            stats.truncated_steps += 1;
        }
        if let Some(Hit::Coord(p)) = hit {
            let j = free[p];
            x[j] = if dir[p] < 0.0 { delta } else { 1.0 - delta };
        }
        for &j in &free {
            if x[j] < 0.0 || x[j] > 1.0 {
                x[j] = x[j].clamp(0.0, 1.0);
                stats.clamps += 1;
            }
        }

        let mut new_tight = Vec::new();
        for (c, &i) in candidates.iter().enumerate() {
            let d = (drift_now[c] + alpha * drift_step[c]).abs();
            let forced = matches!(hit, Some(Hit::Row(r)) if r == i);
            if forced || d >= soft[i] {
                tight[i] = true;
                tight_rows.push(i);
                new_tight.push(i);
            } else {
                due.push(Reverse((Due(path + (soft[i] - d) / scale[i]), i)));
            }
        }

        let before = free.len();
        free.retain(|&j| delta < x[j] && x[j] < 1.0 - delta);
        if free.len() != before {
            stats.coords_frozen += before - free.len();
            basis = restricted_basis(a, &tight_rows, &free);
        } else {
            for &i in &new_tight {
                let row = a.row(i);
                let v: Vec<f64> = free.iter().map(|&j| row[j]).collect();
                extend_orthonormal(&mut basis, &v);
            }
        }
    };
    stats.rows_tight = tight_rows.len();

    let report = verify_partial(state, &x, a, budget);
    let outcome = if report.ok() {
        WalkOutcome::Success(PartialColoringState::new(x, delta)?)
    } else {
        WalkOutcome::Failure { stop, report }
    };
    Ok(WalkAttempt { outcome, stats })
}

/// Orthonormal basis of the tight rows restricted to the free coordinates,
/// expressed in the compact coordinates of `free`.
fn restricted_basis(a: &GaussianMatrix, rows: &[usize], free: &[usize]) -> Vec<Vec<f64>> {
    let mut basis = Vec::new();
    for &i in rows {
        let row = a.row(i);
        let v: Vec<f64> = free.iter().map(|&j| row[j]).collect();
        extend_orthonormal(&mut basis, &v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sample_gaussian_matrix;
    use proptest::prelude::*;

    fn half_state(n: usize, delta: f64) -> PartialColoringState {
        PartialColoringState::new(vec![0.5; n], delta).unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(PartialColoringState::new(vec![0.5], 0.0).is_err());
        assert!(PartialColoringState::new(vec![0.5], 0.6).is_err());
        assert!(PartialColoringState::new(vec![1.5], 0.1).is_err());
        let s = PartialColoringState::new(vec![0.1, 0.5, 0.9, 0.05, 1.0], 0.1).unwrap();
        // the band edges themselves are frozen
        assert_eq!(s.active(), &[1]);
        assert_eq!(s.active(), active_set(s.x(), s.delta()).as_slice());
    }

    #[test]
    fn single_active_coordinate() {
        let a =
            GaussianMatrix::from_rows(&[vec![0.3, -1.2, 2.0], vec![1.0, 1.0, 1.0]], 1.0).unwrap();
        let state = PartialColoringState::new(vec![0.0, 0.5, 1.0], 0.05).unwrap();
        let budget = WalkBudget::uniform(2, 100.0, 1);
        for seed in 0..20 {
            let attempt = edge_walk(
                &state,
                &a,
                &budget,
                &mut RngStream::new(seed, 0),
                &WalkConfig::default(),
            )
            .unwrap();
            let WalkOutcome::Success(y) = attempt.outcome else {
                panic!("walk failed for seed {seed}");
            };
            let v = y.x()[1];
            assert!(v <= 0.05 || v >= 0.95, "{v}");
            assert_eq!(y.x()[0], 0.0);
            assert_eq!(y.x()[2], 1.0);
            assert!(y.active().is_empty());
        }
    }

    #[test]
    fn nothing_active_is_a_contract_error() {
        let a = GaussianMatrix::from_rows(&[vec![1.0, 1.0]], 1.0).unwrap();
        let state = PartialColoringState::new(vec![0.01, 0.99], 0.1).unwrap();
        let budget = WalkBudget::uniform(1, 10.0, 1);
        let err = edge_walk(
            &state,
            &a,
            &budget,
            &mut RngStream::new(0, 0),
            &WalkConfig::default(),
        );
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn budget_precondition_is_enforced() {
        let a = sample_gaussian_matrix(64, 8, 1.0, &mut RngStream::new(3, 0)).unwrap();
        let state = half_state(8, 0.1);
        // 64 * exp(0) = 64 > 8/16
        let budget = WalkBudget::uniform(64, 0.0, 1);
        let err = edge_walk(
            &state,
            &a,
            &budget,
            &mut RngStream::new(0, 0),
            &WalkConfig::default(),
        );
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn verify_rejects_standing_still() {
        let a = sample_gaussian_matrix(4, 4, 1.0, &mut RngStream::new(1, 0)).unwrap();
        let x = half_state(4, 0.1);
        let budget = WalkBudget::uniform(4, 10.0, 1);
        let report = verify_partial(&x, x.x(), &a, &budget);
        assert!(!report.ok());
        assert_eq!(report.failed_conditions(), vec![Condition::Halving]);
    }

    #[test]
    fn verify_names_moved_frozen_coordinate() {
        let a = sample_gaussian_matrix(4, 4, 1.0, &mut RngStream::new(1, 0)).unwrap();
        let x = PartialColoringState::new(vec![0.5, 0.5, 0.0, 1.0], 0.1).unwrap();
        let budget = WalkBudget::uniform(4, 100.0, 1);
        let y = vec![0.0, 1.0, 0.01, 1.0];
        let report = verify_partial(&x, &y, &a, &budget);
        assert_eq!(report.failed_conditions(), vec![Condition::FrozenUnchanged]);
        assert_eq!(report.moved_frozen, vec![2]);
    }

    #[test]
    fn verify_reports_row_slack() {
        let a = GaussianMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]], 1.0).unwrap();
        let x = half_state(2, 0.1);
        let budget = WalkBudget::uniform(2, 0.5, 1);
        // row 0 drifts by 1, allowed 0.5 * sqrt(2)
        let report = verify_partial(&x, &[1.0, 1.0], &a, &budget);
        assert_eq!(report.failed_conditions(), vec![Condition::Discrepancy]);
        assert_eq!(report.violating_rows.len(), 1);
        assert_eq!(report.violating_rows[0].row, 0);
    }

    #[test]
    fn successes_verify_and_only_move_active_coordinates() {
        let n = 24;
        let m = 48;
        let a = sample_gaussian_matrix(m, n, 1.0, &mut RngStream::new(77, 0)).unwrap();
        let mut rng = RngStream::new(5, 0);
        let mut x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        x[0] = 0.0;
        x[1] = 1.0;
        let delta = 1.0 / (8.0 * (m as f64).ln());
        let state = PartialColoringState::new(x, delta).unwrap();
        let c = 8.0 * (16.0 * std::f64::consts::E).ln().sqrt();
        let budget = WalkBudget::uniform(m, c, 1);
        let mut wins = 0;
        for seed in 0..20 {
            let attempt = edge_walk(
                &state,
                &a,
                &budget,
                &mut RngStream::new(seed, 1),
                &WalkConfig::default(),
            )
            .unwrap();
            assert_eq!(attempt.stats.clamps, 0);
            if let WalkOutcome::Success(y) = attempt.outcome {
                wins += 1;
                assert!(verify_partial(&state, y.x(), &a, &budget).ok());
                // frozen set only grows
                for j in 0..n {
                    if !state.active().contains(&j) {
                        assert!(!y.active().contains(&j));
                        assert_eq!(y.x()[j], state.x()[j]);
                    }
                }
            }
        }
        assert!(wins >= 2, "{wins}");
    }

    #[test]
    fn tight_rows_are_respected() {
        // with m = 2 and |B| = 32 any c >= 0 passes the entry condition, so a
        // tiny budget makes both rows tight almost immediately
        let n = 32;
        let m = 2;
        let a = sample_gaussian_matrix(m, n, 1.0, &mut RngStream::new(8, 0)).unwrap();
        let state = half_state(n, 0.05);
        let budget = WalkBudget::uniform(m, 0.3, 1);
        let mut tight_seen = 0;
        let mut wins = 0;
        for seed in 0..10 {
            let attempt = edge_walk(
                &state,
                &a,
                &budget,
                &mut RngStream::new(seed, 2),
                &WalkConfig::default(),
            )
            .unwrap();
            tight_seen += attempt.stats.rows_tight;
            if let WalkOutcome::Success(y) = &attempt.outcome {
                wins += 1;
                assert!(verify_partial(&state, y.x(), &a, &budget)
                    .violating_rows
                    .is_empty());
            }
        }
        assert!(tight_seen >= 10);
        assert!(wins >= 5, "{wins}");
    }

    #[test]
    fn walk_is_deterministic() {
        let a = sample_gaussian_matrix(16, 16, 1.0, &mut RngStream::new(2, 0)).unwrap();
        let state = half_state(16, 0.05);
        let budget = WalkBudget::uniform(16, 15.0, 1);
        let run = || {
            let at = edge_walk(
                &state,
                &a,
                &budget,
                &mut RngStream::new(4, 4),
                &WalkConfig::default(),
            )
            .unwrap();
            match at.outcome {
                WalkOutcome::Success(y) => y.into_x(),
                WalkOutcome::Failure { .. } => Vec::new(),
            }
        };
        assert_eq!(run(), run());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn verify_invariant_under_positive_scaling(seed in 0u64..1000, c in 0.1f64..10.0) {
            let mut rng = RngStream::new(seed, 0);
            let a = sample_gaussian_matrix(6, 5, 1.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.uniform()).collect();
            let y: Vec<f64> = x.iter().map(|v| if rng.bernoulli(0.5) { (v + 0.3 * rng.uniform()).min(1.0) } else { *v }).collect();
            let state = PartialColoringState::new(x, 0.1).unwrap();
            let budget = WalkBudget { c: (0..6).map(|_| 2.0 * rng.uniform()).collect(), max_retries: 1 };
            let base = verify_partial(&state, &y, &a, &budget);
            let scaled = verify_partial(&state, &y, &a.scaled(c).unwrap(), &budget);
            let rows = |r: &VerifyReport| r.violating_rows.iter().map(|s| s.row).collect::<Vec<_>>();
            // drifts within rounding of the budget may flip; everything else must agree
            let near_edge = base.violating_rows.iter().chain(&scaled.violating_rows)
                .any(|s| (s.drift - s.allowed).abs() <= 1e-12 * s.allowed.max(1.0));
            if !near_edge {
                prop_assert_eq!(rows(&base), rows(&scaled));
            }
            prop_assert_eq!(base.active_after, scaled.active_after);
            prop_assert_eq!(base.moved_frozen, scaled.moved_frozen);
        }
    }
}
