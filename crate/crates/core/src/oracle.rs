//! Exact brute-force references for small instances.
//!
//! Discrepancy and linear discrepancy at a center enumerate all `2^n`
//! binary vectors in Gray-code order, updating `A v` by one column per
//! step. The integer-feasibility searches enumerate a finite box, so a
//! negative answer only certifies that the box holds no feasible point.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::PolytopeInstance;
use crate::numerics::{dot, GaussianMatrix};
use crate::registry::Registry;

/// Interval between exact recomputations of the running product in the
/// Gray-code loop.
const RESYNC_EVERY: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Sign vector, 0/1 vector or integer point, depending on the query.
    pub witness: Vec<i64>,
    pub enumerated: u64,
    /// Maximizing center, for the grid search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

/// Outcome of a box-limited integer-feasibility search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSearch {
    pub found: bool,
    pub point: Option<Vec<i64>>,
    pub enumerated: u64,
    pub box_k: u32,
    pub box_center: Vec<i64>,
    /// Always `"within box ±K"` with `K` filled in; a negative answer
    /// covers only the enumerated box.
    pub qualifier: String,
}

fn box_qualifier(k: u32) -> String {
    format!("within box ±{k}")
}

fn check_enum(what: &'static str, requested: f64, cap: f64) -> Result<()> {
    if requested > cap {
        return Err(Error::Capacity {
            what,
            requested,
            cap,
        });
    }
    Ok(())
}

/// `max_i |r_i|`.
fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Minimizes `||A v + offset||_inf` over `v` with `v_j in {lo, hi}`.
/// Returns the minimizing bit pattern (bit set = `hi`) and the count.
fn gray_min(a: &GaussianMatrix, lo: f64, hi: f64, offset: &[f64]) -> (u64, u64) {
    let (m, n) = (a.rows(), a.cols());
    let cols = a.columns();
    let eval = |bits: u64| -> Vec<f64> {
        let v: Vec<f64> = (0..n)
            .map(|j| if bits >> j & 1 == 1 { hi } else { lo })
            .collect();
        a.row_iter()
            .zip(offset)
            .map(|(row, o)| dot(row, &v) + o)
            .collect()
    };
    let mut bits = 0u64;
    let mut r = eval(bits);
    let mut best = inf_norm(&r);
    let mut best_bits = bits;
    let total = 1u64 << n;
    let flip = hi - lo;
    for k in 1..total {
        let j = k.trailing_zeros() as usize;
        let up = bits >> j & 1 == 0;
        bits ^= 1 << j;
        if k % RESYNC_EVERY == 0 {
            r = eval(bits);
        } else {
            let d = if up { flip } else { -flip };
            for (ri, c) in r.iter_mut().zip(&cols[j]) {
                *ri += d * c;
            }
        }
        let mut cur = 0.0f64;
        for v in &r {
            cur = cur.max(v.abs());
            if cur >= best {
                break;
            }
        }
        if cur < best {
            best = cur;
            best_bits = bits;
        }
    }
    debug_assert_eq!(r.len(), m);
    (best_bits, total)
}

fn bits_to_vec(bits: u64, n: usize, lo: i64, hi: i64) -> Vec<i64> {
    (0..n)
        .map(|j| if bits >> j & 1 == 1 { hi } else { lo })
        .collect()
}

/// `min over s in {-1,+1}^n of ||A s||_inf`.
pub fn disc_exact(a: &GaussianMatrix, limits: &Limits) -> Result<OracleResult> {
    let n = a.cols();
    if n > limits.disc_max_n.min(63) {
        return Err(Error::Capacity {
            what: "discrepancy enumeration",
            requested: 2f64.powi(n as i32),
            cap: 2f64.powi(limits.disc_max_n as i32),
        });
    }
    let (bits, enumerated) = gray_min(a, -1.0, 1.0, &vec![0.0; a.rows()]);
    let witness = bits_to_vec(bits, n, -1, 1);
    let w: Vec<f64> = witness.iter().map(|&v| v as f64).collect();
    Ok(OracleResult {
        value: inf_norm(&a.mul_vec(&w)),
        witness,
        enumerated,
        center: None,
    })
}

/// `min over x in {0,1}^n of ||A (x - x0)||_inf` for `x0` in the unit cube.
pub fn lindisc_at(a: &GaussianMatrix, x0: &[f64], limits: &Limits) -> Result<OracleResult> {
    let n = a.cols();
    if x0.len() != n {
        return Err(Error::invalid(format!(
            "center has length {}, expected {n}",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("center must lie in [0,1]^n"));
    }
    if n > limits.disc_max_n.min(63) {
        return Err(Error::Capacity {
            what: "linear discrepancy enumeration",
            requested: 2f64.powi(n as i32),
            cap: 2f64.powi(limits.disc_max_n as i32),
        });
    }
    let offset: Vec<f64> = a.mul_vec(x0).into_iter().map(|v| -v).collect();
    let (bits, enumerated) = gray_min(a, 0.0, 1.0, &offset);
    let witness = bits_to_vec(bits, n, 0, 1);
    let diff: Vec<f64> = witness.iter().zip(x0).map(|(&w, c)| w as f64 - c).collect();
    Ok(OracleResult {
        value: inf_norm(&a.mul_vec(&diff)),
        witness,
        enumerated,
        center: None,
    })
}

/// Largest [`lindisc_at`] over the grid `{0, 1/g, ..., 1}^n` and the cube
/// center. A lower bound on the linear discrepancy of `A`.
pub fn lindisc_grid(a: &GaussianMatrix, g: u32, limits: &Limits) -> Result<OracleResult> {
    let n = a.cols();
    if g == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    if n > limits.grid_max_n {
        return Err(Error::Capacity {
            what: "grid search dimension",
            requested: n as f64,
            cap: limits.grid_max_n as f64,
        });
    }
    let points = (g as f64 + 1.0).powi(n as i32) + 1.0;
    check_enum("grid search", points * 2f64.powi(n as i32), limits.enum_cap)?;

    let mut best: Option<OracleResult> = None;
    let mut enumerated = 0u64;
    let mut consider = |center: Vec<f64>| -> Result<()> {
        let r = lindisc_at(a, &center, limits)?;
        enumerated += r.enumerated;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(OracleResult {
                center: Some(center),
                ..r
            });
        }
        Ok(())
    };
    let mut digits = vec![0u32; n];
    loop {
        consider(digits.iter().map(|&d| d as f64 / g as f64).collect())?;
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            if digits[pos] < g {
                digits[pos] += 1;
                break;
            }
            digits[pos] = 0;
            if pos == 0 {
                pos = usize::MAX;
                break;
            }
        }
        if pos == usize::MAX {
            break;
        }
    }
    consider(vec![0.5; n])?;
    let mut out = best.expect("grid is nonempty");
    out.enumerated = enumerated;
    Ok(out)
}

/// Lexicographic odometer over `center - k ..= center + k` per coordinate,
/// last coordinate fastest. Stops at the first point accepted by `feasible`.
fn search_box(
    center: &[i64],
    k: u32,
    mut feasible: impl FnMut(&[f64]) -> bool,
) -> (Option<Vec<i64>>, u64) {
    let n = center.len();
    let k = k as i64;
    let mut z: Vec<i64> = center.iter().map(|c| c - k).collect();
    let mut zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
    let mut enumerated = 0u64;
    loop {
        enumerated += 1;
        if feasible(&zf) {
            return (Some(z), enumerated);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return (None, enumerated);
            }
            pos -= 1;
            if z[pos] < center[pos] + k {
                z[pos] += 1;
                zf[pos] = z[pos] as f64;
                break;
            }
            z[pos] = center[pos] - k;
            zf[pos] = z[pos] as f64;
        }
    }
}

/// First integer point of `P` (lexicographic) with `||z - round(x0)||_inf <= k`.
pub fn integer_feasible_exhaustive(
    p: &PolytopeInstance,
    k: u32,
    limits: &Limits,
) -> Result<BoxSearch> {
    let n = p.n();
    check_enum(
        "box enumeration",
        (2.0 * k as f64 + 1.0).powi(n as i32),
        limits.enum_cap,
    )?;
    let center: Vec<i64> = p.x0().iter().map(|v| v.round() as i64).collect();
    // rows that rejected the previous candidate are tried first
    let mut hint = 0usize;
    let m = p.m();
    let (point, enumerated) = search_box(&center, k, |z| {
        if !p.row_holds(hint, z) {
            return false;
        }
        for i in 0..m {
            if i != hint && !p.row_holds(i, z) {
                hint = i;
                return false;
            }
        }
        true
    });
    Ok(BoxSearch {
        found: point.is_some(),
        point,
        enumerated,
        box_k: k,
        box_center: center,
        qualifier: box_qualifier(k),
    })
}

/// Searches integer `z` with `A (z - (1/2,...,1/2)) <= rhs` in every row,
/// over the box `||z - (1,...,1)||_inf <= k`. Every coordinate of
/// `z - 1/2` is automatically at least `1/2` in absolute value.
pub fn infeasibility_shift_check(
    a: &GaussianMatrix,
    rhs: f64,
    k: u32,
    limits: &Limits,
) -> Result<BoxSearch> {
    let n = a.cols();
    if !(rhs.is_finite() && rhs >= 0.0) {
        return Err(Error::invalid(format!("rhs must be >= 0, got {rhs}")));
    }
    if n > limits.grid_max_n {
        return Err(Error::Capacity {
            what: "shifted search dimension",
            requested: n as f64,
            cap: limits.grid_max_n as f64,
        });
    }
    check_enum(
        "box enumeration",
        (2.0 * k as f64 + 1.0).powi(n as i32),
        limits.enum_cap,
    )?;
    let center = vec![1i64; n];
    let slack = rhs + 1e-9 * (1.0 + rhs);
    let mut shifted = vec![0.0; n];
    let mut hint = 0usize;
    let (point, enumerated) = search_box(&center, k, |z| {
        for (s, v) in shifted.iter_mut().zip(z) {
            *s = v - 0.5;
        }
        if dot(a.row(hint), &shifted) > slack {
            return false;
        }
        for (i, row) in a.row_iter().enumerate() {
            if i != hint && dot(row, &shifted) > slack {
                hint = i;
                return false;
            }
        }
        true
    });
    Ok(BoxSearch {
        found: point.is_some(),
        point,
        enumerated,
        box_k: k,
        box_center: center,
        qualifier: box_qualifier(k),
    })
}

/// Parameters shared by the oracle modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleQuery {
    /// Box half-width for the feasibility searches.
    pub k: u32,
    /// Grid resolution for the center search.
    pub grid: u32,
    /// Right-hand side for the shifted search; defaults to the instance radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
}

impl Default for OracleQuery {
    fn default() -> Self {
        Self {
            k: 3,
            grid: 2,
            rhs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleOutput {
    Value(OracleResult),
    Feasibility(BoxSearch),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: String,
    #[serde(flatten)]
    pub output: OracleOutput,
}

/// A brute-force query against an instance, selectable by name.
pub trait OracleMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, p: &PolytopeInstance, q: &OracleQuery, limits: &Limits) -> Result<OracleOutput>;
}

struct Disc;
struct LinDiscAtCenter;
struct LinDiscGrid;
struct BoxFeasible;
struct ShiftedBox;

impl OracleMode for Disc {
    fn name(&self) -> &'static str {
        "disc"
    }
    fn run(&self, p: &PolytopeInstance, _: &OracleQuery, limits: &Limits) -> Result<OracleOutput> {
        disc_exact(p.matrix(), limits).map(OracleOutput::Value)
    }
}

impl OracleMode for LinDiscAtCenter {
    fn name(&self) -> &'static str {
        "lindisc"
    }
    fn run(&self, p: &PolytopeInstance, _: &OracleQuery, limits: &Limits) -> Result<OracleOutput> {
        lindisc_at(p.matrix(), p.x0(), limits).map(OracleOutput::Value)
    }
}

impl OracleMode for LinDiscGrid {
    fn name(&self) -> &'static str {
        "grid"
    }
    fn run(&self, p: &PolytopeInstance, q: &OracleQuery, limits: &Limits) -> Result<OracleOutput> {
        lindisc_grid(p.matrix(), q.grid, limits).map(OracleOutput::Value)
    }
}

impl OracleMode for BoxFeasible {
    fn name(&self) -> &'static str {
        "feasible"
    }
    fn run(&self, p: &PolytopeInstance, q: &OracleQuery, limits: &Limits) -> Result<OracleOutput> {
        integer_feasible_exhaustive(p, q.k, limits).map(OracleOutput::Feasibility)
    }
}

impl OracleMode for ShiftedBox {
    fn name(&self) -> &'static str {
        "shift"
    }
    fn run(&self, p: &PolytopeInstance, q: &OracleQuery, limits: &Limits) -> Result<OracleOutput> {
        let rhs = q.rhs.unwrap_or(p.radius());
        infeasibility_shift_check(p.matrix(), rhs, q.k, limits).map(OracleOutput::Feasibility)
    }
}

/// All oracle modes, keyed by name.
pub fn oracle_registry() -> Registry<dyn OracleMode> {
    let mut reg: Registry<dyn OracleMode> = Registry::new("oracle mode");
    let modes: [Arc<dyn OracleMode>; 5] = [
        Arc::new(Disc),
        Arc::new(LinDiscAtCenter),
        Arc::new(LinDiscGrid),
        Arc::new(BoxFeasible),
        Arc::new(ShiftedBox),
    ];
    for mode in modes {
        reg.register(mode.name(), mode);
    }
    reg
}
