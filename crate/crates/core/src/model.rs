//! Random polytopes `P(n, m, x0, R) = {x : A x <= b}` with every facet at
//! distance `R` from `x0`, membership and inscribed-radius queries, and the
//! feasibility/infeasibility radii.
//!
//! Logarithms are natural throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::numerics::{dot, norm, sample_gaussian_matrix_capped, GaussianMatrix, RngStream};

/// Slack allowed on each inequality: `A_i x <= b_i + MEMBERSHIP_TOL * (1 + |b_i|)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PolytopeInstance {
    a: GaussianMatrix,
    x0: Vec<f64>,
    radius: f64,
    b: Vec<f64>,
    norms: Vec<f64>,
}

/// Builds the instance with `b_i = R ||A_i|| + A_i . x0`.
pub fn make_instance(a: GaussianMatrix, x0: Vec<f64>, radius: f64) -> Result<PolytopeInstance> {
    if x0.len() != a.cols() {
        return Err(Error::invalid(format!(
            "x0 has length {}, matrix has {} columns",
            x0.len(),
            a.cols()
        )));
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid(format!("radius must be >= 0, got {radius}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x0 must be finite"));
    }
    let norms: Vec<f64> = a.row_iter().map(norm).collect();
    if let Some(row) = norms.iter().position(|&r| r == 0.0) {
        return Err(Error::DegenerateRow { row });
    }
    let b = a
        .row_iter()
        .zip(&norms)
        .map(|(row, &nrm)| radius * nrm + dot(row, &x0))
        .collect();
    Ok(PolytopeInstance {
        a,
        x0,
        radius,
        b,
        norms,
    })
}

impl PolytopeInstance {
    pub fn matrix(&self) -> &GaussianMatrix {
        &self.a
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn row_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Whether row `i` holds at `x` under the membership tolerance.
    #[inline]
    pub fn row_holds(&self, i: usize, x: &[f64]) -> bool {
        let bi = self.b[i];
        dot(self.a.row(i), x) <= bi + MEMBERSHIP_TOL * (1.0 + bi.abs())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.n());
        (0..self.m()).all(|i| self.row_holds(i, x))
    }

    /// Integer-point membership.
    pub fn contains_int(&self, z: &[i64]) -> bool {
        let x: Vec<f64> = z.iter().map(|&v| v as f64).collect();
        self.contains(&x)
    }

    /// `min_i (b_i - A_i . c) / ||A_i||`; negative outside the polytope.
    pub fn inscribed_radius_at(&self, c: &[f64]) -> Result<f64> {
        if c.len() != self.n() {
            return Err(Error::invalid(format!(
                "point has length {}, expected {}",
                c.len(),
                self.n()
            )));
        }
        Ok(self
            .a
            .row_iter()
            .zip(&self.b)
            .zip(&self.norms)
            .map(|((row, &bi), &nrm)| (bi - dot(row, c)) / nrm)
            .fold(f64::INFINITY, f64::min))
    }
}

pub fn contains(p: &PolytopeInstance, x: &[f64]) -> bool {
    p.contains(x)
}

pub fn inscribed_radius_at(p: &PolytopeInstance, c: &[f64]) -> Result<f64> {
    p.inscribed_radius_at(c)
}

/// Infeasibility radius `r0` and feasibility radius `r1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub r0: f64,
    pub r1: f64,
    /// `1000 n <= m <= 2^n`, where both radii carry their guarantees.
    pub in_regime: bool,
}

pub fn thresholds(n: usize, m: usize) -> Result<Thresholds> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if m <= n {
        return Err(Error::Domain(format!(
            "thresholds need m > n (got n = {n}, m = {m}); log(m/n) is not positive"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    let ratio_log = (mf / nf).ln();
    let r0 = (ratio_log / 6.0).sqrt();
    let ln_m = mf.ln();
    let tail = ln_m * (mf * nf).ln() * (mf / ln_m).ln() / nf;
    let r1 = 960.0 * (ratio_log.sqrt() + tail.max(0.0).sqrt());
    Ok(Thresholds {
        r0,
        r1,
        in_regime: in_exponential_regime(n, m, 1000),
    })
}

/// `factor * n <= m <= 2^n`.
pub(crate) fn in_exponential_regime(n: usize, m: usize, factor: usize) -> bool {
    let lower = n.saturating_mul(factor) <= m;
    let upper = (m as f64).log2() <= n as f64;
    lower && upper
}

/// Rows scaled to unit length, plus the original norms.
pub fn normalize_rows(a: &GaussianMatrix) -> Result<(GaussianMatrix, Vec<f64>)> {
    let norms: Vec<f64> = a.row_iter().map(norm).collect();
    if let Some(row) = norms.iter().position(|&r| r == 0.0) {
        return Err(Error::DegenerateRow { row });
    }
    let entries = a
        .row_iter()
        .zip(&norms)
        .flat_map(|(row, &nrm)| row.iter().map(move |v| v / nrm))
        .collect();
    // a unit row has per-coordinate scale 1/sqrt(n)
    let unit =
        GaussianMatrix::from_entries(a.rows(), a.cols(), entries, 1.0 / (a.cols() as f64).sqrt())?;
    Ok((unit, norms))
}

/// On-disk instance description. The matrix is regenerated from
/// `(seed, stream)` unless `entries` carries it explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stream: u64,
    pub x0: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<f64>>>,
}

impl InstanceFile {
    pub fn matrix(&self, limits: &Limits) -> Result<GaussianMatrix> {
        let a = match (&self.entries, self.seed) {
            (Some(rows), _) => GaussianMatrix::from_rows(rows, self.sigma)?,
            (None, Some(seed)) => sample_gaussian_matrix_capped(
                self.m,
                self.n,
                self.sigma,
                &mut RngStream::new(seed, self.stream),
                limits,
            )?,
            (None, None) => {
                return Err(Error::invalid(
                    "instance needs either a seed or explicit entries",
                ))
            }
        };
        if a.rows() != self.m || a.cols() != self.n {
            return Err(Error::invalid(format!(
                "declared {}x{} but matrix is {}x{}",
                self.m,
                self.n,
                a.rows(),
                a.cols()
            )));
        }
        Ok(a)
    }

    pub fn build(&self, limits: &Limits) -> Result<PolytopeInstance> {
        make_instance(self.matrix(limits)?, self.x0.clone(), self.radius)
    }
}
