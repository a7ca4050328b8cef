//! Seeded sampling and the small dense linear-algebra kernel used by the
//! walk, the model and the oracles.
//!
//! Random streams are ChaCha8 keyed by a 64-bit seed with the 64-bit
//! ChaCha stream word selecting an independent substream, so trials can be
//! farmed out to workers without sharing state. Gaussian variates come from
//! the Ziggurat sampler in `rand_distr` (`StandardNormal`); the generator and
//! sampler versions are pinned by `Cargo.lock`, which is what makes draws
//! reproducible across runs and platforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::limits::Limits;

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh stream under the same seed whose id is derived from this
    /// stream's id and `index`. Does not advance `self`.
    pub fn split(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, mix_stream(self.stream, index))
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for child `index` of stream `parent`.
pub fn mix_stream(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Dense row-major matrix together with the distribution it was drawn from.
///
/// `sigma` is the per-entry standard deviation of the generating
/// distribution. `provenance` is `Some((seed, stream))` when the entries were
/// sampled here and `None` for explicitly supplied or derived matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    sigma: f64,
    provenance: Option<(u64, u64)>,
}

impl GaussianMatrix {
    /// Wraps explicit rows. All rows must have the same positive length and
    /// every entry must be finite.
    pub fn from_rows(rows: &[Vec<f64>], sigma: f64) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        let mut entries = Vec::with_capacity(m * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(m, n, entries, sigma)
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>, sigma: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            sigma,
            provenance: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn provenance(&self) -> Option<(u64, u64)> {
        self.provenance
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.cols)
    }

    /// Column-major copy of the entries, one `Vec` per column.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).collect())
            .collect()
    }

    /// `c * A`, with `sigma` scaled accordingly.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {c}")));
        }
        let entries = self.entries.iter().map(|v| v * c).collect();
        Self::from_entries(self.rows, self.cols, entries, self.sigma * c)
    }

    /// `A x` for an `n`-vector `x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.row_iter().map(|r| dot(r, x)).collect()
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.rows,
            });
        }
        Ok(())
    }
}

/// Draws an `m x n` matrix with i.i.d. `N(0, sigma^2)` entries in row-major
/// order from `rng`.
pub fn sample_gaussian_matrix(
    m: usize,
    n: usize,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<GaussianMatrix> {
    sample_gaussian_matrix_capped(m, n, sigma, rng, &Limits::default())
}

pub fn sample_gaussian_matrix_capped(
    m: usize,
    n: usize,
    sigma: f64,
    rng: &mut RngStream,
    limits: &Limits,
) -> Result<GaussianMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be at least 1"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    match m.checked_mul(n) {
        Some(total) if total <= limits.max_entries => {}
        _ => {
            return Err(Error::Sizing {
                rows: m,
                cols: n,
                cap: limits.max_entries,
            })
        }
    }
    let provenance = Some((rng.seed(), rng.stream()));
    let entries = (0..m * n).map(|_| sigma * rng.gaussian()).collect();
    Ok(GaussianMatrix {
        rows: m,
        cols: n,
        entries,
        sigma,
        provenance,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Euclidean norm of row `i`.
pub fn row_norm(a: &GaussianMatrix, i: usize) -> Result<f64> {
    a.check_row(i)?;
    Ok(norm(a.row(i)))
}

/// Euclidean norm of row `i` restricted to the coordinates in `subset`.
pub fn restricted_norm(a: &GaussianMatrix, i: usize, subset: &[usize]) -> Result<f64> {
    a.check_row(i)?;
    let mut seen = vec![false; a.cols()];
    for &j in subset {
        if j >= a.cols() {
            return Err(Error::InvalidSubset(format!(
                "index {j} out of range for {} columns",
                a.cols()
            )));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidSubset(format!("index {j} repeated")));
        }
    }
    Ok(restricted_norm_unchecked(a.row(i), subset))
}

pub(crate) fn restricted_norm_unchecked(row: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&j| row[j] * row[j]).sum::<f64>().sqrt()
}

/// Component of `v` orthogonal to the span of `basis`.
///
/// The basis is first orthonormalized (zero and dependent vectors are
/// dropped), then `v` is swept against it twice.
pub fn project_out(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for b in basis {
        debug_assert_eq!(b.len(), v.len());
        extend_orthonormal(&mut q, b);
    }
    let mut out = v.to_vec();
    project_out_orthonormal(&mut out, &q);
    out
}

/// Two Gram–Schmidt sweeps of `v` against an orthonormal set `q`.
pub(crate) fn project_out_orthonormal(v: &mut [f64], q: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in q {
            let c = dot(v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
    }
}

/// Adds the normalized component of `v` orthogonal to `q`, unless `v` is
/// (numerically) already in the span. Returns whether `q` grew.
pub(crate) fn extend_orthonormal(q: &mut Vec<Vec<f64>>, v: &[f64]) -> bool {
    let scale = norm(v);
    if scale == 0.0 {
        return false;
    }
    let mut w = v.to_vec();
    project_out_orthonormal(&mut w, q);
    let len = norm(&w);
    if len <= 1e-10 * scale {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= len);
    q.push(w);
    true
}
