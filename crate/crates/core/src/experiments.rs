//! Monte Carlo sweeps over the radius, crossover estimation and
//! concentration audits of Gaussian matrices.
//!
//! Every trial index owns its own random stream, and trial `t` reuses the
//! same matrix and center at every radius, so the feasible fraction is
//! nondecreasing in `R` exactly rather than statistically.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{make_instance, PolytopeInstance};
use crate::numerics::{sample_gaussian_matrix_capped, GaussianMatrix, RngStream};
use crate::oracle::integer_feasible_exhaustive;
use crate::registry::Registry;
use crate::roundip::{round_ip, RoundIpConfig};

/// How the center `x0` is chosen for each trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum X0Mode {
    Half,
    Uniform,
    Zero,
}

impl X0Mode {
    pub fn sample(self, n: usize, rng: &mut RngStream) -> Vec<f64> {
        match self {
            X0Mode::Half => vec![0.5; n],
            X0Mode::Zero => vec![0.0; n],
            X0Mode::Uniform => (0..n).map(|_| rng.uniform()).collect(),
        }
    }
}

impl std::str::FromStr for X0Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(X0Mode::Half),
            "uniform" => Ok(X0Mode::Uniform),
            "zero" => Ok(X0Mode::Zero),
            other => Err(Error::invalid(format!(
                "x0 mode must be half, uniform or zero, got '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub radii: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    /// Box half-width for the exhaustive method.
    pub k: u32,
    pub x0: X0Mode,
    #[serde(default)]
    pub rounding: RoundIpConfig,
    #[serde(default)]
    pub limits: Limits,
}

impl SweepConfig {
    pub fn new(n: usize, m: usize, sigma: f64, radii: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            sigma,
            radii,
            trials,
            seed,
            methods: vec![CONSTRUCTIVE.into()],
            k: 3,
            x0: X0Mode::Half,
            rounding: RoundIpConfig::default(),
            limits: Limits::default(),
        }
    }

    fn validate(&self, registry: &Registry<dyn FeasibilityMethod>) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::invalid("radius list is empty"));
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::invalid(format!(
                "radius must be finite and >= 0, got {r}"
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        for name in &self.methods {
            registry.get(name)?.check(self)?;
        }
        Ok(())
    }
}

pub const CONSTRUCTIVE: &str = "constructive";
pub const EXHAUSTIVE: &str = "exhaustive";

/// Matrix and center of trial `t`; identical for every radius and method.
pub fn trial_instance(cfg: &SweepConfig, t: u64) -> Result<(GaussianMatrix, Vec<f64>)> {
    let base = trial_stream(cfg.seed, t);
    let a =
        sample_gaussian_matrix_capped(cfg.m, cfg.n, cfg.sigma, &mut base.split(0), &cfg.limits)?;
    let x0 = cfg.x0.sample(cfg.n, &mut base.split(1));
    Ok((a, x0))
}

pub fn trial_stream(seed: u64, t: u64) -> RngStream {
    RngStream::new(seed, 0).split(t)
}

/// A way of deciding whether a polytope holds an integer point.
pub trait FeasibilityMethod: Send + Sync {
    fn name(&self) -> &'static str;

    /// Rejects configurations the method cannot handle.
    fn check(&self, _cfg: &SweepConfig) -> Result<()> {
        Ok(())
    }

    /// Per-trial state, shared across all radii of that trial. `trial` is
    /// the trial's base stream; a method draws from its own split of it.
    fn prepare(
        &self,
        a: &GaussianMatrix,
        x0: &[f64],
        trial: &RngStream,
        cfg: &SweepConfig,
    ) -> Result<Box<dyn TrialProbe>>;
}

pub trait TrialProbe {
    /// An integer point of `p`, if the method finds one.
    fn probe(&mut self, p: &PolytopeInstance) -> Result<Option<Vec<i64>>>;

    /// Edge-walk attempts spent, for methods that walk.
    fn attempts(&self) -> Option<u32> {
        None
    }
}

/// Rounds `x0` once per trial and tests the same point at every radius.
struct Constructive;

struct RoundedPoint {
    z: Option<Vec<i64>>,
    attempts: u32,
}

impl FeasibilityMethod for Constructive {
    fn name(&self) -> &'static str {
        CONSTRUCTIVE
    }

    fn prepare(
        &self,
        a: &GaussianMatrix,
        x0: &[f64],
        trial: &RngStream,
        cfg: &SweepConfig,
    ) -> Result<Box<dyn TrialProbe>> {
        let mut rng = trial.split(2);
        let probe = match round_ip(a, x0, &mut rng, &cfg.rounding) {
            Ok(cert) => RoundedPoint {
                attempts: cert.attempts,
                z: Some(cert.z),
            },
            // a walk that never finishes finds nothing at any radius
            Err(Error::AlgorithmFailure { attempts, .. }) => RoundedPoint { z: None, attempts },
            Err(e) => return Err(e),
        };
        Ok(Box::new(probe))
    }
}

impl TrialProbe for RoundedPoint {
    fn probe(&mut self, p: &PolytopeInstance) -> Result<Option<Vec<i64>>> {
        Ok(self.z.as_ref().filter(|z| p.contains_int(z)).cloned())
    }

    fn attempts(&self) -> Option<u32> {
        Some(self.attempts)
    }
}

/// Enumerates the box `||z - round(x0)||_inf <= K`.
struct Exhaustive;

struct BoxProbe {
    k: u32,
    limits: Limits,
}

impl FeasibilityMethod for Exhaustive {
    fn name(&self) -> &'static str {
        EXHAUSTIVE
    }

    fn check(&self, cfg: &SweepConfig) -> Result<()> {
        let requested = (2.0 * cfg.k as f64 + 1.0).powi(cfg.n as i32);
        if requested > cfg.limits.enum_cap {
            return Err(Error::Capacity {
                what: "box enumeration",
                requested,
                cap: cfg.limits.enum_cap,
            });
        }
        Ok(())
    }

    fn prepare(
        &self,
        _: &GaussianMatrix,
        _: &[f64],
        _: &RngStream,
        cfg: &SweepConfig,
    ) -> Result<Box<dyn TrialProbe>> {
        Ok(Box::new(BoxProbe {
            k: cfg.k,
            limits: cfg.limits.clone(),
        }))
    }
}

impl TrialProbe for BoxProbe {
    fn probe(&mut self, p: &PolytopeInstance) -> Result<Option<Vec<i64>>> {
        Ok(integer_feasible_exhaustive(p, self.k, &self.limits)?.point)
    }
}

pub fn method_registry() -> Registry<dyn FeasibilityMethod> {
    let mut reg: Registry<dyn FeasibilityMethod> = Registry::new("feasibility method");
    reg.register(CONSTRUCTIVE, Arc::new(Constructive));
    reg.register(EXHAUSTIVE, Arc::new(Exhaustive));
    reg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub trials: usize,
    pub feasible_constructive: Option<usize>,
    pub feasible_exhaustive: Option<usize>,
    pub mean_attempts: Option<f64>,
    pub seed: u64,
}

impl SweepRecord {
    /// Feasible fraction, preferring the exhaustive count.
    pub fn fraction(&self) -> Option<f64> {
        self.feasible_exhaustive
            .or(self.feasible_constructive)
            .map(|c| c as f64 / self.trials as f64)
    }
}

/// Per-trial outcome: `found[r][method]` and walk attempts.
struct TrialOutcome {
    found: Vec<Vec<bool>>,
    attempts: Option<u32>,
}

fn run_trial(
    cfg: &SweepConfig,
    methods: &[Arc<dyn FeasibilityMethod>],
    t: u64,
) -> Result<TrialOutcome> {
    let (a, x0) = trial_instance(cfg, t)?;
    let base = trial_stream(cfg.seed, t);
    let mut probes = methods
        .iter()
        .map(|m| m.prepare(&a, &x0, &base, cfg))
        .collect::<Result<Vec<_>>>()?;
    let attempts = probes.iter().find_map(|p| p.attempts());
    let center: Vec<i64> = x0.iter().map(|v| v.round() as i64).collect();
    let mut found = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        let p = make_instance(a.clone(), x0.clone(), r)?;
        let points = probes
            .iter_mut()
            .map(|probe| probe.probe(&p))
            .collect::<Result<Vec<_>>>()?;
        check_consistency(cfg, &p, &center, &points, t, r)?;
        found.push(points.iter().map(Option::is_some).collect());
    }
    Ok(TrialOutcome { found, attempts })
}

/// Every reported point must be feasible, and a constructive point inside
/// the box must also have been found by the box search.
fn check_consistency(
    cfg: &SweepConfig,
    p: &PolytopeInstance,
    center: &[i64],
    points: &[Option<Vec<i64>>],
    t: u64,
    r: f64,
) -> Result<()> {
    for (name, point) in cfg.methods.iter().zip(points) {
        if let Some(z) = point {
            if !p.contains_int(z) {
                return Err(Error::Inconsistent(format!(
                    "trial {t}, R={r}: {name} reported an infeasible point"
                )));
            }
        }
    }
    let pos = |n: &str| cfg.methods.iter().position(|m| m == n);
    if let (Some(c), Some(e)) = (pos(CONSTRUCTIVE), pos(EXHAUSTIVE)) {
        if let Some(z) = &points[c] {
            let inside = z
                .iter()
                .zip(center)
                .all(|(zi, ci)| (zi - ci).unsigned_abs() <= u64::from(cfg.k));
            if inside && points[e].is_none() {
                return Err(Error::Inconsistent(format!(
                    "trial {t}, R={r}: constructive point lies in the box but the box search found nothing"
                )));
            }
        }
    }
    Ok(())
}

/// Runs `cfg.trials` trials at every radius, in parallel over trials.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let registry = method_registry();
    cfg.validate(&registry)?;
    let methods = cfg
        .methods
        .iter()
        .map(|n| registry.get(n))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &methods, t))
        .collect::<Result<Vec<_>>>()?;

    let count = |ri: usize, name: &str| -> Option<usize> {
        let mi = cfg.methods.iter().position(|m| m == name)?;
        Some(outcomes.iter().filter(|o| o.found[ri][mi]).count())
    };
    let attempts: Vec<u32> = outcomes.iter().filter_map(|o| o.attempts).collect();
    let mean_attempts = (!attempts.is_empty())
        .then(|| attempts.iter().map(|&a| f64::from(a)).sum::<f64>() / attempts.len() as f64);
    Ok(cfg
        .radii
        .iter()
        .enumerate()
        .map(|(ri, &r)| SweepRecord {
            n: cfg.n,
            m: cfg.m,
            sigma: cfg.sigma,
            radius: r,
            trials: cfg.trials,
            feasible_constructive: count(ri, CONSTRUCTIVE),
            feasible_exhaustive: count(ri, EXHAUSTIVE),
            mean_attempts,
            seed: cfg.seed,
        })
        .collect())
}

/// Same as [`sweep`] on a pool of at most `jobs` worker threads.
pub fn sweep_with_jobs(cfg: &SweepConfig, jobs: Option<usize>) -> Result<Vec<SweepRecord>> {
    with_jobs(jobs, || sweep(cfg))
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::invalid("--jobs must be at least 1")),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// Radius where the linearly interpolated feasible fraction first reaches 1/2.
pub fn estimate_crossover(records: &[SweepRecord]) -> Result<f64> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no records"))?;
    if records.iter().any(|r| r.n != first.n || r.m != first.m) {
        return Err(Error::invalid("records mix different (n, m)"));
    }
    let mut points = records
        .iter()
        .map(|r| {
            r.fraction()
                .map(|f| (r.radius, f))
                .ok_or_else(|| Error::invalid("record carries no feasible count"))
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(r, _)) = points.iter().find(|p| p.1 == 0.5) {
        return Ok(r);
    }
    for w in points.windows(2) {
        let ((r0, f0), (r1, f1)) = (w[0], w[1]);
        if (f0 - 0.5) * (f1 - 0.5) < 0.0 {
            return Ok(r0 + (0.5 - f0) * (r1 - r0) / (f1 - f0));
        }
    }
    Err(Error::NoCrossover)
}

/// Which concentration bound an audit row checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditCheck {
    /// `max |A_ij| <= 2 sigma sqrt(ln(mn))` over all entries.
    Entry,
    /// `||A_i|S||^2 <= lambda_s sigma^2` over sampled subsets and all rows.
    Subvector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub check: AuditCheck,
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub s: usize,
    pub samples: usize,
    pub max_observed: f64,
    pub bound: f64,
    pub violations: usize,
    pub seed: u64,
}

/// `10 s sqrt(ln(e n / s) + ln(m) / s)`.
pub fn subvector_lambda(n: usize, m: usize, s: usize) -> f64 {
    let (n, m, s) = (n as f64, m as f64, s as f64);
    10.0 * s * ((std::f64::consts::E * n / s).ln() + m.ln() / s).sqrt()
}

pub fn entry_bound(n: usize, m: usize, sigma: f64) -> f64 {
    2.0 * sigma * ((m as f64 * n as f64).ln()).sqrt()
}

/// `ceil(ln m) * 2^k` below `n`, then `n`.
pub fn audit_sizes(n: usize, m: usize) -> Vec<usize> {
    let mut s = ((m as f64).ln().ceil() as usize).clamp(1, n);
    let mut sizes = Vec::new();
    while s < n {
        sizes.push(s);
        s *= 2;
    }
    sizes.push(n);
    sizes
}

/// Samples one matrix and checks the entry bound and, for each subset
/// size, the subvector bound on `samples` random subsets.
pub fn audit_subvector_norms(
    n: usize,
    m: usize,
    sigma: f64,
    seed: u64,
    samples: usize,
    limits: &Limits,
) -> Result<Vec<AuditRecord>> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("audit needs n, m >= 1"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples per size must be at least 1"));
    }
    let base = RngStream::new(seed, 0);
    let a = sample_gaussian_matrix_capped(m, n, sigma, &mut base.split(0), limits)?;
    let ebound = entry_bound(n, m, sigma);
    let mut records = vec![AuditRecord {
        check: AuditCheck::Entry,
        n,
        m,
        sigma,
        s: 1,
        samples: m * n,
        max_observed: a.entries().iter().fold(0.0, |acc, v| acc.max(v.abs())),
        bound: ebound,
        violations: a.entries().iter().filter(|v| v.abs() > ebound).count(),
        seed,
    }];
    let sizes = audit_sizes(n, m);
    let per_size: Vec<AuditRecord> = sizes
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut rng = base.split(1 + k as u64);
            let bound = subvector_lambda(n, m, s) * sigma * sigma;
            let mut idx: Vec<usize> = (0..n).collect();
            let mut max_observed = 0.0f64;
            let mut violations = 0;
            for _ in 0..samples {
                // partial Fisher-Yates: the first s entries form the subset
                for i in 0..s {
                    let j = i + rng.below(n - i);
                    idx.swap(i, j);
                }
                let subset = &idx[..s];
                let worst = a
                    .row_iter()
                    .map(|row| subset.iter().map(|&j| row[j] * row[j]).sum::<f64>())
                    .fold(0.0, f64::max);
                max_observed = max_observed.max(worst);
                if worst > bound {
                    violations += 1;
                }
            }
            AuditRecord {
                check: AuditCheck::Subvector,
                n,
                m,
                sigma,
                s,
                samples,
                max_observed,
                bound,
                violations,
                seed,
            }
        })
        .collect();
    records.extend(per_size);
    Ok(records)
}

pub fn audit_with_jobs(
    n: usize,
    m: usize,
    sigma: f64,
    seed: u64,
    samples: usize,
    limits: &Limits,
    jobs: Option<usize>,
) -> Result<Vec<AuditRecord>> {
    with_jobs(jobs, || {
        audit_subvector_norms(n, m, sigma, seed, samples, limits)
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub const SWEEP_HEADER: &str =
    "n,m,sigma,R,trials,feasible_constructive,feasible_exhaustive,mean_attempts,seed";
pub const AUDIT_HEADER: &str = "check,n,m,sigma,s,samples,max_observed,bound,violations,seed";

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            r.sigma,
            r.radius,
            r.trials,
            opt(r.feasible_constructive),
            opt(r.feasible_exhaustive),
            opt(r.mean_attempts),
            r.seed
        );
    }
    out
}

pub fn audit_csv(records: &[AuditRecord]) -> String {
    let mut out = format!("{AUDIT_HEADER}\n");
    for r in records {
        let check = match r.check {
            AuditCheck::Entry => "entry",
            AuditCheck::Subvector => "subvector",
        };
        let _ = writeln!(
            out,
            "{check},{},{},{},{},{},{},{},{},{}",
            r.n, r.m, r.sigma, r.s, r.samples, r.max_observed, r.bound, r.violations, r.seed
        );
    }
    out
}

/// `<path>.config.json`, next to the output file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Writes `body` to `path` and the pretty-printed `config` beside it.
pub fn write_with_sidecar<C: Serialize>(
    path: &Path,
    body: &str,
    config: &C,
) -> std::io::Result<()> {
    std::fs::write(path, body)?;
    let json = serde_json::to_string_pretty(config).map_err(std::io::Error::other)?;
    std::fs::write(sidecar_path(path), json + "\n")
}
