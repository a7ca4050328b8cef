use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polyround::experiments::{
    audit_csv, audit_with_jobs, estimate_crossover, sweep_csv, sweep_with_jobs, write_with_sidecar,
    SweepConfig, X0Mode,
};
use polyround::model::{thresholds, InstanceFile};
use polyround::numerics::RngStream;
use polyround::oracle::{oracle_registry, OracleQuery, OracleReport};
use polyround::roundip::{find_integer_point, RoundIpConfig};
use polyround::{Error, Limits};

/// Integer points in random polytopes.
#[derive(Parser, Debug)]
#[command(name = "polyround", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random polytope instance file.
    Gen(GenArgs),
    /// Round the instance center and report the integer point found.
    Solve(SolveArgs),
    /// Run an exact brute-force query on a small instance.
    Oracle(OracleArgs),
    /// Monte Carlo feasibility sweep over the radius.
    Sweep(SweepArgs),
    /// Check entry and subvector norm bounds on a sampled matrix.
    Audit(AuditArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    #[serde(rename = "R")]
    radius: f64,
    #[arg(long, default_value = "half")]
    x0: X0Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    out: PathBuf,
    /// Fail when the thresholds are undefined for (n, m).
    #[arg(long)]
    thresholds: bool,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on edge-walk calls.
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// disc, lindisc, grid, feasible or shift.
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 2)]
    grid: u32,
    /// Right-hand side for the shifted search; defaults to the radius.
    #[arg(long)]
    rhs: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Entry scale; defaults to 1/sqrt(n).
    #[arg(long)]
    sigma: Option<f64>,
    /// Radii, comma separated.
    #[arg(long = "r", value_delimiter = ',', conflicts_with = "r_factors")]
    r: Vec<f64>,
    /// Radii as multiples of r0, comma separated.
    #[arg(long = "r-factors", value_delimiter = ',')]
    r_factors: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// constructive and/or exhaustive, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "constructive")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value = "half")]
    x0: X0Mode,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct AuditArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random subsets per size.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capacity { .. } => 4,
            Error::AlgorithmFailure { .. } => 3,
            _ => 2,
        };
        Fail(code, e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(2, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(2, e.to_string())
    }
}

#[derive(Serialize)]
struct Provenance<'a, T> {
    command: &'static str,
    args: &'a T,
    limits: &'a Limits,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolved: Option<serde_json::Value>,
}

fn emit<T: Serialize>(
    out: Option<&Path>,
    body: &str,
    command: &'static str,
    args: &T,
    limits: &Limits,
    resolved: Option<serde_json::Value>,
) -> Result<(), Fail> {
    match out {
        Some(path) => {
            let prov = Provenance {
                command,
                args,
                limits,
                resolved,
            };
            write_with_sidecar(path, body, &prov)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Fail> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn load_instance(path: &Path) -> Result<InstanceFile, Fail> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Fail(2, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Fail(2, format!("malformed instance {}: {e}", path.display())))
}

fn cmd_gen(args: &GenArgs, limits: &Limits) -> Result<u8, Fail> {
    let t = thresholds(args.n, args.m);
    if args.thresholds {
        if let Err(e) = &t {
            return Err(Fail(2, e.to_string()));
        }
    }
    if args.n == 0 || args.m == 0 {
        return Err(Fail(2, "n and m must be positive".into()));
    }
    let x0 = args
        .x0
        .sample(args.n, &mut RngStream::new(args.seed, args.stream).split(1));
    let file = InstanceFile {
        n: args.n,
        m: args.m,
        sigma: args.sigma,
        seed: Some(args.seed),
        stream: args.stream,
        x0,
        radius: args.radius,
        entries: None,
    };
    // validates every parameter before anything is written
    file.build(limits)?;
    let warning = outside_regime(args.n, args.m).then(|| {
        format!(
            "m = {} is outside the 2n <= m <= 2^n regime for n = {}",
            args.m, args.n
        )
    });
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    emit(Some(&args.out), &to_json(&file)?, "gen", args, limits, None)?;
    let summary = serde_json::json!({
        "path": args.out.display().to_string(),
        "r0": t.as_ref().ok().map(|t| t.r0),
        "r1": t.as_ref().ok().map(|t| t.r1),
        "thresholds_in_regime": t.as_ref().ok().map(|t| t.in_regime),
        "warning": warning,
    });
    print!("{}", to_json(&summary)?);
    Ok(0)
}

fn outside_regime(n: usize, m: usize) -> bool {
    m < 2 * n || (n < 64 && m as u128 > 1u128 << n)
}

fn cmd_solve(args: &SolveArgs, limits: &Limits) -> Result<u8, Fail> {
    let file = load_instance(&args.instance)?;
    let p = file.build(limits)?;
    let cfg = RoundIpConfig {
        max_attempts: args.max_attempts,
        ..RoundIpConfig::default()
    };
    let search = find_integer_point(&p, &mut RngStream::new(args.seed, 0), &cfg)?;
    let found = search.found.is_some();
    let report = serde_json::json!({
        "found": found,
        "certificate": search.certificate.to_json(),
    });
    let resolved = serde_json::to_value(&cfg)?;
    emit(
        args.out.as_deref(),
        &to_json(&report)?,
        "solve",
        args,
        limits,
        Some(resolved),
    )?;
    Ok(if found { 0 } else { 1 })
}

fn cmd_oracle(args: &OracleArgs, limits: &Limits) -> Result<u8, Fail> {
    let file = load_instance(&args.instance)?;
    let mode = oracle_registry().get(&args.mode)?;
    let p = file.build(limits)?;
    let q = OracleQuery {
        k: args.k,
        grid: args.grid,
        rhs: args.rhs,
    };
    let output = mode.run(&p, &q, limits)?;
    let report = OracleReport {
        mode: args.mode.clone(),
        output,
    };
    emit(
        args.out.as_deref(),
        &to_json(&report)?,
        "oracle",
        args,
        limits,
        None,
    )?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs, limits: &Limits) -> Result<u8, Fail> {
    let radii = if args.r_factors.is_empty() {
        args.r.clone()
    } else {
        let r0 = thresholds(args.n, args.m)?.r0;
        args.r_factors.iter().map(|f| f * r0).collect()
    };
    let sigma = args.sigma.unwrap_or(1.0 / (args.n.max(1) as f64).sqrt());
    let cfg = SweepConfig {
        methods: args.methods.clone(),
        k: args.k,
        x0: args.x0,
        limits: limits.clone(),
        ..SweepConfig::new(args.n, args.m, sigma, radii, args.trials, args.seed)
    };
    let records = sweep_with_jobs(&cfg, args.jobs)?;
    if let Ok(r) = estimate_crossover(&records) {
        eprintln!("feasible fraction crosses 1/2 at R = {r}");
    }
    let resolved = serde_json::to_value(&cfg)?;
    emit(
        args.out.as_deref(),
        &sweep_csv(&records),
        "sweep",
        args,
        limits,
        Some(resolved),
    )?;
    Ok(0)
}

fn cmd_audit(args: &AuditArgs, limits: &Limits) -> Result<u8, Fail> {
    let records = audit_with_jobs(
        args.n,
        args.m,
        args.sigma,
        args.seed,
        args.samples,
        limits,
        args.jobs,
    )?;
    emit(
        args.out.as_deref(),
        &audit_csv(&records),
        "audit",
        args,
        limits,
        None,
    )?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = Limits::from_env();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, &limits),
        Command::Solve(a) => cmd_solve(a, &limits),
        Command::Oracle(a) => cmd_oracle(a, &limits),
        Command::Sweep(a) => cmd_sweep(a, &limits),
        Command::Audit(a) => cmd_audit(a, &limits),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
