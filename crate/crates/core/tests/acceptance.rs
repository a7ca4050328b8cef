//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use polyround::edgewalk::{
    edge_walk, verify_partial, PartialColoringState, WalkBudget, WalkConfig, WalkOutcome,
};
use polyround::experiments::{
    audit_subvector_norms, sweep, trial_instance, trial_stream, SweepConfig, X0Mode, CONSTRUCTIVE,
    EXHAUSTIVE,
};
use polyround::model::{make_instance, thresholds};
use polyround::numerics::{sample_gaussian_matrix, GaussianMatrix, RngStream};
use polyround::oracle::{disc_exact, integer_feasible_exhaustive, lindisc_at};
use polyround::roundip::{
    budget_coefficient, freeze_tolerance, overhead_bound, round_ip, RoundIpConfig,
};
use polyround::Limits;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rounding_trials(n: usize, m: usize, trials: usize, seed: u64) -> SweepConfig {
    SweepConfig {
        x0: X0Mode::Uniform,
        ..SweepConfig::new(n, m, 1.0, vec![0.0], trials, seed)
    }
}

fn overhead_envelope() -> Outcome {
    let (n, m) = (64, 256);
    let bound = overhead_bound(n, m, 1.0).map_err(err)?.value;
    let cfg = rounding_trials(n, m, 200, 1001);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let (a, x0) = trial_instance(&cfg, t).map_err(err)?;
        let cert = round_ip(
            &a,
            &x0,
            &mut trial_stream(cfg.seed, t).split(2),
            &RoundIpConfig::default(),
        )
        .map_err(err)?;
        worst = worst.max(cert.overhead_max());
        ensure(cert.overhead_max() <= bound, || {
            format!(
                "trial {t}: overhead {} above bound {bound}",
                cert.overhead_max()
            )
        })?;
    }
    Ok(format!(
        "200/200 within {bound:.4}; empirical max overhead {worst:.4}"
    ))
}

fn walk_success_rate() -> Outcome {
    let (n, m) = (128, 128);
    let delta = freeze_tolerance(m);
    let c = budget_coefficient(m, n);
    let budget = WalkBudget::uniform(m, c, 1);
    let base = RngStream::new(2002, 0);
    let mut wins = 0;
    for t in 0..100 {
        let mut rng = base.split(t);
        let a = sample_gaussian_matrix(m, n, 1.0, &mut rng).map_err(err)?;
        let state = PartialColoringState::new(vec![0.5; n], delta).map_err(err)?;
        let attempt =
            edge_walk(&state, &a, &budget, &mut rng, &WalkConfig::default()).map_err(err)?;
        if let WalkOutcome::Success(next) = attempt.outcome {
            let report = verify_partial(&state, next.x(), &a, &budget);
            ensure(report.ok(), || {
                format!("attempt {t}: success fails verification: {report:?}")
            })?;
            wins += 1;
        }
    }
    ensure(wins >= 5, || format!("only {wins}/100 successes"))?;
    Ok(format!("{wins}/100 successes, all verified (c = {c:.4})"))
}

fn oracle_dominance() -> Outcome {
    let (n, m) = (10, 40);
    let cfg = rounding_trials(n, m, 50, 3003);
    let limits = Limits::default();
    let mut tightest = f64::INFINITY;
    for t in 0..50 {
        let (a, x0) = trial_instance(&cfg, t).map_err(err)?;
        let cert = round_ip(
            &a,
            &x0,
            &mut trial_stream(cfg.seed, t).split(2),
            &RoundIpConfig::default(),
        )
        .map_err(err)?;
        let best = lindisc_at(&a, &x0, &limits).map_err(err)?.value;
        ensure(best <= cert.overhead_max() + 1e-9, || {
            format!(
                "trial {t}: oracle {best} above overhead {}",
                cert.overhead_max()
            )
        })?;
        tightest = tightest.min(cert.overhead_max() - best);
    }
    Ok(format!(
        "50/50 oracle <= overhead; smallest gap {tightest:.3e}"
    ))
}

const FACTORS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

fn transition_config() -> Result<SweepConfig, String> {
    let (n, m) = (8, 8000);
    let r0 = thresholds(n, m).map_err(err)?.r0;
    Ok(SweepConfig {
        methods: vec![CONSTRUCTIVE.into(), EXHAUSTIVE.into()],
        k: 3,
        x0: X0Mode::Half,
        ..SweepConfig::new(
            n,
            m,
            1.0 / (n as f64).sqrt(),
            FACTORS.iter().map(|f| f * r0).collect(),
            20,
            4004,
        )
    })
}

fn phase_transition() -> Outcome {
    let cfg = transition_config()?;
    let records = sweep(&cfg).map_err(err)?;
    let fractions: Vec<f64> = records
        .iter()
        .map(|r| r.feasible_exhaustive.unwrap() as f64 / r.trials as f64)
        .collect();
    ensure(fractions.windows(2).all(|w| w[0] <= w[1]), || {
        format!("fractions not monotone: {fractions:?}")
    })?;
    ensure(fractions[0] <= 0.1, || {
        format!("fraction {} at 0.25 r0", fractions[0])
    })?;
    ensure(fractions[5] == 1.0, || {
        format!("fraction {} at 8 r0", fractions[5])
    })?;
    Ok(format!(
        "exhaustive fractions at {FACTORS:?} x r0: {fractions:?}"
    ))
}

fn infeasibility_regime() -> Outcome {
    let cfg = transition_config()?;
    let r = cfg.radii[1];
    let mut missing = 0;
    for t in 0..cfg.trials as u64 {
        let (a, x0) = trial_instance(&cfg, t).map_err(err)?;
        let p = make_instance(a, x0, r).map_err(err)?;
        let report = integer_feasible_exhaustive(&p, 3, &cfg.limits).map_err(err)?;
        if !report.found {
            ensure(report.qualifier == "within box ±3", || {
                format!("trial {t}: qualifier '{}'", report.qualifier)
            })?;
            missing += 1;
        }
    }
    ensure(10 * missing >= 9 * cfg.trials, || {
        format!("only {missing}/{} not found at 0.5 r0", cfg.trials)
    })?;
    Ok(format!(
        "{missing}/{} not found within box ±3 at R = {r:.4}",
        cfg.trials
    ))
}

fn concentration_audit() -> Outcome {
    let records =
        audit_subvector_norms(256, 1024, 1.0, 6006, 200, &Limits::default()).map_err(err)?;
    let violations: usize = records.iter().map(|r| r.violations).sum();
    ensure(violations == 0, || {
        format!("{violations} violations: {records:?}")
    })?;
    let worst = records
        .iter()
        .map(|r| r.max_observed / r.bound)
        .fold(0.0, f64::max);
    Ok(format!(
        "0 violations over {} checks; largest observed/bound {worst:.3}",
        records.len()
    ))
}

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_polyround"))
        .args(args)
        .output()
        .map_err(err)?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

/// Runs the command twice against the same output path and compares the
/// output file, its sidecar and stdout.
fn twice(dir: &Path, args: &[&str], out: &str) -> Result<(), String> {
    let path = dir.join(out);
    let path_s = path.to_str().unwrap().to_string();
    let sidecar = format!("{path_s}.config.json");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", &path_s]);
    let mut seen = Vec::new();
    for _ in 0..2 {
        let (code, stdout) = run_cli(&full)?;
        ensure(code == 0 || code == 1, || {
            format!("{args:?} exited with {code}")
        })?;
        let body = std::fs::read(&path).map_err(err)?;
        let side = std::fs::read(&sidecar).map_err(err)?;
        std::fs::remove_file(&path).map_err(err)?;
        std::fs::remove_file(&sidecar).map_err(err)?;
        seen.push((code, stdout, body, side));
    }
    ensure(seen[0] == seen[1], || {
        format!("{args:?} is not deterministic")
    })
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let inst = dir.path().join("inst.json");
    let inst_s = inst.to_str().unwrap();
    twice(
        dir.path(),
        &[
            "gen", "--n", "6", "--m", "60", "--R", "0.9", "--x0", "uniform", "--seed", "7",
        ],
        "g.json",
    )?;
    let (code, _) = run_cli(&[
        "gen", "--n", "6", "--m", "60", "--R", "0.9", "--seed", "7", "--out", inst_s,
    ])?;
    ensure(code == 0, || format!("gen exited with {code}"))?;
    twice(
        dir.path(),
        &["solve", "--instance", inst_s, "--seed", "3"],
        "s.json",
    )?;
    twice(
        dir.path(),
        &["oracle", "--instance", inst_s, "--mode", "disc"],
        "o.json",
    )?;
    twice(
        dir.path(),
        &[
            "sweep",
            "--n",
            "6",
            "--m",
            "120",
            "--r-factors",
            "0.5,1,4",
            "--trials",
            "6",
            "--methods",
            "constructive,exhaustive",
            "--k",
            "2",
            "--seed",
            "9",
        ],
        "w.csv",
    )?;
    twice(
        dir.path(),
        &[
            "audit",
            "--n",
            "32",
            "--m",
            "128",
            "--samples",
            "20",
            "--seed",
            "5",
        ],
        "a.csv",
    )?;
    Ok("gen, solve, oracle, sweep, audit byte-identical across reruns".into())
}

fn naive_disc(a: &GaussianMatrix) -> f64 {
    let n = a.cols();
    let mut best = f64::INFINITY;
    for bits in 0u32..1 << n {
        let s: Vec<f64> = (0..n)
            .map(|j| if bits >> j & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let v = a
            .row_iter()
            .map(|row| row.iter().zip(&s).map(|(x, y)| x * y).sum::<f64>().abs())
            .fold(0.0, f64::max);
        best = best.min(v);
    }
    best
}

fn oracle_self_consistency() -> Outcome {
    let limits = Limits::default();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let a = sample_gaussian_matrix(6, 6, 1.0, &mut RngStream::new(8008, seed)).map_err(err)?;
        let gray = disc_exact(&a, &limits).map_err(err)?.value;
        let naive = naive_disc(&a);
        let rel = (gray - naive).abs() / naive.max(f64::MIN_POSITIVE);
        ensure(rel <= 1e-12, || {
            format!("seed {seed}: gray {gray} vs naive {naive}")
        })?;
        let tripled = disc_exact(&a.scaled(3.0).map_err(err)?, &limits)
            .map_err(err)?
            .value;
        let rel3 = (tripled - 3.0 * gray).abs() / (3.0 * gray);
        ensure(rel3 <= 1e-12, || {
            format!(
                "seed {seed}: disc(3A) {tripled} vs 3 disc(A) {}",
                3.0 * gray
            )
        })?;
        worst = worst.max(rel).max(rel3);
    }
    Ok(format!("20/20 agree; largest relative gap {worst:.2e}"))
}

fn rounds_bound() -> Outcome {
    let (n, m) = (128, 512);
    let cfg = rounding_trials(n, m, 50, 9009);
    let limit = 7 + 1;
    let mut attempts = 0u64;
    let mut most = 0;
    for t in 0..50 {
        let (a, x0) = trial_instance(&cfg, t).map_err(err)?;
        let cert = round_ip(
            &a,
            &x0,
            &mut trial_stream(cfg.seed, t).split(2),
            &RoundIpConfig::default(),
        )
        .map_err(err)?;
        ensure(cert.rounds <= limit, || {
            format!("trial {t}: {} rounds", cert.rounds)
        })?;
        most = most.max(cert.rounds);
        attempts += u64::from(cert.attempts);
    }
    let mean = attempts as f64 / 50.0;
    let cap = 20.0 * (n as f64).log2();
    ensure(mean <= cap, || format!("mean attempts {mean} above {cap}"))?;
    Ok(format!(
        "max rounds {most} <= {limit}; mean attempts {mean:.2} <= {cap}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("overhead envelope (n=64, m=256)", overhead_envelope),
        ("edge-walk success rate (n=m=128)", walk_success_rate),
        ("oracle dominance (n=10, m=40)", oracle_dominance),
        ("phase-transition shape (n=8, m=8000)", phase_transition),
        ("infeasibility at 0.5 r0", infeasibility_regime),
        ("concentration audit (n=256, m=1024)", concentration_audit),
        ("CLI determinism", cli_determinism),
        ("exact-oracle self-consistency", oracle_self_consistency),
        ("rounds bound (n=128, m=512)", rounds_bound),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
