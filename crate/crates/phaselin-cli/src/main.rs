//! Command-line driver: generate problem bundles, solve single instances,
//! run benchmark grids, and verify the method's statistical assumptions.

mod bundle;
mod cfgfile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use phaselin::baselines::{taf_solve, TafConfig};
use phaselin::harness::{
    emit_heatmap, records_to_csv, run_grid, summarize, theory_checks, write_records_csv,
    write_summary_csv, BenchGrid, InitKind, Method, SensingKind, TrialRecord,
};
use phaselin::init::{init_big, init_median, init_noiseless, init_outlier};
use phaselin::numerics::{dist_to_signal, norm2, SeededRng};
use phaselin::proxlin::{prox_linear_solve, ProxLinearConfig};
use phaselin::sensing::{
    corrupt, gen_gaussian_ensemble, gen_hadamard_ensemble, ingest_signal, measure,
    CorruptionKind, CorruptionSpec, GroundTruth, MeasurementEnsemble, Observations,
    SignalFormat,
};
use phaselin::subsolver::ProjectorKind;

use bundle::{read_bundle, write_bundle, Bundle};
use cfgfile::FileConfig;

#[derive(Parser)]
#[command(
    name = "phaselin",
    version,
    about = "Robust phase retrieval from magnitude-squared measurements"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded problem bundle (signal, measurements, ensemble)
    Gen(GenArgs),
    /// Solve one instance and write the recovered signal plus a report row
    Solve(SolveArgs),
    /// Run a seeded Monte-Carlo benchmark grid
    Bench(BenchArgs),
    /// Verify the statistical constants and bounds the method relies on
    Check(CheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Config file with key=value lines; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the bundle
    #[arg(long)]
    out: Option<PathBuf>,
    /// Signal dimension
    #[arg(long)]
    n: Option<usize>,
    /// Measurement count (alternative to --ratio)
    #[arg(long)]
    m: Option<usize>,
    /// Oversampling ratio m/n (alternative to --m)
    #[arg(long)]
    ratio: Option<f64>,
    /// gaussian or hadamard
    #[arg(long)]
    sensing: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of measurements to corrupt, in [0, 0.5)
    #[arg(long)]
    pfail: Option<f64>,
    /// zero, cauchy, or constant:<value>
    #[arg(long)]
    corruption: Option<String>,
    /// Signal file (CSV one value per line, or binary P5 PGM) instead of a
    /// random sign vector
    #[arg(long)]
    signal: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem-bundle directory written by gen
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Where to write recovered.csv and report.csv (defaults to the bundle)
    #[arg(long)]
    out: Option<PathBuf>,
    /// proxlinear or taf
    #[arg(long)]
    method: Option<String>,
    /// noiseless, outlier, big, or median
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inline generation (used when no --bundle is given)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    sensing: Option<String>,
    #[arg(long)]
    pfail: Option<f64>,
    #[arg(long)]
    corruption: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal dimensions, comma separated
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Oversampling ratios m/n, comma separated
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Corruption fractions, comma separated
    #[arg(long, value_delimiter = ',')]
    pfails: Option<Vec<f64>>,
    /// Trials per grid cell
    #[arg(long)]
    trials: Option<usize>,
    /// Methods to compare, comma separated (proxlinear, taf)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Initializers, comma separated (noiseless, outlier, big, median)
    #[arg(long, value_delimiter = ',')]
    inits: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    corruption: Option<String>,
    #[arg(long)]
    sensing: Option<String>,
    /// Relative-error success threshold
    #[arg(long)]
    eps_acc: Option<f64>,
    /// Output directory for records.csv and summary.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one success-rate SVG per (n, method)
    #[arg(long)]
    heatmap: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte-Carlo sample budget (accepts 250000 or 2.5e5), at least 10^4
    #[arg(long, value_parser = parse_count)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 => {
            Ok(v as usize)
        }
        _ => Err(format!("not a whole count: '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<FileConfig, String> {
    match path {
        Some(p) => FileConfig::load(p, allowed),
        None => Ok(FileConfig::empty()),
    }
}

/// m from --m or --ratio, rejecting ambiguity.
fn resolve_m(n: usize, m: Option<usize>, ratio: Option<f64>) -> Result<usize, String> {
    match (m, ratio) {
        (Some(_), Some(_)) => Err("give --m or --ratio, not both".into()),
        (Some(m), None) => Ok(m),
        (None, Some(r)) => {
            if !(r.is_finite() && r > 0.0) {
                return Err(format!("ratio must be positive, got {r}"));
            }
            Ok((r * n as f64).round() as usize)
        }
        (None, None) => Err("missing --m or --ratio".into()),
    }
}

struct Problem {
    ensemble: MeasurementEnsemble,
    truth: GroundTruth,
    obs: Observations,
}

/// Draws (A, x*, b) exactly the way the benchmark harness does, so a gen'd
/// bundle reproduces grid trials seed for seed.
fn generate_problem(
    n: usize,
    m: usize,
    sensing: SensingKind,
    seed: u64,
    p_fail: f64,
    corruption: CorruptionKind,
    signal_file: Option<&Path>,
) -> Result<Problem, String> {
    if !(0.0..0.5).contains(&p_fail) {
        return Err(format!("pfail must be in [0, 0.5), got {p_fail}"));
    }
    let root = SeededRng::new(seed);
    let mut ens_rng = root.substream(1);
    let mut sig_rng = root.substream(2);
    let mut cor_rng = root.substream(3);

    let ensemble = match sensing {
        SensingKind::Gaussian => gen_gaussian_ensemble(m, n, &mut ens_rng),
        SensingKind::Hadamard => {
            if !n.is_power_of_two() {
                return Err("n must be a power of two".into());
            }
            if m == 0 || m % n != 0 {
                return Err(format!(
                    "m must be a whole multiple of n for stacked sensing, got m={m}, n={n}"
                ));
            }
            gen_hadamard_ensemble(m / n, n, &mut ens_rng).map_err(|e| e.to_string())?
        }
    };

    let truth = match signal_file {
        Some(path) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("pgm") => SignalFormat::Pgm,
                _ => SignalFormat::Csv,
            };
            ingest_signal(path, format, Some(n)).map_err(|e| e.to_string())?
        }
        None => GroundTruth::rademacher(n, &mut sig_rng),
    };

    let b = measure(&ensemble, &truth.x_star).map_err(|e| e.to_string())?;
    let obs = corrupt(&b, CorruptionSpec::new(p_fail, corruption), &mut cor_rng);
    Ok(Problem {
        ensemble,
        truth,
        obs,
    })
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, String> {
    const KEYS: &[&str] = &[
        "out",
        "n",
        "m",
        "ratio",
        "sensing",
        "seed",
        "pfail",
        "corruption",
        "signal",
    ];
    let cfg = load_config(&args.config, KEYS)?;
    let out: PathBuf = args
        .out
        .or(cfg.get("out")?)
        .ok_or("missing --out (bundle directory)")?;
    let signal_file: Option<PathBuf> = args.signal.or(cfg.get("signal")?);
    let sensing: SensingKind = args
        .sensing
        .or(cfg.get("sensing")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(SensingKind::Gaussian);

    let n = match (args.n.or(cfg.get("n")?), &signal_file) {
        (Some(n), _) => n,
        (None, Some(path)) => {
            // Infer the dimension from the file; hadamard needs an explicit
            // power-of-two --n.
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("pgm") => SignalFormat::Pgm,
                _ => SignalFormat::Csv,
            };
            ingest_signal(path, format, None)
                .map_err(|e| e.to_string())?
                .x_star
                .len()
        }
        (None, None) => return Err("missing --n".into()),
    };
    if n == 0 {
        return Err("n must be positive".into());
    }
    let m = resolve_m(n, args.m.or(cfg.get("m")?), args.ratio.or(cfg.get("ratio")?))?;
    let seed: u64 = args.seed.or(cfg.get("seed")?).unwrap_or(0);
    let p_fail: f64 = args.pfail.or(cfg.get("pfail")?).unwrap_or(0.0);
    let corruption: CorruptionKind = args
        .corruption
        .or(cfg.get("corruption")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(CorruptionKind::Zero);

    let problem = generate_problem(
        n,
        m,
        sensing,
        seed,
        p_fail,
        corruption,
        signal_file.as_deref(),
    )?;
    write_bundle(
        &out,
        &problem.ensemble,
        &problem.obs.b,
        &problem.obs.outlier_mask,
        &problem.truth.x_star,
    )?;
    println!(
        "wrote bundle to {} (n={n}, m={m}, sensing={sensing}, seed={seed}, pfail={p_fail})",
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    const KEYS: &[&str] = &[
        "bundle",
        "out",
        "method",
        "init",
        "seed",
        "n",
        "m",
        "ratio",
        "sensing",
        "pfail",
        "corruption",
    ];
    let cfg = load_config(&args.config, KEYS)?;
    let method: Method = args
        .method
        .or(cfg.get("method")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(Method::ProxLinear);
    let init: InitKind = args
        .init
        .or(cfg.get("init")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(InitKind::Outlier);
    let seed: u64 = args.seed.or(cfg.get("seed")?).unwrap_or(0);

    let bundle_dir: Option<PathBuf> = args.bundle.or(cfg.get("bundle")?);
    let (bundle, out) = match &bundle_dir {
        Some(dir) => {
            let out = args.out.or(cfg.get("out")?).unwrap_or_else(|| dir.clone());
            (read_bundle(dir)?, out)
        }
        None => {
            let n = args.n.or(cfg.get("n")?).ok_or("missing --bundle or --n")?;
            let m = resolve_m(n, args.m.or(cfg.get("m")?), args.ratio.or(cfg.get("ratio")?))?;
            let sensing: SensingKind = args
                .sensing
                .or(cfg.get("sensing")?)
                .map(|s: String| s.parse())
                .transpose()
                .map_err(|e: phaselin::Error| e.to_string())?
                .unwrap_or(SensingKind::Gaussian);
            let p_fail: f64 = args.pfail.or(cfg.get("pfail")?).unwrap_or(0.0);
            let corruption: CorruptionKind = args
                .corruption
                .or(cfg.get("corruption")?)
                .map(|s: String| s.parse())
                .transpose()
                .map_err(|e: phaselin::Error| e.to_string())?
                .unwrap_or(CorruptionKind::Zero);
            let problem = generate_problem(n, m, sensing, seed, p_fail, corruption, None)?;
            let out = args
                .out
                .or(cfg.get("out")?)
                .ok_or("missing --out (needed without --bundle)")?;
            (
                Bundle {
                    ensemble: problem.ensemble,
                    b: problem.obs.b,
                    mask: problem.obs.outlier_mask,
                    signal: Some(problem.truth.x_star),
                },
                out,
            )
        }
    };
    std::fs::create_dir_all(&out).map_err(|e| format!("creating {}: {e}", out.display()))?;

    let (n, m) = (bundle.ensemble.n(), bundle.ensemble.m());
    let p_fail = bundle.mask.iter().filter(|&&f| f).count() as f64 / m as f64;
    let start = Instant::now();
    let mut record = TrialRecord {
        n,
        m,
        p_fail,
        method,
        init,
        seed,
        success: false,
        rel_error: f64::NAN,
        outer_iters: 0,
        inner_iters: 0,
        matvecs: 0,
        wall_ms: 0.0,
        reason: String::new(),
    };

    // Observations carry the mask as metadata; the solver itself never
    // looks at it.
    let obs = Observations {
        b: bundle.b.clone(),
        outlier_mask: bundle.mask.clone(),
        spec: CorruptionSpec::new(p_fail.min(0.499), CorruptionKind::Zero),
        truth: None,
    };
    let mut init_rng = SeededRng::new(seed).substream(4);
    let est = match init {
        InitKind::Noiseless => init_noiseless(&bundle.ensemble, &obs.b, &mut init_rng),
        InitKind::Outlier => init_outlier(&bundle.ensemble, &obs, &mut init_rng),
        InitKind::Big => init_big(&bundle.ensemble, &obs.b, &mut init_rng),
        InitKind::Median => init_median(&bundle.ensemble, &obs.b, &mut init_rng),
    };

    let x_hat = match est {
        Err(e) => {
            record.reason = e.to_string();
            None
        }
        Ok(est) => match method {
            Method::ProxLinear => {
                let projector = match bundle.ensemble {
                    MeasurementEnsemble::Dense { .. } => ProjectorKind::Dense,
                    MeasurementEnsemble::HadamardStack { .. } => ProjectorKind::MatrixFree,
                };
                let report = prox_linear_solve(
                    &bundle.ensemble,
                    &obs,
                    &est.x0,
                    &ProxLinearConfig::default(),
                    projector,
                );
                record.outer_iters = report.outer_iters;
                record.inner_iters = report.inner_iters_total();
                record.matvecs = report.matvecs;
                record.reason = report.termination.to_string();
                Some(report.final_x)
            }
            Method::Taf => {
                let clamped = obs.b.iter().filter(|&&v| v < 0.0).count();
                let b_clamped: Vec<f64> = obs.b.iter().map(|&v| v.max(0.0)).collect();
                let cfg = TafConfig::default();
                match taf_solve(&bundle.ensemble, &b_clamped, &est.x0, &cfg) {
                    Ok(x) => {
                        record.outer_iters = cfg.k;
                        record.matvecs = 2 * cfg.k;
                        record.reason = if clamped == 0 {
                            "completed".into()
                        } else {
                            format!("completed; clamped {clamped} negative measurements")
                        };
                        Some(x)
                    }
                    Err(e) => {
                        record.reason = e.to_string();
                        None
                    }
                }
            }
        },
    };
    record.wall_ms = start.elapsed().as_secs_f64() * 1000.0;

    if let Some(x_hat) = &x_hat {
        std::fs::write(
            out.join("recovered.csv"),
            x_hat
                .iter()
                .map(|v| format!("{v}\n"))
                .collect::<String>(),
        )
        .map_err(|e| format!("writing recovered.csv: {e}"))?;
        match &bundle.signal {
            Some(x_star) => {
                let rel = dist_to_signal(x_hat, x_star).map_err(|e| e.to_string())?
                    / norm2(x_star);
                record.rel_error = rel;
                record.success = rel <= 1e-5;
                println!("rel_error = {rel:.6e}");
            }
            None => println!("no ground truth in bundle; rel_error not computed"),
        }
        println!(
            "{}: {} ({} outer, {} matvecs, {:.1} ms)",
            method, record.reason, record.outer_iters, record.matvecs, record.wall_ms
        );
    } else {
        println!("solve produced no iterate: {}", record.reason);
    }

    std::fs::write(out.join("report.csv"), records_to_csv(&[record]))
        .map_err(|e| format!("writing report.csv: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, String> {
    const KEYS: &[&str] = &[
        "dims",
        "ratios",
        "pfails",
        "trials",
        "methods",
        "inits",
        "seed",
        "workers",
        "corruption",
        "sensing",
        "eps_acc",
        "out",
        "heatmap",
    ];
    let cfg = load_config(&args.config, KEYS)?;
    let dims: Vec<usize> = args
        .dims
        .or(cfg.get_list("dims")?)
        .ok_or("missing --dims")?;
    let ratios: Vec<f64> = args
        .ratios
        .or(cfg.get_list("ratios")?)
        .ok_or("missing --ratios")?;
    let p_fails: Vec<f64> = args
        .pfails
        .or(cfg.get_list("pfails")?)
        .unwrap_or_else(|| vec![0.0]);
    let trials: usize = args.trials.or(cfg.get("trials")?).unwrap_or(10);
    let methods: Vec<Method> = args
        .methods
        .or(cfg.get_list("methods")?)
        .unwrap_or_else(|| vec!["proxlinear".into()])
        .iter()
        .map(|s| s.parse().map_err(|e: phaselin::Error| e.to_string()))
        .collect::<Result<_, _>>()?;
    let inits: Vec<InitKind> = args
        .inits
        .or(cfg.get_list("inits")?)
        .unwrap_or_else(|| vec!["outlier".into()])
        .iter()
        .map(|s| s.parse().map_err(|e: phaselin::Error| e.to_string()))
        .collect::<Result<_, _>>()?;
    let corruption: CorruptionKind = args
        .corruption
        .or(cfg.get("corruption")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(CorruptionKind::Zero);
    let sensing: SensingKind = args
        .sensing
        .or(cfg.get("sensing")?)
        .map(|s: String| s.parse())
        .transpose()
        .map_err(|e: phaselin::Error| e.to_string())?
        .unwrap_or(SensingKind::Gaussian);
    let eps_acc: f64 = args.eps_acc.or(cfg.get("eps_acc")?).unwrap_or(1e-5);
    let base_seed: u64 = args.seed.or(cfg.get("seed")?).unwrap_or(0);
    let workers: usize = args.workers.or(cfg.get("workers")?).unwrap_or(1);
    let heatmap = args.heatmap || cfg.get::<bool>("heatmap")?.unwrap_or(false);
    let out: PathBuf = args
        .out
        .or(cfg.get("out")?)
        .unwrap_or_else(|| PathBuf::from("."));

    if dims.is_empty() || ratios.is_empty() || p_fails.is_empty() {
        return Err("grid needs at least one dim, ratio, and pfail".into());
    }
    if methods.is_empty() || inits.is_empty() || trials == 0 {
        return Err("grid needs at least one method, one init, and one trial".into());
    }
    for &p in &p_fails {
        if !(0.0..0.5).contains(&p) {
            return Err(format!("pfail must be in [0, 0.5), got {p}"));
        }
    }

    let grid = BenchGrid {
        dims: dims.clone(),
        ratios,
        p_fails,
        trials,
        methods: methods.clone(),
        inits,
        corruption,
        sensing,
        eps_acc,
        base_seed,
    };
    std::fs::create_dir_all(&out).map_err(|e| format!("creating {}: {e}", out.display()))?;
    let records = run_grid(&grid, workers);
    write_records_csv(&records, &out.join("records.csv")).map_err(|e| e.to_string())?;
    let summary = summarize(&records).map_err(|e| e.to_string())?;
    write_summary_csv(&summary, &out.join("summary.csv")).map_err(|e| e.to_string())?;
    if heatmap {
        for &n in &dims {
            for &method in &methods {
                let path = out.join(format!("heatmap_n{n}_{method}.svg"));
                emit_heatmap(&records, n, method, &path).map_err(|e| e.to_string())?;
            }
        }
    }

    let successes = records.iter().filter(|r| r.success).count();
    println!(
        "wrote {} records to {} ({} successful trials)",
        records.len(),
        out.display(),
        successes
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode, String> {
    const KEYS: &[&str] = &["samples", "seed"];
    let cfg = load_config(&args.config, KEYS)?;
    let samples = match args.samples {
        Some(s) => s,
        None => match cfg.get::<String>("samples")? {
            Some(raw) => parse_count(&raw).map_err(|e| format!("config key 'samples': {e}"))?,
            None => 1_000_000,
        },
    };
    if samples < 10_000 {
        return Err(format!("need at least 10000 samples, got {samples}"));
    }
    let seed: u64 = args.seed.or(cfg.get("seed")?).unwrap_or(0);

    let mut rng = SeededRng::new(seed);
    let report = theory_checks(samples, &mut rng);
    for line in report.lines() {
        println!("{line}");
    }
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        println!("one or more checks failed");
        Ok(ExitCode::from(1))
    }
}
