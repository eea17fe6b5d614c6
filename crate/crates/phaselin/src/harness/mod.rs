//! Monte-Carlo benchmark harness: seeded trial grids over (n, m/n, p_fail),
//! per-trial records, summaries, heatmaps, and the theory self-checks.
//!
//! Determinism contract: every trial's randomness derives from
//! hash(base_seed, n, m, p_fail index, trial index), independent of method,
//! initializer, worker count, and scheduling order. Running the same grid
//! with any number of workers produces byte-identical records CSV; to keep
//! that true, `run_grid` zeroes the wall-clock column (per-trial timing is
//! still returned by `run_trial` and reported by single solves).

mod heatmap;
mod theory;

pub use heatmap::{emit_heatmap, heatmap_svg};
pub use theory::{theory_checks, ConditionalSecondMoment, TheoryCheckReport, KAPPA_TARGET};

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::baselines::{taf_solve, TafConfig};
use crate::error::{Error, Result};
use crate::init::{init_big, init_median, init_noiseless, init_outlier};
use crate::numerics::{derive_seed, dist_to_signal, norm2, SeededRng};
use crate::proxlin::{prox_linear_solve, ProxLinearConfig};
use crate::sensing::{
    corrupt, gen_gaussian_ensemble, gen_hadamard_ensemble, measure, CorruptionKind,
    CorruptionSpec, GroundTruth, MeasurementEnsemble,
};
use crate::subsolver::ProjectorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ProxLinear,
    Taf,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ProxLinear => "proxlinear",
            Self::Taf => "taf",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proxlinear" => Ok(Self::ProxLinear),
            "taf" => Ok(Self::Taf),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected proxlinear or taf)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitKind {
    Noiseless,
    Outlier,
    Big,
    Median,
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Noiseless => "noiseless",
            Self::Outlier => "outlier",
            Self::Big => "big",
            Self::Median => "median",
        })
    }
}

impl FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noiseless" => Ok(Self::Noiseless),
            "outlier" => Ok(Self::Outlier),
            "big" => Ok(Self::Big),
            "median" => Ok(Self::Median),
            other => Err(Error::InvalidArgument(format!(
                "unknown init '{other}' (expected noiseless, outlier, big, or median)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SensingKind {
    Gaussian,
    Hadamard,
}

impl fmt::Display for SensingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Hadamard => "hadamard",
        })
    }
}

impl FromStr for SensingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "hadamard" => Ok(Self::Hadamard),
            other => Err(Error::InvalidArgument(format!(
                "unknown sensing '{other}' (expected gaussian or hadamard)"
            ))),
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Cauchy => f.write_str("cauchy"),
            Self::Constant(v) => write!(f, "constant:{v}"),
        }
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(Self::Zero);
        }
        if s == "cauchy" {
            return Ok(Self::Cauchy);
        }
        if let Some(v) = s.strip_prefix("constant:") {
            let v: f64 = v.parse().map_err(|_| {
                Error::InvalidArgument(format!("bad constant corruption value '{v}'"))
            })?;
            return Ok(Self::Constant(v));
        }
        Err(Error::InvalidArgument(format!(
            "unknown corruption '{s}' (expected zero, cauchy, or constant:<value>)"
        )))
    }
}

/// One point of the benchmark grid.
#[derive(Clone, Copy, Debug)]
pub struct TrialCell {
    pub n: usize,
    pub m: usize,
    pub p_fail: f64,
    pub method: Method,
    pub init: InitKind,
    pub corruption: CorruptionKind,
    pub sensing: SensingKind,
    /// Relative-error threshold declaring a trial successful.
    pub eps_acc: f64,
}

/// Everything recorded about one trial. `seed` is the derived per-trial data
/// seed, shared by every method/init combination at the same grid point so
/// they see the same instance.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub p_fail: f64,
    pub method: Method,
    pub init: InitKind,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub matvecs: usize,
    pub wall_ms: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct BenchGrid {
    pub dims: Vec<usize>,
    /// Oversampling ratios m/n; m = round(ratio·n). For stacked-Hadamard
    /// sensing each ratio must be a whole number of n-sized blocks.
    pub ratios: Vec<f64>,
    pub p_fails: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub inits: Vec<InitKind>,
    pub corruption: CorruptionKind,
    pub sensing: SensingKind,
    pub eps_acc: f64,
    pub base_seed: u64,
}

impl BenchGrid {
    /// Cells in canonical order (n, ratio, p_fail, method, init, trial) with
    /// their derived seeds.
    pub fn cells(&self) -> Vec<(TrialCell, u64)> {
        let mut out = Vec::new();
        for &n in &self.dims {
            for &ratio in &self.ratios {
                let m = (ratio * n as f64).round() as usize;
                for (p_idx, &p_fail) in self.p_fails.iter().enumerate() {
                    for &method in &self.methods {
                        for &init in &self.inits {
                            for trial in 0..self.trials {
                                let seed = derive_seed(
                                    self.base_seed,
                                    &[n as u64, m as u64, p_idx as u64, trial as u64],
                                );
                                out.push((
                                    TrialCell {
                                        n,
                                        m,
                                        p_fail,
                                        method,
                                        init,
                                        corruption: self.corruption,
                                        sensing: self.sensing,
                                        eps_acc: self.eps_acc,
                                    },
                                    seed,
                                ));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn failed(cell: &TrialCell, seed: u64, reason: String, start: Instant) -> TrialRecord {
    TrialRecord {
        n: cell.n,
        m: cell.m,
        p_fail: cell.p_fail,
        method: cell.method,
        init: cell.init,
        seed,
        success: false,
        rel_error: f64::NAN,
        outer_iters: 0,
        inner_iters: 0,
        matvecs: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
        reason,
    }
}

/// Runs one seeded trial: draw the instance, corrupt it, initialize, solve,
/// score. Problem generation consumes dedicated substreams of `seed`, so the
/// instance is identical for every method and initializer at this grid
/// point. Errors anywhere in the pipeline become failed records, never
/// panics.
pub fn run_trial(cell: &TrialCell, seed: u64) -> TrialRecord {
    let start = Instant::now();
    let root = SeededRng::new(seed);
    let mut ens_rng = root.substream(1);
    let mut sig_rng = root.substream(2);
    let mut cor_rng = root.substream(3);
    let mut init_rng = root.substream(4);

    let ensemble = match cell.sensing {
        SensingKind::Gaussian => gen_gaussian_ensemble(cell.m, cell.n, &mut ens_rng),
        SensingKind::Hadamard => {
            if cell.n == 0 || cell.m % cell.n != 0 {
                return failed(
                    cell,
                    seed,
                    format!(
                        "stacked sensing needs m to be a whole multiple of n, got {}x{}",
                        cell.m, cell.n
                    ),
                    start,
                );
            }
            match gen_hadamard_ensemble(cell.m / cell.n, cell.n, &mut ens_rng) {
                Ok(e) => e,
                Err(e) => return failed(cell, seed, e.to_string(), start),
            }
        }
    };

    let truth = GroundTruth::rademacher(cell.n, &mut sig_rng);
    let b_clean = match measure(&ensemble, &truth.x_star) {
        Ok(b) => b,
        Err(e) => return failed(cell, seed, e.to_string(), start),
    };
    let obs = corrupt(
        &b_clean,
        CorruptionSpec::new(cell.p_fail, cell.corruption),
        &mut cor_rng,
    );

    let est = match cell.init {
        InitKind::Noiseless => init_noiseless(&ensemble, &obs.b, &mut init_rng),
        InitKind::Outlier => init_outlier(&ensemble, &obs, &mut init_rng),
        InitKind::Big => init_big(&ensemble, &obs.b, &mut init_rng),
        InitKind::Median => init_median(&ensemble, &obs.b, &mut init_rng),
    };
    let est = match est {
        Ok(e) => e,
        Err(e) => return failed(cell, seed, e.to_string(), start),
    };

    let mut record = failed(cell, seed, String::new(), start);
    let x_hat = match cell.method {
        Method::ProxLinear => {
            let projector = match ensemble {
                MeasurementEnsemble::Dense { .. } => ProjectorKind::Dense,
                MeasurementEnsemble::HadamardStack { .. } => ProjectorKind::MatrixFree,
            };
            let report = prox_linear_solve(
                &ensemble,
                &obs,
                &est.x0,
                &ProxLinearConfig::default(),
                projector,
            );
            record.outer_iters = report.outer_iters;
            record.inner_iters = report.inner_iters_total();
            record.matvecs = report.matvecs;
            record.reason = report.termination.to_string();
            report.final_x
        }
        Method::Taf => {
            // Amplitude flow needs b >= 0; heavy-tailed corruption can drive
            // entries negative, so clamp and note how many.
            let clamped_count = obs.b.iter().filter(|&&v| v < 0.0).count();
            let b_clamped: Vec<f64> = obs.b.iter().map(|&v| v.max(0.0)).collect();
            let cfg = TafConfig::default();
            match taf_solve(&ensemble, &b_clamped, &est.x0, &cfg) {
                Ok(x) => {
                    record.outer_iters = cfg.k;
                    record.inner_iters = 0;
                    record.matvecs = 2 * cfg.k;
                    record.reason = if clamped_count == 0 {
                        "completed".into()
                    } else {
                        format!("completed; clamped {clamped_count} negative measurements")
                    };
                    x
                }
                Err(e) => {
                    record.reason = e.to_string();
                    record.wall_ms = start.elapsed().as_secs_f64() * 1000.0;
                    return record;
                }
            }
        }
    };

    let denom = norm2(&truth.x_star);
    let rel = dist_to_signal(&x_hat, &truth.x_star)
        .map(|d| d / denom)
        .unwrap_or(f64::NAN);
    record.rel_error = rel;
    record.success = rel <= cell.eps_acc;
    record.wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    record
}

/// Runs every cell of the grid. `workers > 1` fans trials out over that many
/// threads pulling from a shared queue; results land in canonical cell order
/// regardless of scheduling, and the wall-clock column is zeroed so the
/// records are byte-stable across worker counts and machines.
pub fn run_grid(grid: &BenchGrid, workers: usize) -> Vec<TrialRecord> {
    let cells = grid.cells();
    let mut records: Vec<TrialRecord> = if workers <= 1 {
        cells.iter().map(|(cell, seed)| run_trial(cell, *seed)).collect()
    } else {
        let slots: Mutex<Vec<Option<TrialRecord>>> = Mutex::new(vec![None; cells.len()]);
        let cursor = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers.min(cells.len()).max(1) {
                scope.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    let (cell, seed) = &cells[i];
                    let rec = run_trial(cell, *seed);
                    slots.lock().expect("worker panicked")[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .expect("worker panicked")
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect()
    };
    for r in &mut records {
        r.wall_ms = 0.0;
    }
    records
}

fn sanitize_csv_field(s: &str) -> String {
    s.replace(',', ";").replace('\n', " ")
}

pub const RECORDS_HEADER: &str =
    "n,m,p_fail,method,init,seed,success,rel_error,outer_iters,inner_iters,matvecs,wall_ms,reason";

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.m,
            r.p_fail,
            r.method,
            r.init,
            r.seed,
            r.success,
            r.rel_error,
            r.outer_iters,
            r.inner_iters,
            r.matvecs,
            r.wall_ms,
            sanitize_csv_field(&r.reason)
        ));
    }
    out
}

pub fn write_records_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    std::fs::write(path, records_to_csv(records))?;
    Ok(())
}

/// Aggregate of one grid point for one method/init combination.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub n: usize,
    pub m: usize,
    pub ratio: f64,
    pub p_fail: f64,
    pub method: Method,
    pub init: InitKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean outer iterations over successful trials (NaN when none).
    pub mean_outer_iters_success: f64,
    pub max_outer_iters_success: usize,
    pub mean_matvecs: f64,
}

/// Collapses records into per-cell rows, preserving first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut outer_sums: Vec<f64> = Vec::new();
    let mut matvec_sums: Vec<f64> = Vec::new();
    for r in records {
        let key = |row: &SummaryRow| {
            row.n == r.n
                && row.m == r.m
                && row.p_fail.to_bits() == r.p_fail.to_bits()
                && row.method == r.method
                && row.init == r.init
        };
        let idx = match rows.iter().position(key) {
            Some(i) => i,
            None => {
                rows.push(SummaryRow {
                    n: r.n,
                    m: r.m,
                    ratio: r.m as f64 / r.n as f64,
                    p_fail: r.p_fail,
                    method: r.method,
                    init: r.init,
                    trials: 0,
                    successes: 0,
                    success_rate: 0.0,
                    mean_outer_iters_success: f64::NAN,
                    max_outer_iters_success: 0,
                    mean_matvecs: 0.0,
                });
                outer_sums.push(0.0);
                matvec_sums.push(0.0);
                rows.len() - 1
            }
        };
        let row = &mut rows[idx];
        row.trials += 1;
        matvec_sums[idx] += r.matvecs as f64;
        if r.success {
            row.successes += 1;
            outer_sums[idx] += r.outer_iters as f64;
            row.max_outer_iters_success = row.max_outer_iters_success.max(r.outer_iters);
        }
    }
    for (idx, row) in rows.iter_mut().enumerate() {
        row.success_rate = row.successes as f64 / row.trials as f64;
        row.mean_matvecs = matvec_sums[idx] / row.trials as f64;
        if row.successes > 0 {
            row.mean_outer_iters_success = outer_sums[idx] / row.successes as f64;
        }
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: &str =
    "n,ratio,p_fail,method,init,trials,success_rate,mean_outer_iters_success,mean_matvecs";

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.ratio,
            r.p_fail,
            r.method,
            r.init,
            r.trials,
            r.success_rate,
            r.mean_outer_iters_success,
            r.mean_matvecs
        ));
    }
    out
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    std::fs::write(path, summary_to_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, m: usize, p: f64, success: bool, outer: usize) -> TrialRecord {
        TrialRecord {
            n,
            m,
            p_fail: p,
            method: Method::ProxLinear,
            init: InitKind::Big,
            seed: 1,
            success,
            rel_error: if success { 1e-9 } else { 0.5 },
            outer_iters: outer,
            inner_iters: 100,
            matvecs: 200,
            wall_ms: 0.0,
            reason: "converged".into(),
        }
    }

    #[test]
    fn enum_strings_round_trip() {
        for m in [Method::ProxLinear, Method::Taf] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        for i in [
            InitKind::Noiseless,
            InitKind::Outlier,
            InitKind::Big,
            InitKind::Median,
        ] {
            assert_eq!(i.to_string().parse::<InitKind>().unwrap(), i);
        }
        for s in [SensingKind::Gaussian, SensingKind::Hadamard] {
            assert_eq!(s.to_string().parse::<SensingKind>().unwrap(), s);
        }
        for c in [
            CorruptionKind::Zero,
            CorruptionKind::Cauchy,
            CorruptionKind::Constant(2.5),
        ] {
            let back: CorruptionKind = c.to_string().parse().unwrap();
            assert_eq!(format!("{back:?}"), format!("{c:?}"));
        }
    }

    #[test]
    fn summarize_counts_and_means() {
        let records = vec![
            record(10, 20, 0.0, true, 4),
            record(10, 20, 0.0, true, 6),
            record(10, 20, 0.0, false, 50),
            record(10, 30, 0.0, true, 3),
        ];
        let rows = summarize(&records).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].trials, 3);
        assert!((rows[0].success_rate - 2.0 / 3.0).abs() < 1e-15);
        assert!((rows[0].mean_outer_iters_success - 5.0).abs() < 1e-15);
        assert_eq!(rows[0].max_outer_iters_success, 6);
        assert!((rows[0].mean_matvecs - 200.0).abs() < 1e-15);
        assert!((rows[1].ratio - 3.0).abs() < 1e-15);
    }

    #[test]
    fn summarize_rejects_empty() {
        assert!(matches!(summarize(&[]), Err(Error::NoRecords)));
    }

    #[test]
    fn csv_reason_never_breaks_columns() {
        let mut r = record(4, 8, 0.1, false, 0);
        r.reason = "inner solver exceeded 10 iterations (primal 1e-2, dual 3e-4)".into();
        let csv = records_to_csv(&[r]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), RECORDS_HEADER.split(',').count());
    }

    #[test]
    fn grid_cells_share_seeds_across_methods() {
        let grid = BenchGrid {
            dims: vec![8],
            ratios: vec![2.0],
            p_fails: vec![0.0, 0.1],
            trials: 2,
            methods: vec![Method::ProxLinear, Method::Taf],
            inits: vec![InitKind::Big],
            corruption: CorruptionKind::Zero,
            sensing: SensingKind::Gaussian,
            eps_acc: 1e-5,
            base_seed: 7,
        };
        let cells = grid.cells();
        assert_eq!(cells.len(), 8);
        // Same (n, m, p_fail, trial) differing only in method: same seed.
        assert_eq!(cells[0].1, cells[2].1);
        assert_ne!(cells[0].1, cells[1].1);
        // Different p_fail index: different seed even though m matches.
        assert_ne!(cells[0].1, cells[4].1);
    }

    #[test]
    fn tiny_trial_runs_end_to_end() {
        let cell = TrialCell {
            n: 8,
            m: 48,
            p_fail: 0.0,
            method: Method::ProxLinear,
            init: InitKind::Big,
            corruption: CorruptionKind::Zero,
            sensing: SensingKind::Gaussian,
            eps_acc: 1e-5,
        };
        let rec = run_trial(&cell, 123);
        assert!(rec.rel_error.is_finite());
        assert!(rec.matvecs > 0);
        assert!(!rec.reason.is_empty());
    }

    #[test]
    fn bad_hadamard_dims_become_failed_records() {
        let cell = TrialCell {
            n: 12,
            m: 24,
            p_fail: 0.0,
            method: Method::ProxLinear,
            init: InitKind::Big,
            corruption: CorruptionKind::Zero,
            sensing: SensingKind::Hadamard,
            eps_acc: 1e-5,
        };
        let rec = run_trial(&cell, 5);
        assert!(!rec.success);
        assert!(rec.rel_error.is_nan());
        assert!(rec.reason.contains("power of two"));
    }
}
