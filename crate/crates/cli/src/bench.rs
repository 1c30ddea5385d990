//! Timing sweeps over training set sizes.

use std::fs::OpenOptions;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{BenchMeasure, BenchVariant, RunConfig};
use crate::runner::{Model, Workload};

/// One benchmark cell. `error` is empty on success.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub measure: String,
    pub variant: String,
    pub n: usize,
    pub seed: u64,
    pub train_seconds: f64,
    pub mean_predict_seconds: f64,
    pub predictions_completed: usize,
    pub predictions_requested: usize,
    pub timed_out: bool,
    pub error: String,
}

impl BenchRecord {
    fn new(measure: BenchMeasure, variant: BenchVariant, n: usize, seed: u64, requested: usize) -> Self {
        Self {
            measure: measure.to_string(),
            variant: variant.to_string(),
            n,
            seed,
            train_seconds: 0.0,
            mean_predict_seconds: 0.0,
            predictions_completed: 0,
            predictions_requested: requested,
            timed_out: false,
            error: String::new(),
        }
    }
}

/// Runs one cell: generate, train (timed), then predict test points until
/// done or until the prediction time exceeds the timeout.
pub fn run_cell(cfg: &RunConfig, measure: BenchMeasure, variant: BenchVariant, n: usize, seed: u64) -> BenchRecord {
    let mut record = BenchRecord::new(measure, variant, n, seed, cfg.test_points);
    if let Err(e) = time_cell(cfg, measure, variant, n, seed, &mut record) {
        record.error = format!("{e:#}");
    }
    record
}

fn time_cell(
    cfg: &RunConfig,
    measure: BenchMeasure,
    variant: BenchVariant,
    n: usize,
    seed: u64,
    record: &mut BenchRecord,
) -> Result<()> {
    let work = Workload::generate(cfg, measure, n, cfg.test_points, seed)?;
    let start = Instant::now();
    let model = Model::fit(cfg, measure, variant, &work, seed)?;
    record.train_seconds = start.elapsed().as_secs_f64();
    let mut spent = 0.0;
    for i in 0..work.test_len() {
        let t = Instant::now();
        black_box(model.predict(black_box(work.test_object(i)), cfg.epsilon, cfg.parallel)?);
        spent += t.elapsed().as_secs_f64();
        record.predictions_completed += 1;
        record.mean_predict_seconds = spent / record.predictions_completed as f64;
        if spent > cfg.timeout_secs && record.predictions_completed < record.predictions_requested {
            record.timed_out = true;
            break;
        }
    }
    Ok(())
}

/// Runs `f` on a single worker thread unless parallel prediction is enabled,
/// so that internal parallelism does not leak into timings.
pub fn with_timing_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    if cfg.parallel {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    Ok(pool.install(f))
}

/// Every (measure, variant, n, seed) cell of the sweep, in order. Once a
/// (measure, variant) pair times out at some `n`, larger `n` are recorded as
/// skipped timeouts without running.
pub fn run_sweep(cfg: &RunConfig, mut sink: impl FnMut(&BenchRecord) -> Result<()>) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &measure in &cfg.measures {
        for &variant in &cfg.variants {
            let mut exhausted = false;
            for &n in &cfg.grid {
                for &seed in &cfg.seeds {
                    let record = if exhausted {
                        BenchRecord {
                            timed_out: true,
                            error: "skipped after timeout at smaller n".into(),
                            ..BenchRecord::new(measure, variant, n, seed, cfg.test_points)
                        }
                    } else {
                        with_timing_pool(cfg, || run_cell(cfg, measure, variant, n, seed))?
                    };
                    exhausted |= record.timed_out;
                    sink(&record)?;
                    out.push(record);
                }
            }
        }
    }
    Ok(out)
}

/// Appends records, writing the header only when the file is new or empty.
pub fn append_records(path: &Path, records: &[BenchRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = OpenOptions::new().create(true).append(true).open(path).with_context(|| path.display().to_string())?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| path.display().to_string())?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of mean prediction time over completed, error-free cells with
/// `lo ≤ n ≤ hi`, averaging seeds per `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub measure: String,
    pub variant: String,
    pub points: usize,
    pub slope: f64,
}

pub fn prediction_slopes(records: &[BenchRecord], lo: usize, hi: usize) -> Vec<SlopeRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.measure.clone(), r.variant.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .filter_map(|(measure, variant)| {
            let mut by_n: Vec<(usize, Vec<f64>)> = Vec::new();
            for r in records.iter().filter(|r| {
                r.measure == measure
                    && r.variant == variant
                    && r.error.is_empty()
                    && r.predictions_completed > 0
                    && (lo..=hi).contains(&r.n)
            }) {
                match by_n.iter_mut().find(|(n, _)| *n == r.n) {
                    Some((_, v)) => v.push(r.mean_predict_seconds),
                    None => by_n.push((r.n, vec![r.mean_predict_seconds])),
                }
            }
            if by_n.len() < 2 {
                return None;
            }
            let points: Vec<(f64, f64)> =
                by_n.iter().map(|(n, v)| (*n as f64, v.iter().sum::<f64>() / v.len() as f64)).collect();
            Some(SlopeRow { measure, variant, points: points.len(), slope: loglog_slope(&points) })
        })
        .collect()
}
