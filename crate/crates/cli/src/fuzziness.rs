//! Fuzziness of full CP against ICP with the same measure.

use anyhow::Result;
use fullcp::icp::icp_calibrate;
use fullcp::{build_scorer, classify, MeasureKind, ScorerConfig, Variant};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BenchMeasure, RunConfig};
use crate::runner::Workload;
use crate::welch::{welch_one_sided, WelchResult};

/// Null hypothesis rejection threshold.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzinessReport {
    pub measure: String,
    pub n: usize,
    pub test_points: usize,
    pub classes: usize,
    pub seed: u64,
    pub cp_mean: f64,
    pub cp_sd: f64,
    pub icp_mean: f64,
    pub icp_sd: f64,
    /// `a` is CP, `b` is ICP; the null is that ICP is not fuzzier.
    pub welch: WelchResult,
    pub reject_null: bool,
    pub cp_not_fuzzier: bool,
}

pub fn compare(cfg: &RunConfig, measure: MeasureKind, seed: u64) -> Result<FuzzinessReport> {
    let work = Workload::generate(cfg, BenchMeasure::Classification(measure), cfg.n, cfg.test_points, seed)?;
    let Workload::Classification { train, test } = &work else { unreachable!("classification workload") };
    let scorer_cfg = ScorerConfig { measure, seed, ..cfg.scorer };
    let cp = build_scorer(&scorer_cfg, Variant::Optimized, train.clone())?;
    let icp = icp_calibrate(train, cfg.icp_split(train.len()), &scorer_cfg)?;
    let (cp_f, icp_f): (Vec<f64>, Vec<f64>) = (0..test.len())
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let x = test.object(i);
            Ok((classify(cp.as_ref(), x)?.fuzziness(), icp.classify(x)?.fuzziness()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let welch = welch_one_sided(&cp_f, &icp_f);
    Ok(FuzzinessReport {
        measure: measure.to_string(),
        n: train.len(),
        test_points: test.len(),
        classes: train.n_labels(),
        seed,
        cp_mean: welch.mean_a,
        cp_sd: welch.sd_a,
        icp_mean: welch.mean_b,
        icp_sd: welch.sd_b,
        reject_null: welch.p_value < ALPHA,
        cp_not_fuzzier: welch.mean_a <= welch.mean_b,
        welch,
    })
}

/// One report per selected classification measure.
pub fn run_fuzziness(cfg: &RunConfig) -> Result<Vec<FuzzinessReport>> {
    cfg.validate()?;
    cfg.measures
        .iter()
        .filter_map(|m| match m {
            BenchMeasure::Classification(k) => Some(*k),
            BenchMeasure::RegressionKnn => None,
        })
        .map(|m| compare(cfg, m, cfg.seeds[0]))
        .collect()
}
