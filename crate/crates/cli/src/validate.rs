//! Monte-Carlo coverage checks.

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BenchMeasure, BenchVariant, RunConfig};
use crate::runner::{Model, Workload};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub measure: String,
    pub variant: String,
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    /// `ε + 2√(ε(1 − ε)/M)`.
    pub bound: f64,
    pub pass: bool,
}

pub fn binomial_bound(epsilon: f64, trials: usize) -> f64 {
    epsilon + 2.0 * (epsilon * (1.0 - epsilon) / trials as f64).sqrt()
}

/// Per trial: a fresh seeded dataset of `n + 1` examples, the last of which
/// is the test example. Trials run in parallel; results do not depend on
/// scheduling.
pub fn coverage(
    cfg: &RunConfig,
    measure: BenchMeasure,
    variant: BenchVariant,
    n: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<CoverageRow>> {
    let misses: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = base_seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
            let work = Workload::generate(cfg, measure, n, 1, seed)?;
            let model = Model::fit(cfg, measure, variant, &work, seed)?;
            model.misses(&work, 0, &cfg.epsilons)
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .epsilons
        .iter()
        .enumerate()
        .map(|(j, &epsilon)| {
            let errors = misses.iter().filter(|m| m[j]).count();
            let error_rate = errors as f64 / trials as f64;
            let bound = binomial_bound(epsilon, trials);
            CoverageRow {
                measure: measure.to_string(),
                variant: variant.to_string(),
                n,
                epsilon,
                trials,
                errors,
                error_rate,
                bound,
                pass: error_rate <= bound,
            }
        })
        .collect())
}

/// One row per (measure, variant, ε).
pub fn run_validation(cfg: &RunConfig) -> Result<Vec<CoverageRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &measure in &cfg.measures {
        for &variant in &cfg.variants {
            rows.extend(coverage(cfg, measure, variant, cfg.n, cfg.trials, cfg.seeds[0])?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fullcp::MeasureKind;

    #[test]
    fn zero_epsilon_never_errs() {
        let cfg = RunConfig { epsilons: vec![0.0, 0.5], dim: 3, ..RunConfig::default() };
        let m = BenchMeasure::Classification(MeasureKind::Nn);
        let rows = coverage(&cfg, m, BenchVariant::Optimized, 20, 50, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].errors, 0);
        assert!(rows[1].errors > 0);
    }

    #[test]
    fn report_shape() {
        let cfg = RunConfig {
            measures: vec![BenchMeasure::Classification(MeasureKind::Kde), BenchMeasure::RegressionKnn],
            variants: vec![BenchVariant::Optimized],
            n: 20,
            trials: 10,
            dim: 2,
            scorer: fullcp::ScorerConfig { k: 3, ..Default::default() },
            ..RunConfig::default()
        };
        assert_eq!(run_validation(&cfg).unwrap().len(), 2 * 3);
    }
}
