//! Synthetic workloads and the predictors the commands run on them.

use anyhow::{bail, Result};
use fullcp::datagen::{gen_classification, gen_regression, GenSpec, Task};
use fullcp::icp::{icp_calibrate, IcpCalibration};
use fullcp::regress::{
    reg_coefficients_baseline, reg_prediction_set, reg_pvalue_at, IcpRegressor, IntervalSet, RegressionKnnState,
};
use fullcp::{
    build_scorer, classify, classify_parallel, Dataset, MeasureKind, PValueVector, RegressionData, Scorer, Variant,
};

use crate::config::{BenchMeasure, BenchVariant, RunConfig};

pub enum Workload {
    Classification { train: Dataset, test: Dataset },
    Regression { train: RegressionData, test: RegressionData },
}

impl Workload {
    /// `n` training and `tests` test examples drawn from one seeded stream.
    pub fn generate(cfg: &RunConfig, measure: BenchMeasure, n: usize, tests: usize, seed: u64) -> Result<Self> {
        let classes = match measure {
            BenchMeasure::Classification(MeasureKind::Lssvm) => 2,
            _ => cfg.classes,
        };
        let spec = GenSpec {
            task: if measure.is_regression() { Task::Regression } else { Task::Classification },
            n: n + tests,
            dim: cfg.dim,
            n_labels: classes,
            class_sep: cfg.class_sep,
            noise_sd: cfg.noise_sd,
            seed,
        };
        Ok(if measure.is_regression() {
            let (train, test) = gen_regression(&spec)?.split_at(n);
            Workload::Regression { train, test }
        } else {
            let (train, test) = gen_classification(&spec)?.split_at(n);
            Workload::Classification { train, test }
        })
    }

    pub fn test_len(&self) -> usize {
        match self {
            Workload::Classification { test, .. } => test.len(),
            Workload::Regression { test, .. } => test.len(),
        }
    }

    pub fn test_object(&self, i: usize) -> &[f64] {
        match self {
            Workload::Classification { test, .. } => test.object(i),
            Workload::Regression { test, .. } => test.object(i),
        }
    }
}

pub enum Prediction {
    PValues(PValueVector),
    Interval(IntervalSet),
}

pub enum Model {
    Full(Box<dyn Scorer>),
    Icp(IcpCalibration),
    RegressionBaseline { data: RegressionData, k: usize },
    RegressionOptimized(RegressionKnnState),
    RegressionIcp(IcpRegressor),
}

impl Model {
    /// Builds and trains the predictor on the workload's training part.
    pub fn fit(
        cfg: &RunConfig,
        measure: BenchMeasure,
        variant: BenchVariant,
        work: &Workload,
        seed: u64,
    ) -> Result<Self> {
        let scorer = fullcp::ScorerConfig { seed, ..cfg.scorer };
        Ok(match (measure, work) {
            (BenchMeasure::Classification(m), Workload::Classification { train, .. }) => {
                let scorer = fullcp::ScorerConfig { measure: m, ..scorer };
                match variant {
                    BenchVariant::Standard => Model::Full(build_scorer(&scorer, Variant::Standard, train.clone())?),
                    BenchVariant::Optimized => Model::Full(build_scorer(&scorer, Variant::Optimized, train.clone())?),
                    BenchVariant::Icp => Model::Icp(icp_calibrate(train, cfg.icp_split(train.len()), &scorer)?),
                }
            }
            (BenchMeasure::RegressionKnn, Workload::Regression { train, .. }) => match variant {
                BenchVariant::Standard => Model::RegressionBaseline { data: train.clone(), k: cfg.scorer.k },
                BenchVariant::Optimized => {
                    Model::RegressionOptimized(RegressionKnnState::train(train.clone(), cfg.scorer.k)?)
                }
                BenchVariant::Icp => {
                    let t = cfg.icp_split(train.len());
                    Model::RegressionIcp(IcpRegressor::calibrate(train, t, cfg.scorer.k.min(t))?)
                }
            },
            _ => bail!("measure {measure} does not match the workload"),
        })
    }

    pub fn predict(&self, object: &[f64], epsilon: f64, parallel: bool) -> Result<Prediction> {
        Ok(match self {
            Model::Full(s) if parallel => Prediction::PValues(classify_parallel(s.as_ref(), object)?),
            Model::Full(s) => Prediction::PValues(classify(s.as_ref(), object)?),
            Model::Icp(c) => Prediction::PValues(c.classify(object)?),
            Model::RegressionBaseline { data, k } => {
                Prediction::Interval(reg_prediction_set(&reg_coefficients_baseline(data, object, *k)?, epsilon))
            }
            Model::RegressionOptimized(st) => {
                Prediction::Interval(reg_prediction_set(&st.coefficients(object)?, epsilon))
            }
            Model::RegressionIcp(icp) => Prediction::Interval(icp.predict(object, epsilon)?),
        })
    }

    /// For each `ε`, whether test example `i` falls outside its prediction set.
    pub fn misses(&self, work: &Workload, i: usize, epsilons: &[f64]) -> Result<Vec<bool>> {
        let p = match (self, work) {
            (Model::Full(s), Workload::Classification { test, .. }) => s.pvalue(test.object(i), test.label(i))?,
            (Model::Icp(c), Workload::Classification { test, .. }) => c.pvalue(test.object(i), test.label(i)),
            (Model::RegressionBaseline { data, k }, Workload::Regression { test, .. }) => {
                reg_pvalue_at(&reg_coefficients_baseline(data, test.object(i), *k)?, test.target(i))
            }
            (Model::RegressionOptimized(st), Workload::Regression { test, .. }) => {
                reg_pvalue_at(&st.coefficients(test.object(i))?, test.target(i))
            }
            (Model::RegressionIcp(icp), Workload::Regression { test, .. }) => {
                return epsilons
                    .iter()
                    .map(|&e| Ok(!icp.predict(test.object(i), e)?.contains(test.target(i))))
                    .collect();
            }
            _ => bail!("model does not match the workload"),
        };
        Ok(epsilons.iter().map(|&e| p <= e).collect())
    }
}
