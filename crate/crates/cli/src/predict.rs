//! Prediction reports for CSV inputs.

use std::path::Path;

use anyhow::{bail, Result};
use fullcp::datagen::{load_csv, load_regression_csv};
use fullcp::regress::IntervalSet;
use fullcp::{build_scorer, classify, classify_parallel, Dataset, MeasureKind, ScorerConfig, Variant};
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::config::{BenchMeasure, BenchVariant, RunConfig};
use crate::runner::{Model, Prediction, Workload};

pub const SCHEMA_VERSION: u32 = 1;

/// Interval endpoint; infinities are written as `"-inf"` and `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint(pub f64);

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intervals(pub Vec<[Endpoint; 2]>);

impl From<&IntervalSet> for Intervals {
    fn from(set: &IntervalSet) -> Self {
        Intervals(set.intervals().iter().map(|iv| [Endpoint(iv.lo), Endpoint(iv.hi)]).collect())
    }
}

impl Serialize for Intervals {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for pair in &self.0 {
            seq.serialize_element(pair)?;
        }
        seq.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelPValue {
    pub label: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPrediction {
    pub index: usize,
    pub p_values: Vec<LabelPValue>,
    pub prediction_set: Vec<String>,
    pub fuzziness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPrediction {
    pub index: usize,
    pub intervals: Intervals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum PredictReport {
    Classification {
        schema_version: u32,
        measure: String,
        variant: String,
        epsilon: f64,
        labels: Vec<String>,
        predictions: Vec<ClassPrediction>,
    },
    Regression {
        schema_version: u32,
        measure: String,
        variant: String,
        epsilon: f64,
        k: usize,
        predictions: Vec<IntervalPrediction>,
    },
}

fn classification(
    cfg: &RunConfig,
    measure: MeasureKind,
    variant: BenchVariant,
    train: Dataset,
    test: Dataset,
) -> Result<PredictReport> {
    if test.dim() != train.dim() {
        bail!("test file has {} features, training file {}", test.dim(), train.dim());
    }
    let scorer_cfg = ScorerConfig { measure, ..cfg.scorer };
    let alphabet = train.alphabet().clone();
    let pvalues = match variant {
        BenchVariant::Icp => {
            let calib = fullcp::icp::icp_calibrate(&train, cfg.icp_split(train.len()), &scorer_cfg)?;
            test.objects().rows().map(|x| Ok(calib.classify(x)?)).collect::<Result<Vec<_>>>()?
        }
        BenchVariant::Standard | BenchVariant::Optimized => {
            let v = if variant == BenchVariant::Standard { Variant::Standard } else { Variant::Optimized };
            let scorer = build_scorer(&scorer_cfg, v, train)?;
            test.objects()
                .rows()
                .map(|x| {
                    Ok(if cfg.parallel {
                        classify_parallel(scorer.as_ref(), x)?
                    } else {
                        classify(scorer.as_ref(), x)?
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let predictions = pvalues
        .iter()
        .enumerate()
        .map(|(index, p)| ClassPrediction {
            index,
            p_values: p.iter().map(|(l, v)| LabelPValue { label: alphabet.name(l).to_owned(), p_value: v }).collect(),
            prediction_set: p.prediction_set(cfg.epsilon).labels.iter().map(|&l| alphabet.name(l).to_owned()).collect(),
            fuzziness: p.fuzziness(),
        })
        .collect();
    Ok(PredictReport::Classification {
        schema_version: SCHEMA_VERSION,
        measure: measure.to_string(),
        variant: variant.to_string(),
        epsilon: cfg.epsilon,
        labels: alphabet.names().to_vec(),
        predictions,
    })
}

/// Predicts every row of `test_path` from `train_path`. Labels in the test
/// file are ignored.
pub fn run_predict(
    cfg: &RunConfig,
    train_path: &Path,
    test_path: &Path,
    measure: BenchMeasure,
    variant: BenchVariant,
) -> Result<PredictReport> {
    match measure {
        BenchMeasure::Classification(m) => classification(cfg, m, variant, load_csv(train_path)?, load_csv(test_path)?),
        BenchMeasure::RegressionKnn => {
            let train = load_regression_csv(train_path)?;
            let test = load_regression_csv(test_path)?;
            if test.dim() != train.dim() {
                bail!("test file has {} features, training file {}", test.dim(), train.dim());
            }
            let work = Workload::Regression { train, test };
            let model = Model::fit(cfg, measure, variant, &work, cfg.scorer.seed)?;
            let predictions = (0..work.test_len())
                .map(|index| match model.predict(work.test_object(index), cfg.epsilon, false)? {
                    Prediction::Interval(set) => Ok(IntervalPrediction { index, intervals: Intervals::from(&set) }),
                    Prediction::PValues(_) => unreachable!("regression model"),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PredictReport::Regression {
                schema_version: SCHEMA_VERSION,
                measure: measure.to_string(),
                variant: variant.to_string(),
                epsilon: cfg.epsilon,
                k: cfg.scorer.k,
                predictions,
            })
        }
    }
}
