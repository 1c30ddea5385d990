//! Inductive conformal prediction: the measure is fit once on the first `t`
//! examples and the remaining `n − t` serve as the calibration set.

use crate::data::{Conditioning, Dataset, Label};
use crate::error::{Error, Result};
use crate::measures::bootstrap::Ensemble;
use crate::measures::kde::score_kde;
use crate::measures::knn::{score_with, KnnVariant};
use crate::measures::lssvm::{label_sign, LssvmModel};
use crate::measures::metric::{Euclidean, Gaussian};
use crate::measures::{MeasureKind, ScorerConfig};
use crate::pvalue::PValueVector;

/// Measure evaluated against a fixed proper training set.
#[derive(Debug, Clone)]
enum Inductive {
    Knn { variant: KnnVariant, k: usize },
    Kde { bandwidth: f64 },
    Lssvm(LssvmModel),
    Bootstrap(Ensemble),
}

impl Inductive {
    fn fit(train: &Dataset, config: &ScorerConfig) -> Result<Self> {
        Ok(match config.measure {
            MeasureKind::Nn | MeasureKind::Knn => Inductive::Knn { variant: KnnVariant::Full, k: config.effective_k() },
            MeasureKind::SimplifiedKnn => Inductive::Knn { variant: KnnVariant::Simplified, k: config.k },
            MeasureKind::Kde => Inductive::Kde { bandwidth: config.bandwidth },
            MeasureKind::Lssvm => {
                if train.n_labels() != 2 {
                    return Err(Error::UnsupportedLabels(format!(
                        "LS-SVM needs a binary alphabet, got {} labels",
                        train.n_labels()
                    )));
                }
                let examples = (0..train.len()).map(|i| (train.object(i), label_sign(train.label(i))));
                Inductive::Lssvm(LssvmModel::train(examples, train.dim(), config.feature_map, config.rho)?)
            }
            MeasureKind::Bootstrap => {
                let set: Vec<(&[f64], Label)> = (0..train.len()).map(|i| (train.object(i), train.label(i))).collect();
                Inductive::Bootstrap(Ensemble::fit(&set, train.n_labels(), &config.bootstrap(), 0))
            }
        })
    }

    fn score(&self, train: &Dataset, object: &[f64], label: Label) -> f64 {
        let cond = Conditioning::plain(train);
        match self {
            Inductive::Knn { variant, k } => score_with(*variant, &cond, object, label, *k, &Euclidean),
            Inductive::Kde { bandwidth } => score_kde(&cond, object, label, *bandwidth, &Gaussian),
            Inductive::Lssvm(model) => -label_sign(label) * model.predict(object),
            Inductive::Bootstrap(ensemble) => -ensemble.confidence(object, label),
        }
    }
}

/// A calibrated inductive conformal predictor.
#[derive(Debug, Clone)]
pub struct IcpCalibration {
    train: Dataset,
    model: Inductive,
    calibration_scores: Vec<f64>,
    sorted: Vec<f64>,
}

impl IcpCalibration {
    /// Proper training set size `t`.
    pub fn split(&self) -> usize {
        self.train.len()
    }

    /// `α_{t+1}, ..., α_n` in dataset order.
    pub fn calibration_scores(&self) -> &[f64] {
        &self.calibration_scores
    }

    pub fn proper_training_set(&self) -> &Dataset {
        &self.train
    }

    pub fn score(&self, object: &[f64], label: Label) -> f64 {
        self.model.score(&self.train, object, label)
    }

    /// `(|{i > t : α_i ≥ α}| + 1) / (n − t + 1)`.
    pub fn pvalue(&self, object: &[f64], label: Label) -> f64 {
        icp_pvalue_from_sorted(&self.sorted, self.score(object, label))
    }

    pub fn classify(&self, object: &[f64]) -> Result<PValueVector> {
        if object.len() != self.train.dim() {
            return Err(Error::DimensionMismatch { expected: self.train.dim(), found: object.len() });
        }
        Ok(PValueVector::new((0..self.train.n_labels()).map(|l| self.pvalue(object, l)).collect()))
    }
}

/// ICP p-value against calibration scores in any order.
pub fn icp_pvalue(calibration_scores: &[f64], test_score: f64) -> f64 {
    let hits = calibration_scores.iter().filter(|&&a| a >= test_score).count();
    (hits + 1) as f64 / (calibration_scores.len() + 1) as f64
}

fn icp_pvalue_from_sorted(sorted: &[f64], test_score: f64) -> f64 {
    let hits = sorted.len() - sorted.partition_point(|&a| a < test_score);
    (hits + 1) as f64 / (sorted.len() + 1) as f64
}

/// Fits on the first `t` examples and scores the rest against them.
pub fn icp_calibrate(dataset: &Dataset, t: usize, config: &ScorerConfig) -> Result<IcpCalibration> {
    config.validate()?;
    if t == 0 || t >= dataset.len() {
        return Err(Error::InvalidSplit { t, n: dataset.len() });
    }
    let (train, calib) = dataset.split_at(t);
    let model = Inductive::fit(&train, config)?;
    let calibration_scores: Vec<f64> =
        (0..calib.len()).map(|i| model.score(&train, calib.object(i), calib.label(i))).collect();
    let mut sorted = calibration_scores.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(IcpCalibration { train, model, calibration_scores, sorted })
}

/// Default proper training set size: half the data, rounded down, at least 1.
pub fn default_split(n: usize) -> usize {
    (n / 2).max(1)
}
