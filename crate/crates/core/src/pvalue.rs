//! P-values, prediction sets and fuzziness.

use serde::Serialize;

use crate::data::Label;

/// Nonconformity scores of the `n` training examples (each scored against
/// the augmented leave-one-out set) together with the test example's score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub training_scores: Vec<f64>,
    pub test_score: f64,
}

impl ScoreVector {
    pub fn new(training_scores: Vec<f64>, test_score: f64) -> Self {
        Self { training_scores, test_score }
    }

    pub fn len(&self) -> usize {
        self.training_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.training_scores.is_empty()
    }

    pub fn pvalue(&self) -> f64 {
        compute_pvalue(&self.training_scores, self.test_score)
    }
}

/// `(|{i : α_i ≥ α}| + 1) / (n + 1)`. Ties count as hits; `n = 0` gives 1.
pub fn compute_pvalue(training_scores: &[f64], test_score: f64) -> f64 {
    let hits = training_scores.iter().filter(|&&a| a >= test_score).count();
    (hits + 1) as f64 / (training_scores.len() + 1) as f64
}

/// Smoothed p-value `(|{α_i > α}| + τ·(|{α_i = α}| + 1)) / (n + 1)`.
pub fn compute_smoothed_pvalue(training_scores: &[f64], test_score: f64, tau: f64) -> f64 {
    let mut greater = 0usize;
    let mut equal = 0usize;
    for &a in training_scores {
        if a > test_score {
            greater += 1;
        } else if a == test_score {
            equal += 1;
        }
    }
    (greater as f64 + tau * (equal + 1) as f64) / (training_scores.len() + 1) as f64
}

/// One p-value per label of the alphabet, indexed by label id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueVector {
    per_label: Vec<f64>,
}

impl PValueVector {
    pub fn new(per_label: Vec<f64>) -> Self {
        Self { per_label }
    }

    pub fn get(&self, label: Label) -> f64 {
        self.per_label[label]
    }

    pub fn len(&self) -> usize {
        self.per_label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_label.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.per_label
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.per_label.iter().copied().enumerate()
    }

    pub fn prediction_set(&self, epsilon: f64) -> PredictionSet {
        prediction_set(self, epsilon)
    }

    pub fn fuzziness(&self) -> f64 {
        fuzziness(self)
    }
}

/// `Γ^ε`: labels whose p-value strictly exceeds `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionSet {
    pub labels: Vec<Label>,
    pub significance: f64,
}

impl PredictionSet {
    pub fn contains(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn prediction_set(pvalues: &PValueVector, epsilon: f64) -> PredictionSet {
    PredictionSet {
        labels: pvalues.iter().filter(|&(_, p)| p > epsilon).map(|(l, _)| l).collect(),
        significance: epsilon,
    }
}

/// Sum of the p-values minus the largest one (subtracted once on ties).
pub fn fuzziness(pvalues: &PValueVector) -> f64 {
    let values = pvalues.as_slice();
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().sum::<f64>() - max
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pvalue_examples() {
        assert_eq!(compute_pvalue(&[2.0, 2.0, 2.0, 2.0], 2.0), 1.0);
        assert_eq!(compute_pvalue(&[0.1, 0.2, 0.3, 0.4], 9.0), 0.2);
        assert_eq!(compute_pvalue(&[3.0, 1.0, 2.0], 2.0), 0.75);
        assert_eq!(compute_pvalue(&[], 5.0), 1.0);
    }

    #[test]
    fn smoothed_examples() {
        assert_eq!(compute_smoothed_pvalue(&[2.0, 2.0], 2.0, 1.0), 1.0);
        assert_eq!(compute_smoothed_pvalue(&[2.0, 2.0], 2.0, 0.0), 0.0);
        assert_eq!(compute_smoothed_pvalue(&[3.0, 1.0], 2.0, 0.5), 0.5);
    }

    #[test]
    fn prediction_set_examples() {
        let p = PValueVector::new(vec![1.0, 0.2]);
        assert_eq!(p.prediction_set(0.5).labels, vec![0]);
        assert!(p.prediction_set(1.0).is_empty());
        assert_eq!(p.prediction_set(0.0).labels, vec![0, 1]);
    }

    #[test]
    fn fuzziness_examples() {
        let f = fuzziness(&PValueVector::new(vec![1.0, 0.3, 0.1]));
        assert!((f - 0.4).abs() < 1e-15);
        assert_eq!(fuzziness(&PValueVector::new(vec![0.7])), 0.0);
        assert_eq!(fuzziness(&PValueVector::new(vec![0.5, 0.5])), 0.5);
    }

    proptest! {
        #[test]
        fn pvalue_is_discrete(scores in prop::collection::vec(-5i32..5, 0..40), test in -5i32..5) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let n = scores.len();
            let p = compute_pvalue(&scores, f64::from(test));
            let k = p * (n + 1) as f64;
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!(k.round() >= 1.0 && k.round() <= (n + 1) as f64);
        }

        #[test]
        fn smoothed_brackets_plain(scores in prop::collection::vec(-3i32..3, 0..30), test in -3i32..3, tau in 0.0f64..=1.0) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let s = compute_smoothed_pvalue(&scores, f64::from(test), tau);
            prop_assert!(s <= compute_pvalue(&scores, f64::from(test)) + 1e-12);
            prop_assert!(s >= 0.0);
        }

        #[test]
        fn filter_is_monotone(p in prop::collection::vec(0.0f64..=1.0, 1..8), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let pv = PValueVector::new(p);
            let wide = pv.prediction_set(lo);
            for l in pv.prediction_set(hi).labels {
                prop_assert!(wide.contains(l));
            }
        }

        #[test]
        fn fuzziness_bounds(p in prop::collection::vec(0.0f64..=1.0, 1..10)) {
            let l = p.len();
            let f = fuzziness(&PValueVector::new(p));
            prop_assert!(f >= -1e-12 && f <= (l - 1) as f64 + 1e-12);
        }
    }
}
