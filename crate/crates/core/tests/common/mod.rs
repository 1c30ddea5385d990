#![allow(dead_code)]

use fullcp::datagen::{gen_classification, gen_regression, GenSpec, Task};
use fullcp::{Dataset, LabelAlphabet, RegressionData};

pub fn blobs(n: usize, dim: usize, n_labels: usize, seed: u64) -> Dataset {
    gen_classification(&GenSpec { n, dim, n_labels, class_sep: 1.5, seed, ..GenSpec::default() }).unwrap()
}

/// Labels folded onto `{0, 1}` by parity.
pub fn binarize(data: &Dataset) -> Dataset {
    let labels = data.labels().iter().map(|l| l % 2).collect();
    data.with_alphabet(LabelAlphabet::numbered(2), labels).unwrap()
}

pub fn linear(n: usize, dim: usize, noise_sd: f64, seed: u64) -> RegressionData {
    gen_regression(&GenSpec { task: Task::Regression, n, dim, noise_sd, seed, ..GenSpec::default() }).unwrap()
}

/// `|a − b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| rel_err(x, y)).fold(0.0, f64::max)
}
