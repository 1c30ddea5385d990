//! Kernel density estimation nonconformity measure.
//!
//! `A((x, y); S) = −(1 / (n_y hᵖ)) Σ_{x_i ∈ S, y_i = y} K((x − x_i)/h)` with
//! `n_y` the number of label-`y` examples in `S`; `n_y = 0` scores `0`.

use crate::data::{Conditioning, Dataset, Label};
use crate::engine::Scorer;
use crate::error::{Error, Result};
use crate::pvalue::ScoreVector;

use super::metric::{CompensatedSum, Gaussian, Kernel};

#[inline]
fn normalize(kernel_sum: f64, count: usize, bandwidth: f64, dim: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        -kernel_sum / (count as f64 * bandwidth.powi(dim as i32))
    }
}

pub fn score_kde<K: Kernel>(cond: &Conditioning<'_>, object: &[f64], label: Label, bandwidth: f64, kernel: &K) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut count = 0;
    for (o, l) in cond.iter() {
        if l == label {
            sum.add(kernel.eval(o, object, bandwidth));
            count += 1;
        }
    }
    normalize(sum.value(), count, bandwidth, cond.dim())
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if bandwidth > 0.0 && bandwidth.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("bandwidth must be positive, got {bandwidth}")))
    }
}

/// Recompute-from-scratch KDE conformal scorer.
#[derive(Debug, Clone)]
pub struct StandardKde<K: Kernel = Gaussian> {
    data: Dataset,
    bandwidth: f64,
    kernel: K,
}

impl<K: Kernel> StandardKde<K> {
    pub fn new(data: Dataset, bandwidth: f64, kernel: K) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(Self { data, bandwidth, kernel })
    }
}

impl<K: Kernel> Scorer for StandardKde<K> {
    fn name(&self) -> &'static str {
        "standard KDE"
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n_labels(&self) -> usize {
        self.data.n_labels()
    }

    fn score_vector(&self, object: &[f64], label: Label) -> Result<ScoreVector> {
        let z = &self.data;
        let training = (0..z.len())
            .map(|i| {
                let cond = Conditioning::loo(z, i, object, label);
                score_kde(&cond, z.object(i), z.label(i), self.bandwidth, &self.kernel)
            })
            .collect();
        let test = score_kde(&Conditioning::plain(z), object, label, self.bandwidth, &self.kernel);
        Ok(ScoreVector::new(training, test))
    }
}

/// Trained KDE state: per-example same-label kernel sums over `Z \ {z_i}` and
/// per-label counts.
#[derive(Debug, Clone)]
pub struct KdeState {
    preliminary: Vec<CompensatedSum>,
    counts: Vec<usize>,
}

impl KdeState {
    /// `α_i' = Σ_{j ≠ i, y_j = y_i} K((x_i − x_j)/h)`.
    pub fn preliminary(&self, i: usize) -> f64 {
        self.preliminary[i].value()
    }

    pub fn count(&self, label: Label) -> usize {
        self.counts[label]
    }
}

/// Optimized KDE conformal scorer: `O(n)` kernel evaluations per label.
#[derive(Debug, Clone)]
pub struct OptimizedKde<K: Kernel = Gaussian> {
    data: Dataset,
    bandwidth: f64,
    kernel: K,
    state: KdeState,
}

impl<K: Kernel> OptimizedKde<K> {
    /// `O(n²)` kernel evaluations; the kernel must be symmetric.
    pub fn train(data: Dataset, bandwidth: f64, kernel: K) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        let n = data.len();
        let mut preliminary = vec![CompensatedSum::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if data.label(i) == data.label(j) {
                    let v = kernel.eval(data.object(i), data.object(j), bandwidth);
                    preliminary[i].add(v);
                    preliminary[j].add(v);
                }
            }
        }
        let counts = data.label_counts();
        Ok(Self { data, bandwidth, kernel, state: KdeState { preliminary, counts } })
    }

    pub fn state(&self) -> &KdeState {
        &self.state
    }

    fn kernels(&self, object: &[f64]) -> Vec<f64> {
        (0..self.data.len()).map(|i| self.kernel.eval(self.data.object(i), object, self.bandwidth)).collect()
    }

    fn vector_from_kernels(&self, kernels: &[f64], label: Label) -> ScoreVector {
        let z = &self.data;
        let h = self.bandwidth;
        let p = z.dim();
        let st = &self.state;
        let training = (0..z.len())
            .map(|i| {
                let yi = z.label(i);
                if yi == label {
                    // Augmented-minus-i holds c_{y_i} − 1 peers plus the test example.
                    normalize(st.preliminary[i].with(kernels[i]).value(), st.counts[yi], h, p)
                } else {
                    normalize(st.preliminary[i].value(), st.counts[yi] - 1, h, p)
                }
            })
            .collect();
        let sum: CompensatedSum =
            kernels.iter().zip(z.labels()).filter(|&(_, &l)| l == label).map(|(&v, _)| v).collect();
        let test = normalize(sum.value(), st.counts[label], h, p);
        ScoreVector::new(training, test)
    }
}

impl<K: Kernel> Scorer for OptimizedKde<K> {
    fn name(&self) -> &'static str {
        "optimized KDE"
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n_labels(&self) -> usize {
        self.data.n_labels()
    }

    fn score_vector(&self, object: &[f64], label: Label) -> Result<ScoreVector> {
        Ok(self.vector_from_kernels(&self.kernels(object), label))
    }

    fn score_vectors(&self, object: &[f64]) -> Result<Vec<ScoreVector>> {
        let kernels = self.kernels(object);
        Ok((0..self.n_labels()).map(|l| self.vector_from_kernels(&kernels, l)).collect())
    }

    fn observe(&mut self, object: &[f64], label: Label) -> Result<()> {
        if object.len() != self.data.dim() {
            return Err(Error::DimensionMismatch { expected: self.data.dim(), found: object.len() });
        }
        let kernels = self.kernels(object);
        let mut own = CompensatedSum::new();
        for (i, &v) in kernels.iter().enumerate() {
            if self.data.label(i) == label {
                self.state.preliminary[i].add(v);
                own.add(v);
            }
        }
        self.data.push(object, label)?;
        self.state.preliminary.push(own);
        self.state.counts[label] += 1;
        Ok(())
    }
}
