//! Distances, kernels and compensated summation.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub trait Distance: Send + Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Euclidean;

impl Distance for Euclidean {
    #[inline]
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        squared_euclidean(a, b).sqrt()
    }
}

/// Wraps a distance and counts its evaluations; clones share the counter.
#[derive(Debug, Clone, Default)]
pub struct Counting<D> {
    inner: D,
    count: Arc<AtomicU64>,
}

impl<D: Distance> Counting<D> {
    pub fn new(inner: D) -> Self {
        Self { inner, count: Arc::new(AtomicU64::new(0)) }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

impl<D: Distance> Distance for Counting<D> {
    #[inline]
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.distance(a, b)
    }
}

/// `Σ (a_j − b_j)²`; symmetric bit-for-bit in its arguments.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Kernel on the scaled difference `(a − b) / h`.
pub trait Kernel: Send + Sync {
    fn eval(&self, a: &[f64], b: &[f64], bandwidth: f64) -> f64;
}

/// Standard multivariate normal density.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Gaussian;

impl Kernel for Gaussian {
    #[inline]
    fn eval(&self, a: &[f64], b: &[f64], bandwidth: f64) -> f64 {
        let p = a.len() as f64;
        let u2 = squared_euclidean(a, b) / (bandwidth * bandwidth);
        (2.0 * PI).powf(-0.5 * p) * (-0.5 * u2).exp()
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn with(mut self, value: f64) -> Self {
        self.add(value);
        self
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_shares_counter_across_clones() {
        let d = Counting::new(Euclidean);
        let e = d.clone();
        assert_eq!(d.distance(&[0.0, 3.0], &[4.0, 0.0]), 5.0);
        e.distance(&[0.0], &[1.0]);
        assert_eq!(d.count(), 2);
        d.reset();
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn gaussian_at_zero() {
        let k = Gaussian.eval(&[0.3], &[0.3], 1.0);
        assert!((k - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
        let k2 = Gaussian.eval(&[0.0, 0.0], &[0.0, 0.0], 1.0);
        assert!((k2 - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn euclidean_is_symmetric_bitwise() {
        let a = [0.1, -2.7, 3.3];
        let b = [1.9, 0.4, -0.2];
        assert_eq!(Euclidean.distance(&a, &b).to_bits(), Euclidean.distance(&b, &a).to_bits());
    }
}
