//! Nearest-neighbour nonconformity measures.
//!
//! k-NN scores the ratio of the `k` smallest same-label distances to the `k`
//! smallest different-label distances; the simplified variant keeps only the
//! numerator and NN is k-NN with `k = 1`.
//!
//! Degenerate categories: when fewer than `k` candidates exist the sum runs
//! over what is available. An empty numerator scores `+∞`; an empty
//! denominator scores `0`; both empty score `0`. A zero denominator with a
//! non-zero numerator is `+∞` and `0/0` is `1` (the equidistant case).
//!
//! Every k-smallest sum is accumulated in ascending order starting from `0.0`,
//! in both the from-scratch and the incremental implementation, so the two
//! agree bit for bit on the same multiset of distances.

use crate::data::{Conditioning, Dataset, Label};
use crate::engine::Scorer;
use crate::error::{Error, Result};
use crate::pvalue::ScoreVector;

use super::metric::{Distance, Euclidean};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnVariant {
    /// Same-label distance sum only.
    Simplified,
    /// Same-label over different-label distance sums.
    Full,
}

/// Ascending sum of the `k` smallest entries; `None` when `values` is empty.
/// Reorders `values`.
pub fn k_smallest_sum(values: &mut [f64], k: usize) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let take = k.min(values.len());
    if take < values.len() {
        values.select_nth_unstable_by(take - 1, f64::total_cmp);
    }
    let head = &mut values[..take];
    head.sort_unstable_by(f64::total_cmp);
    Some(head.iter().fold(0.0, |acc, &v| acc + v))
}

/// Combines numerator and denominator sums under the degenerate conventions.
pub fn knn_ratio(numerator: Option<f64>, denominator: Option<f64>) -> f64 {
    match (numerator, denominator) {
        (None, Some(_)) => f64::INFINITY,
        (Some(_), None) | (None, None) => 0.0,
        (Some(num), Some(den)) => {
            if den == 0.0 {
                if num == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                num / den
            }
        }
    }
}

fn split_distances<D: Distance>(
    cond: &Conditioning<'_>,
    object: &[f64],
    label: Label,
    metric: &D,
) -> (Vec<f64>, Vec<f64>) {
    let mut same = Vec::with_capacity(cond.len());
    let mut diff = Vec::with_capacity(cond.len());
    for (o, l) in cond.iter() {
        let d = metric.distance(object, o);
        if l == label {
            same.push(d);
        } else {
            diff.push(d);
        }
    }
    (same, diff)
}

/// k-NN ratio score of `(object, label)` against `cond`.
pub fn score_knn<D: Distance>(cond: &Conditioning<'_>, object: &[f64], label: Label, k: usize, metric: &D) -> f64 {
    let (mut same, mut diff) = split_distances(cond, object, label, metric);
    knn_ratio(k_smallest_sum(&mut same, k), k_smallest_sum(&mut diff, k))
}

/// Nearest-neighbour score: k-NN with `k = 1`.
pub fn score_nn<D: Distance>(cond: &Conditioning<'_>, object: &[f64], label: Label, metric: &D) -> f64 {
    score_knn(cond, object, label, 1, metric)
}

/// Sum of the `k` smallest same-label distances; `+∞` without same-label peers.
pub fn score_simplified_knn<D: Distance>(
    cond: &Conditioning<'_>,
    object: &[f64],
    label: Label,
    k: usize,
    metric: &D,
) -> f64 {
    let mut same: Vec<f64> =
        cond.iter().filter(|&(_, l)| l == label).map(|(o, _)| metric.distance(object, o)).collect();
    k_smallest_sum(&mut same, k).unwrap_or(f64::INFINITY)
}

pub(crate) fn score_with<D: Distance>(
    variant: KnnVariant,
    cond: &Conditioning<'_>,
    object: &[f64],
    label: Label,
    k: usize,
    metric: &D,
) -> f64 {
    match variant {
        KnnVariant::Simplified => score_simplified_knn(cond, object, label, k, metric),
        KnnVariant::Full => score_knn(cond, object, label, k, metric),
    }
}

/// Recompute-from-scratch k-NN conformal scorer: `O(n²)` distances per
/// candidate label.
#[derive(Debug, Clone)]
pub struct StandardKnn<D: Distance = Euclidean> {
    data: Dataset,
    k: usize,
    variant: KnnVariant,
    metric: D,
}

impl<D: Distance> StandardKnn<D> {
    pub fn new(data: Dataset, k: usize, variant: KnnVariant, metric: D) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(Self { data, k, variant, metric })
    }
}

impl<D: Distance> Scorer for StandardKnn<D> {
    fn name(&self) -> &'static str {
        match self.variant {
            KnnVariant::Simplified => "standard simplified k-NN",
            KnnVariant::Full => "standard k-NN",
        }
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
                score_with(self.variant, &cond, z.object(i), z.label(i), self.k, &self.metric)
            })
            .collect();
        let test = score_with(self.variant, &Conditioning::plain(z), object, label, self.k, &self.metric);
        Ok(ScoreVector::new(training, test))
    }
}

/// The `k` smallest distances seen so far, ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KBest {
    values: Vec<f64>,
}

impl KBest {
    pub fn from_distances(mut distances: Vec<f64>, k: usize) -> Self {
        if distances.len() > k {
            distances.select_nth_unstable_by(k - 1, f64::total_cmp);
            distances.truncate(k);
        }
        distances.sort_unstable_by(f64::total_cmp);
        Self { values: distances }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Δ^k`: the largest kept distance, or `+∞` while fewer than `k` are kept.
    #[inline]
    pub fn kth(&self, k: usize) -> f64 {
        if self.values.len() < k {
            f64::INFINITY
        } else {
            self.values[k - 1]
        }
    }

    pub fn sum(&self) -> Option<f64> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.values.iter().fold(0.0, |acc, &v| acc + v))
        }
    }

    /// Whether a new distance `d` enters the kept set.
    #[inline]
    pub fn displaced_by(&self, d: f64, k: usize) -> bool {
        d < self.kth(k)
    }

    /// Sum of the `k` smallest of the kept values plus `d`, ascending. This is
    /// the provisional sum with `Δ^k` swapped for `d` when `d < Δ^k`.
    pub fn sum_with(&self, d: f64, k: usize) -> f64 {
        let kept = if self.values.len() < k { self.values.len() } else { k - 1 };
        let mut acc = 0.0;
        let mut placed = false;
        for &v in &self.values[..kept] {
            if !placed && d < v {
                acc += d;
                placed = true;
            }
            acc += v;
        }
        if !placed {
            acc += d;
        }
        acc
    }

    pub fn insert(&mut self, d: f64, k: usize) {
        if !self.displaced_by(d, k) {
            return;
        }
        if self.values.len() == k {
            self.values.pop();
        }
        let at = self.values.partition_point(|&v| v <= d);
        self.values.insert(at, d);
    }
}

/// Trained state of the incremental&decremental k-NN family.
#[derive(Debug, Clone)]
pub struct KnnState {
    same: Vec<KBest>,
    diff: Vec<KBest>,
    same_sums: Vec<Option<f64>>,
    diff_sums: Vec<Option<f64>>,
}

impl KnnState {
    /// `Δ_i^1 ≤ … ≤ Δ_i^k` over same-label peers of example `i`.
    pub fn same_label_neighbours(&self, i: usize) -> &KBest {
        &self.same[i]
    }

    pub fn other_label_neighbours(&self, i: usize) -> &KBest {
        &self.diff[i]
    }
}

/// Optimized k-NN conformal scorer.
///
/// Training keeps, for every example, its `k` best same-label (and, for full
/// k-NN, different-label) distances and the provisional score against
/// `Z \ {z_i}`. A prediction computes the `n` distances to the test object
/// and only touches scores whose `k`-neighbourhood the test object enters.
#[derive(Debug, Clone)]
pub struct OptimizedKnn<D: Distance = Euclidean> {
    data: Dataset,
    k: usize,
    variant: KnnVariant,
    metric: D,
    state: KnnState,
}

impl<D: Distance> OptimizedKnn<D> {
    /// `O(n²)` distance evaluations; the metric must be symmetric.
    pub fn train(data: Dataset, k: usize, variant: KnnVariant, metric: D) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let n = data.len();
        let mut same_d: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut diff_d: Vec<Vec<f64>> = vec![Vec::new(); n];
        let track_diff = variant == KnnVariant::Full;
        for i in 0..n {
            let xi = data.object(i);
            for j in (i + 1)..n {
                let d = metric.distance(xi, data.object(j));
                if data.label(i) == data.label(j) {
                    same_d[i].push(d);
                    same_d[j].push(d);
                } else if track_diff {
                    diff_d[i].push(d);
                    diff_d[j].push(d);
                }
            }
        }
        let same: Vec<KBest> = same_d.into_iter().map(|v| KBest::from_distances(v, k)).collect();
        let diff: Vec<KBest> = diff_d.into_iter().map(|v| KBest::from_distances(v, k)).collect();
        let same_sums = same.iter().map(KBest::sum).collect();
        let diff_sums = diff.iter().map(KBest::sum).collect();
        Ok(Self { data, k, variant, metric, state: KnnState { same, diff, same_sums, diff_sums } })
    }

    pub fn state(&self) -> &KnnState {
        &self.state
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn metric(&self) -> &D {
        &self.metric
    }

    /// `α_i'`: score of example `i` against `Z \ {z_i}`.
    pub fn provisional_score(&self, i: usize) -> f64 {
        match self.variant {
            KnnVariant::Simplified => self.state.same_sums[i].unwrap_or(f64::INFINITY),
            KnnVariant::Full => knn_ratio(self.state.same_sums[i], self.state.diff_sums[i]),
        }
    }

    fn test_distances(&self, object: &[f64]) -> Vec<f64> {
        (0..self.data.len()).map(|i| self.metric.distance(self.data.object(i), object)).collect()
    }

    fn vector_from_distances(&self, distances: &[f64], label: Label) -> ScoreVector {
        let z = &self.data;
        let k = self.k;
        let st = &self.state;
        let training = (0..z.len())
            .map(|i| {
                let d = distances[i];
                let own = z.label(i) == label;
                match self.variant {
                    KnnVariant::Simplified => {
                        if own && st.same[i].displaced_by(d, k) {
                            st.same[i].sum_with(d, k)
                        } else {
                            st.same_sums[i].unwrap_or(f64::INFINITY)
                        }
                    }
                    KnnVariant::Full => {
                        let (num, den) = if own {
                            let num = if st.same[i].displaced_by(d, k) {
                                Some(st.same[i].sum_with(d, k))
                            } else {
                                st.same_sums[i]
                            };
                            (num, st.diff_sums[i])
                        } else {
                            let den = if st.diff[i].displaced_by(d, k) {
                                Some(st.diff[i].sum_with(d, k))
                            } else {
                                st.diff_sums[i]
                            };
                            (st.same_sums[i], den)
                        };
                        knn_ratio(num, den)
                    }
                }
            })
            .collect();

        let mut same = Vec::new();
        let mut diff = Vec::new();
        for (i, &d) in distances.iter().enumerate() {
            if z.label(i) == label {
                same.push(d);
            } else {
                diff.push(d);
            }
        }
        let num = k_smallest_sum(&mut same, k);
        let test = match self.variant {
            KnnVariant::Simplified => num.unwrap_or(f64::INFINITY),
            KnnVariant::Full => knn_ratio(num, k_smallest_sum(&mut diff, k)),
        };
        ScoreVector::new(training, test)
    }
}

impl<D: Distance> Scorer for OptimizedKnn<D> {
    fn name(&self) -> &'static str {
        match self.variant {
            KnnVariant::Simplified => "optimized simplified k-NN",
            KnnVariant::Full => "optimized k-NN",
        }
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
        let distances = self.test_distances(object);
        Ok(self.vector_from_distances(&distances, label))
    }

    fn score_vectors(&self, object: &[f64]) -> Result<Vec<ScoreVector>> {
        let distances = self.test_distances(object);
        Ok((0..self.n_labels()).map(|l| self.vector_from_distances(&distances, l)).collect())
    }

    fn observe(&mut self, object: &[f64], label: Label) -> Result<()> {
        if object.len() != self.data.dim() {
            return Err(Error::DimensionMismatch { expected: self.data.dim(), found: object.len() });
        }
        let k = self.k;
        let track_diff = self.variant == KnnVariant::Full;
        let distances = self.test_distances(object);
        let mut own_same = Vec::new();
        let mut own_diff = Vec::new();
        for (i, &d) in distances.iter().enumerate() {
            let st = &mut self.state;
            if self.data.label(i) == label {
                if st.same[i].displaced_by(d, k) {
                    st.same[i].insert(d, k);
                    st.same_sums[i] = st.same[i].sum();
                }
                own_same.push(d);
            } else if track_diff {
                if st.diff[i].displaced_by(d, k) {
                    st.diff[i].insert(d, k);
                    st.diff_sums[i] = st.diff[i].sum();
                }
                own_diff.push(d);
            }
        }
        let same = KBest::from_distances(own_same, k);
        let diff = KBest::from_distances(own_diff, k);
        self.state.same_sums.push(same.sum());
        self.state.diff_sums.push(diff.sum());
        self.state.same.push(same);
        self.state.diff.push(diff);
        self.data.push(object, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelAlphabet, Objects};
    use crate::pvalue::compute_pvalue;

    fn dataset_1d(points: &[(f64, Label)], ell: usize) -> Dataset {
        let rows: Vec<[f64; 1]> = points.iter().map(|&(x, _)| [x]).collect();
        let labels = points.iter().map(|&(_, l)| l).collect();
        Dataset::new(Objects::from_rows(&rows, 1).unwrap(), labels, LabelAlphabet::numbered(ell)).unwrap()
    }

    #[test]
    fn nn_hand_example() {
        let z = dataset_1d(&[(0.0, 0), (1.0, 0), (3.0, 1)], 2);
        let s = score_nn(&Conditioning::plain(&z), &[0.5], 0, &Euclidean);
        assert!((s - 0.2).abs() < 1e-15);
        // Equidistant from nearest same- and other-label points.
        let s = score_nn(&Conditioning::plain(&z), &[2.0], 0, &Euclidean);
        assert_eq!(s, 1.0);
        // No other-label points.
        let only_a = dataset_1d(&[(0.0, 0), (1.0, 0)], 2);
        assert_eq!(score_nn(&Conditioning::plain(&only_a), &[0.5], 0, &Euclidean), 0.0);
    }

    #[test]
    fn knn_hand_example() {
        let z = dataset_1d(&[(0.0, 0), (2.0, 0), (5.0, 1), (6.0, 1)], 2);
        let s = score_knn(&Conditioning::plain(&z), &[1.0], 0, 2, &Euclidean);
        assert!((s - 2.0 / 9.0).abs() < 1e-15);
        let z3 = dataset_1d(&[(0.0, 0), (2.0, 0)], 3);
        assert_eq!(score_knn(&Conditioning::plain(&z3), &[1.0], 2, 2, &Euclidean), f64::INFINITY);
    }

    #[test]
    fn knn_with_k1_is_nn() {
        let z = dataset_1d(&[(0.0, 0), (0.7, 1), (1.9, 0), (2.2, 1), (4.0, 0)], 2);
        for x in [-1.0, 0.3, 1.1, 2.0, 5.5] {
            for l in 0..2 {
                let c = Conditioning::plain(&z);
                assert_eq!(score_knn(&c, &[x], l, 1, &Euclidean), score_nn(&c, &[x], l, &Euclidean));
            }
        }
    }

    #[test]
    fn simplified_examples() {
        let z = dataset_1d(&[(0.0, 0), (2.0, 0)], 2);
        let c = Conditioning::plain(&z);
        assert_eq!(score_simplified_knn(&c, &[1.0], 0, 2, &Euclidean), 2.0);
        assert_eq!(score_simplified_knn(&c, &[2.0], 0, 1, &Euclidean), 0.0);
        assert_eq!(score_simplified_knn(&c, &[1.0], 1, 2, &Euclidean), f64::INFINITY);
    }

    #[test]
    fn training_edge_cases() {
        let one = dataset_1d(&[(0.0, 0)], 2);
        let m = OptimizedKnn::train(one, 3, KnnVariant::Simplified, Euclidean).unwrap();
        assert_eq!(m.provisional_score(0), f64::INFINITY);

        let dup = dataset_1d(&[(0.0, 0), (0.0, 0), (4.0, 1), (4.0, 1)], 2);
        let m = OptimizedKnn::train(dup, 1, KnnVariant::Simplified, Euclidean).unwrap();
        for i in 0..4 {
            assert_eq!(m.provisional_score(i), 0.0);
        }
    }

    #[test]
    fn update_rule_matches_formula() {
        // Example 0 at 0 with same-label peers at 1, 2 (k = 2): Δ^2 = 2, α' = 3.
        let z = dataset_1d(&[(0.0, 0), (1.0, 0), (2.0, 0), (10.0, 1)], 2);
        let m = OptimizedKnn::train(z, 2, KnnVariant::Simplified, Euclidean).unwrap();
        assert_eq!(m.provisional_score(0), 3.0);
        // Far test point: no update.
        let far = m.score_vector(&[-5.0], 0).unwrap();
        assert_eq!(far.training_scores[0], 3.0);
        // d = 0.5 < Δ^2 = 2: α = α' − Δ^k + d.
        let near = m.score_vector(&[-0.5], 0).unwrap();
        assert_eq!(near.training_scores[0], 3.0 - 2.0 + 0.5);
        // Other label never touches the simplified score.
        let other = m.score_vector(&[-0.5], 1).unwrap();
        assert_eq!(other.training_scores[0], 3.0);
    }

    #[test]
    fn kbest_insert_keeps_sorted_prefix() {
        let mut b = KBest::from_distances(vec![5.0, 1.0, 3.0, 9.0], 3);
        assert_eq!(b.values(), &[1.0, 3.0, 5.0]);
        b.insert(2.0, 3);
        assert_eq!(b.values(), &[1.0, 2.0, 3.0]);
        b.insert(7.0, 3);
        assert_eq!(b.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(b.sum_with(0.5, 3), 0.5 + 1.0 + 2.0);
    }

    #[test]
    fn optimized_matches_standard_pvalues() {
        let pts: Vec<(f64, Label)> =
            (0..40).map(|i| (((i * 37) % 101) as f64 * 0.173 + (i as f64).sqrt(), i % 3)).collect();
        let z = dataset_1d(&pts, 3);
        for variant in [KnnVariant::Simplified, KnnVariant::Full] {
            let std = StandardKnn::new(z.clone(), 4, variant, Euclidean).unwrap();
            let opt = OptimizedKnn::train(z.clone(), 4, variant, Euclidean).unwrap();
            for x in [0.05, 3.3, 7.77, 12.1] {
                for l in 0..3 {
                    let a = std.score_vector(&[x], l).unwrap();
                    let b = opt.score_vector(&[x], l).unwrap();
                    assert_eq!(a, b);
                    assert_eq!(compute_pvalue(&a.training_scores, a.test_score), b.pvalue());
                }
            }
        }
    }

    #[test]
    fn observe_equals_retrain() {
        let pts: Vec<(f64, Label)> = (0..30).map(|i| ((i as f64 * 1.618).sin() * 10.0, i % 2)).collect();
        let z = dataset_1d(&pts, 2);
        let mut inc = OptimizedKnn::train(z.slice(0..10), 3, KnnVariant::Full, Euclidean).unwrap();
        for i in 10..30 {
            inc.observe(z.object(i), z.label(i)).unwrap();
        }
        let batch = OptimizedKnn::train(z, 3, KnnVariant::Full, Euclidean).unwrap();
        for i in 0..30 {
            assert_eq!(inc.state().same_label_neighbours(i), batch.state().same_label_neighbours(i));
            assert_eq!(inc.state().other_label_neighbours(i), batch.state().other_label_neighbours(i));
        }
        assert_eq!(inc.score_vectors(&[0.3]).unwrap(), batch.score_vectors(&[0.3]).unwrap());
    }
}
