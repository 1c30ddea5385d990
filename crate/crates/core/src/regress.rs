//! Full conformal regression with the k-NN measure
//! `α_i = |y_i − (1/k) Σ_j y_(j)(x_i)|`.
//!
//! For a test object `x` and candidate target `ỹ`, every score is affine in
//! `ỹ` inside the absolute value: `α_i = |a_i + b_i ỹ|`, `α = |a + ỹ|`. The
//! prediction set follows from sweeping the critical points where some
//! `α_i − α` changes sign.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::measures::metric::{Distance, Euclidean};

/// `α_i = |a_i + b_i ỹ|` for each training example and `α = |a + ỹ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCoefficients {
    pub a_i: Vec<f64>,
    /// Either `0` or `−1/k`.
    pub b_i: Vec<f64>,
    pub a: f64,
}

impl RegressionCoefficients {
    pub fn len(&self) -> usize {
        self.a_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_i.is_empty()
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` smallest `(distance, index)` pairs in ascending order.
fn nearest(mut cand: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand
}

fn label_sum(data: &RegressionData, neighbours: &[(f64, usize)]) -> f64 {
    neighbours.iter().fold(0.0, |acc, &(_, j)| acc + data.target(j))
}

fn check_size(data: &RegressionData, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if data.len() < k + 1 {
        return Err(Error::TooFewExamples { needed: k + 1, found: data.len() });
    }
    Ok(())
}

/// `a = −(1/k) Σ_{j ≤ k} y_(j)(x)` over the training set.
fn test_coefficient<D: Distance>(data: &RegressionData, object: &[f64], k: usize, metric: &D) -> f64 {
    let cand = (0..data.len()).map(|j| (metric.distance(object, data.object(j)), j)).collect();
    -label_sum(data, &nearest(cand, k)) / k as f64
}

/// Recomputes every example's neighbourhood in `Z ∖ {z_i} ∪ {x}` from
/// scratch: `O(n²)` distances. The test object ranks after training
/// examples at equal distance.
pub fn reg_coefficients_baseline(data: &RegressionData, object: &[f64], k: usize) -> Result<RegressionCoefficients> {
    check_size(data, k)?;
    check_dim(data, object)?;
    let n = data.len();
    let kf = k as f64;
    let metric = Euclidean;
    let (a_i, b_i) = (0..n)
        .map(|i| {
            let xi = data.object(i);
            let cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(xi, data.object(j)), j))
                .chain(std::iter::once((metric.distance(xi, object), n)))
                .collect();
            let nn = nearest(cand, k);
            if nn.iter().any(|&(_, j)| j == n) {
                let training: Vec<(f64, usize)> = nn.into_iter().filter(|&(_, j)| j != n).collect();
                (data.target(i) - label_sum(data, &training) / kf, -1.0 / kf)
            } else {
                (data.target(i) - label_sum(data, &nn) / kf, 0.0)
            }
        })
        .unzip();
    Ok(RegressionCoefficients { a_i, b_i, a: test_coefficient(data, object, k, &metric) })
}

fn check_dim(data: &RegressionData, object: &[f64]) -> Result<()> {
    if object.len() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: object.len() });
    }
    Ok(())
}

/// Trained state of the optimized regressor: per example, the label sums
/// over its `k − 1` and `k` nearest neighbours in `Z ∖ {z_i}` and the
/// distance `Δ_i^k` to the `k`-th.
#[derive(Debug, Clone)]
pub struct RegressionKnnState {
    data: RegressionData,
    k: usize,
    head_sums: Vec<f64>,
    full_sums: Vec<f64>,
    kth: Vec<f64>,
    kth_label: Vec<f64>,
}

impl RegressionKnnState {
    /// `O(n²)` distances, parallel over examples.
    pub fn train(data: RegressionData, k: usize) -> Result<Self> {
        check_size(&data, k)?;
        let n = data.len();
        let metric = Euclidean;
        let rows: Vec<(f64, f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = data.object(i);
                let cand = (0..n).filter(|&j| j != i).map(|j| (metric.distance(xi, data.object(j)), j)).collect();
                let nn = nearest(cand, k);
                let (kth, last) = nn[k - 1];
                (label_sum(&data, &nn[..k - 1]), label_sum(&data, &nn), kth, data.target(last))
            })
            .collect();
        let mut state = Self {
            data,
            k,
            head_sums: Vec::with_capacity(n),
            full_sums: Vec::with_capacity(n),
            kth: Vec::with_capacity(n),
            kth_label: Vec::with_capacity(n),
        };
        for (head, full, kth, label) in rows {
            state.head_sums.push(head);
            state.full_sums.push(full);
            state.kth.push(kth);
            state.kth_label.push(label);
        }
        Ok(state)
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `a_i' = y_i − S_i/k`, the coefficient when `x` is not a neighbour.
    pub fn provisional(&self, i: usize) -> f64 {
        self.data.target(i) - self.full_sums[i] / self.k as f64
    }

    pub fn kth_distance(&self, i: usize) -> f64 {
        self.kth[i]
    }

    /// `y_(k)(x_i)`, the label dropped when `x` enters the neighbourhood.
    pub fn kth_label(&self, i: usize) -> f64 {
        self.kth_label[i]
    }

    /// `O(n)` distances plus a linear-time selection for `a`.
    pub fn coefficients(&self, object: &[f64]) -> Result<RegressionCoefficients> {
        check_dim(&self.data, object)?;
        let z = &self.data;
        let kf = self.k as f64;
        let distances: Vec<(f64, usize)> = (0..z.len()).map(|i| (Euclidean.distance(z.object(i), object), i)).collect();
        let (a_i, b_i) = distances
            .iter()
            .map(|&(d, i)| {
                if d < self.kth[i] {
                    // Equals a_i' + y_(k)(x_i)/k; summed over the kept neighbours
                    // so that it is bit-identical to the baseline.
                    (z.target(i) - self.head_sums[i] / kf, -1.0 / kf)
                } else {
                    (self.provisional(i), 0.0)
                }
            })
            .unzip();
        let a = -label_sum(z, &nearest(distances, self.k)) / kf;
        Ok(RegressionCoefficients { a_i, b_i, a })
    }
}

/// `(|{i : |a_i + b_i ỹ| ≥ |a + ỹ|}| + 1) / (n + 1)`.
pub fn reg_pvalue_at(coeffs: &RegressionCoefficients, y: f64) -> f64 {
    let test = (coeffs.a + y).abs();
    let hits = coeffs.a_i.iter().zip(&coeffs.b_i).filter(|&(&a, &b)| (a + b * y).abs() >= test).count();
    (hits + 1) as f64 / (coeffs.len() + 1) as f64
}

/// Closed interval with possibly infinite endpoints; infinite ends are open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn lo_closed(&self) -> bool {
        self.lo.is_finite()
    }

    pub fn hi_closed(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed() { '[' } else { '(' };
        let close = if self.hi_closed() { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

/// Sorted, pairwise disjoint, non-empty intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { intervals: vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(y))
    }

    /// Whether every interval of `self` lies inside some interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|a| other.intervals.iter().any(|b| b.lo <= a.lo && a.hi <= b.hi))
    }

    /// Intersection with `[lo, hi]`.
    pub fn clipped(&self, lo: f64, hi: f64) -> IntervalSet {
        let intervals = self
            .intervals
            .iter()
            .filter(|iv| iv.hi >= lo && iv.lo <= hi)
            .map(|iv| Interval::new(iv.lo.max(lo), iv.hi.min(hi)))
            .collect();
        Self { intervals }
    }

    /// Total length (possibly infinite).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        for (j, iv) in self.intervals.iter().enumerate() {
            if j > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// `{ỹ : |a_i + b_i ỹ| ≥ |a + ỹ|}`: a closed interval, possibly unbounded,
/// empty, or the whole line.
fn conforming_region(a_i: f64, b_i: f64, a: f64) -> Option<Interval> {
    if b_i == 0.0 {
        let r = a_i.abs();
        return Some(Interval::new(-a - r, -a + r));
    }
    if b_i == -1.0 {
        // |a_i − ỹ| ≥ |a + ỹ|  ⇔  (a_i + a)(a_i − a − 2ỹ) ≥ 0.
        let s = a_i + a;
        let mid = 0.5 * (a_i - a);
        return Some(match s.partial_cmp(&0.0)? {
            Ordering::Greater => Interval::new(f64::NEG_INFINITY, mid),
            Ordering::Less => Interval::new(mid, f64::INFINITY),
            Ordering::Equal => Interval::new(f64::NEG_INFINITY, f64::INFINITY),
        });
    }
    // |b_i| < 1: the difference of squares is a concave quadratic, so the
    // region lies between the two crossings of the absolute values.
    let r1 = (a_i - a) / (1.0 - b_i);
    let r2 = -(a_i + a) / (1.0 + b_i);
    Some(Interval::new(r1.min(r2), r1.max(r2)))
}

/// Closure of `{ỹ : p(ỹ) > ε}` by an `O(n log n)` sweep over the critical
/// points.
pub fn reg_prediction_set(coeffs: &RegressionCoefficients, epsilon: f64) -> IntervalSet {
    let n = coeffs.len();
    let qualifies = |count: usize| (count + 1) as f64 / (n + 1) as f64 > epsilon;
    // Events: +1 where a region opens, −1 just after it closes.
    let mut base = 0usize;
    let mut opens: Vec<f64> = Vec::with_capacity(n);
    let mut closes: Vec<f64> = Vec::with_capacity(n);
    for (&ai, &bi) in coeffs.a_i.iter().zip(&coeffs.b_i) {
        let Some(region) = conforming_region(ai, bi, coeffs.a) else { continue };
        if region.lo.is_finite() {
            opens.push(region.lo);
        } else {
            base += 1;
        }
        if region.hi.is_finite() {
            closes.push(region.hi);
        }
    }
    opens.sort_by(f64::total_cmp);
    closes.sort_by(f64::total_cmp);

    // Pieces in order: (−∞, c_1), {c_1}, (c_1, c_2), ..., {c_m}, (c_m, ∞).
    let mut pieces: Vec<(f64, f64, bool)> = Vec::with_capacity(2 * (opens.len() + closes.len()) + 1);
    let mut open_count = base;
    let mut left = f64::NEG_INFINITY;
    let (mut oi, mut ci) = (0, 0);
    while oi < opens.len() || ci < closes.len() {
        let c = match (opens.get(oi), closes.get(ci)) {
            (Some(&o), Some(&e)) => o.min(e),
            (Some(&o), None) => o,
            (None, Some(&e)) => e,
            (None, None) => unreachable!(),
        };
        pieces.push((left, c, qualifies(open_count)));
        let mut starting = 0;
        while oi < opens.len() && opens[oi] == c {
            starting += 1;
            oi += 1;
        }
        let mut ending = 0;
        while ci < closes.len() && closes[ci] == c {
            ending += 1;
            ci += 1;
        }
        let at_point = open_count + starting;
        pieces.push((c, c, qualifies(at_point)));
        open_count = at_point - ending;
        left = c;
    }
    pieces.push((left, f64::INFINITY, qualifies(open_count)));

    let mut out: Vec<Interval> = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for (lo, hi, ok) in pieces {
        match (ok, run.as_mut()) {
            (true, Some(r)) => r.1 = hi,
            (true, None) => run = Some((lo, hi)),
            (false, Some(_)) => {
                let (lo, hi) = run.take().expect("run is open");
                out.push(Interval::new(lo, hi));
            }
            (false, None) => {}
        }
    }
    if let Some((lo, hi)) = run {
        out.push(Interval::new(lo, hi));
    }
    IntervalSet::from_intervals(out)
}

/// Brute-force prediction set on the grid `lo, lo + step, ..., ≤ hi`: maximal
/// runs of qualifying grid points become intervals; a run reaching a grid
/// end is extended to infinity when the p-value still qualifies there.
pub fn dense_grid_set(coeffs: &RegressionCoefficients, epsilon: f64, lo: f64, hi: f64, step: f64) -> IntervalSet {
    let count = ((hi - lo) / step).floor() as usize + 1;
    let at = |j: usize| lo + j as f64 * step;
    let qualifies: Vec<bool> = (0..count).map(|j| reg_pvalue_at(coeffs, at(j)) > epsilon).collect();
    let far_left = reg_pvalue_at(coeffs, f64::MIN / 4.0) > epsilon;
    let far_right = reg_pvalue_at(coeffs, f64::MAX / 4.0) > epsilon;
    let mut out = Vec::new();
    let mut j = 0;
    while j < count {
        if !qualifies[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j + 1 < count && qualifies[j + 1] {
            j += 1;
        }
        let lo_end = if start == 0 && far_left { f64::NEG_INFINITY } else { at(start) };
        let hi_end = if j == count - 1 && far_right { f64::INFINITY } else { at(j) };
        out.push(Interval::new(lo_end, hi_end));
        j += 1;
    }
    IntervalSet::from_intervals(out)
}

/// Inductive k-NN regression interval: the mean of the `k` nearest proper
/// training targets, widened by the `⌈(1 − ε)(n − t + 1)⌉`-th smallest
/// calibration residual.
#[derive(Debug, Clone)]
pub struct IcpRegressor {
    train: RegressionData,
    k: usize,
    residuals: Vec<f64>,
}

impl IcpRegressor {
    pub fn calibrate(data: &RegressionData, t: usize, k: usize) -> Result<Self> {
        if t == 0 || t >= data.len() {
            return Err(Error::InvalidSplit { t, n: data.len() });
        }
        if k == 0 || k > t {
            return Err(Error::InvalidConfig(format!("k must be in 1..={t}, got {k}")));
        }
        let (train, calib) = data.split_at(t);
        let mut model = Self { train, k, residuals: Vec::new() };
        let mut residuals: Vec<f64> =
            (0..calib.len()).map(|i| (calib.target(i) - model.point(calib.object(i))).abs()).collect();
        residuals.sort_by(f64::total_cmp);
        model.residuals = residuals;
        Ok(model)
    }

    /// Sorted calibration residuals.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn point(&self, object: &[f64]) -> f64 {
        -test_coefficient(&self.train, object, self.k, &Euclidean)
    }

    pub fn half_width(&self, epsilon: f64) -> f64 {
        let m = self.residuals.len();
        let rank = ((1.0 - epsilon) * (m + 1) as f64).ceil().max(1.0) as usize;
        self.residuals[rank.min(m) - 1]
    }

    pub fn predict(&self, object: &[f64], epsilon: f64) -> Result<IntervalSet> {
        check_dim(&self.train, object)?;
        let centre = self.point(object);
        let w = self.half_width(epsilon);
        Ok(IntervalSet::from_intervals(vec![Interval::new(centre - w, centre + w)]))
    }
}

pub fn icp_regress(data: &RegressionData, t: usize, k: usize, epsilon: f64, object: &[f64]) -> Result<IntervalSet> {
    IcpRegressor::calibrate(data, t, k)?.predict(object, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Objects;

    fn line(xs: &[f64], ys: &[f64]) -> RegressionData {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        RegressionData::new(Objects::from_rows(&rows, 1).unwrap(), ys.to_vec()).unwrap()
    }

    #[test]
    fn two_point_example() {
        let z = line(&[0.0, 10.0], &[0.0, 10.0]);
        let c = reg_coefficients_baseline(&z, &[5.0], 1).unwrap();
        assert_eq!(c.a_i, vec![0.0, 10.0]);
        assert_eq!(c.b_i, vec![-1.0, -1.0]);
        assert_eq!(c.a, 0.0);
        let opt = RegressionKnnState::train(z, 1).unwrap().coefficients(&[5.0]).unwrap();
        assert_eq!(opt, c);
        assert_eq!(reg_pvalue_at(&c, 0.0), 1.0);
        assert_eq!(reg_pvalue_at(&c, 6.0), 2.0 / 3.0);
        let set = reg_prediction_set(&c, 0.9);
        assert_eq!(set.intervals(), &[Interval::new(f64::NEG_INFINITY, 5.0)]);
        assert_eq!(reg_prediction_set(&c, 0.2), IntervalSet::full());
    }

    #[test]
    fn far_test_object_displaces_nothing() {
        let z = line(&[0.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]);
        let c = reg_coefficients_baseline(&z, &[100.0], 2).unwrap();
        assert!(c.b_i.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn equal_distance_does_not_displace() {
        // Δ_0^1 = 1 and d(x, x_0) = 1.
        let z = line(&[0.0, 1.0, 5.0], &[0.0, 1.0, 2.0]);
        let st = RegressionKnnState::train(z.clone(), 1).unwrap();
        let c = st.coefficients(&[-1.0]).unwrap();
        assert_eq!(c.b_i[0], 0.0);
        assert_eq!(c, reg_coefficients_baseline(&z, &[-1.0], 1).unwrap());
    }

    #[test]
    fn regions_match_direct_comparison() {
        let cases = [(1.5, 0.0, 0.3), (-2.0, -0.2, 1.0), (0.7, -1.0, 0.2), (-0.4, -1.0, 0.4), (1.0, -0.5, -1.0)];
        for (ai, bi, a) in cases {
            let region = conforming_region(ai, bi, a).unwrap();
            for j in -400..=400 {
                let y = j as f64 * 0.0125;
                let direct = (ai + bi * y).abs() >= (a + y).abs();
                let near_edge = (y - region.lo).abs() < 1e-9 || (y - region.hi).abs() < 1e-9;
                if !near_edge {
                    assert_eq!(region.contains(y), direct, "({ai},{bi},{a}) at {y}");
                }
            }
        }
    }

    #[test]
    fn tiny_epsilon_gives_real_line() {
        let z = line(&[0.0, 1.0, 2.0, 4.0], &[0.3, -1.0, 2.0, 0.0]);
        let c = reg_coefficients_baseline(&z, &[1.5], 2).unwrap();
        assert_eq!(reg_prediction_set(&c, 0.1), IntervalSet::full());
    }

    #[test]
    fn icp_interval_widths() {
        let z = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[0.0, 2.0, 1.0, 5.0, 3.0, 7.0]);
        let icp = IcpRegressor::calibrate(&z, 3, 1).unwrap();
        let max = *icp.residuals().last().unwrap();
        assert_eq!(icp.half_width(0.0), max);
        let constant = line(&[0.0, 1.0, 2.0, 3.0], &[2.0; 4]);
        let set = icp_regress(&constant, 2, 1, 0.1, &[1.5]).unwrap();
        assert_eq!(set.intervals(), &[Interval::new(2.0, 2.0)]);
        assert!(matches!(icp_regress(&constant, 4, 1, 0.1, &[0.0]), Err(Error::InvalidSplit { .. })));
    }
}
