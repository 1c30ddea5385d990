//! CART decision tree with Gini impurity and per-node random feature subsets.

use rand::seq::index;
use rand::Rng;

use crate::data::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Candidate features drawn at every node; `None` means `⌊√p⌋` (at least 1).
    pub features_per_split: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 10, features_per_split: None }
    }
}

impl TreeConfig {
    pub fn features_for(&self, dim: usize) -> usize {
        self.features_per_split.unwrap_or_else(|| (dim as f64).sqrt().floor() as usize).clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { confidence: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct Builder<'s, 'r, R: Rng> {
    sample: &'s [(&'s [f64], Label)],
    n_labels: usize,
    dim: usize,
    max_depth: usize,
    n_features: usize,
    rng: &'r mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
    at: usize,
}

impl<R: Rng> Builder<'_, '_, R> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mut confidence = vec![0.0; self.n_labels];
        for &i in idx {
            confidence[self.sample[i].1] += 1.0;
        }
        let total = idx.len() as f64;
        confidence.iter_mut().for_each(|c| *c /= total);
        self.nodes.push(Node::Leaf { confidence });
        self.nodes.len() - 1
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.sample[idx[0]].1;
        idx.iter().all(|&i| self.sample[i].1 == first)
    }

    /// Best split on `feature`, maximizing `Σc_l²/n_l + Σc_r²/n_r`
    /// (equivalently minimizing the weighted Gini impurity). Sorts `idx`.
    fn best_on_feature(&self, idx: &mut [usize], feature: usize) -> Option<BestSplit> {
        let s = self.sample;
        idx.sort_by(|&a, &b| s[a].0[feature].total_cmp(&s[b].0[feature]));
        let n = idx.len();
        let mut right = vec![0usize; self.n_labels];
        for &i in idx.iter() {
            right[s[i].1] += 1;
        }
        let mut left = vec![0usize; self.n_labels];
        let mut left_sq: f64 = 0.0;
        let mut right_sq: f64 = right.iter().map(|&c| (c * c) as f64).sum();
        let mut best: Option<BestSplit> = None;
        for pos in 0..n - 1 {
            let l = s[idx[pos]].1;
            left_sq += (2 * left[l] + 1) as f64;
            left[l] += 1;
            right_sq -= (2 * right[l] - 1) as f64;
            right[l] -= 1;
            let a = s[idx[pos]].0[feature];
            let b = s[idx[pos + 1]].0[feature];
            if a == b {
                continue;
            }
            let nl = (pos + 1) as f64;
            let nr = (n - pos - 1) as f64;
            let score = left_sq / nl + right_sq / nr;
            if best.as_ref().is_none_or(|bs| score > bs.score) {
                let mid = 0.5 * (a + b);
                let threshold = if mid < b { mid } else { a };
                best = Some(BestSplit { score, feature, threshold, at: pos + 1 });
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        if depth >= self.max_depth || idx.len() < 2 || self.is_pure(idx) {
            return self.leaf(idx);
        }
        let order: Vec<usize> = index::sample(self.rng, self.dim, self.dim).into_vec();
        let mut best: Option<BestSplit> = None;
        // Drawn features first; fall back to the rest only when none can split.
        for (rank, &feature) in order.iter().enumerate() {
            if rank >= self.n_features && best.is_some() {
                break;
            }
            if let Some(candidate) = self.best_on_feature(idx, feature) {
                if best.as_ref().is_none_or(|b| candidate.score > b.score) {
                    best = Some(candidate);
                }
            }
        }
        let Some(best) = best else {
            return self.leaf(idx);
        };
        let s = self.sample;
        idx.sort_by(|&a, &b| s[a].0[best.feature].total_cmp(&s[b].0[best.feature]));
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { confidence: Vec::new() });
        let (lo, hi) = idx.split_at_mut(best.at);
        let left = self.build(lo, depth + 1);
        let right = self.build(hi, depth + 1);
        self.nodes[me] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        me
    }
}

impl DecisionTree {
    /// Fits a tree on a non-empty sample. Deterministic given the RNG stream.
    pub fn train<R: Rng>(sample: &[(&[f64], Label)], n_labels: usize, config: &TreeConfig, rng: &mut R) -> Self {
        assert!(!sample.is_empty(), "cannot fit a tree on an empty sample");
        let dim = sample[0].0.len();
        let mut builder = Builder {
            sample,
            n_labels,
            dim,
            max_depth: config.max_depth,
            n_features: config.features_for(dim),
            rng,
            nodes: Vec::new(),
        };
        let mut idx: Vec<usize> = (0..sample.len()).collect();
        builder.build(&mut idx, 0);
        Self { nodes: builder.nodes }
    }

    /// Label frequencies of the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { confidence } => return confidence,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Most frequent leaf label; ties go to the smallest id.
    pub fn predict_label(&self, x: &[f64]) -> Label {
        let conf = self.predict(x);
        let mut best = 0;
        for (l, &c) in conf.iter().enumerate() {
            if c > conf[best] {
                best = l;
            }
        }
        best
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_sample_is_a_stump() {
        let xs = [[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        let sample: Vec<(&[f64], Label)> = xs.iter().map(|x| (&x[..], 1)).collect();
        let t = DecisionTree::train(&sample, 3, &TreeConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[9.0, 9.0]), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn xor_is_learned_exactly() {
        let xs = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let ys = [0, 0, 1, 1];
        let sample: Vec<(&[f64], Label)> = xs.iter().zip(ys).map(|(x, y)| (&x[..], y)).collect();
        let cfg = TreeConfig { max_depth: 2, features_per_split: Some(2) };
        for seed in 0..5 {
            let t = DecisionTree::train(&sample, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            for (x, y) in xs.iter().zip(ys) {
                assert_eq!(t.predict_label(x), y);
            }
        }
    }

    #[test]
    fn confidence_sums_to_one() {
        let xs: Vec<[f64; 3]> = (0..50).map(|i| [(i as f64).sin(), (i as f64 * 0.3).cos(), i as f64]).collect();
        let sample: Vec<(&[f64], Label)> = xs.iter().enumerate().map(|(i, x)| (&x[..], i % 3)).collect();
        let cfg = TreeConfig { max_depth: 3, features_per_split: None };
        let t = DecisionTree::train(&sample, 3, &cfg, &mut ChaCha8Rng::seed_from_u64(7));
        for x in &xs {
            let s: f64 = t.predict(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(t.depth() <= 3);
    }

    #[test]
    fn depth_zero_predicts_majority() {
        let xs = [[0.0], [1.0], [2.0]];
        let sample: Vec<(&[f64], Label)> = vec![(&xs[0][..], 1), (&xs[1][..], 0), (&xs[2][..], 1)];
        let cfg = TreeConfig { max_depth: 0, features_per_split: None };
        let t = DecisionTree::train(&sample, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.predict_label(&[0.0]), 1);
    }
}
