//! Bootstrap-ensemble nonconformity measure: `A((x, y); S) = −f^y(x)` where
//! `f^y` is the fraction of `B` trees, each fit on a bootstrap sample of `S`,
//! voting for `y`.
//!
//! The optimized variant draws size-`(n+1)` samples from `Z ∪ {∗}`, `∗` being
//! a placeholder for the test example, until every training example and `∗`
//! is missing from at least `B` samples. Trees on samples without `∗` are fit
//! once at training time; the others are refit per candidate label with `∗`
//! replaced by `(x, ŷ)`. Unlike the other measures this changes the sampling
//! scheme, so its scores are not equal to the standard variant's.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Conditioning, Dataset, Label};
use crate::engine::Scorer;
use crate::error::{Error, Result};
use crate::pvalue::ScoreVector;

use super::tree::{DecisionTree, TreeConfig};

const TREE_STREAM_SALT: u64 = 0x005e_ed0f_7aee_0001;

/// Independent RNG stream for tree number `stream` under `seed`.
fn tree_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TREE_STREAM_SALT);
    rng.set_stream(stream);
    rng
}

fn vote(tree: &DecisionTree, x: &[f64], label: Label) -> f64 {
    if tree.predict_label(x) == label {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub ensemble_size: usize,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::InvalidConfig("ensemble size B must be at least 1".into()));
        }
        Ok(())
    }
}

/// `B` trees fit on bootstrap samples of a fixed set; used by the standard
/// variant and by inductive conformal prediction.
#[derive(Debug, Clone)]
pub struct Ensemble {
    trees: Vec<DecisionTree>,
}

impl Ensemble {
    /// Fits `B` trees on size-`|set|` samples with replacement. `stream_base`
    /// separates the RNG streams of different ensembles under one seed.
    pub fn fit(set: &[(&[f64], Label)], n_labels: usize, config: &BootstrapConfig, stream_base: u64) -> Self {
        let mut sampler = tree_rng(config.seed, stream_base.wrapping_mul(2));
        let mut tree_stream = tree_rng(config.seed, stream_base.wrapping_mul(2) + 1);
        let mut sample = Vec::with_capacity(set.len());
        let trees = (0..config.ensemble_size)
            .map(|_| {
                sample.clear();
                sample.extend((0..set.len()).map(|_| set[sampler.random_range(0..set.len())]));
                DecisionTree::train(&sample, n_labels, &config.tree, &mut tree_stream)
            })
            .collect();
        Self { trees }
    }

    /// `f^y(x)`: fraction of trees voting for `label`.
    pub fn confidence(&self, x: &[f64], label: Label) -> f64 {
        self.trees.iter().map(|t| vote(t, x, label)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn score_bootstrap(
    cond: &Conditioning<'_>,
    object: &[f64],
    label: Label,
    config: &BootstrapConfig,
    stream_base: u64,
) -> f64 {
    let set: Vec<(&[f64], Label)> = cond.iter().collect();
    if set.is_empty() {
        return 0.0;
    }
    -Ensemble::fit(&set, cond.n_labels(), config, stream_base).confidence(object, label)
}

/// Fits fresh ensembles for every leave-one-out score: `O(B·n)` trees per
/// candidate label.
#[derive(Debug, Clone)]
pub struct StandardBootstrap {
    data: Dataset,
    config: BootstrapConfig,
}

impl StandardBootstrap {
    pub fn new(data: Dataset, config: BootstrapConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { data, config })
    }
}

impl Scorer for StandardBootstrap {
    fn name(&self) -> &'static str {
        "standard bootstrap"
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
                score_bootstrap(&cond, z.object(i), z.label(i), &self.config, i as u64)
            })
            .collect();
        let test = score_bootstrap(&Conditioning::plain(z), object, label, &self.config, z.len() as u64);
        Ok(ScoreVector::new(training, test))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Entry {
    /// Vote of a tree fit at training time on a sample without `∗`.
    Pretrained(f64),
    /// Index into the pending samples, which contain `∗`.
    Pending(usize),
}

#[derive(Debug, Clone)]
struct PendingSample {
    draw: usize,
    /// Indices into `Z*`; `n` denotes the placeholder.
    indices: Vec<u32>,
    /// Training examples whose score uses this sample.
    users: Vec<usize>,
}

/// Trained state of the optimized bootstrap measure.
#[derive(Debug, Clone)]
pub struct BootstrapState {
    draws: usize,
    entries: Vec<Vec<Entry>>,
    exclusions: Vec<usize>,
    placeholder_exclusions: usize,
    pending: Vec<PendingSample>,
    test_trees: Vec<DecisionTree>,
    test_samples: Vec<Vec<u32>>,
}

impl BootstrapState {
    /// `B'`: number of bootstrap samples drawn.
    pub fn draws(&self) -> usize {
        self.draws
    }

    /// `|E_i|` after truncation.
    pub fn samples_for(&self, i: usize) -> usize {
        self.entries[i].len()
    }

    /// `|E|` after truncation.
    pub fn placeholder_samples(&self) -> usize {
        self.test_trees.len()
    }

    /// Number of the `B'` samples that miss example `i`, before truncation.
    pub fn exclusions(&self, i: usize) -> usize {
        self.exclusions[i]
    }

    pub fn placeholder_exclusions(&self) -> usize {
        self.placeholder_exclusions
    }

    /// Pretrained entries of `E_i`.
    pub fn pretrained_for(&self, i: usize) -> usize {
        self.entries[i].iter().filter(|e| matches!(e, Entry::Pretrained(_))).count()
    }

    /// Index multisets of the samples behind `E`.
    pub fn placeholder_sample_indices(&self) -> &[Vec<u32>] {
        &self.test_samples
    }

    /// Index multisets of the stored samples that contain `∗`.
    pub fn pending_sample_indices(&self) -> impl Iterator<Item = &[u32]> {
        self.pending.iter().map(|p| p.indices.as_slice())
    }
}

/// Optimized bootstrap conformal scorer.
#[derive(Debug, Clone)]
pub struct OptimizedBootstrap {
    data: Dataset,
    config: BootstrapConfig,
    state: BootstrapState,
}

impl OptimizedBootstrap {
    pub fn train(data: Dataset, config: BootstrapConfig) -> Result<Self> {
        config.validate()?;
        let n = data.len();
        let b = config.ensemble_size;
        let placeholder = n as u32;
        let max_draws = (1000.0 * b as f64 * std::f64::consts::E).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let mut present = vec![usize::MAX; n + 1];
        let mut exclusions = vec![0usize; n];
        let mut placeholder_exclusions = 0usize;
        let mut kept: Vec<Vec<usize>> = vec![Vec::with_capacity(b); n];
        let mut kept_for_test: Vec<usize> = Vec::with_capacity(b);
        let mut samples: Vec<Option<Vec<u32>>> = Vec::new();
        let mut missing = n + 1;

        let mut draw = 0usize;
        while missing > 0 {
            if draw >= max_draws {
                return Err(Error::BootstrapExhausted { draws: draw });
            }
            let sample: Vec<u32> = (0..=n).map(|_| rng.random_range(0..=placeholder)).collect();
            for &j in &sample {
                present[j as usize] = draw;
            }
            let mut used = false;
            for i in 0..n {
                if present[i] != draw {
                    exclusions[i] += 1;
                    if kept[i].len() < b {
                        kept[i].push(draw);
                        used = true;
                        if kept[i].len() == b {
                            missing -= 1;
                        }
                    }
                }
            }
            if present[n] != draw {
                placeholder_exclusions += 1;
                if kept_for_test.len() < b {
                    kept_for_test.push(draw);
                    used = true;
                    if kept_for_test.len() == b {
                        missing -= 1;
                    }
                }
            }
            samples.push(used.then_some(sample));
            draw += 1;
        }

        let n_labels = data.n_labels();
        let fit = |indices: &[u32], draw: usize| -> DecisionTree {
            let set: Vec<(&[f64], Label)> =
                indices.iter().map(|&j| (data.object(j as usize), data.label(j as usize))).collect();
            DecisionTree::train(&set, n_labels, &config.tree, &mut tree_rng(config.seed, draw as u64))
        };

        let contains_placeholder = |s: &[u32]| s.contains(&placeholder);
        let mut pretrained: Vec<Option<DecisionTree>> = vec![None; samples.len()];
        let mut pending_slot: Vec<Option<usize>> = vec![None; samples.len()];
        let mut pending: Vec<PendingSample> = Vec::new();
        let mut entries: Vec<Vec<Entry>> = Vec::with_capacity(n);
        for (i, draws_i) in kept.iter().enumerate() {
            let mut row = Vec::with_capacity(b);
            for &d in draws_i {
                let sample = samples[d].as_deref().expect("kept sample is stored");
                if contains_placeholder(sample) {
                    let slot = *pending_slot[d].get_or_insert_with(|| {
                        pending.push(PendingSample { draw: d, indices: sample.to_vec(), users: Vec::new() });
                        pending.len() - 1
                    });
                    pending[slot].users.push(i);
                    row.push(Entry::Pending(slot));
                } else {
                    let tree = pretrained[d].get_or_insert_with(|| fit(sample, d));
                    row.push(Entry::Pretrained(vote(tree, data.object(i), data.label(i))));
                }
            }
            entries.push(row);
        }
        let mut test_trees = Vec::with_capacity(b);
        let mut test_samples = Vec::with_capacity(b);
        for &d in &kept_for_test {
            let sample = samples[d].as_deref().expect("kept sample is stored");
            test_trees.push(pretrained[d].take().unwrap_or_else(|| fit(sample, d)));
            test_samples.push(sample.to_vec());
        }

        let state = BootstrapState {
            draws: draw,
            entries,
            exclusions,
            placeholder_exclusions,
            pending,
            test_trees,
            test_samples,
        };
        Ok(Self { data, config, state })
    }

    pub fn state(&self) -> &BootstrapState {
        &self.state
    }
}

impl Scorer for OptimizedBootstrap {
    fn name(&self) -> &'static str {
        "optimized bootstrap"
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
        let n = z.len();
        let b = self.config.ensemble_size as f64;
        // Votes of the refit trees, per pending sample and user.
        let mut pending_votes: Vec<Vec<f64>> = Vec::with_capacity(self.state.pending.len());
        let mut set: Vec<(&[f64], Label)> = Vec::with_capacity(n + 1);
        for p in &self.state.pending {
            set.clear();
            set.extend(p.indices.iter().map(|&j| {
                let j = j as usize;
                if j == n {
                    (object, label)
                } else {
                    (z.object(j), z.label(j))
                }
            }));
            let tree = DecisionTree::train(
                &set,
                z.n_labels(),
                &self.config.tree,
                &mut tree_rng(self.config.seed, p.draw as u64),
            );
            pending_votes.push(p.users.iter().map(|&i| vote(&tree, z.object(i), z.label(i))).collect());
        }
        let mut cursor = vec![0usize; pending_votes.len()];
        let training = self
            .state
            .entries
            .iter()
            .map(|row| {
                let total: f64 = row
                    .iter()
                    .map(|e| match *e {
                        Entry::Pretrained(v) => v,
                        Entry::Pending(slot) => {
                            let v = pending_votes[slot][cursor[slot]];
                            cursor[slot] += 1;
                            v
                        }
                    })
                    .sum();
                -total / b
            })
            .collect();
        let test = -self.state.test_trees.iter().map(|t| vote(t, object, label)).sum::<f64>() / b;
        Ok(ScoreVector::new(training, test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelAlphabet, Objects};

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let c = (i % 2) as f64 * 3.0;
                [c + rng.random::<f64>(), c + rng.random::<f64>()]
            })
            .collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(Objects::from_rows(&rows, 2).unwrap(), labels, LabelAlphabet::numbered(2)).unwrap()
    }

    fn config(b: usize, depth: usize) -> BootstrapConfig {
        BootstrapConfig { ensemble_size: b, tree: TreeConfig { max_depth: depth, features_per_split: None }, seed: 11 }
    }

    #[test]
    fn truncation_invariants() {
        let m = OptimizedBootstrap::train(blobs(30, 1), config(10, 10)).unwrap();
        let st = m.state();
        assert_eq!(st.placeholder_samples(), 10);
        for i in 0..30 {
            assert_eq!(st.samples_for(i), 10);
            assert!(st.exclusions(i) >= 10);
        }
        for s in st.placeholder_sample_indices() {
            assert_eq!(s.len(), 31);
            assert!(!s.contains(&30));
        }
        for s in st.pending_sample_indices() {
            assert_eq!(s.len(), 31);
            assert!(s.contains(&30));
        }
    }

    #[test]
    fn smallest_instance() {
        let m = OptimizedBootstrap::train(blobs(1, 2), config(1, 10)).unwrap();
        assert_eq!(m.state().samples_for(0), 1);
        assert_eq!(m.state().placeholder_samples(), 1);
        let s = m.score_vector(&[0.5, 0.5], 0).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = OptimizedBootstrap::train(blobs(25, 3), config(5, 4)).unwrap();
        let b = OptimizedBootstrap::train(blobs(25, 3), config(5, 4)).unwrap();
        for x in [[0.2, 0.4], [3.1, 3.3]] {
            assert_eq!(a.score_vectors(&x).unwrap(), b.score_vectors(&x).unwrap());
        }
    }

    #[test]
    fn not_incremental() {
        let mut m = OptimizedBootstrap::train(blobs(5, 4), config(2, 2)).unwrap();
        assert!(matches!(m.observe(&[0.0, 0.0], 0), Err(Error::NotIncremental(_))));
    }
}
