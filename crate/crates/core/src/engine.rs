//! Full (transductive) conformal classification over any scorer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::pvalue::{compute_smoothed_pvalue, PValueVector, ScoreVector};

/// A trained (or data-holding) nonconformity measure that can produce the
/// leave-one-out score vector for the augmented set `{(x, ŷ)} ∪ Z`.
///
/// Implementations are immutable during prediction, so one scorer can serve
/// many threads. `observe` needs exclusive access.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of training examples `n`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    fn n_labels(&self) -> usize;

    fn score_vector(&self, object: &[f64], label: Label) -> Result<ScoreVector>;

    /// Score vectors for every candidate label, in label order.
    fn score_vectors(&self, object: &[f64]) -> Result<Vec<ScoreVector>> {
        (0..self.n_labels()).map(|l| self.score_vector(object, l)).collect()
    }

    /// Learns one more training example in place.
    fn observe(&mut self, _object: &[f64], _label: Label) -> Result<()> {
        Err(Error::NotIncremental(self.name()))
    }

    fn pvalue(&self, object: &[f64], label: Label) -> Result<f64> {
        Ok(self.score_vector(object, label)?.pvalue())
    }
}

fn check_object(scorer: &dyn Scorer, object: &[f64]) -> Result<()> {
    if object.len() != scorer.dim() {
        return Err(Error::DimensionMismatch { expected: scorer.dim(), found: object.len() });
    }
    Ok(())
}

/// P-values for every label of the alphabet.
pub fn classify(scorer: &dyn Scorer, object: &[f64]) -> Result<PValueVector> {
    check_object(scorer, object)?;
    let vectors = scorer.score_vectors(object)?;
    Ok(PValueVector::new(vectors.iter().map(ScoreVector::pvalue).collect()))
}

/// Like [`classify`], with the (object, label) pairs spread over the rayon
/// pool.
pub fn classify_parallel(scorer: &dyn Scorer, object: &[f64]) -> Result<PValueVector> {
    check_object(scorer, object)?;
    let per_label =
        (0..scorer.n_labels()).into_par_iter().map(|l| scorer.pvalue(object, l)).collect::<Result<Vec<_>>>()?;
    Ok(PValueVector::new(per_label))
}

/// Classifies many objects, parallel over (object, label) pairs.
pub fn classify_batch_parallel<'a, I>(scorer: &dyn Scorer, objects: I) -> Result<Vec<PValueVector>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let objects: Vec<&[f64]> = objects.into_iter().collect();
    for o in &objects {
        check_object(scorer, o)?;
    }
    let ell = scorer.n_labels();
    let flat = (0..objects.len() * ell)
        .into_par_iter()
        .map(|k| scorer.pvalue(objects[k / ell], k % ell))
        .collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(ell.max(1)).map(|c| PValueVector::new(c.to_vec())).collect())
}

/// Online prediction: at each step, the p-value of the arriving example with
/// its true label given everything seen so far, after which the example is
/// learned incrementally.
pub struct OnlineStream<S: Scorer> {
    scorer: S,
    smoothing: Option<ChaCha8Rng>,
}

impl<S: Scorer> OnlineStream<S> {
    pub fn new(scorer: S) -> Self {
        Self { scorer, smoothing: None }
    }

    /// Smoothed p-values with tie-breaking `τ` drawn from a seeded stream.
    pub fn smoothed(scorer: S, seed: u64) -> Self {
        Self { scorer, smoothing: Some(ChaCha8Rng::seed_from_u64(seed)) }
    }

    pub fn scorer(&self) -> &S {
        &self.scorer
    }

    pub fn into_inner(self) -> S {
        self.scorer
    }

    pub fn step(&mut self, object: &[f64], label: Label) -> Result<f64> {
        check_object(&self.scorer, object)?;
        let scores = self.scorer.score_vector(object, label)?;
        let p = match &mut self.smoothing {
            Some(rng) => {
                let tau: f64 = rng.random();
                compute_smoothed_pvalue(&scores.training_scores, scores.test_score, tau)
            }
            None => scores.pvalue(),
        };
        self.scorer.observe(object, label)?;
        Ok(p)
    }
}
