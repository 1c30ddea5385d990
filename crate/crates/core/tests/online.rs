mod common;

use common::{binarize, blobs, max_rel_err};
use fullcp::measures::kde::OptimizedKde;
use fullcp::measures::knn::{KnnVariant, OptimizedKnn};
use fullcp::measures::lssvm::{FeatureMap, OptimizedLssvm};
use fullcp::measures::metric::{Euclidean, Gaussian};
use fullcp::{build_scorer, classify, Dataset, Error, MeasureKind, OnlineStream, Scorer, ScorerConfig, Variant};

fn grow<S: Scorer>(mut scorer: S, stream: &Dataset) -> S {
    for i in 0..stream.len() {
        scorer.observe(stream.object(i), stream.label(i)).unwrap();
    }
    scorer
}

#[test]
fn knn_observe_matches_retraining_exactly() {
    let all = blobs(70, 4, 3, 21);
    let (base, extra) = all.split_at(50);
    let probes = blobs(5, 4, 3, 22);
    for (variant, k) in [(KnnVariant::Simplified, 4), (KnnVariant::Full, 4), (KnnVariant::Full, 1)] {
        let grown = grow(OptimizedKnn::train(base.clone(), k, variant, Euclidean).unwrap(), &extra);
        let fresh = OptimizedKnn::train(all.clone(), k, variant, Euclidean).unwrap();
        for x in probes.objects().rows() {
            assert_eq!(grown.score_vectors(x).unwrap(), fresh.score_vectors(x).unwrap());
        }
    }
}

#[test]
fn kde_and_lssvm_observe_match_retraining() {
    let all = blobs(60, 3, 2, 23);
    let (base, extra) = all.split_at(40);
    let probes = blobs(5, 3, 2, 24);
    let grown = grow(OptimizedKde::train(base.clone(), 1.0, Gaussian).unwrap(), &extra);
    let fresh = OptimizedKde::train(all.clone(), 1.0, Gaussian).unwrap();
    let all2 = binarize(&all);
    let grown_svm = grow(OptimizedLssvm::train(all2.slice(0..40), FeatureMap::Affine, 1.0).unwrap(), &extra);
    let fresh_svm = OptimizedLssvm::train(all2, FeatureMap::Affine, 1.0).unwrap();
    for x in probes.objects().rows() {
        for (a, b) in [
            (grown.score_vectors(x).unwrap(), fresh.score_vectors(x).unwrap()),
            (grown_svm.score_vectors(x).unwrap(), fresh_svm.score_vectors(x).unwrap()),
        ] {
            for (sa, sb) in a.iter().zip(&b) {
                assert!(max_rel_err(&sa.training_scores, &sb.training_scores) <= 1e-8);
                assert_eq!(sa.pvalue(), sb.pvalue());
            }
        }
    }
}

#[test]
fn standard_and_bootstrap_scorers_refuse_observe() {
    let z = blobs(10, 2, 2, 25);
    for (measure, variant) in [(MeasureKind::Knn, Variant::Standard), (MeasureKind::Bootstrap, Variant::Optimized)] {
        let mut s = build_scorer(&ScorerConfig::new(measure), variant, z.clone()).unwrap();
        assert!(matches!(s.observe(z.object(0), 0), Err(Error::NotIncremental(_))));
    }
}

#[test]
fn stream_pvalues_match_batch_classification() {
    let data = blobs(80, 3, 2, 26);
    let (seed_set, stream) = data.split_at(10);
    let mut online = OnlineStream::new(OptimizedKnn::train(seed_set, 3, KnnVariant::Full, Euclidean).unwrap());
    for i in 0..stream.len() {
        let batch = OptimizedKnn::train(data.slice(0..10 + i), 3, KnnVariant::Full, Euclidean).unwrap();
        let expected = classify(&batch, stream.object(i)).unwrap().get(stream.label(i));
        assert_eq!(online.step(stream.object(i), stream.label(i)).unwrap(), expected);
    }
    assert_eq!(online.scorer().len(), 80);
}
