mod common;

use common::{binarize, blobs, max_rel_err};
use fullcp::measures::kde::{OptimizedKde, StandardKde};
use fullcp::measures::knn::{KnnVariant, OptimizedKnn, StandardKnn};
use fullcp::measures::lssvm::{FeatureMap, OptimizedLssvm, StandardLssvm};
use fullcp::measures::metric::{Euclidean, Gaussian};
use fullcp::{build_scorer, classify, Dataset, LabelAlphabet, MeasureKind, Objects, Scorer, ScorerConfig, Variant};
use proptest::prelude::*;

fn tests_for(data: &Dataset, count: usize, seed: u64) -> Dataset {
    blobs(count, data.dim(), data.n_labels().max(2), seed ^ 0xabc)
}

fn assert_identical(standard: &dyn Scorer, optimized: &dyn Scorer, tests: &Dataset) {
    for x in tests.objects().rows() {
        assert_eq!(standard.score_vectors(x).unwrap(), optimized.score_vectors(x).unwrap());
    }
}

fn assert_close(standard: &dyn Scorer, optimized: &dyn Scorer, tests: &Dataset, tol: f64) {
    for x in tests.objects().rows() {
        let a = standard.score_vectors(x).unwrap();
        let b = optimized.score_vectors(x).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert!(max_rel_err(&sa.training_scores, &sb.training_scores) <= tol);
            assert!(max_rel_err(&[sa.test_score], &[sb.test_score]) <= tol);
            assert_eq!(sa.pvalue(), sb.pvalue());
        }
    }
}

#[test]
fn knn_family_is_exact() {
    for (seed, n, labels) in [(1, 30, 2), (2, 60, 3), (3, 45, 4)] {
        let z = blobs(n, 5, labels, seed);
        let tests = tests_for(&z, 5, seed);
        for (variant, k) in [(KnnVariant::Simplified, 3), (KnnVariant::Full, 1), (KnnVariant::Full, 7)] {
            let s = StandardKnn::new(z.clone(), k, variant, Euclidean).unwrap();
            let o = OptimizedKnn::train(z.clone(), k, variant, Euclidean).unwrap();
            assert_identical(&s, &o, &tests);
        }
    }
}

#[test]
fn kde_within_tolerance() {
    for (seed, n, labels) in [(4, 40, 2), (5, 80, 4)] {
        let z = blobs(n, 5, labels, seed);
        let tests = tests_for(&z, 5, seed);
        for h in [0.5, 1.0, 3.0] {
            let s = StandardKde::new(z.clone(), h, Gaussian).unwrap();
            let o = OptimizedKde::train(z.clone(), h, Gaussian).unwrap();
            assert_close(&s, &o, &tests, 1e-8);
        }
    }
}

#[test]
fn lssvm_within_tolerance() {
    for (seed, n) in [(6, 60), (7, 35)] {
        let z = binarize(&blobs(n, 3, 4, seed));
        let tests = tests_for(&z, 5, seed);
        for map in [FeatureMap::Identity, FeatureMap::Affine, FeatureMap::Quadratic] {
            let s = StandardLssvm::new(z.clone(), map, 1.0).unwrap();
            let o = OptimizedLssvm::train(z.clone(), map, 1.0).unwrap();
            assert_close(&s, &o, &tests, 1e-6);
        }
    }
}

#[test]
fn builder_variants_agree_on_pvalues() {
    let z = blobs(40, 4, 2, 8);
    let tests = tests_for(&z, 4, 8);
    for measure in [MeasureKind::Nn, MeasureKind::Knn, MeasureKind::SimplifiedKnn, MeasureKind::Kde, MeasureKind::Lssvm]
    {
        let cfg = ScorerConfig { k: 5, ..ScorerConfig::new(measure) };
        let s = build_scorer(&cfg, Variant::Standard, z.clone()).unwrap();
        let o = build_scorer(&cfg, Variant::Optimized, z.clone()).unwrap();
        for x in tests.objects().rows() {
            assert_eq!(classify(s.as_ref(), x).unwrap(), classify(o.as_ref(), x).unwrap(), "{measure}");
        }
    }
}

#[test]
fn nn_example_prefers_nearby_label() {
    let objects = Objects::from_rows(&[[0.0], [1.0], [3.0]], 1).unwrap();
    let z = Dataset::new(objects, vec![0, 0, 1], LabelAlphabet::new(["A", "B"]).unwrap()).unwrap();
    let s = build_scorer(&ScorerConfig::new(MeasureKind::Nn), Variant::Standard, z).unwrap();
    let p = classify(s.as_ref(), &[0.5]).unwrap();
    assert_eq!(p.len(), 2);
    assert!(p.get(0) > p.get(1));
}

fn line_dataset(xs: &[f64], labels: &[usize]) -> Dataset {
    let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
    Dataset::new(Objects::from_rows(&rows, 1).unwrap(), labels.to_vec(), LabelAlphabet::numbered(2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn knn_exact_on_random_lines(
        points in prop::collection::vec((-100.0f64..100.0, 0usize..2), 100),
        x in -120.0f64..120.0,
        k in 1usize..8,
        simplified in any::<bool>(),
    ) {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ls: Vec<usize> = points.iter().map(|p| p.1).collect();
        let z = line_dataset(&xs, &ls);
        let variant = if simplified { KnnVariant::Simplified } else { KnnVariant::Full };
        let s = StandardKnn::new(z.clone(), k, variant, Euclidean).unwrap();
        let o = OptimizedKnn::train(z, k, variant, Euclidean).unwrap();
        prop_assert_eq!(s.score_vectors(&[x]).unwrap(), o.score_vectors(&[x]).unwrap());
    }

    #[test]
    fn knn_updates_only_displaced_neighbourhoods(
        points in prop::collection::vec((-10.0f64..10.0, 0usize..2), 30),
        x in -12.0f64..12.0,
        label in 0usize..2,
        k in 1usize..5,
    ) {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ls: Vec<usize> = points.iter().map(|p| p.1).collect();
        let z = line_dataset(&xs, &ls);
        let o = OptimizedKnn::train(z.clone(), k, KnnVariant::Simplified, Euclidean).unwrap();
        let v = o.score_vector(&[x], label).unwrap();
        for i in 0..z.len() {
            let d = (z.object(i)[0] - x).abs();
            let nb = o.state().same_label_neighbours(i);
            let displaced = z.label(i) == label && nb.displaced_by(d, k);
            prop_assert_eq!(v.training_scores[i] != o.provisional_score(i), displaced);
        }
    }
}
