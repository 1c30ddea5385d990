mod common;

use common::max_rel_err;
use fullcp::measures::lssvm::{FeatureMap, LssvmModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    dim: usize,
}

impl Case {
    fn random(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Self {
        let xs = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        Self { xs, ys, dim }
    }

    fn train(&self, range: std::ops::Range<usize>) -> LssvmModel {
        let it = range.map(|i| (self.xs[i].as_slice(), self.ys[i]));
        LssvmModel::train(it, self.dim, FeatureMap::Identity, 1.0).unwrap()
    }
}

fn matrix_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(f64::MIN_POSITIVE)
}

fn assert_models_close(a: &LssvmModel, b: &LssvmModel, tol: f64) {
    assert!(max_rel_err(a.weights().as_slice(), b.weights().as_slice()) <= tol);
    assert!(matrix_rel_err(a.auxiliary(), b.auxiliary()) <= tol);
}

#[test]
fn single_example_closed_form() {
    let m = LssvmModel::train([(&[1.0][..], 1.0)], 1, FeatureMap::Identity, 1.0).unwrap();
    assert!((m.weights()[0] - 0.5).abs() < 1e-15);
    let inc = LssvmModel::empty(1, FeatureMap::Identity, 1.0).unwrap().increment(&[1.0], 1.0).unwrap();
    assert!((inc.weights()[0] - 0.5).abs() < 1e-15);
}

#[test]
fn primal_matches_dual_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let case = Case::random(&mut rng, 200, 6);
    let it = || (0..200).map(|i| (case.xs[i].as_slice(), case.ys[i]));
    let primal = LssvmModel::train(it(), 6, FeatureMap::Identity, 1.0).unwrap();
    let dual = LssvmModel::train_dual(it(), 6, FeatureMap::Identity, 1.0).unwrap();
    assert_models_close(&primal, &dual, 1e-8);
}

#[test]
fn updates_match_batch_retraining() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..40 {
        let n = rng.random_range(2..=60);
        let dim = rng.random_range(1..=8);
        let case = Case::random(&mut rng, n, dim);
        let head = case.train(0..n - 1);
        let full = case.train(0..n);
        let (x, y) = (&case.xs[n - 1], case.ys[n - 1]);
        assert_models_close(&head.increment(x, y).unwrap(), &full, 1e-6);
        assert_models_close(&full.decrement(x, y).unwrap(), &head, 1e-6);
        assert_models_close(&head.increment(x, y).unwrap().decrement(x, y).unwrap(), &head, 1e-6);
        assert_models_close(&full.decrement(x, y).unwrap().increment(x, y).unwrap(), &full, 1e-6);
    }
}

#[test]
fn auxiliary_matrix_stays_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let case = Case::random(&mut rng, 30, 5);
    let mut m = LssvmModel::empty(5, FeatureMap::Identity, 1.0).unwrap();
    for i in 0..30 {
        m = m.increment(&case.xs[i], case.ys[i]).unwrap();
        let c = m.auxiliary();
        assert!((c - c.transpose()).amax() <= 1e-8);
    }
}

#[test]
fn two_example_decrement() {
    let case = Case { xs: vec![vec![0.5, -1.0], vec![2.0, 0.25]], ys: vec![1.0, -1.0], dim: 2 };
    let both = case.train(0..2);
    assert_models_close(&both.decrement(&case.xs[1], case.ys[1]).unwrap(), &case.train(0..1), 1e-6);
    let none = both.decrement(&case.xs[1], case.ys[1]).unwrap().decrement(&case.xs[0], case.ys[0]).unwrap();
    assert!(none.weights().amax() < 1e-6);
}
