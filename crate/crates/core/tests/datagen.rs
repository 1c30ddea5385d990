mod common;

use common::{blobs, linear};
use fullcp::datagen::{
    gen_classification, load_csv, load_regression_csv, read_csv, save_csv, save_regression_csv, write_csv, GenSpec,
};
use fullcp::measures::knn::score_nn;
use fullcp::measures::metric::Euclidean;
use fullcp::{Conditioning, Dataset, LabelAlphabet, Objects};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn same_seed_same_bytes() {
    let spec = GenSpec { n: 50, dim: 4, n_labels: 3, seed: 9, ..GenSpec::default() };
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_csv(&gen_classification(&spec).unwrap(), &mut a).unwrap();
    write_csv(&gen_classification(&spec).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    assert_eq!(linear(20, 3, 0.1, 4), linear(20, 3, 0.1, 4));
}

#[test]
fn well_separated_blobs_are_nearly_perfect_for_1nn() {
    let spec = GenSpec { n: 200, class_sep: 10.0, seed: 3, ..GenSpec::default() };
    let z = gen_classification(&spec).unwrap();
    let correct = (0..z.len())
        .filter(|&i| {
            let cond = Conditioning::new(&z, Some(i), None);
            let own = score_nn(&cond, z.object(i), z.label(i), &Euclidean);
            let other = score_nn(&cond, z.object(i), 1 - z.label(i), &Euclidean);
            own < other
        })
        .count();
    assert!(correct as f64 / z.len() as f64 > 0.95);
}

fn least_squares_residuals(data: &fullcp::RegressionData) -> Vec<f64> {
    let x = DMatrix::from_row_slice(data.len(), data.dim(), data.objects().as_flat());
    let y = DVector::from_column_slice(data.targets());
    let beta = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
    (y - x * beta).iter().copied().collect()
}

#[test]
fn noiseless_regression_is_exactly_linear() {
    let r = least_squares_residuals(&linear(100, 5, 0.0, 12));
    assert!(r.iter().all(|e| e.abs() < 1e-9));
}

#[test]
fn residual_spread_tracks_noise() {
    let r = least_squares_residuals(&linear(1000, 30, 0.1, 13));
    let sd = (r.iter().map(|e| e * e).sum::<f64>() / (r.len() - 30) as f64).sqrt();
    assert!((0.05..=0.2).contains(&sd), "{sd}");
}

#[test]
fn file_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let z = blobs(30, 3, 3, 14);
    save_csv(&z, dir.path().join("c.csv")).unwrap();
    assert_eq!(load_csv(dir.path().join("c.csv")).unwrap(), z);
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert!(text.starts_with("f1,f2,f3,label\n"));
    let r = linear(25, 2, 0.3, 15);
    save_regression_csv(&r, dir.path().join("r.csv")).unwrap();
    assert_eq!(load_regression_csv(dir.path().join("r.csv")).unwrap(), r);
}

proptest! {
    #[test]
    fn arbitrary_floats_roundtrip(
        rows in prop::collection::vec((prop::array::uniform3(any::<f64>().prop_filter("finite", |v| v.is_finite())), 0usize..3), 0..20)
    ) {
        let flat: Vec<[f64; 3]> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let z = Dataset::new(Objects::from_rows(&flat, 3).unwrap(), labels, LabelAlphabet::numbered(3)).unwrap();
        let mut buf = Vec::new();
        write_csv(&z, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.objects(), z.objects());
        for i in 0..z.len() {
            prop_assert_eq!(back.alphabet().name(back.label(i)), z.alphabet().name(z.label(i)));
        }
    }
}
