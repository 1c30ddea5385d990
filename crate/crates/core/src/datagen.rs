//! Seeded synthetic datasets and CSV I/O.
//!
//! CSV files have a header `f1,...,fp,label` followed by one row per example.
//! Floats are written in Rust's shortest round-trip notation, so a
//! save/load cycle is bit-exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, LabelAlphabet, Objects, RegressionData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            _ => Err(Error::InvalidConfig(format!("unknown task `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub task: Task,
    pub n: usize,
    pub dim: usize,
    pub n_labels: usize,
    /// Distance between any two class centres (when `n_labels ≤ dim`).
    pub class_sep: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self { task: Task::Classification, n: 100, dim: 30, n_labels: 2, class_sep: 2.0, noise_sd: 0.1, seed: 0 }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if self.task == Task::Classification && self.n_labels < 2 {
            return bad("classification needs at least 2 classes");
        }
        if !self.class_sep.is_finite() || self.class_sep < 0.0 {
            return bad("class separation must be finite and non-negative");
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return bad("noise sd must be finite and non-negative");
        }
        Ok(())
    }
}

fn normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Class centres `(s/√2)·u_j` along orthonormal `u_j`; classes beyond the
/// dimension get random unit directions instead.
fn centres(rng: &mut ChaCha8Rng, dim: usize, n_labels: usize, sep: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n_labels);
    while basis.len() < n_labels {
        let mut v = normal_vector(rng, dim);
        if basis.len() < dim {
            for u in &basis {
                let proj = u.dot(&v);
                v.axpy(-proj, u, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    let scale = sep / std::f64::consts::SQRT_2;
    basis.into_iter().map(|u| u * scale).collect()
}

/// Isotropic unit-variance Gaussian blobs, labels balanced round-robin, rows
/// shuffled.
pub fn gen_classification(spec: &GenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centres = centres(&mut rng, spec.dim, spec.n_labels, spec.class_sep);
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.shuffle(&mut rng);
    let mut objects = Objects::new(spec.dim);
    let mut labels = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; spec.dim];
    for &slot in &order {
        let label = slot % spec.n_labels;
        for (r, c) in row.iter_mut().zip(centres[label].iter()) {
            *r = c + rng.sample::<f64, _>(StandardNormal);
        }
        objects.push(&row)?;
        labels.push(label);
    }
    Dataset::new(objects, labels, LabelAlphabet::numbered(spec.n_labels))
}

/// `y = βᵀx + e` with `β, x ~ N(0, I)` and `e ~ N(0, noise_sd²)`.
pub fn gen_regression(spec: &GenSpec) -> Result<RegressionData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let beta = normal_vector(&mut rng, spec.dim);
    let mut objects = Objects::new(spec.dim);
    let mut targets = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = normal_vector(&mut rng, spec.dim);
        let noise: f64 = rng.sample(StandardNormal);
        targets.push(beta.dot(&x) + spec.noise_sd * noise);
        objects.push(x.as_slice())?;
    }
    RegressionData::new(objects, targets)
}

fn header(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("f{j}")).chain(std::iter::once("label".to_owned())).collect()
}

fn write_rows<W: Write>(writer: W, objects: &Objects, last: impl Fn(usize) -> String) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(objects.dim()))?;
    let mut record: Vec<String> = Vec::with_capacity(objects.dim() + 1);
    for (i, row) in objects.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(f64::to_string));
        record.push(last(i));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    write_rows(writer, dataset.objects(), |i| dataset.alphabet().name(dataset.label(i)).to_owned())
}

pub fn write_regression_csv<W: Write>(data: &RegressionData, writer: W) -> Result<()> {
    write_rows(writer, data.objects(), |i| data.target(i).to_string())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(dataset, File::create(path)?)
}

pub fn save_regression_csv(data: &RegressionData, path: impl AsRef<Path>) -> Result<()> {
    write_regression_csv(data, File::create(path)?)
}

/// Parsed rows: objects and the raw last column.
fn read_rows<R: Read>(reader: R) -> Result<(Objects, Vec<(u64, String)>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let head = r.headers()?.clone();
    if head.len() < 2 {
        return Err(Error::Parse { line: 1, message: "header needs at least one feature and a label".into() });
    }
    let dim = head.len() - 1;
    let mut objects = Objects::new(dim);
    let mut last = Vec::new();
    let mut row = vec![0.0; dim];
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields, found {}", dim + 1, record.len()) });
        }
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = record[j]
                .parse()
                .map_err(|e| Error::Parse { line, message: format!("field {} ({:?}): {e}", j + 1, &record[j]) })?;
        }
        objects.push(&row)?;
        last.push((line, record[dim].to_owned()));
    }
    Ok((objects, last))
}

/// Reads a classification CSV, building the alphabet from the observed
/// labels (numeric order if all are integers, lexicographic otherwise).
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let (objects, raw) = read_rows(reader)?;
    let alphabet = LabelAlphabet::from_observed(raw.iter().map(|(_, s)| s.as_str()));
    let labels = raw.iter().map(|(_, s)| alphabet.intern(s)).collect::<Result<_>>()?;
    Dataset::new(objects, labels, alphabet)
}

/// Reads a classification CSV whose labels must belong to `alphabet`.
pub fn read_csv_with_alphabet<R: Read>(reader: R, alphabet: &LabelAlphabet) -> Result<Dataset> {
    let (objects, raw) = read_rows(reader)?;
    let labels = raw
        .iter()
        .map(|(line, s)| {
            alphabet.intern(s).map_err(|_| Error::Parse { line: *line, message: format!("unknown label {s:?}") })
        })
        .collect::<Result<_>>()?;
    Dataset::new(objects, labels, alphabet.clone())
}

pub fn read_regression_csv<R: Read>(reader: R) -> Result<RegressionData> {
    let (objects, raw) = read_rows(reader)?;
    let targets = raw
        .iter()
        .map(|(line, s)| {
            s.parse::<f64>().map_err(|e| Error::Parse { line: *line, message: format!("target {s:?}: {e}") })
        })
        .collect::<Result<_>>()?;
    RegressionData::new(objects, targets)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv(File::open(path)?)
}

pub fn load_csv_with_alphabet(path: impl AsRef<Path>, alphabet: &LabelAlphabet) -> Result<Dataset> {
    read_csv_with_alphabet(File::open(path)?, alphabet)
}

pub fn load_regression_csv(path: impl AsRef<Path>) -> Result<RegressionData> {
    read_regression_csv(File::open(path)?)
}
