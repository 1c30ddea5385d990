//! Datasets and conditioning-set views.
//!
//! Objects are stored row-major in one flat buffer. Labels are interned to
//! dense ids `0..ℓ` when a dataset is built, so every comparison inside the
//! leave-one-out loops is an integer comparison.

use crate::error::{Error, Result};

/// Dense label id. Index into a [`LabelAlphabet`].
pub type Label = usize;

/// Row-major matrix of object vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Objects {
    data: Vec<f64>,
    dim: usize,
}

impl Objects {
    pub fn new(dim: usize) -> Self {
        Self { data: Vec::new(), dim }
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("object dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: data.len() % dim });
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Result<Self> {
        let mut objects = Self::new(dim);
        for row in rows {
            objects.push(row.as_ref())?;
        }
        Ok(objects)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copy of rows `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self { data: self.data[range.start * self.dim..range.end * self.dim].to_vec(), dim: self.dim }
    }
}

/// Ordered set of distinct label names; position is the interned id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAlphabet {
    names: Vec<String>,
}

impl LabelAlphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidConfig(format!("duplicate label {a:?}")));
            }
        }
        Ok(Self { names })
    }

    /// Alphabet `"0", "1", ..., "ℓ-1"`.
    pub fn numbered(size: usize) -> Self {
        Self { names: (0..size).map(|i| i.to_string()).collect() }
    }

    /// Builds an alphabet from observed label strings: numeric order when every
    /// name parses as an integer, lexicographic otherwise.
    pub fn from_observed<'a>(observed: impl IntoIterator<Item = &'a str>) -> Self {
        let mut names: Vec<String> = observed.into_iter().map(str::to_owned).collect();
        names.sort();
        names.dedup();
        if names.iter().all(|s| s.parse::<i64>().is_ok()) {
            names.sort_by_key(|s| s.parse::<i64>().unwrap());
        }
        Self { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, label: Label) -> &str {
        &self.names[label]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intern(&self, name: &str) -> Result<Label> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownLabel(name.to_owned()))
    }
}

/// Classification training set `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    objects: Objects,
    labels: Vec<Label>,
    alphabet: LabelAlphabet,
}

impl Dataset {
    pub fn new(objects: Objects, labels: Vec<Label>, alphabet: LabelAlphabet) -> Result<Self> {
        if objects.len() != labels.len() {
            return Err(Error::InvalidConfig(format!("{} objects but {} labels", objects.len(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= alphabet.len()) {
            return Err(Error::UnknownLabel(format!("#{bad}")));
        }
        Ok(Self { objects, labels, alphabet })
    }

    pub fn empty(dim: usize, alphabet: LabelAlphabet) -> Self {
        Self { objects: Objects::new(dim), labels: Vec::new(), alphabet }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.objects.dim()
    }

    pub fn n_labels(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }

    pub fn objects(&self) -> &Objects {
        &self.objects
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn object(&self, i: usize) -> &[f64] {
        self.objects.row(i)
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn push(&mut self, object: &[f64], label: Label) -> Result<()> {
        if label >= self.alphabet.len() {
            return Err(Error::UnknownLabel(format!("#{label}")));
        }
        self.objects.push(object)?;
        self.labels.push(label);
        Ok(())
    }

    /// Number of examples carrying each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Examples `range`, keeping the alphabet.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            objects: self.objects.slice(range.clone()),
            labels: self.labels[range].to_vec(),
            alphabet: self.alphabet.clone(),
        }
    }

    /// Splits into the first `at` examples and the rest.
    pub fn split_at(&self, at: usize) -> (Self, Self) {
        (self.slice(0..at), self.slice(at..self.len()))
    }

    pub fn with_alphabet(&self, alphabet: LabelAlphabet, labels: Vec<Label>) -> Result<Self> {
        Self::new(self.objects.clone(), labels, alphabet)
    }
}

/// Regression training set with real-valued targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    objects: Objects,
    targets: Vec<f64>,
}

impl RegressionData {
    pub fn new(objects: Objects, targets: Vec<f64>) -> Result<Self> {
        if objects.len() != targets.len() {
            return Err(Error::InvalidConfig(format!("{} objects but {} targets", objects.len(), targets.len())));
        }
        Ok(Self { objects, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.objects.dim()
    }

    pub fn objects(&self) -> &Objects {
        &self.objects
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    #[inline]
    pub fn object(&self, i: usize) -> &[f64] {
        self.objects.row(i)
    }

    #[inline]
    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self { objects: self.objects.slice(range.clone()), targets: self.targets[range].to_vec() }
    }

    pub fn split_at(&self, at: usize) -> (Self, Self) {
        (self.slice(0..at), self.slice(at..self.len()))
    }
}

/// A conditioning multiset for one nonconformity evaluation: the training
/// set, optionally without example `exclude`, optionally with one extra
/// example appended (the test object paired with a candidate label).
///
/// `{(x, ŷ)} ∪ Z \ {(x_i, y_i)}` is `Conditioning::loo(z, i, x, ŷ)`.
#[derive(Debug, Clone, Copy)]
pub struct Conditioning<'a> {
    data: &'a Dataset,
    exclude: Option<usize>,
    extra: Option<(&'a [f64], Label)>,
}

impl<'a> Conditioning<'a> {
    pub fn plain(data: &'a Dataset) -> Self {
        Self { data, exclude: None, extra: None }
    }

    pub fn loo(data: &'a Dataset, exclude: usize, extra: &'a [f64], label: Label) -> Self {
        Self { data, exclude: Some(exclude), extra: Some((extra, label)) }
    }

    pub fn new(data: &'a Dataset, exclude: Option<usize>, extra: Option<(&'a [f64], Label)>) -> Self {
        Self { data, exclude, extra }
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn n_labels(&self) -> usize {
        self.data.n_labels()
    }

    pub fn len(&self) -> usize {
        self.data.len() - usize::from(self.exclude.is_some()) + usize::from(self.extra.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Training examples in index order, then the extra example last.
    pub fn iter(&self) -> impl Iterator<Item = (&'a [f64], Label)> + '_ {
        let data = self.data;
        let exclude = self.exclude;
        (0..data.len())
            .filter(move |&j| Some(j) != exclude)
            .map(move |j| (data.object(j), data.label(j)))
            .chain(self.extra)
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.iter().filter(|&(_, l)| l == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let objects = Objects::from_rows(&[[0.0], [1.0], [3.0]], 1).unwrap();
        Dataset::new(objects, vec![0, 0, 1], LabelAlphabet::numbered(2)).unwrap()
    }

    #[test]
    fn conditioning_loo_swaps_one_example() {
        let z = toy();
        let x = [0.5];
        let c = Conditioning::loo(&z, 1, &x, 1);
        let items: Vec<_> = c.iter().map(|(o, l)| (o[0], l)).collect();
        assert_eq!(items, vec![(0.0, 0), (3.0, 1), (0.5, 1)]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.count_label(1), 2);
    }

    #[test]
    fn alphabet_numeric_order() {
        let a = LabelAlphabet::from_observed(["10", "2", "1", "2"]);
        assert_eq!(a.names(), &["1", "2", "10"]);
        let b = LabelAlphabet::from_observed(["b", "a"]);
        assert_eq!(b.intern("a").unwrap(), 0);
        assert!(matches!(b.intern("c"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn push_checks_dimension() {
        let mut z = toy();
        assert!(matches!(z.push(&[1.0, 2.0], 0), Err(Error::DimensionMismatch { .. })));
        assert!(z.push(&[2.0], 5).is_err());
        z.push(&[2.0], 1).unwrap();
        assert_eq!(z.label_counts(), vec![2, 2]);
    }
}
