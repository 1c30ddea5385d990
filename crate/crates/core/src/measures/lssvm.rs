//! Least-squares SVM nonconformity measure with exact incremental and
//! decremental updates.
//!
//! The model is ridge regression in an explicit feature space,
//! `w = argmin ρ‖w‖² + Σ (wᵀφ(x_i) − y_i)²`, stored together with the
//! auxiliary matrix `C = Φ[ΦᵀΦ + ρIₙ]⁻¹Φᵀ` that makes single-example updates
//! cost `O(q²)`–`O(q³)`. The score is `−y·wᵀφ(x)` with labels in `{−1, +1}`.

use nalgebra::{DMatrix, DVector};

use crate::data::{Conditioning, Dataset, Label};
use crate::engine::Scorer;
use crate::error::{Error, Result};
use crate::pvalue::ScoreVector;

/// Update denominators at or below this magnitude are rejected.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// Explicit finite-dimensional feature maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMap {
    /// `φ(x) = x` (linear kernel).
    #[default]
    Identity,
    /// `φ(x) = (x, 1)`.
    Affine,
    /// `φ(x) = (1, x, x_a·x_b for a ≤ b)`: the degree-2 polynomial expansion.
    Quadratic,
}

impl FeatureMap {
    pub fn output_dim(self, input_dim: usize) -> usize {
        match self {
            FeatureMap::Identity => input_dim,
            FeatureMap::Affine => input_dim + 1,
            FeatureMap::Quadratic => 1 + input_dim + input_dim * (input_dim + 1) / 2,
        }
    }

    pub fn apply(self, x: &[f64]) -> DVector<f64> {
        match self {
            FeatureMap::Identity => DVector::from_column_slice(x),
            FeatureMap::Affine => DVector::from_iterator(x.len() + 1, x.iter().copied().chain([1.0])),
            FeatureMap::Quadratic => {
                let p = x.len();
                let mut v = Vec::with_capacity(self.output_dim(p));
                v.push(1.0);
                v.extend_from_slice(x);
                for a in 0..p {
                    for b in a..p {
                        v.push(x[a] * x[b]);
                    }
                }
                DVector::from_vec(v)
            }
        }
    }
}

/// Maps a binary alphabet's ids to `−1` (id 0) and `+1` (id 1).
#[inline]
pub fn label_sign(label: Label) -> f64 {
    if label == 0 {
        -1.0
    } else {
        1.0
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("rho must be positive, got {rho}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LssvmModel {
    w: DVector<f64>,
    c: DMatrix<f64>,
    rho: f64,
    map: FeatureMap,
    input_dim: usize,
}

impl LssvmModel {
    /// Model trained on no examples: `w = 0`, `C = 0`.
    pub fn empty(input_dim: usize, map: FeatureMap, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let q = map.output_dim(input_dim);
        Ok(Self { w: DVector::zeros(q), c: DMatrix::zeros(q, q), rho, map, input_dim })
    }

    /// Batch training through the `q × q` system `(ΦΦᵀ + ρI_q) w = ΦY`,
    /// equivalent to `w = Φ[ΦᵀΦ + ρIₙ]⁻¹Y` by the push-through identity.
    pub fn train<'a>(
        examples: impl IntoIterator<Item = (&'a [f64], f64)>,
        input_dim: usize,
        map: FeatureMap,
        rho: f64,
    ) -> Result<Self> {
        check_rho(rho)?;
        let q = map.output_dim(input_dim);
        let mut gram = DMatrix::<f64>::identity(q, q) * rho;
        let mut rhs = DVector::<f64>::zeros(q);
        for (x, y) in examples {
            if x.len() != input_dim {
                return Err(Error::DimensionMismatch { expected: input_dim, found: x.len() });
            }
            let phi = map.apply(x);
            gram.syger(1.0, &phi, &phi, 1.0);
            rhs.axpy(y, &phi, 1.0);
        }
        gram.fill_upper_triangle_with_lower_triangle();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("regularized Gram matrix is not positive definite".into()))?;
        let w = chol.solve(&rhs);
        let mut c = DMatrix::<f64>::identity(q, q) - chol.inverse() * rho;
        symmetrize(&mut c);
        Ok(Self { w, c, rho, map, input_dim })
    }

    /// Batch training through the `n × n` system `w = Φ[ΦᵀΦ + ρIₙ]⁻¹Y`,
    /// `C = Φ[ΦᵀΦ + ρIₙ]⁻¹Φᵀ`.
    pub fn train_dual<'a>(
        examples: impl IntoIterator<Item = (&'a [f64], f64)>,
        input_dim: usize,
        map: FeatureMap,
        rho: f64,
    ) -> Result<Self> {
        check_rho(rho)?;
        let q = map.output_dim(input_dim);
        let mut cols = Vec::new();
        let mut ys = Vec::new();
        for (x, y) in examples {
            if x.len() != input_dim {
                return Err(Error::DimensionMismatch { expected: input_dim, found: x.len() });
            }
            cols.push(map.apply(x));
            ys.push(y);
        }
        if cols.is_empty() {
            return Self::empty(input_dim, map, rho);
        }
        let phi = DMatrix::from_columns(&cols);
        let n = cols.len();
        let kernel = phi.transpose() * &phi + DMatrix::<f64>::identity(n, n) * rho;
        let inv = kernel
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("regularized kernel matrix is not positive definite".into()))?
            .inverse();
        let w = &phi * (&inv * DVector::from_vec(ys));
        let mut c = &phi * inv * phi.transpose();
        symmetrize(&mut c);
        debug_assert_eq!(w.len(), q);
        Ok(Self { w, c, rho, map, input_dim })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn auxiliary(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn feature_map(&self) -> FeatureMap {
        self.map
    }

    pub fn feature_dim(&self) -> usize {
        self.w.len()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.w.dot(&self.map.apply(x))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        Ok(())
    }

    /// `(C − I)φ`, `φᵀw` and `φᵀCφ − φᵀφ` for one feature vector.
    fn update_terms(&self, phi: &DVector<f64>) -> (DVector<f64>, f64, f64) {
        let c_phi = &self.c * phi;
        let quad = phi.dot(&c_phi) - phi.dot(phi);
        let u = c_phi - phi;
        (u, phi.dot(&self.w), quad)
    }

    /// Learns `(x, y)`: returns the updated model, leaving `self` untouched.
    pub fn increment(&self, x: &[f64], y: f64) -> Result<Self> {
        self.check_input(x)?;
        let phi = self.map.apply(x);
        let (u, fx, quad) = self.update_terms(&phi);
        let den = self.rho - quad;
        if den.abs() <= DENOMINATOR_EPS {
            return Err(Error::DegenerateDenominator { index: None, value: den });
        }
        let mut next = self.clone();
        next.w.axpy((fx - y) / den, &u, 1.0);
        next.c.ger(1.0 / den, &u, &u, 1.0);
        symmetrize(&mut next.c);
        Ok(next)
    }

    /// Unlearns `(x, y)`, which must be part of the training multiset.
    pub fn decrement(&self, x: &[f64], y: f64) -> Result<Self> {
        self.check_input(x)?;
        let phi = self.map.apply(x);
        let (u, fx, quad) = self.update_terms(&phi);
        let den = self.rho + quad;
        if den.abs() <= DENOMINATOR_EPS {
            return Err(Error::DegenerateDenominator { index: None, value: den });
        }
        let mut next = self.clone();
        next.w.axpy(-(fx - y) / den, &u, 1.0);
        next.c.ger(-1.0 / den, &u, &u, 1.0);
        symmetrize(&mut next.c);
        Ok(next)
    }

    /// `w₋ᵀφ(x)` where `w₋` is the decremented model without `(x, y)`; only
    /// the weight half of the update is formed, `O(q²)`.
    pub fn decremented_prediction(&self, phi: &DVector<f64>, y: f64) -> Result<f64> {
        let (u, fx, quad) = self.update_terms(phi);
        let den = self.rho + quad;
        if den.abs() <= DENOMINATOR_EPS {
            return Err(Error::DegenerateDenominator { index: None, value: den });
        }
        Ok(fx - phi.dot(&u) * (fx - y) / den)
    }
}

fn symmetrize(c: &mut DMatrix<f64>) {
    let n = c.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
}

fn check_binary(data: &Dataset) -> Result<()> {
    if data.n_labels() != 2 {
        return Err(Error::UnsupportedLabels(format!(
            "LS-SVM needs a binary alphabet, got {} labels",
            data.n_labels()
        )));
    }
    Ok(())
}

pub fn score_lssvm(cond: &Conditioning<'_>, object: &[f64], label: Label, map: FeatureMap, rho: f64) -> Result<f64> {
    let model = LssvmModel::train(cond.iter().map(|(o, l)| (o, label_sign(l))), cond.dim(), map, rho)?;
    Ok(-label_sign(label) * model.predict(object))
}

/// Retrains the LS-SVM from scratch for every leave-one-out score.
#[derive(Debug, Clone)]
pub struct StandardLssvm {
    data: Dataset,
    map: FeatureMap,
    rho: f64,
}

impl StandardLssvm {
    pub fn new(data: Dataset, map: FeatureMap, rho: f64) -> Result<Self> {
        check_binary(&data)?;
        check_rho(rho)?;
        Ok(Self { data, map, rho })
    }
}

impl Scorer for StandardLssvm {
    fn name(&self) -> &'static str {
        "standard LS-SVM"
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n_labels(&self) -> usize {
        2
    }

    fn score_vector(&self, object: &[f64], label: Label) -> Result<ScoreVector> {
        let z = &self.data;
        let training = (0..z.len())
            .map(|i| {
                let cond = Conditioning::loo(z, i, object, label);
                score_lssvm(&cond, z.object(i), z.label(i), self.map, self.rho)
            })
            .collect::<Result<Vec<_>>>()?;
        let test = score_lssvm(&Conditioning::plain(z), object, label, self.map, self.rho)?;
        Ok(ScoreVector::new(training, test))
    }
}

/// Optimized LS-SVM conformal scorer: one increment with the test example,
/// then a decrement per training example, `O(q²)` each.
#[derive(Debug, Clone)]
pub struct OptimizedLssvm {
    data: Dataset,
    features: Vec<DVector<f64>>,
    model: LssvmModel,
}

impl OptimizedLssvm {
    pub fn train(data: Dataset, map: FeatureMap, rho: f64) -> Result<Self> {
        check_binary(&data)?;
        let model = LssvmModel::train(
            (0..data.len()).map(|i| (data.object(i), label_sign(data.label(i)))),
            data.dim(),
            map,
            rho,
        )?;
        let features = data.objects().rows().map(|x| map.apply(x)).collect();
        Ok(Self { data, features, model })
    }

    pub fn model(&self) -> &LssvmModel {
        &self.model
    }
}

impl Scorer for OptimizedLssvm {
    fn name(&self) -> &'static str {
        "optimized LS-SVM"
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn n_labels(&self) -> usize {
        2
    }

    fn score_vector(&self, object: &[f64], label: Label) -> Result<ScoreVector> {
        let with_test = self.model.increment(object, label_sign(label))?;
        let training = self
            .features
            .iter()
            .enumerate()
            .map(|(i, phi)| {
                let yi = label_sign(self.data.label(i));
                with_test.decremented_prediction(phi, yi).map(|f| -yi * f).map_err(|e| match e {
                    Error::DegenerateDenominator { value, .. } => {
                        Error::DegenerateDenominator { index: Some(i), value }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let test = -label_sign(label) * self.model.predict(object);
        Ok(ScoreVector::new(training, test))
    }

    fn observe(&mut self, object: &[f64], label: Label) -> Result<()> {
        self.model = self.model.increment(object, label_sign(label))?;
        self.features.push(self.model.feature_map().apply(object));
        self.data.push(object, label)
    }
}
