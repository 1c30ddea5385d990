//! Nonconformity measures, each in a standard and an optimized form.

pub mod bootstrap;
pub mod kde;
pub mod knn;
pub mod lssvm;
pub mod metric;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::engine::Scorer;
use crate::error::{Error, Result};

use bootstrap::{BootstrapConfig, OptimizedBootstrap, StandardBootstrap};
use kde::{OptimizedKde, StandardKde};
use knn::{KnnVariant, OptimizedKnn, StandardKnn};
use lssvm::{FeatureMap, OptimizedLssvm, StandardLssvm};
use metric::{Euclidean, Gaussian};
use tree::TreeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Nn,
    Knn,
    SimplifiedKnn,
    Kde,
    Lssvm,
    Bootstrap,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 6] = [
        MeasureKind::Nn,
        MeasureKind::Knn,
        MeasureKind::SimplifiedKnn,
        MeasureKind::Kde,
        MeasureKind::Lssvm,
        MeasureKind::Bootstrap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Nn => "nn",
            MeasureKind::Knn => "knn",
            MeasureKind::SimplifiedKnn => "simplified-knn",
            MeasureKind::Kde => "kde",
            MeasureKind::Lssvm => "lssvm",
            MeasureKind::Bootstrap => "bootstrap",
        }
    }

    /// Whether the optimized scorer supports `observe`.
    pub fn is_incremental(self) -> bool {
        !matches!(self, MeasureKind::Bootstrap)
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown measure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Recompute every leave-one-out score from scratch.
    Standard,
    /// Incremental and decremental updates of a trained state.
    Optimized,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Optimized => "optimized",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Variant::Standard),
            "optimized" => Ok(Variant::Optimized),
            _ => Err(Error::InvalidConfig(format!("unknown variant `{s}`"))),
        }
    }
}

impl FromStr for FeatureMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "linear" => Ok(FeatureMap::Identity),
            "affine" => Ok(FeatureMap::Affine),
            "quadratic" => Ok(FeatureMap::Quadratic),
            _ => Err(Error::InvalidConfig(format!("unknown feature map `{s}`"))),
        }
    }
}

/// Measure selection and hyperparameters. Distances are Euclidean and
/// kernels Gaussian; the scorer types are generic for other choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorerConfig {
    pub measure: MeasureKind,
    pub k: usize,
    pub bandwidth: f64,
    pub rho: f64,
    pub ensemble_size: usize,
    pub tree_max_depth: usize,
    pub tree_features_per_split: Option<usize>,
    pub feature_map: FeatureMap,
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            measure: MeasureKind::SimplifiedKnn,
            k: 15,
            bandwidth: 1.0,
            rho: 1.0,
            ensemble_size: 10,
            tree_max_depth: 10,
            tree_features_per_split: None,
            feature_map: FeatureMap::Identity,
            seed: 0,
        }
    }
}

impl ScorerConfig {
    pub fn new(measure: MeasureKind) -> Self {
        Self { measure, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble size must be at least 1".into());
        }
        if self.tree_features_per_split == Some(0) {
            return bad("features per split must be at least 1".into());
        }
        Ok(())
    }

    /// `k` as used by the measure: NN is k-NN with `k = 1`.
    pub fn effective_k(&self) -> usize {
        if self.measure == MeasureKind::Nn {
            1
        } else {
            self.k
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            ensemble_size: self.ensemble_size,
            tree: TreeConfig { max_depth: self.tree_max_depth, features_per_split: self.tree_features_per_split },
            seed: self.seed,
        }
    }
}

/// Builds (and for optimized variants trains) a scorer over `data`.
pub fn build_scorer(config: &ScorerConfig, variant: Variant, data: Dataset) -> Result<Box<dyn Scorer>> {
    config.validate()?;
    let k = config.effective_k();
    let knn_variant = match config.measure {
        MeasureKind::SimplifiedKnn => KnnVariant::Simplified,
        _ => KnnVariant::Full,
    };
    Ok(match (config.measure, variant) {
        (MeasureKind::Nn | MeasureKind::Knn | MeasureKind::SimplifiedKnn, Variant::Standard) => {
            Box::new(StandardKnn::new(data, k, knn_variant, Euclidean)?)
        }
        (MeasureKind::Nn | MeasureKind::Knn | MeasureKind::SimplifiedKnn, Variant::Optimized) => {
            Box::new(OptimizedKnn::train(data, k, knn_variant, Euclidean)?)
        }
        (MeasureKind::Kde, Variant::Standard) => Box::new(StandardKde::new(data, config.bandwidth, Gaussian)?),
        (MeasureKind::Kde, Variant::Optimized) => Box::new(OptimizedKde::train(data, config.bandwidth, Gaussian)?),
        (MeasureKind::Lssvm, Variant::Standard) => Box::new(StandardLssvm::new(data, config.feature_map, config.rho)?),
        (MeasureKind::Lssvm, Variant::Optimized) => {
            Box::new(OptimizedLssvm::train(data, config.feature_map, config.rho)?)
        }
        (MeasureKind::Bootstrap, Variant::Standard) => Box::new(StandardBootstrap::new(data, config.bootstrap())?),
        (MeasureKind::Bootstrap, Variant::Optimized) => Box::new(OptimizedBootstrap::train(data, config.bootstrap())?),
    })
}
