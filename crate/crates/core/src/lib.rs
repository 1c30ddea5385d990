//! Full (transductive) conformal prediction with exact incremental and
//! decremental nonconformity measures.

pub mod data;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod icp;
pub mod measures;
pub mod pvalue;
pub mod regress;

pub use data::{Conditioning, Dataset, Label, LabelAlphabet, Objects, RegressionData};
pub use engine::{classify, classify_batch_parallel, classify_parallel, OnlineStream, Scorer};
pub use error::{Error, Result};
pub use measures::{build_scorer, MeasureKind, ScorerConfig, Variant};
pub use pvalue::{compute_pvalue, compute_smoothed_pvalue, PValueVector, PredictionSet, ScoreVector};
