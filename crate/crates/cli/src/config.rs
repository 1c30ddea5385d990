//! Run configuration: defaults, `key = value` files and overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use fullcp::measures::lssvm::FeatureMap;
use fullcp::{MeasureKind, ScorerConfig};

/// Environment variable naming the default report directory.
pub const REPORT_DIR_ENV: &str = "FULLCP_REPORT_DIR";

/// A classification measure or the k-NN conformal regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchMeasure {
    Classification(MeasureKind),
    RegressionKnn,
}

impl BenchMeasure {
    pub fn is_regression(self) -> bool {
        matches!(self, BenchMeasure::RegressionKnn)
    }
}

impl fmt::Display for BenchMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchMeasure::Classification(m) => write!(f, "{m}"),
            BenchMeasure::RegressionKnn => f.write_str("regression-knn"),
        }
    }
}

impl FromStr for BenchMeasure {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("regression-knn") {
            return Ok(BenchMeasure::RegressionKnn);
        }
        Ok(BenchMeasure::Classification(s.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchVariant {
    Standard,
    Optimized,
    Icp,
}

impl fmt::Display for BenchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchVariant::Standard => "standard",
            BenchVariant::Optimized => "optimized",
            BenchVariant::Icp => "icp",
        })
    }
}

impl FromStr for BenchVariant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(BenchVariant::Standard),
            "optimized" => Ok(BenchVariant::Optimized),
            "icp" => Ok(BenchVariant::Icp),
            _ => bail!("unknown variant `{s}`"),
        }
    }
}

/// `count` values evenly spaced on a log scale over `[lo, hi]`, truncated to
/// integers.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![lo as usize];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|j| {
            let v = 10f64.powf(a + (b - a) * j as f64 / (count - 1) as f64);
            let r = v.round();
            if (v - r).abs() < 1e-6 * r {
                r as usize
            } else {
                v as usize
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Training set sizes of the benchmark sweep.
    pub grid: Vec<usize>,
    pub test_points: usize,
    /// Per-cell prediction budget, checked after every prediction.
    pub timeout_secs: f64,
    pub seeds: Vec<u64>,
    pub measures: Vec<BenchMeasure>,
    pub variants: Vec<BenchVariant>,
    pub scorer: ScorerConfig,
    pub dim: usize,
    pub classes: usize,
    pub class_sep: f64,
    pub noise_sd: f64,
    /// Significance levels for validation.
    pub epsilons: Vec<f64>,
    /// Significance level for regression prediction sets.
    pub epsilon: f64,
    /// Monte-Carlo trials per validation cell.
    pub trials: usize,
    /// Training set size for validation and fuzziness runs.
    pub n: usize,
    /// Proper training fraction `t/n` for ICP.
    pub icp_fraction: f64,
    /// Parallel prediction over (test point, label) pairs.
    pub parallel: bool,
    pub report_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: log_grid(10.0, 1e5, 13),
            test_points: 100,
            timeout_secs: 60.0,
            seeds: (0..5).collect(),
            measures: vec![
                BenchMeasure::Classification(MeasureKind::SimplifiedKnn),
                BenchMeasure::Classification(MeasureKind::Knn),
                BenchMeasure::Classification(MeasureKind::Kde),
            ],
            variants: vec![BenchVariant::Standard, BenchVariant::Optimized],
            scorer: ScorerConfig::default(),
            dim: 30,
            classes: 2,
            class_sep: 2.0,
            noise_sd: 0.1,
            epsilons: vec![0.05, 0.1, 0.2],
            epsilon: 0.1,
            trials: 2000,
            n: 500,
            icp_fraction: 0.5,
            parallel: false,
            report_dir: PathBuf::from("reports"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {value:?}"),
    }
}

impl RunConfig {
    /// Defaults, with the report directory taken from the environment when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(dir) = std::env::var_os(REPORT_DIR_ENV) {
            cfg.report_dir = PathBuf::from(dir);
        }
        cfg
    }

    /// Applies one setting. Keys accept `-` or `_` as separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "grid" => {
                self.grid = match value.strip_prefix("log:") {
                    Some(spec) => {
                        let parts: Vec<f64> = parse_list(k, spec)?;
                        let [lo, hi, count] = parts[..] else { bail!("grid: expected log:lo,hi,count") };
                        log_grid(lo, hi, count as usize)
                    }
                    None => parse_list(k, value)?,
                }
            }
            "test_points" => self.test_points = parse(k, value)?,
            "timeout" | "timeout_secs" => self.timeout_secs = parse(k, value)?,
            "seeds" => self.seeds = parse_list(k, value)?,
            "repeats" => self.seeds = (0..parse::<u64>(k, value)?).collect(),
            "measures" | "measure" => self.measures = parse_list(k, value)?,
            "variants" | "variant" => self.variants = parse_list(k, value)?,
            "k" => self.scorer.k = parse(k, value)?,
            "bandwidth" | "h" => self.scorer.bandwidth = parse(k, value)?,
            "rho" => self.scorer.rho = parse(k, value)?,
            "ensemble_size" | "b" => self.scorer.ensemble_size = parse(k, value)?,
            "tree_max_depth" => self.scorer.tree_max_depth = parse(k, value)?,
            "tree_features" | "tree_features_per_split" => {
                self.scorer.tree_features_per_split = if value == "sqrt" { None } else { Some(parse(k, value)?) }
            }
            "feature_map" => self.scorer.feature_map = value.parse::<FeatureMap>()?,
            "dim" | "p" => self.dim = parse(k, value)?,
            "classes" => self.classes = parse(k, value)?,
            "class_sep" => self.class_sep = parse(k, value)?,
            "noise_sd" => self.noise_sd = parse(k, value)?,
            "epsilons" => self.epsilons = parse_list(k, value)?,
            "epsilon" => self.epsilon = parse(k, value)?,
            "trials" => self.trials = parse(k, value)?,
            "n" => self.n = parse(k, value)?,
            "icp_fraction" => self.icp_fraction = parse(k, value)?,
            "parallel" => self.parallel = parse_bool(k, value)?,
            "report_dir" => self.report_dir = PathBuf::from(value),
            _ => bail!("unknown setting `{key}`"),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            self.set(key, value).with_context(|| format!("line {}", no + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid[0] == 0 || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!("grid values must be positive and strictly increasing");
        }
        if self.test_points == 0 {
            bail!("test_points must be at least 1");
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            bail!("timeout must be positive");
        }
        if self.seeds.is_empty() || self.measures.is_empty() || self.variants.is_empty() {
            bail!("seeds, measures and variants must be non-empty");
        }
        if self.epsilons.iter().chain([&self.epsilon]).any(|e| !(0.0..=1.0).contains(e)) {
            bail!("significance levels must lie in [0, 1]");
        }
        if !(self.icp_fraction > 0.0 && self.icp_fraction < 1.0) {
            bail!("icp_fraction must lie in (0, 1)");
        }
        if self.classes < 2 || self.dim == 0 || self.n == 0 || self.trials == 0 {
            bail!("classes ≥ 2, dim ≥ 1, n ≥ 1 and trials ≥ 1 are required");
        }
        self.scorer.validate()?;
        Ok(())
    }

    /// Proper training set size for `n` examples.
    pub fn icp_split(&self, n: usize) -> usize {
        ((n as f64 * self.icp_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1))
    }
}
