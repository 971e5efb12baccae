//! Run configuration: a JSON file supplies defaults, command line flags win.

use std::path::{Path, PathBuf};

use axistour::dimred::{Interval, DEFAULT_ALPHA};
use axistour::pipeline::{Method, Reduction, DEFAULT_K};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DATA_DIR_ENV: &str = "AXISTOUR_DATA_DIR";

/// Every knob of a pipeline run, all optional. Used both for the config
/// file and for the flags, then merged.
#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Embedding file (GloVe/word2vec text, or `.bin` cache)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Keep only the first N words
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Lowercase tokens while loading
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lowercase: Option<bool>,
    /// Top-k words per axis embedding
    #[arg(long)]
    pub k: Option<usize>,
    /// Skewness exponent of the projection weights
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Target dimensions, e.g. `2,10,50`
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Run seed; every stage derives its own from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// axistour, skewsort, randorder, pca, tica9 or tica75
    #[arg(long)]
    pub method: Option<String>,
    /// prefix or projection (default depends on the method)
    #[arg(long)]
    pub reduction: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Axis interval `a:b` (1-based, inclusive) to measure and plot; repeatable
    #[arg(long = "interval")]
    pub intervals: Option<Vec<String>>,
    /// Analogy dataset; repeatable
    #[arg(long)]
    pub analogy: Option<Vec<PathBuf>>,
    /// Word-similarity dataset; repeatable
    #[arg(long)]
    pub similarity: Option<Vec<PathBuf>>,
    /// Categorization dataset; repeatable
    #[arg(long)]
    pub categorization: Option<Vec<PathBuf>>,
    /// Also try hierarchical clustering for categorization (best purity wins)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hierarchical: Option<bool>,
    /// FastICA iteration cap
    #[arg(long)]
    pub ica_max_iter: Option<usize>,
    /// Topographic ICA gradient steps
    #[arg(long)]
    pub tica_iterations: Option<usize>,
    /// Initial topographic ICA step size
    #[arg(long)]
    pub tica_step: Option<f64>,
}

impl RunOptions {
    /// A config file, or the manifest of an earlier run (its `config` is reused).
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::load(axistour::Error::Io { path: path.into(), source: e }))?;
        let bad = |e: serde_json::Error| CliError::usage(format!("config {}: {e}", path.display()));
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
        if value.get("artifacts").is_some() {
            if let Some(config) = value.get_mut("config") {
                value = config.take();
            }
        }
        serde_json::from_value(value).map_err(bad)
    }

    /// Field-wise `self` if set, else `fallback`.
    pub fn or(self, fallback: RunOptions) -> RunOptions {
        RunOptions {
            input: self.input.or(fallback.input),
            max_words: self.max_words.or(fallback.max_words),
            lowercase: self.lowercase.or(fallback.lowercase),
            k: self.k.or(fallback.k),
            alpha: self.alpha.or(fallback.alpha),
            dims: self.dims.or(fallback.dims),
            seed: self.seed.or(fallback.seed),
            method: self.method.or(fallback.method),
            reduction: self.reduction.or(fallback.reduction),
            out: self.out.or(fallback.out),
            intervals: self.intervals.or(fallback.intervals),
            analogy: self.analogy.or(fallback.analogy),
            similarity: self.similarity.or(fallback.similarity),
            categorization: self.categorization.or(fallback.categorization),
            hierarchical: self.hierarchical.or(fallback.hierarchical),
            ica_max_iter: self.ica_max_iter.or(fallback.ica_max_iter),
            tica_iterations: self.tica_iterations.or(fallback.tica_iterations),
            tica_step: self.tica_step.or(fallback.tica_step),
        }
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let input = self.input.ok_or_else(|| CliError::usage("no --input given".into()))?;
        let method: Method = self.method.as_deref().unwrap_or("axistour").parse().map_err(CliError::usage_from)?;
        let reduction = match self.reduction.as_deref() {
            Some(r) => r.parse().map_err(CliError::usage_from)?,
            None => method.default_reduction(),
        };
        let intervals = self.intervals.unwrap_or_default();
        for i in &intervals {
            i.parse::<Interval>().map_err(CliError::usage_from)?;
        }
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(alpha >= 0.0) {
            return Err(CliError::usage(format!("--alpha must be ≥ 0, got {alpha}")));
        }
        Ok(RunConfig {
            input: resolve_data_path(&input),
            max_words: self.max_words,
            lowercase: self.lowercase.unwrap_or(false),
            k: self.k.unwrap_or(DEFAULT_K),
            alpha,
            dims: self.dims.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
            method,
            reduction,
            out: self.out.unwrap_or_else(|| PathBuf::from("axistour-run")),
            intervals,
            analogy: self.analogy.unwrap_or_default().iter().map(|p| resolve_data_path(p)).collect(),
            similarity: self.similarity.unwrap_or_default().iter().map(|p| resolve_data_path(p)).collect(),
            categorization: self.categorization.unwrap_or_default().iter().map(|p| resolve_data_path(p)).collect(),
            hierarchical: self.hierarchical.unwrap_or(false),
            ica_max_iter: self.ica_max_iter.unwrap_or(10_000),
            tica_iterations: self.tica_iterations.unwrap_or(10_000),
            tica_step: self.tica_step.unwrap_or(0.1),
        })
    }
}

/// Fully resolved configuration, recorded verbatim in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub max_words: Option<usize>,
    pub lowercase: bool,
    pub k: usize,
    pub alpha: f64,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub method: Method,
    pub reduction: Reduction,
    pub out: PathBuf,
    pub intervals: Vec<String>,
    pub analogy: Vec<PathBuf>,
    pub similarity: Vec<PathBuf>,
    pub categorization: Vec<PathBuf>,
    pub hierarchical: bool,
    pub ica_max_iter: usize,
    pub tica_iterations: usize,
    pub tica_step: f64,
}

/// Relative paths missing from the working directory are looked up under
/// `$AXISTOUR_DATA_DIR`.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}
