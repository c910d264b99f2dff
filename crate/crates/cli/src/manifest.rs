//! TOML run manifest.
//!
//! ```toml
//! collection = "trec8"
//! runs = ["runs/"]          # files, or directories whose files are all runs
//! qrels = "qrels.trec8"
//! out = "results"
//! profile = "desk"
//! seed = 42
//! top_k = 1000
//!
//! [thresholds]
//! min_docs_per_query = 10
//! min_relevant_per_query = 5
//! shift_epsilon = 0.001
//!
//! [overrides]
//! n_repetitions = 500
//! query_sizes = [10, 25, 50]
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sdpower_core::experiments::{ExperimentConfig, Profile};
use sdpower_core::ingest::{
    FilterThresholds, DEFAULT_MIN_DOCS_PER_QUERY, DEFAULT_MIN_RELEVANT_PER_QUERY, DEFAULT_SHIFT_EPSILON,
    DEFAULT_TOP_K,
};
use sdpower_core::stattests::ResampleStatistic;

use crate::CliError;

/// Field-by-field replacements for a profile's defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_samples_per_list: Option<usize>,
    pub n_repetitions: Option<usize>,
    pub n_resamples: Option<usize>,
    pub alpha_grid: Option<Vec<f64>>,
    pub h_grid: Option<Vec<f64>>,
    pub query_sizes: Option<Vec<usize>>,
    pub power_alpha: Option<f64>,
    pub validity_simulations: Option<usize>,
    /// `mean` or `t`.
    pub resample_statistic: Option<String>,
}

pub fn parse_statistic(s: &str) -> Result<ResampleStatistic, String> {
    match s {
        "mean" => Ok(ResampleStatistic::MeanDifference),
        "t" => Ok(ResampleStatistic::TStatistic),
        other => Err(format!("unknown resample statistic `{other}` (expected mean or t)")),
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), String> {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut cfg.n_samples_per_list, &self.n_samples_per_list);
        set(&mut cfg.n_repetitions, &self.n_repetitions);
        set(&mut cfg.n_resamples, &self.n_resamples);
        set(&mut cfg.alpha_grid, &self.alpha_grid);
        set(&mut cfg.h_grid, &self.h_grid);
        set(&mut cfg.query_sizes, &self.query_sizes);
        set(&mut cfg.power_alpha, &self.power_alpha);
        set(&mut cfg.validity_simulations, &self.validity_simulations);
        if let Some(s) = &self.resample_statistic {
            cfg.resample_statistic = parse_statistic(s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub min_docs_per_query: usize,
    pub min_relevant_per_query: usize,
    pub shift_epsilon: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_docs_per_query: DEFAULT_MIN_DOCS_PER_QUERY,
            min_relevant_per_query: DEFAULT_MIN_RELEVANT_PER_QUERY,
            shift_epsilon: DEFAULT_SHIFT_EPSILON,
        }
    }
}

impl Thresholds {
    pub fn filter(&self) -> FilterThresholds {
        FilterThresholds {
            min_docs_per_query: self.min_docs_per_query,
            min_relevant_per_query: self.min_relevant_per_query,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    collection: String,
    runs: Vec<PathBuf>,
    qrels: PathBuf,
    out: Option<PathBuf>,
    profile: Option<String>,
    seed: Option<u64>,
    top_k: Option<usize>,
    #[serde(default)]
    thresholds: Thresholds,
    #[serde(default)]
    overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub collection: String,
    /// Run files, directories already expanded and sorted.
    pub runs: Vec<PathBuf>,
    pub qrels: PathBuf,
    pub out: Option<PathBuf>,
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub top_k: usize,
    pub thresholds: Thresholds,
    pub overrides: Overrides,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), path)
    }

    /// Parses manifest text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self, CliError> {
        let bad = |reason: String| CliError::Manifest {
            path: origin.to_owned(),
            reason,
        };
        let raw: RawManifest = toml::from_str(text).map_err(|e| bad(e.message().to_owned()))?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_owned() } else { base.join(p) };

        let qrels = resolve(&raw.qrels);
        if !qrels.is_file() {
            return Err(bad(format!("qrels file {} does not exist", qrels.display())));
        }
        let mut runs = Vec::new();
        for r in &raw.runs {
            let p = resolve(r);
            if p.is_dir() {
                let mut files: Vec<PathBuf> = fs::read_dir(&p)
                    .map_err(|source| CliError::Io {
                        path: p.clone(),
                        source,
                    })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.is_file())
                    .collect();
                files.sort();
                runs.extend(files);
            } else if p.is_file() {
                runs.push(p);
            } else {
                return Err(bad(format!("run path {} does not exist", p.display())));
            }
        }
        if runs.is_empty() {
            return Err(bad("no run files listed".into()));
        }
        let profile = raw.profile.as_deref().map(str::parse).transpose().map_err(bad)?;
        let top_k = raw.top_k.unwrap_or(DEFAULT_TOP_K);
        if top_k == 0 {
            return Err(bad("top_k must be >= 1".into()));
        }
        if !(raw.thresholds.shift_epsilon > 0.0) {
            return Err(bad("shift_epsilon must be positive".into()));
        }
        Ok(Manifest {
            collection: raw.collection,
            runs,
            qrels,
            out: raw.out.as_deref().map(resolve),
            profile,
            seed: raw.seed,
            top_k,
            thresholds: raw.thresholds,
            overrides: raw.overrides,
        })
    }
}
