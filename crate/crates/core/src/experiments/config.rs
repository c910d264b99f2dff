use std::fmt;
use std::str::FromStr;

use crate::stattests::{ResampleStatistic, DEFAULT_RESAMPLES};

use super::ExperimentError;

/// Named default sets. `Paper` is the full-scale protocol; `Desk` keeps
/// runs to minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    Paper,
    #[default]
    Desk,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile `{other}` (expected paper or desk)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Scores drawn per synthetic list.
    pub n_samples_per_list: usize,
    /// Repetitions per system (and per h for power curves).
    pub n_repetitions: usize,
    /// Monte Carlo resamples for the permutation and bootstrap tests.
    pub n_resamples: usize,
    pub alpha_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub query_sizes: Vec<usize>,
    pub master_seed: u64,
    /// Significance level for power curves.
    pub power_alpha: f64,
    /// Lists per (system, query, h) in the mean-AP validity curve.
    pub validity_simulations: usize,
    pub resample_statistic: ResampleStatistic,
}

/// `0.01, 0.02, ..., 0.25`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=25).map(|i| f64::from(i) / 100.0).collect()
}

/// `0, step, 2 step, ..., 0.30` for `step = 1 / steps_per_unit`.
pub fn h_grid_to_030(steps_per_unit: u32) -> Vec<f64> {
    let last = (0.30 * f64::from(steps_per_unit)).round() as u32;
    (0..=last).map(|i| f64::from(i) / f64::from(steps_per_unit)).collect()
}

impl ExperimentConfig {
    pub fn paper(master_seed: u64) -> Self {
        Self {
            n_samples_per_list: 1000,
            n_repetitions: 1000,
            n_resamples: DEFAULT_RESAMPLES,
            alpha_grid: default_alpha_grid(),
            h_grid: h_grid_to_030(200),
            query_sizes: vec![10, 20, 30, 40, 50],
            master_seed,
            power_alpha: 0.05,
            validity_simulations: 50,
            resample_statistic: ResampleStatistic::MeanDifference,
        }
    }

    pub fn desk(master_seed: u64) -> Self {
        Self {
            n_repetitions: 200,
            n_resamples: 10_000,
            h_grid: h_grid_to_030(20),
            ..Self::paper(master_seed)
        }
    }

    pub fn for_profile(profile: Profile, master_seed: u64) -> Self {
        match profile {
            Profile::Paper => Self::paper(master_seed),
            Profile::Desk => Self::desk(master_seed),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        fn increasing<T: PartialOrd>(v: &[T]) -> bool {
            !v.is_empty() && v.windows(2).all(|w| w[0] < w[1])
        }
        if self.n_samples_per_list == 0 || self.n_repetitions == 0 || self.n_resamples == 0 {
            return bad("sample, repetition and resample counts must be >= 1".into());
        }
        if !increasing(&self.alpha_grid) || self.alpha_grid.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return bad("alpha grid must be non-empty, strictly increasing, inside (0, 1)".into());
        }
        if !increasing(&self.h_grid) || self.h_grid[0] != 0.0 || !self.h_grid.iter().all(|h| h.is_finite()) {
            return bad("h grid must be non-empty, strictly increasing and start at 0".into());
        }
        if !increasing(&self.query_sizes) || self.query_sizes[0] == 0 {
            return bad("query sizes must be non-empty, strictly increasing and positive".into());
        }
        if !(self.power_alpha > 0.0 && self.power_alpha < 1.0) {
            return bad(format!("power alpha {} outside (0, 1)", self.power_alpha));
        }
        if self.validity_simulations == 0 {
            return bad("validity simulations must be >= 1".into());
        }
        Ok(())
    }

    /// Stable textual form of every field that affects results, used for
    /// provenance hashes in output headers.
    pub fn canonical_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        format!(
            "samples={};reps={};resamples={};alpha={};h={};queries={};seed={};power_alpha={};validity_sims={};statistic={:?}",
            self.n_samples_per_list,
            self.n_repetitions,
            self.n_resamples,
            join(&self.alpha_grid),
            join(&self.h_grid),
            self.query_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            self.master_seed,
            self.power_alpha,
            self.validity_simulations,
            self.resample_statistic,
        )
    }
}
