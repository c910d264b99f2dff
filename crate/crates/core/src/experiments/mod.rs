//! Type-I error, power-curve and validity experiments.
//!
//! Each system's per-query mixtures generate pairs of synthetic lists; the
//! paired AP series is tested with all five tests and rejection indicators
//! are averaged first over repetitions within a system, then over systems.
//!
//! All randomness is derived from `master_seed` by task coordinates, and
//! per-task results are integer counts, so reports are bit-identical for
//! any number of worker threads.

mod config;
mod isotonic;
mod output;
mod synthetic;
mod validity;

pub use config::{default_alpha_grid, h_grid_to_030, ExperimentConfig, Profile};
pub use isotonic::{isotonic_fit, max_isotonic_residual};
pub use output::{
    write_delta_ap_csv, write_power_csv, write_type1_csv, write_validity_csv, HeaderComments,
};
pub use synthetic::{parse_synthetic_spec, SyntheticSpecError};
pub use validity::{delta_ap_distribution, validity_map_curve, DeltaApRecord};

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::QueryId;
use crate::rng::RngStream;
use crate::sdmodel::{LogNormalMixture, ModelSet, SystemModels};
use crate::simulate::{average_precision, sample_ranking, subsample_indices, LIST_A, LIST_B};
use crate::stattests::{compute_all, ResampleConfig, TestKind};

// top-level stream domains
const DOMAIN_LISTS: u64 = 1;
const DOMAIN_SUBSETS: u64 = 2;
const DOMAIN_TESTS: u64 = 3;
pub(crate) const DOMAIN_VALIDITY: u64 = 4;
pub(crate) const DOMAIN_DELTA: u64 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("no models to simulate")]
    EmptyModels,
    #[error("system {system} has {available} queries, fewer than the requested {requested}")]
    InsufficientQueries {
        system: String,
        available: usize,
        requested: usize,
    },
}

fn check_models(models: &ModelSet, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    cfg.validate()?;
    if models.systems.is_empty() || models.is_empty() {
        return Err(ExperimentError::EmptyModels);
    }
    let need = cfg.query_sizes.iter().copied().max().unwrap_or(0);
    for sys in &models.systems {
        if sys.queries.len() < need {
            return Err(ExperimentError::InsufficientQueries {
                system: sys.system.clone(),
                available: sys.queries.len(),
                requested: need,
            });
        }
    }
    Ok(())
}

/// p-values (None when the test errored) for each query size of one trial.
type TrialPValues = Vec<[Option<f64>; 5]>;

struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    root: RngStream,
    system_index: u64,
}

impl TrialContext<'_> {
    /// One repetition: list A from `models_a`, list B from `models_b` for
    /// every query, then the five tests on each query-size subset. Streams do
    /// not depend on the models, so power curves share random numbers across
    /// h and the h = 0 point coincides with the type-I construction.
    fn run(&self, models_a: &[LogNormalMixture], models_b: &[LogNormalMixture], rep: u64) -> TrialPValues {
        let n = self.cfg.n_samples_per_list;
        let lists = self.root.path(&[DOMAIN_LISTS, self.system_index, rep]);
        let (stream_a, stream_b) = (lists.child(LIST_A), lists.child(LIST_B));
        let diffs: Vec<f64> = models_a
            .iter()
            .zip(models_b)
            .enumerate()
            .map(|(q, (ma, mb))| {
                let ap_a = average_precision(&sample_ranking(ma, n, stream_a.child(q as u64)));
                let ap_b = average_precision(&sample_ranking(mb, n, stream_b.child(q as u64)));
                ap_b - ap_a
            })
            .collect();

        self.cfg
            .query_sizes
            .iter()
            .map(|&size| {
                let coords = [self.system_index, rep, size as u64];
                let subset = self.root.child(DOMAIN_SUBSETS).path(&coords);
                let idx = subsample_indices(diffs.len(), size, subset)
                    .expect("query sizes checked against model counts");
                let d: Vec<f64> = idx.iter().map(|&i| diffs[i]).collect();
                let resample = ResampleConfig {
                    statistic: self.cfg.resample_statistic,
                    ..ResampleConfig::new(
                        self.cfg.n_resamples,
                        self.root.child(DOMAIN_TESTS).path(&coords),
                    )
                };
                compute_all(&d, &resample).map(|r| r.ok().map(|o| o.p_value))
            })
            .collect()
    }
}

/// Rejection and error counts of one system over its repetitions, indexed
/// `[test][level][size]` and `[test][size]`.
#[derive(Debug, Clone, PartialEq)]
struct Counts {
    rejections: Vec<u64>,
    errors: Vec<u64>,
    n_levels: usize,
    n_sizes: usize,
}

impl Counts {
    fn new(n_levels: usize, n_sizes: usize) -> Self {
        Self {
            rejections: vec![0; 5 * n_levels * n_sizes],
            errors: vec![0; 5 * n_sizes],
            n_levels,
            n_sizes,
        }
    }

    fn record(&mut self, trial: &TrialPValues, levels: &[f64]) {
        for (s, ps) in trial.iter().enumerate() {
            for (t, p) in ps.iter().enumerate() {
                match p {
                    None => self.errors[t * self.n_sizes + s] += 1,
                    Some(p) => {
                        for (l, &alpha) in levels.iter().enumerate() {
                            if *p <= alpha {
                                self.rejections[(t * self.n_levels + l) * self.n_sizes + s] += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.rejections.iter_mut().zip(&other.rejections).for_each(|(a, b)| *a += b);
        self.errors.iter_mut().zip(&other.errors).for_each(|(a, b)| *a += b);
        self
    }

    fn rejections(&self, t: usize, l: usize, s: usize) -> u64 {
        self.rejections[(t * self.n_levels + l) * self.n_sizes + s]
    }
}

fn run_system(
    ctx: &TrialContext<'_>,
    models_a: &[LogNormalMixture],
    models_b: &[LogNormalMixture],
    levels: &[f64],
) -> Counts {
    let n_sizes = ctx.cfg.query_sizes.len();
    (0..ctx.cfg.n_repetitions as u64)
        .into_par_iter()
        .map(|rep| {
            let mut c = Counts::new(levels.len(), n_sizes);
            c.record(&ctx.run(models_a, models_b, rep), levels);
            c
        })
        .reduce(|| Counts::new(levels.len(), n_sizes), Counts::merge)
}

/// Tests that errored in some trials (counted as non-rejections).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTally {
    pub test: TestKind,
    pub n_queries: usize,
    pub errors: u64,
    pub n_trials: u64,
}

fn error_tallies(per_system: &[Counts], sizes: &[usize], reps: u64) -> Vec<ErrorTally> {
    let mut out = Vec::new();
    for test in TestKind::ALL {
        for (s, &n_queries) in sizes.iter().enumerate() {
            let errors: u64 = per_system
                .iter()
                .map(|c| c.errors[test.index() * c.n_sizes + s])
                .sum();
            if errors > 0 {
                out.push(ErrorTally {
                    test,
                    n_queries,
                    errors,
                    n_trials: reps * per_system.len() as u64,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Row {
    pub test: TestKind,
    pub alpha: f64,
    pub n_queries: usize,
    /// Mean over systems of each system's `rejections / n_repetitions`.
    pub rejection_rate: f64,
    /// Repetitions summed over systems.
    pub n_trials: u64,
    pub stderr: f64,
    pub per_system_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Report {
    pub systems: Vec<String>,
    /// Ordered by test, then alpha, then query-set size.
    pub rows: Vec<Type1Row>,
    pub errors: Vec<ErrorTally>,
}

impl Type1Report {
    pub fn get(&self, test: TestKind, alpha: f64, n_queries: usize) -> Option<&Type1Row> {
        self.rows
            .iter()
            .find(|r| r.test == test && r.alpha == alpha && r.n_queries == n_queries)
    }
}

fn aggregate(per_system: &[Counts], t: usize, l: usize, s: usize, reps: u64) -> (f64, f64, Vec<f64>) {
    let rates: Vec<f64> = per_system
        .iter()
        .map(|c| c.rejections(t, l, s) as f64 / reps as f64)
        .collect();
    let m = rates.len() as f64;
    let rate = rates.iter().sum::<f64>() / m;
    let var_sum: f64 = rates.iter().map(|r| r * (1.0 - r) / reps as f64).sum();
    (rate, var_sum.sqrt() / m, rates)
}

/// Probability of rejecting a true null: both lists of every pair come from
/// the same mixture.
pub fn type1_experiment(models: &ModelSet, cfg: &ExperimentConfig) -> Result<Type1Report, ExperimentError> {
    check_models(models, cfg)?;
    let root = RngStream::new(cfg.master_seed);
    let per_system: Vec<Counts> = models
        .systems
        .iter()
        .enumerate()
        .map(|(j, sys)| {
            let ctx = TrialContext {
                cfg,
                root,
                system_index: j as u64,
            };
            let mixtures = sys.mixtures();
            run_system(&ctx, &mixtures, &mixtures, &cfg.alpha_grid)
        })
        .collect();

    let reps = cfg.n_repetitions as u64;
    let mut rows = Vec::new();
    for test in TestKind::ALL {
        for (l, &alpha) in cfg.alpha_grid.iter().enumerate() {
            for (s, &n_queries) in cfg.query_sizes.iter().enumerate() {
                let (rejection_rate, stderr, per_system_rates) =
                    aggregate(&per_system, test.index(), l, s, reps);
                rows.push(Type1Row {
                    test,
                    alpha,
                    n_queries,
                    rejection_rate,
                    n_trials: reps * per_system.len() as u64,
                    stderr,
                    per_system_rates,
                });
            }
        }
    }
    Ok(Type1Report {
        systems: models.systems.iter().map(|s| s.system.clone()).collect(),
        rows,
        errors: error_tallies(&per_system, &cfg.query_sizes, reps),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub test: TestKind,
    pub h: f64,
    pub n_queries: usize,
    pub p_reject: f64,
    pub n_trials: u64,
    pub per_system_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub alpha: f64,
    /// Ordered by test, then h, then query-set size.
    pub rows: Vec<PowerRow>,
    pub errors: Vec<ErrorTally>,
    /// (system, query) pairs whose `mu1 <= 0`, where scaling by `1 + h`
    /// lowers relevant scores instead of raising them.
    pub nonpositive_mu1: Vec<(String, QueryId)>,
}

impl PowerCurve {
    pub fn get(&self, test: TestKind, h: f64, n_queries: usize) -> Option<&PowerRow> {
        self.rows
            .iter()
            .find(|r| r.test == test && r.h == h && r.n_queries == n_queries)
    }
}

fn nonpositive_mu1(sys: &SystemModels) -> impl Iterator<Item = (String, QueryId)> + '_ {
    sys.queries
        .iter()
        .filter(|(_, m)| m.relevant().mu() <= 0.0)
        .map(|(q, _)| (sys.system.clone(), q.clone()))
}

/// Probability of rejecting the null when list B comes from the mixture
/// with `mu1` scaled by `1 + h`, for every h in the grid. Counters are reset
/// for each h.
pub fn power_experiment(models: &ModelSet, cfg: &ExperimentConfig) -> Result<PowerCurve, ExperimentError> {
    check_models(models, cfg)?;
    let root = RngStream::new(cfg.master_seed);
    let levels = [cfg.power_alpha];
    // per_h[h][system]
    let per_h: Vec<Vec<Counts>> = cfg
        .h_grid
        .iter()
        .map(|&h| {
            models
                .systems
                .iter()
                .enumerate()
                .map(|(j, sys)| {
                    let ctx = TrialContext {
                        cfg,
                        root,
                        system_index: j as u64,
                    };
                    let base = sys.mixtures();
                    let scaled: Vec<LogNormalMixture> =
                        base.iter().map(|m| m.scale_mu1(h).mixture).collect();
                    run_system(&ctx, &base, &scaled, &levels)
                })
                .collect()
        })
        .collect();

    let reps = cfg.n_repetitions as u64;
    let m = models.systems.len() as u64;
    let mut rows = Vec::new();
    for test in TestKind::ALL {
        for (hi, &h) in cfg.h_grid.iter().enumerate() {
            for (s, &n_queries) in cfg.query_sizes.iter().enumerate() {
                let (p_reject, _, per_system_rates) = aggregate(&per_h[hi], test.index(), 0, s, reps);
                rows.push(PowerRow {
                    test,
                    h,
                    n_queries,
                    p_reject,
                    n_trials: reps * m,
                    per_system_rates,
                });
            }
        }
    }
    let mut errors = Vec::new();
    for counts in &per_h {
        errors.extend(error_tallies(counts, &cfg.query_sizes, reps));
    }
    Ok(PowerCurve {
        alpha: cfg.power_alpha,
        rows,
        errors,
        nonpositive_mu1: models.systems.iter().flat_map(nonpositive_mu1).collect(),
    })
}
