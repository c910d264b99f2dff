//! Paired two-sided significance tests over per-query AP differences.
//!
//! Every test takes the vector of differences `d_i = ap_b[i] - ap_a[i]` and
//! returns a [`TestOutcome`] with a two-sided p-value.

mod rank;
mod resample;
mod ttest;

pub use rank::{sign_test, wilcoxon_signed_rank, wilcoxon_ranks};
pub use resample::{bootstrap_test, permutation_test};
pub use ttest::t_test_paired;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rng::RngStream;

/// Largest number of non-zero differences for which permutation and
/// Wilcoxon p-values are computed exactly.
pub const EXACT_MAX_N: usize = 20;

pub const DEFAULT_RESAMPLES: usize = 100_000;

/// Relative slack when comparing resampled statistics against the observed
/// one, so floating-point noise does not break exact ties.
pub(crate) const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    TTest,
    Wilcoxon,
    Sign,
    Permutation,
    Bootstrap,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::TTest,
        TestKind::Wilcoxon,
        TestKind::Sign,
        TestKind::Permutation,
        TestKind::Bootstrap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::TTest => "ttest",
            TestKind::Wilcoxon => "wilcoxon",
            TestKind::Sign => "sign",
            TestKind::Permutation => "permutation",
            TestKind::Bootstrap => "bootstrap",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown test `{s}`"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("need at least {needed} differences, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("zero variance with non-zero mean difference")]
    DegenerateVariance,
    #[error("non-finite difference at position {0}")]
    NonFinite(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("n_resamples must be >= 1")]
    NoResamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs used after zero handling.
    pub n_effective: usize,
}

/// Statistic used by the permutation and bootstrap tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleStatistic {
    #[default]
    MeanDifference,
    TStatistic,
}

/// Whether the permutation test may enumerate sign vectors exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermutationMode {
    /// Exact for up to [`EXACT_MAX_N`] non-zero differences, Monte Carlo above.
    #[default]
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub n_resamples: usize,
    pub stream: RngStream,
    pub statistic: ResampleStatistic,
    pub permutation_mode: PermutationMode,
}

impl ResampleConfig {
    pub fn new(n_resamples: usize, stream: RngStream) -> Self {
        Self {
            n_resamples,
            stream,
            statistic: ResampleStatistic::default(),
            permutation_mode: PermutationMode::default(),
        }
    }

    pub fn with_stream(self, stream: RngStream) -> Self {
        Self { stream, ..self }
    }
}

pub(crate) fn check_finite(d: &[f64]) -> Result<(), StatError> {
    match d.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StatError::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn mean(d: &[f64]) -> f64 {
    d.iter().sum::<f64>() / d.len() as f64
}

/// Outcome of one test inside [`run_all_tests`]. Errors are kept as
/// annotations and never count as rejections.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub test: TestKind,
    pub result: Result<TestOutcome, StatError>,
    pub rejected: bool,
}

impl TestReport {
    pub fn p_value(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|o| o.p_value)
    }
}

/// Runs the five tests, in [`TestKind::ALL`] order. The resampling tests get
/// disjoint sub-streams of `cfg.stream`.
pub fn compute_all(d: &[f64], cfg: &ResampleConfig) -> [Result<TestOutcome, StatError>; 5] {
    let perm = cfg.with_stream(cfg.stream.child(TestKind::Permutation.index() as u64));
    let boot = cfg.with_stream(cfg.stream.child(TestKind::Bootstrap.index() as u64));
    [
        t_test_paired(d),
        wilcoxon_signed_rank(d),
        sign_test(d),
        permutation_test(d, &perm),
        bootstrap_test(d, &boot),
    ]
}

pub fn run_all_tests(d: &[f64], alpha: f64, cfg: &ResampleConfig) -> Result<Vec<TestReport>, StatError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::InvalidAlpha(alpha));
    }
    Ok(TestKind::ALL
        .into_iter()
        .zip(compute_all(d, cfg))
        .map(|(test, result)| {
            let rejected = matches!(&result, Ok(o) if o.p_value <= alpha);
            TestReport {
                test,
                result,
                rejected,
            }
        })
        .collect())
}
