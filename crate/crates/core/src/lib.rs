//! Simulation of paired significance tests for retrieval evaluation.
//!
//! Per-query score distributions of real runs are fitted with a
//! two-component log-normal mixture, synthetic rankings are drawn from the
//! fitted mixtures, and the t-test, Wilcoxon signed-rank, sign, permutation
//! and bootstrap tests are applied to the resulting paired AP series to
//! estimate their type-I error rates and power.

pub mod experiments;
pub mod ingest;
pub mod rng;
pub mod sdmodel;
pub mod simulate;
pub mod special;
pub mod stattests;

pub use experiments::{power_experiment, type1_experiment, ExperimentConfig, PowerCurve, Profile, Type1Report};
pub use ingest::{parse_qrels, parse_run, QueryId};
pub use rng::RngStream;
pub use sdmodel::{fit_mixture, LogNormal, LogNormalMixture, ModelSet};
pub use simulate::{average_precision, sample_ranking, SyntheticRanking};
pub use stattests::{run_all_tests, TestKind, TestOutcome};
