use std::fs;

use rayon::prelude::*;
use sdpower_core::ingest::{
    build_query_score_set, filter_systems, parse_qrels, parse_run, shift_scores, Exclusion, Judgments,
    RunFile,
};
use sdpower_core::sdmodel::{fit_mixture, ModelSet, SimplexConfig, SystemModels};

use crate::manifest::Manifest;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct FitFailure {
    pub system: String,
    pub query: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub models: ModelSet,
    pub n_runs: usize,
    pub exclusions: Vec<Exclusion>,
    pub failures: Vec<FitFailure>,
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Fits one system's mixtures over the evaluated queries. Queries whose fit
/// fails are left out and reported.
fn fit_system(run: &RunFile, judgments: &Judgments, cfg: &SimplexConfig) -> (SystemModels, Vec<FitFailure>) {
    let mut queries = Vec::new();
    let mut failures = Vec::new();
    for q in judgments.evaluated_queries() {
        let entries = run.queries.get(&q).map_or(&[][..], Vec::as_slice);
        let fitted = build_query_score_set(&q, entries, judgments)
            .map_err(|e| e.to_string())
            .and_then(|set| fit_mixture(&set, cfg).map_err(|e| e.to_string()));
        match fitted {
            Ok(m) => queries.push((q, m)),
            Err(reason) => failures.push(FitFailure {
                system: run.system_tag.clone(),
                query: q.to_string(),
                reason,
            }),
        }
    }
    let models = SystemModels {
        system: run.system_tag.clone(),
        queries,
    };
    (models, failures)
}

/// Parse, truncate, filter, shift and fit every run named in the manifest.
pub fn fit_manifest(m: &Manifest) -> Result<FitSummary, CliError> {
    let judgments = parse_qrels(&read(&m.qrels)?).map_err(|source| CliError::Ingest {
        path: m.qrels.clone(),
        source,
    })?;
    let mut runs = Vec::with_capacity(m.runs.len());
    for path in &m.runs {
        let run = parse_run(&read(path)?).map_err(|source| CliError::Ingest {
            path: path.clone(),
            source,
        })?;
        runs.push(run.normalized(m.top_k));
    }
    let n_runs = runs.len();
    let (kept, exclusions) = filter_systems(runs, &judgments, m.thresholds.filter());
    let cfg = SimplexConfig::default();
    let eps = m.thresholds.shift_epsilon;
    let fitted: Vec<(SystemModels, Vec<FitFailure>)> = kept
        .into_par_iter()
        .map(|run| fit_system(&shift_scores(run, eps), &judgments, &cfg))
        .collect();

    let mut systems = Vec::new();
    let mut failures = Vec::new();
    for (sys, fails) in fitted {
        failures.extend(fails);
        if !sys.queries.is_empty() {
            systems.push(sys);
        }
    }
    Ok(FitSummary {
        models: ModelSet { systems },
        n_runs,
        exclusions,
        failures,
    })
}
