//! Plain-text mixture families for runs without TREC data.
//!
//! ```text
//! # comment
//! system sysA
//! 401 0.05 1.2 0.4 0.8 0.4
//! repeat 50 0.05 1.2 0.4 0.8 0.4
//! ```
//!
//! Query lines are `<query> lambda mu1 sigma1 mu0 sigma0`; `repeat <n> ...`
//! adds queries `q1..qn` with the same parameters. Lines before any
//! `system` line belong to a system named `synthetic`.

use std::collections::HashSet;

use thiserror::Error;

use crate::ingest::QueryId;
use crate::sdmodel::{LogNormalMixture, ModelError, ModelSet, SystemModels};

pub const DEFAULT_SYSTEM: &str = "synthetic";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticSpecError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("line {line}: duplicate query {query} for system {system}")]
    DuplicateQuery { line: usize, system: String, query: String },
    #[error("specification defines no queries")]
    Empty,
}

fn parse_params(line: usize, fields: &[&str]) -> Result<LogNormalMixture, SyntheticSpecError> {
    if fields.len() != 5 {
        return Err(SyntheticSpecError::Syntax {
            line,
            reason: format!("expected 5 parameters, found {}", fields.len()),
        });
    }
    let mut p = [0.0; 5];
    for (slot, f) in p.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|_| SyntheticSpecError::Syntax {
            line,
            reason: format!("`{f}` is not a number"),
        })?;
    }
    LogNormalMixture::from_params(p[0], p[1], p[2], p[3], p[4])
        .map_err(|source| SyntheticSpecError::Model { line, source })
}

pub fn parse_synthetic_spec(text: &str) -> Result<ModelSet, SyntheticSpecError> {
    let mut systems: Vec<SystemModels> = Vec::new();
    let mut seen: HashSet<(usize, QueryId)> = HashSet::new();

    let mut add = |systems: &mut Vec<SystemModels>, line: usize, q: QueryId, m: LogNormalMixture| {
        if systems.is_empty() {
            systems.push(SystemModels {
                system: DEFAULT_SYSTEM.into(),
                queries: Vec::new(),
            });
        }
        let j = systems.len() - 1;
        if !seen.insert((j, q.clone())) {
            return Err(SyntheticSpecError::DuplicateQuery {
                line,
                system: systems[j].system.clone(),
                query: q.to_string(),
            });
        }
        systems[j].queries.push((q, m));
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "system" => {
                if fields.len() != 2 {
                    return Err(SyntheticSpecError::Syntax {
                        line,
                        reason: "expected `system <name>`".into(),
                    });
                }
                if systems.iter().any(|s| s.system == fields[1]) {
                    return Err(SyntheticSpecError::Syntax {
                        line,
                        reason: format!("system {} declared twice", fields[1]),
                    });
                }
                systems.push(SystemModels {
                    system: fields[1].into(),
                    queries: Vec::new(),
                });
            }
            "repeat" => {
                let n: usize = fields
                    .get(1)
                    .and_then(|f| f.parse().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| SyntheticSpecError::Syntax {
                        line,
                        reason: "expected `repeat <n> lambda mu1 sigma1 mu0 sigma0` with n >= 1".into(),
                    })?;
                let m = parse_params(line, &fields[2..])?;
                for k in 1..=n {
                    add(&mut systems, line, QueryId::new(format!("q{k}")), m)?;
                }
            }
            q => {
                let m = parse_params(line, &fields[1..])?;
                add(&mut systems, line, QueryId::new(q), m)?;
            }
        }
    }

    systems.retain(|s| !s.queries.is_empty());
    if systems.is_empty() {
        return Err(SyntheticSpecError::Empty);
    }
    Ok(ModelSet { systems })
}
