//! Text persistence for fitted models: `system,query,lambda,mu1,sigma1,mu0,sigma0`.

use std::io::{Read, Write};

use thiserror::Error;

use super::{LogNormalMixture, ModelError};
use crate::ingest::QueryId;

pub const MODEL_HEADER: [&str; 7] = ["system", "query", "lambda", "mu1", "sigma1", "mu0", "sigma0"];

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("record {record}: {reason}")]
    BadRecord { record: usize, reason: String },
    #[error("record {record}: {source}")]
    Model {
        record: usize,
        #[source]
        source: ModelError,
    },
}

/// All per-query mixtures of one system, in query order.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModels {
    pub system: String,
    pub queries: Vec<(QueryId, LogNormalMixture)>,
}

impl SystemModels {
    pub fn query_ids(&self) -> Vec<QueryId> {
        self.queries.iter().map(|(q, _)| q.clone()).collect()
    }

    pub fn mixtures(&self) -> Vec<LogNormalMixture> {
        self.queries.iter().map(|(_, m)| *m).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSet {
    pub systems: Vec<SystemModels>,
}

impl ModelSet {
    pub fn is_empty(&self) -> bool {
        self.systems.iter().all(|s| s.queries.is_empty())
    }

    pub fn n_models(&self) -> usize {
        self.systems.iter().map(|s| s.queries.len()).sum()
    }
}

pub fn write_models<W: Write>(models: &ModelSet, w: W) -> Result<(), PersistError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MODEL_HEADER)?;
    for sys in &models.systems {
        for (q, m) in &sys.queries {
            out.write_record([
                sys.system.clone(),
                q.to_string(),
                m.lambda().to_string(),
                m.relevant().mu().to_string(),
                m.relevant().sigma().to_string(),
                m.nonrelevant().mu().to_string(),
                m.nonrelevant().sigma().to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a model file. Lines starting with `#` are ignored; systems keep
/// their first-appearance order.
pub fn read_models<R: Read>(r: R) -> Result<ModelSet, PersistError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(MODEL_HEADER) {
        return Err(PersistError::BadRecord {
            record: 0,
            reason: format!("expected header `{}`", MODEL_HEADER.join(",")),
        });
    }
    let mut set = ModelSet::default();
    for (i, rec) in rdr.records().enumerate() {
        let record = i + 1;
        let rec = rec?;
        let num = |col: usize| -> Result<f64, PersistError> {
            rec[col].parse::<f64>().map_err(|_| PersistError::BadRecord {
                record,
                reason: format!("{} `{}` is not a number", MODEL_HEADER[col], &rec[col]),
            })
        };
        let m = LogNormalMixture::from_params(num(2)?, num(3)?, num(4)?, num(5)?, num(6)?)
            .map_err(|source| PersistError::Model { record, source })?;
        let system = &rec[0];
        let q = QueryId::new(&rec[1]);
        let idx = match set.systems.iter().position(|s| s.system == system) {
            Some(idx) => idx,
            None => {
                set.systems.push(SystemModels {
                    system: system.to_owned(),
                    queries: Vec::new(),
                });
                set.systems.len() - 1
            }
        };
        let sys = &mut set.systems[idx];
        if sys.queries.iter().any(|(existing, _)| *existing == q) {
            return Err(PersistError::BadRecord {
                record,
                reason: format!("duplicate model for ({system}, {q})"),
            });
        }
        sys.queries.push((q, m));
    }
    Ok(set)
}
