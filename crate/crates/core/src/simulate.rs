//! Synthetic rankings drawn from score-distribution mixtures, and their AP.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::ingest::QueryId;
use crate::rng::RngStream;
use crate::sdmodel::LogNormalMixture;

/// Sub-stream ids for the two lists of a pair.
pub const LIST_A: u64 = 0;
pub const LIST_B: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("no model for query {0}")]
    MissingModel(QueryId),
    #[error("cannot draw {requested} queries from {available}")]
    SubsetTooLarge { requested: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub score: f64,
    pub relevant: bool,
}

/// Items sorted by descending score; equal scores put non-relevant first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticRanking {
    items: Vec<ScoredItem>,
}

impl SyntheticRanking {
    pub fn from_items(mut items: Vec<ScoredItem>) -> Self {
        items.sort_unstable_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.relevant.cmp(&b.relevant))
        });
        Self { items }
    }

    /// Builds a ranking from labels that are already in rank order.
    pub fn from_labels(labels: &[bool]) -> Self {
        let n = labels.len();
        let items = labels
            .iter()
            .enumerate()
            .map(|(i, &relevant)| ScoredItem {
                score: (n - i) as f64,
                relevant,
            })
            .collect();
        Self { items }
    }

    pub fn items(&self) -> &[ScoredItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_relevant(&self) -> usize {
        self.items.iter().filter(|i| i.relevant).count()
    }

    /// Debug dump, one `score<TAB>label` line per item.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for it in &self.items {
            writeln!(w, "{}\t{}", it.score, u8::from(it.relevant))?;
        }
        Ok(())
    }
}

/// Draws `n_samples` labelled scores: each draw is relevant with
/// probability `lambda` and then scored from the matching component.
pub fn sample_ranking(m: &LogNormalMixture, n_samples: usize, stream: RngStream) -> SyntheticRanking {
    let mut rng = stream.rng();
    let (l1, l0) = (m.relevant(), m.nonrelevant());
    let items = (0..n_samples)
        .map(|_| {
            let relevant = rng.random::<f64>() < m.lambda();
            let comp = if relevant { l1 } else { l0 };
            let z: f64 = rng.sample(StandardNormal);
            ScoredItem {
                score: (comp.mu() + comp.sigma() * z).exp(),
                relevant,
            }
        })
        .collect();
    SyntheticRanking::from_items(items)
}

/// Average precision with the list itself as the recall base; 0 when the
/// list holds no relevant item.
pub fn average_precision(r: &SyntheticRanking) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, it) in r.items.iter().enumerate() {
        if it.relevant {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedAPSeries {
    pub query_ids: Vec<QueryId>,
    pub ap_a: Vec<f64>,
    pub ap_b: Vec<f64>,
}

impl PairedAPSeries {
    pub fn len(&self) -> usize {
        self.query_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_ids.is_empty()
    }

    /// Per-query `ap_b - ap_a`.
    pub fn differences(&self) -> Vec<f64> {
        self.ap_a.iter().zip(&self.ap_b).map(|(a, b)| b - a).collect()
    }
}

/// Samples one ranking per query from each model family using the given
/// per-list streams (query `i` uses `stream_x.child(i)`).
pub fn paired_series_from_streams(
    models_a: &HashMap<QueryId, LogNormalMixture>,
    models_b: &HashMap<QueryId, LogNormalMixture>,
    query_ids: &[QueryId],
    n_samples: usize,
    stream_a: RngStream,
    stream_b: RngStream,
) -> Result<PairedAPSeries, SimulateError> {
    let mut out = PairedAPSeries::default();
    for (i, q) in query_ids.iter().enumerate() {
        let ma = models_a.get(q).ok_or_else(|| SimulateError::MissingModel(q.clone()))?;
        let mb = models_b.get(q).ok_or_else(|| SimulateError::MissingModel(q.clone()))?;
        out.ap_a.push(average_precision(&sample_ranking(ma, n_samples, stream_a.child(i as u64))));
        out.ap_b.push(average_precision(&sample_ranking(mb, n_samples, stream_b.child(i as u64))));
        out.query_ids.push(q.clone());
    }
    Ok(out)
}

/// Paired AP series with independent sub-streams for the two lists.
pub fn paired_series(
    models_a: &HashMap<QueryId, LogNormalMixture>,
    models_b: &HashMap<QueryId, LogNormalMixture>,
    query_ids: &[QueryId],
    n_samples: usize,
    stream: RngStream,
) -> Result<PairedAPSeries, SimulateError> {
    paired_series_from_streams(
        models_a,
        models_b,
        query_ids,
        n_samples,
        stream.child(LIST_A),
        stream.child(LIST_B),
    )
}

/// Positions of a uniform random `n`-subset of `0..len`, ascending.
pub fn subsample_indices(len: usize, n: usize, stream: RngStream) -> Result<Vec<usize>, SimulateError> {
    if n > len {
        return Err(SimulateError::SubsetTooLarge {
            requested: n,
            available: len,
        });
    }
    if n == len {
        return Ok((0..len).collect());
    }
    let mut idx = index::sample(&mut stream.rng(), len, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Uniform random subset without replacement, kept in original order.
pub fn subsample_queries(
    query_ids: &[QueryId],
    n: usize,
    stream: RngStream,
) -> Result<Vec<QueryId>, SimulateError> {
    Ok(subsample_indices(query_ids.len(), n, stream)?
        .into_iter()
        .map(|i| query_ids[i].clone())
        .collect())
}
