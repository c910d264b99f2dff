//! TREC run and qrels ingestion.
//!
//! Runs are 6-column lines (`query Q0 doc rank score tag`), qrels are
//! 4-column lines (`query iteration doc relevance`). Graded relevance is
//! collapsed to binary at parse time.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub const DEFAULT_TOP_K: usize = 1000;
pub const DEFAULT_SHIFT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MIN_DOCS_PER_QUERY: usize = 10;
pub const DEFAULT_MIN_RELEVANT_PER_QUERY: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("run contains no entries")]
    EmptyRun,
    #[error("query {0}: no judged-relevant document retrieved")]
    NoRelevantRetrieved(QueryId),
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

/// Topic identifier. Orders numerically when both sides are integers,
/// lexicographically otherwise, so `"99" < "100"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryId(String);

impl QueryId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Ord for QueryId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<u64>(), other.0.parse::<u64>()) {
            (Ok(a), Ok(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Ok(_), Err(_)) => Ordering::Less,
            (Err(_), Ok(_)) => Ordering::Greater,
            (Err(_), Err(_)) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for QueryId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for QueryId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub system_tag: String,
    pub queries: BTreeMap<QueryId, Vec<RunEntry>>,
}

impl RunFile {
    pub fn n_entries(&self) -> usize {
        self.queries.values().map(Vec::len).sum()
    }

    fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.queries.values().flatten().map(|e| e.score)
    }

    /// Sorts every query by descending score (ties by descending doc id, as
    /// trec_eval does), keeps the top `k` entries and renumbers ranks.
    pub fn normalized(mut self, k: usize) -> Self {
        for entries in self.queries.values_mut() {
            entries.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| b.doc_id.cmp(&a.doc_id))
            });
            entries.truncate(k);
            for (i, e) in entries.iter_mut().enumerate() {
                e.rank = i as u32 + 1;
            }
        }
        self
    }

    /// Writes the run back out in 6-column format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (q, entries) in &self.queries {
            for e in entries {
                out.push_str(&format!(
                    "{} Q0 {} {} {} {}\n",
                    q, e.doc_id, e.rank, e.score, self.system_tag
                ));
            }
        }
        out
    }
}

pub fn parse_run(text: &str) -> Result<RunFile, IngestError> {
    let mut tag: Option<String> = None;
    let mut queries: BTreeMap<QueryId, Vec<RunEntry>> = BTreeMap::new();
    let mut seen: HashSet<(QueryId, String)> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(malformed(
                line,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let rank: u32 = cols[3]
            .parse()
            .map_err(|_| malformed(line, format!("rank `{}` is not a non-negative integer", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| malformed(line, format!("score `{}` is not a finite number", cols[4])))?;
        match &tag {
            None => tag = Some(cols[5].to_owned()),
            Some(t) if t != cols[5] => {
                return Err(malformed(
                    line,
                    format!("run tag `{}` differs from `{}`", cols[5], t),
                ))
            }
            Some(_) => {}
        }
        let q = QueryId::new(cols[0]);
        if !seen.insert((q.clone(), cols[2].to_owned())) {
            return Err(malformed(
                line,
                format!("document `{}` repeated for query {}", cols[2], q),
            ));
        }
        queries.entry(q).or_default().push(RunEntry {
            doc_id: cols[2].to_owned(),
            rank,
            score,
        });
    }

    match tag {
        Some(system_tag) => Ok(RunFile {
            system_tag,
            queries,
        }),
        None => Err(IngestError::EmptyRun),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    Relevant,
    NonRelevant,
    Unjudged,
}

#[derive(Debug, Clone, Default)]
pub struct Judgments {
    map: HashMap<QueryId, HashMap<String, bool>>,
}

impl Judgments {
    pub fn insert(&mut self, query: QueryId, doc: impl Into<String>, relevant: bool) {
        self.map.entry(query).or_default().insert(doc.into(), relevant);
    }

    pub fn get(&self, query: &QueryId, doc: &str) -> Judgment {
        match self.map.get(query).and_then(|m| m.get(doc)) {
            Some(true) => Judgment::Relevant,
            Some(false) => Judgment::NonRelevant,
            None => Judgment::Unjudged,
        }
    }

    /// Queries with at least one relevant judgment, in natural order.
    pub fn evaluated_queries(&self) -> Vec<QueryId> {
        let mut qs: Vec<QueryId> = self
            .map
            .iter()
            .filter(|(_, docs)| docs.values().any(|&r| r))
            .map(|(q, _)| q.clone())
            .collect();
        qs.sort();
        qs
    }

    pub fn n_relevant(&self, query: &QueryId) -> usize {
        self.map
            .get(query)
            .map_or(0, |docs| docs.values().filter(|&&r| r).count())
    }
}

pub fn parse_qrels(text: &str) -> Result<Judgments, IngestError> {
    let mut j = Judgments::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(malformed(
                line,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let rel: i64 = cols[3]
            .parse()
            .map_err(|_| malformed(line, format!("relevance `{}` is not an integer", cols[3])))?;
        j.insert(QueryId::new(cols[0]), cols[2], rel > 0);
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds {
    pub min_docs_per_query: usize,
    pub min_relevant_per_query: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            min_docs_per_query: DEFAULT_MIN_DOCS_PER_QUERY,
            min_relevant_per_query: DEFAULT_MIN_RELEVANT_PER_QUERY,
        }
    }
}

/// A dropped system and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub system_tag: String,
    pub reason: String,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.system_tag, self.reason)
    }
}

fn exclusion_reason(run: &RunFile, judgments: &Judgments, t: FilterThresholds) -> Option<String> {
    let mut scores = run.scores();
    let Some(first) = scores.next() else {
        return Some("no entries".into());
    };
    if scores.all(|s| s == first) {
        return Some("no usable scores (constant score)".into());
    }
    for q in judgments.evaluated_queries() {
        let entries = run.queries.get(&q).map_or(&[][..], Vec::as_slice);
        if entries.len() < t.min_docs_per_query {
            return Some(format!(
                "query {q}: {} documents retrieved (< {})",
                entries.len(),
                t.min_docs_per_query
            ));
        }
        let rel = entries
            .iter()
            .filter(|e| judgments.get(&q, &e.doc_id) == Judgment::Relevant)
            .count();
        if rel < t.min_relevant_per_query {
            return Some(format!(
                "query {q}: {rel} relevant documents retrieved (< {})",
                t.min_relevant_per_query
            ));
        }
    }
    None
}

/// Keeps runs that retrieve enough documents and enough relevant documents
/// for every evaluated query.
pub fn filter_systems(
    runs: Vec<RunFile>,
    judgments: &Judgments,
    thresholds: FilterThresholds,
) -> (Vec<RunFile>, Vec<Exclusion>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for run in runs {
        match exclusion_reason(&run, judgments, thresholds) {
            None => kept.push(run),
            Some(reason) => dropped.push(Exclusion {
                system_tag: run.system_tag.clone(),
                reason,
            }),
        }
    }
    (kept, dropped)
}

/// Makes every score strictly positive when the run has any score `<= 0`,
/// using one offset for the whole run: `s - min + epsilon`.
pub fn shift_scores(mut run: RunFile, epsilon: f64) -> RunFile {
    let min = run.scores().fold(f64::INFINITY, f64::min);
    if min > 0.0 || !min.is_finite() {
        return run;
    }
    for e in run.queries.values_mut().flatten() {
        e.score = e.score - min + epsilon;
    }
    run
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryScoreSet {
    pub query_id: QueryId,
    pub relevant_scores: Vec<f64>,
    pub nonrelevant_scores: Vec<f64>,
    pub n_retrieved: usize,
}

/// Splits each query's retrieved scores by judgment. Unjudged documents join
/// the non-relevant side.
pub fn build_query_score_set(
    query_id: &QueryId,
    entries: &[RunEntry],
    judgments: &Judgments,
) -> Result<QueryScoreSet, IngestError> {
    let mut relevant_scores = Vec::new();
    let mut nonrelevant_scores = Vec::new();
    for e in entries {
        match judgments.get(query_id, &e.doc_id) {
            Judgment::Relevant => relevant_scores.push(e.score),
            Judgment::NonRelevant | Judgment::Unjudged => nonrelevant_scores.push(e.score),
        }
    }
    if relevant_scores.is_empty() {
        return Err(IngestError::NoRelevantRetrieved(query_id.clone()));
    }
    Ok(QueryScoreSet {
        query_id: query_id.clone(),
        relevant_scores,
        nonrelevant_scores,
        n_retrieved: entries.len(),
    })
}

pub fn build_query_score_sets(
    run: &RunFile,
    judgments: &Judgments,
) -> Vec<Result<QueryScoreSet, IngestError>> {
    run.queries
        .iter()
        .map(|(q, entries)| build_query_score_set(q, entries, judgments))
        .collect()
}
