//! CSV writers for experiment reports. Numbers use Rust's shortest
//! round-trip formatting; `#` lines before the header carry provenance.

use std::io::Write;

use super::{DeltaApRecord, PowerCurve, Type1Report};

/// `# key=value` lines written ahead of a CSV header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeaderComments(pub Vec<(String, String)>);

impl HeaderComments {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

fn writer<W: Write>(mut w: W, header: &HeaderComments, columns: &[&str]) -> csv::Result<csv::Writer<W>> {
    header.write_to(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns)?;
    Ok(out)
}

pub fn write_type1_csv<W: Write>(
    report: &Type1Report,
    collection: &str,
    header: &HeaderComments,
    w: W,
) -> csv::Result<()> {
    let mut out = writer(
        w,
        header,
        &["collection", "test", "alpha", "n_queries", "rejection_rate", "n_trials", "stderr"],
    )?;
    for r in &report.rows {
        out.write_record([
            collection.to_owned(),
            r.test.to_string(),
            r.alpha.to_string(),
            r.n_queries.to_string(),
            r.rejection_rate.to_string(),
            r.n_trials.to_string(),
            r.stderr.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_power_csv<W: Write>(
    curve: &PowerCurve,
    collection: &str,
    header: &HeaderComments,
    w: W,
) -> csv::Result<()> {
    let mut out = writer(w, header, &["collection", "test", "h", "n_queries", "p_reject", "n_trials"])?;
    for r in &curve.rows {
        out.write_record([
            collection.to_owned(),
            r.test.to_string(),
            r.h.to_string(),
            r.n_queries.to_string(),
            r.p_reject.to_string(),
            r.n_trials.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_validity_csv<W: Write>(curve: &[(f64, f64)], header: &HeaderComments, w: W) -> csv::Result<()> {
    let mut out = writer(w, header, &["h", "mean_ap"])?;
    for (h, ap) in curve {
        out.write_record([h.to_string(), ap.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows with a zero baseline AP have an empty `delta_ap_pct` and
/// `base_zero_flag = 1`.
pub fn write_delta_ap_csv<W: Write>(records: &[DeltaApRecord], header: &HeaderComments, w: W) -> csv::Result<()> {
    let mut out = writer(w, header, &["system", "query", "rep", "delta_ap_pct", "base_zero_flag"])?;
    for r in records {
        let (delta, flag) = match r.delta_ap_pct {
            Some(v) => (v.to_string(), "0"),
            None => (String::new(), "1"),
        };
        out.write_record([r.system.clone(), r.query.to_string(), r.rep.to_string(), delta, flag.into()])?;
    }
    out.flush()?;
    Ok(())
}
