use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentError, DOMAIN_DELTA, DOMAIN_VALIDITY};
use crate::ingest::QueryId;
use crate::rng::RngStream;
use crate::sdmodel::ModelSet;
use crate::simulate::{average_precision, sample_ranking, LIST_A, LIST_B};

/// Mean AP of lists drawn from every mixture with `mu1` scaled by `1 + h`,
/// for each h in the grid (`validity_simulations` lists per system-query
/// pair). The same random numbers are reused across h.
pub fn validity_map_curve(models: &ModelSet, cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>, ExperimentError> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(ExperimentError::EmptyModels);
    }
    let root = RngStream::new(cfg.master_seed).child(DOMAIN_VALIDITY);
    let pairs: Vec<(usize, usize)> = models
        .systems
        .iter()
        .enumerate()
        .flat_map(|(j, s)| (0..s.queries.len()).map(move |q| (j, q)))
        .collect();

    // sums[pair][h]
    let sums: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(j, q)| {
            let m = models.systems[j].queries[q].1;
            let stream = root.path(&[j as u64, q as u64]);
            cfg.h_grid
                .iter()
                .map(|&h| {
                    let scaled = m.scale_mu1(h).mixture;
                    (0..cfg.validity_simulations as u64)
                        .map(|sim| {
                            average_precision(&sample_ranking(&scaled, cfg.n_samples_per_list, stream.child(sim)))
                        })
                        .sum()
                })
                .collect()
        })
        .collect();

    let total = (pairs.len() * cfg.validity_simulations) as f64;
    Ok(cfg
        .h_grid
        .iter()
        .enumerate()
        .map(|(hi, &h)| (h, sums.iter().map(|s| s[hi]).sum::<f64>() / total))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaApRecord {
    pub system: String,
    pub query: QueryId,
    pub rep: usize,
    /// `100 (AP_scaled - AP_base) / AP_base`; `None` when `AP_base = 0`.
    pub delta_ap_pct: Option<f64>,
}

/// Relative AP change between independent lists from the original and the
/// `mu1`-scaled mixture, `n_reps` times per system-query pair.
pub fn delta_ap_distribution(
    models: &ModelSet,
    h: f64,
    n_reps: usize,
    cfg: &ExperimentConfig,
) -> Result<Vec<DeltaApRecord>, ExperimentError> {
    if !(h >= 0.0 && h.is_finite()) || n_reps == 0 || cfg.n_samples_per_list == 0 {
        return Err(ExperimentError::InvalidConfig(format!(
            "need h >= 0 and n_reps >= 1 (got h = {h}, n_reps = {n_reps})"
        )));
    }
    if models.is_empty() {
        return Err(ExperimentError::EmptyModels);
    }
    let root = RngStream::new(cfg.master_seed).child(DOMAIN_DELTA);
    let pairs: Vec<(usize, usize)> = models
        .systems
        .iter()
        .enumerate()
        .flat_map(|(j, s)| (0..s.queries.len()).map(move |q| (j, q)))
        .collect();
    let n = cfg.n_samples_per_list;
    let nested: Vec<Vec<DeltaApRecord>> = pairs
        .par_iter()
        .map(|&(j, q)| {
            let sys = &models.systems[j];
            let (query, base) = &sys.queries[q];
            let scaled = base.scale_mu1(h).mixture;
            (0..n_reps)
                .map(|rep| {
                    let s = root.path(&[j as u64, q as u64, rep as u64]);
                    let ap_base = average_precision(&sample_ranking(base, n, s.child(LIST_A)));
                    let ap_scaled = average_precision(&sample_ranking(&scaled, n, s.child(LIST_B)));
                    DeltaApRecord {
                        system: sys.system.clone(),
                        query: query.clone(),
                        rep,
                        delta_ap_pct: (ap_base > 0.0).then(|| 100.0 * (ap_scaled - ap_base) / ap_base),
                    }
                })
                .collect()
        })
        .collect();
    Ok(nested.into_iter().flatten().collect())
}
