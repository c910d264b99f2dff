//! Two-component log-normal score-distribution model.
//!
//! A system's behaviour on one query is modelled as
//! `P(s) = lambda * P(s|1) + (1 - lambda) * P(s|0)`, where `P(s|1)` and
//! `P(s|0)` are log-normal densities for relevant and non-relevant scores
//! and `lambda` is the fraction of returned documents that are relevant.

mod persist;
mod simplex;

pub use persist::{read_models, write_models, ModelSet, PersistError, SystemModels};
pub use simplex::{nelder_mead, SimplexConfig, SimplexError, SimplexResult};

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::ingest::QueryScoreSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("score {0} outside the log-normal support (s > 0)")]
    Domain(f64),
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 2 scores, got {0}")]
    TooFewSamples(usize),
    #[error("all scores are equal (zero log-variance)")]
    DegenerateData,
    #[error("score {0} is not strictly positive")]
    NonPositiveScore(f64),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("optimizer result ({optimized:?}) disagrees with closed form ({closed_form:?})")]
    OracleDisagreement {
        optimized: (f64, f64),
        closed_form: (f64, f64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Relevant,
    NonRelevant,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Relevant => "L1",
            Component::NonRelevant => "L0",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("fitting {component}: {source}")]
pub struct MixtureFitError {
    pub component: Component,
    #[source]
    pub source: FitError,
}

/// Log-normal distribution, parameterized on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    mu: f64,
    sigma: f64,
}

impl LogNormal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, ModelError> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(ModelError::InvalidSigma(sigma));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `-ln(s * sigma * sqrt(2 pi)) - (ln s - mu)^2 / (2 sigma^2)`.
    pub fn logpdf(&self, s: f64) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::Domain(s));
        }
        Ok(logpdf_unchecked(s.ln(), self.mu, self.sigma))
    }
}

#[inline]
fn logpdf_unchecked(ln_s: f64, mu: f64, sigma: f64) -> f64 {
    let z = (ln_s - mu) / sigma;
    -(ln_s + sigma.ln() + 0.5 * (2.0 * PI).ln()) - 0.5 * z * z
}

pub fn lognormal_logpdf(s: f64, ln: &LogNormal) -> Result<f64, ModelError> {
    ln.logpdf(s)
}

/// A mixture whose relevant-component location has been rescaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMixture {
    pub mixture: LogNormalMixture,
    /// Set when the original `mu1 <= 0`: multiplying by `1 + h` then moves the
    /// relevant component down instead of up.
    pub nonpositive_mu1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalMixture {
    lambda: f64,
    relevant: LogNormal,
    nonrelevant: LogNormal,
}

impl LogNormalMixture {
    pub fn new(lambda: f64, relevant: LogNormal, nonrelevant: LogNormal) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ModelError::InvalidLambda(lambda));
        }
        Ok(Self {
            lambda,
            relevant,
            nonrelevant,
        })
    }

    /// Builds a mixture from raw `(lambda, mu1, sigma1, mu0, sigma0)`.
    pub fn from_params(
        lambda: f64,
        mu1: f64,
        sigma1: f64,
        mu0: f64,
        sigma0: f64,
    ) -> Result<Self, ModelError> {
        Self::new(lambda, LogNormal::new(mu1, sigma1)?, LogNormal::new(mu0, sigma0)?)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Relevant component, `P(s|1)`.
    pub fn relevant(&self) -> &LogNormal {
        &self.relevant
    }

    /// Non-relevant component, `P(s|0)`.
    pub fn nonrelevant(&self) -> &LogNormal {
        &self.nonrelevant
    }

    pub fn logpdf(&self, s: f64) -> Result<f64, ModelError> {
        let l1 = self.relevant.logpdf(s)?;
        let l0 = self.nonrelevant.logpdf(s)?;
        Ok(match (self.lambda, 1.0 - self.lambda) {
            (0.0, _) => l0,
            (_, 0.0) => l1,
            (w1, w0) => {
                let a = w1.ln() + l1;
                let b = w0.ln() + l0;
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
        })
    }

    /// Multiplies `mu1` by `1 + h`; everything else is untouched.
    pub fn scale_mu1(&self, h: f64) -> ScaledMixture {
        let mut out = *self;
        out.relevant.mu = self.relevant.mu * (1.0 + h);
        ScaledMixture {
            mixture: out,
            nonpositive_mu1: self.relevant.mu <= 0.0,
        }
    }
}

pub fn mixture_logpdf(s: f64, m: &LogNormalMixture) -> Result<f64, ModelError> {
    m.logpdf(s)
}

pub fn scale_mu1(m: &LogNormalMixture, h: f64) -> ScaledMixture {
    m.scale_mu1(h)
}

/// Closed-form log-normal MLE: mean and population standard deviation of
/// the log scores.
pub fn closed_form_mle(scores: &[f64]) -> Result<(f64, f64), FitError> {
    if scores.len() < 2 {
        return Err(FitError::TooFewSamples(scores.len()));
    }
    if let Some(&bad) = scores.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        return Err(FitError::NonPositiveScore(bad));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(FitError::DegenerateData);
    }
    let n = scores.len() as f64;
    let mu = scores.iter().map(|s| s.ln()).sum::<f64>() / n;
    let var = scores.iter().map(|s| (s.ln() - mu).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(FitError::DegenerateData);
    }
    Ok((mu, var.sqrt()))
}

const ORACLE_TOLERANCE: f64 = 1e-3;

/// Maximum-likelihood log-normal fit by direct simplex optimization of the
/// mean log-likelihood over `(mu, ln sigma)`.
///
/// The simplex starts from the closed-form estimate offset by
/// `initial_step` (scaled by sigma on the location axis) and the result is
/// checked against the closed form, failing with
/// [`FitError::OracleDisagreement`] if either parameter is off by more than
/// 1e-3.
pub fn fit_lognormal_mle(scores: &[f64], cfg: &SimplexConfig) -> Result<LogNormal, FitError> {
    let (mu_cf, sigma_cf) = closed_form_mle(scores)?;
    let logs: Vec<f64> = scores.iter().map(|s| s.ln()).collect();
    let n = logs.len() as f64;

    // scale the location axis by sigma so one step means the same on both axes
    let objective = |p: &[f64]| {
        let mu = mu_cf + p[0] * sigma_cf;
        let sigma = p[1].exp();
        -logs.iter().map(|&l| logpdf_unchecked(l, mu, sigma)).sum::<f64>() / n
    };
    let start = [cfg.initial_step, sigma_cf.ln() + cfg.initial_step];
    let res = nelder_mead(objective, &start, cfg)?;
    let mu = mu_cf + res.x_min[0] * sigma_cf;
    let sigma = res.x_min[1].exp();

    if (mu - mu_cf).abs() > ORACLE_TOLERANCE || (sigma - sigma_cf).abs() > ORACLE_TOLERANCE {
        return Err(FitError::OracleDisagreement {
            optimized: (mu, sigma),
            closed_form: (mu_cf, sigma_cf),
        });
    }
    Ok(LogNormal { mu, sigma })
}

/// Fits one query's mixture: `lambda` is the relevant fraction of the
/// retrieved list, each component is fitted by MLE on its own scores.
pub fn fit_mixture(qss: &QueryScoreSet, cfg: &SimplexConfig) -> Result<LogNormalMixture, MixtureFitError> {
    let tag = |component| move |source| MixtureFitError { component, source };
    let relevant = fit_lognormal_mle(&qss.relevant_scores, cfg).map_err(tag(Component::Relevant))?;
    let nonrelevant =
        fit_lognormal_mle(&qss.nonrelevant_scores, cfg).map_err(tag(Component::NonRelevant))?;
    let lambda = qss.relevant_scores.len() as f64 / qss.n_retrieved as f64;
    Ok(LogNormalMixture {
        lambda,
        relevant,
        nonrelevant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::QueryId;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn ln(mu: f64, sigma: f64) -> LogNormal {
        LogNormal::new(mu, sigma).unwrap()
    }

    #[test]
    fn logpdf_examples() {
        let half_ln_2pi = 0.5 * (2.0 * PI).ln();
        assert_relative_eq!(ln(0.0, 1.0).logpdf(1.0).unwrap(), -half_ln_2pi, epsilon = 1e-15);
        assert_relative_eq!(ln(0.0, 1.0).logpdf(1.0).unwrap(), -0.918_938_533_204_672_8, epsilon = 1e-15);
        assert_relative_eq!(ln(1.0, 1.0).logpdf(E).unwrap(), -1.0 - half_ln_2pi, epsilon = 1e-14);
        assert_eq!(ln(0.0, 1.0).logpdf(0.0), Err(ModelError::Domain(0.0)));
        assert!(ln(0.0, 1.0).logpdf(-1.0).is_err());
        assert!(LogNormal::new(0.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_example() {
        let fit = fit_lognormal_mle(&[E, E.powi(3)], &SimplexConfig::default()).unwrap();
        assert_relative_eq!(fit.mu(), 2.0, epsilon = 1e-3);
        assert_relative_eq!(fit.sigma(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn fit_errors() {
        let cfg = SimplexConfig::default();
        assert_eq!(fit_lognormal_mle(&[2.0, 2.0, 2.0], &cfg), Err(FitError::DegenerateData));
        assert_eq!(fit_lognormal_mle(&[2.0], &cfg), Err(FitError::TooFewSamples(1)));
        assert_eq!(fit_lognormal_mle(&[2.0, -1.0], &cfg), Err(FitError::NonPositiveScore(-1.0)));
    }

    fn qss(rel: Vec<f64>, nonrel: Vec<f64>) -> QueryScoreSet {
        QueryScoreSet {
            query_id: QueryId::from("1"),
            n_retrieved: rel.len() + nonrel.len(),
            relevant_scores: rel,
            nonrelevant_scores: nonrel,
        }
    }

    #[test]
    fn mixture_lambda_is_relevant_fraction() {
        let rel: Vec<f64> = (0..50).map(|i| 2.0 + 0.01 * i as f64).collect();
        let non: Vec<f64> = (0..950).map(|i| 0.5 + 0.001 * i as f64).collect();
        let m = fit_mixture(&qss(rel, non), &SimplexConfig::default()).unwrap();
        assert_relative_eq!(m.lambda(), 0.05);
        assert!(m.relevant().mu() > m.nonrelevant().mu());
    }

    #[test]
    fn mixture_fit_errors_name_component() {
        let err = fit_mixture(&qss(vec![3.0; 4], vec![1.0, 2.0]), &SimplexConfig::default()).unwrap_err();
        assert_eq!(err.component, Component::Relevant);
        assert_eq!(err.source, FitError::DegenerateData);
        let err = fit_mixture(&qss(vec![1.0, 2.0], vec![1.0]), &SimplexConfig::default()).unwrap_err();
        assert_eq!(err.component, Component::NonRelevant);
    }

    #[test]
    fn scale_mu1_examples() {
        let m = LogNormalMixture::from_params(0.1, 2.0, 0.5, 1.0, 0.3).unwrap();
        assert_eq!(m.scale_mu1(0.0).mixture, m);
        let s = m.scale_mu1(0.05);
        assert_relative_eq!(s.mixture.relevant().mu(), 2.1, epsilon = 1e-15);
        assert!(!s.nonpositive_mu1);
        assert_eq!(s.mixture.lambda(), m.lambda());
        assert_eq!(s.mixture.nonrelevant(), m.nonrelevant());
        assert_eq!(s.mixture.relevant().sigma(), m.relevant().sigma());

        let neg = LogNormalMixture::from_params(0.1, -1.0, 0.5, 1.0, 0.3).unwrap();
        let s = neg.scale_mu1(0.1);
        assert_relative_eq!(s.mixture.relevant().mu(), -1.1, epsilon = 1e-15);
        assert!(s.nonpositive_mu1);
    }

    #[test]
    fn mixture_logpdf_degenerate_cases() {
        let l1 = ln(1.0, 0.4);
        let l0 = ln(0.2, 0.7);
        for &s in &[0.3, 1.0, 2.7, 9.0] {
            let only1 = LogNormalMixture::new(1.0, l1, l0).unwrap();
            let only0 = LogNormalMixture::new(0.0, l1, l0).unwrap();
            let same = LogNormalMixture::new(0.5, l1, l1).unwrap();
            assert_relative_eq!(only1.logpdf(s).unwrap(), l1.logpdf(s).unwrap(), epsilon = 1e-14);
            assert_relative_eq!(only0.logpdf(s).unwrap(), l0.logpdf(s).unwrap(), epsilon = 1e-14);
            assert_relative_eq!(same.logpdf(s).unwrap(), l1.logpdf(s).unwrap(), epsilon = 1e-14);
        }
        assert!(LogNormalMixture::new(0.5, l1, l0).unwrap().logpdf(0.0).is_err());
        assert!(LogNormalMixture::new(1.5, l1, l0).is_err());
    }

    #[test]
    fn mixture_density_integrates_to_one() {
        let m = LogNormalMixture::from_params(0.3, 1.2, 0.4, 0.8, 0.6).unwrap();
        // substitute s = e^u: integral of p(e^u) e^u du over mu +- 8 sigma
        let (lo, hi) = (0.8 - 8.0 * 0.6, 1.2 + 8.0 * 0.6);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let f = |u: f64| (m.logpdf(u.exp()).unwrap() + u).exp();
        let mut acc = f(lo) + f(hi);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");
    }
}
