//! Python bindings: mixtures, fitting, synthetic rankings, the five paired
//! tests and the experiments.

use std::collections::HashMap;
use std::fs::File;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sdpower_core::experiments::{self as exp, ExperimentConfig, Profile};
use sdpower_core::rng::RngStream;
use sdpower_core::sdmodel::{self as sd, SimplexConfig};
use sdpower_core::simulate::{self as sim, SyntheticRanking};
use sdpower_core::stattests::{self as st, ResampleConfig, ResampleStatistic, TestOutcome};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "LogNormalMixture", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMixture(sd::LogNormalMixture);

#[pymethods]
impl PyMixture {
    #[new]
    fn new(lam: f64, mu1: f64, sigma1: f64, mu0: f64, sigma0: f64) -> PyResult<Self> {
        sd::LogNormalMixture::from_params(lam, mu1, sigma1, mu0, sigma0)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }
    #[getter]
    fn mu1(&self) -> f64 {
        self.0.relevant().mu()
    }
    #[getter]
    fn sigma1(&self) -> f64 {
        self.0.relevant().sigma()
    }
    #[getter]
    fn mu0(&self) -> f64 {
        self.0.nonrelevant().mu()
    }
    #[getter]
    fn sigma0(&self) -> f64 {
        self.0.nonrelevant().sigma()
    }

    fn logpdf(&self, s: f64) -> PyResult<f64> {
        self.0.logpdf(s).map_err(value_err)
    }

    /// Returns `(scaled, nonpositive_mu1)`.
    fn scale_mu1(&self, h: f64) -> (Self, bool) {
        let s = self.0.scale_mu1(h);
        (Self(s.mixture), s.nonpositive_mu1)
    }

    /// `(score, relevant)` pairs sorted by descending score.
    #[pyo3(signature = (n, seed, path = Vec::new()))]
    fn sample(&self, n: usize, seed: u64, path: Vec<u64>) -> Vec<(f64, bool)> {
        sim::sample_ranking(&self.0, n, RngStream::new(seed).path(&path))
            .items()
            .iter()
            .map(|i| (i.score, i.relevant))
            .collect()
    }

    #[pyo3(signature = (n, seed, path = Vec::new()))]
    fn sample_ap(&self, n: usize, seed: u64, path: Vec<u64>) -> f64 {
        sim::average_precision(&sim::sample_ranking(&self.0, n, RngStream::new(seed).path(&path)))
    }

    fn __repr__(&self) -> String {
        format!(
            "LogNormalMixture(lam={}, mu1={}, sigma1={}, mu0={}, sigma0={})",
            self.lam(),
            self.mu1(),
            self.sigma1(),
            self.mu0(),
            self.sigma0()
        )
    }
}

#[pyclass(name = "ModelSet", frozen, from_py_object)]
#[derive(Clone)]
struct PyModelSet(sd::ModelSet);

#[pymethods]
impl PyModelSet {
    /// Parses the plain-text mixture specification.
    #[staticmethod]
    fn from_spec(text: &str) -> PyResult<Self> {
        exp::parse_synthetic_spec(text).map(Self).map_err(value_err)
    }

    /// Reads a models CSV written by `sdpower fit`.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        sd::read_models(f).map(Self).map_err(value_err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        sd::write_models(&self.0, &mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    fn systems(&self) -> Vec<String> {
        self.0.systems.iter().map(|s| s.system.clone()).collect()
    }

    fn mixtures(&self, system: &str) -> PyResult<Vec<(String, PyMixture)>> {
        let sys = self
            .0
            .systems
            .iter()
            .find(|s| s.system == system)
            .ok_or_else(|| value_err(format!("no system {system}")))?;
        Ok(sys.queries.iter().map(|(q, m)| (q.to_string(), PyMixture(*m))).collect())
    }

    fn __len__(&self) -> usize {
        self.0.n_models()
    }
}

#[pyfunction]
fn closed_form_mle(scores: Vec<f64>) -> PyResult<(f64, f64)> {
    sd::closed_form_mle(&scores).map_err(value_err)
}

/// Simplex MLE of a log-normal; returns `(mu, sigma)`.
#[pyfunction]
fn fit_lognormal(scores: Vec<f64>) -> PyResult<(f64, f64)> {
    let ln = sd::fit_lognormal_mle(&scores, &SimplexConfig::default()).map_err(value_err)?;
    Ok((ln.mu(), ln.sigma()))
}

#[pyfunction]
fn fit_mixture(relevant_scores: Vec<f64>, nonrelevant_scores: Vec<f64>) -> PyResult<PyMixture> {
    let set = sdpower_core::ingest::QueryScoreSet {
        query_id: "q".into(),
        n_retrieved: relevant_scores.len() + nonrelevant_scores.len(),
        relevant_scores,
        nonrelevant_scores,
    };
    sd::fit_mixture(&set, &SimplexConfig::default())
        .map(PyMixture)
        .map_err(value_err)
}

#[pyfunction]
fn average_precision(labels: Vec<bool>) -> f64 {
    sim::average_precision(&SyntheticRanking::from_labels(&labels))
}

fn statistic(name: &str) -> PyResult<ResampleStatistic> {
    match name {
        "mean" => Ok(ResampleStatistic::MeanDifference),
        "t" => Ok(ResampleStatistic::TStatistic),
        other => Err(value_err(format!("unknown statistic {other} (mean or t)"))),
    }
}

fn resample_config(n_resamples: usize, seed: u64, stat: &str) -> PyResult<ResampleConfig> {
    Ok(ResampleConfig {
        statistic: statistic(stat)?,
        ..ResampleConfig::new(n_resamples, RngStream::new(seed))
    })
}

fn pair(o: Result<TestOutcome, st::StatError>) -> PyResult<(f64, f64)> {
    o.map(|o| (o.statistic, o.p_value)).map_err(value_err)
}

/// Each test returns `(statistic, p_value)` for the differences `d`.
#[pyfunction]
fn t_test(d: Vec<f64>) -> PyResult<(f64, f64)> {
    pair(st::t_test_paired(&d))
}

#[pyfunction]
fn wilcoxon(d: Vec<f64>) -> PyResult<(f64, f64)> {
    pair(st::wilcoxon_signed_rank(&d))
}

#[pyfunction]
fn sign_test(d: Vec<f64>) -> PyResult<(f64, f64)> {
    pair(st::sign_test(&d))
}

#[pyfunction]
#[pyo3(signature = (d, n_resamples = st::DEFAULT_RESAMPLES, seed = 0, statistic = "mean"))]
fn permutation_test(d: Vec<f64>, n_resamples: usize, seed: u64, statistic: &str) -> PyResult<(f64, f64)> {
    pair(st::permutation_test(&d, &resample_config(n_resamples, seed, statistic)?))
}

#[pyfunction]
#[pyo3(signature = (d, n_resamples = st::DEFAULT_RESAMPLES, seed = 0, statistic = "mean"))]
fn bootstrap_test(d: Vec<f64>, n_resamples: usize, seed: u64, statistic: &str) -> PyResult<(f64, f64)> {
    pair(st::bootstrap_test(&d, &resample_config(n_resamples, seed, statistic)?))
}

/// All five tests; one dict per test with `test`, `statistic`, `p_value`,
/// `rejected` and `error` (None unless the test failed).
#[pyfunction]
#[pyo3(signature = (d, alpha = 0.05, n_resamples = st::DEFAULT_RESAMPLES, seed = 0, statistic = "mean"))]
fn run_tests(
    py: Python<'_>,
    d: Vec<f64>,
    alpha: f64,
    n_resamples: usize,
    seed: u64,
    statistic: &str,
) -> PyResult<Vec<Py<PyAny>>> {
    let reports = st::run_all_tests(&d, alpha, &resample_config(n_resamples, seed, statistic)?)
        .map_err(value_err)?;
    reports
        .into_iter()
        .map(|r| {
            let dict = pyo3::types::PyDict::new(py);
            dict.set_item("test", r.test.as_str())?;
            let (stat, p, err) = match &r.result {
                Ok(o) => (Some(o.statistic), Some(o.p_value), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            dict.set_item("statistic", stat)?;
            dict.set_item("p_value", p)?;
            dict.set_item("rejected", r.rejected)?;
            dict.set_item("error", err)?;
            Ok(dict.into_any().unbind())
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn config(
    profile: &str,
    seed: u64,
    reps: Option<usize>,
    resamples: Option<usize>,
    samples: Option<usize>,
    alpha_grid: Option<Vec<f64>>,
    h_grid: Option<Vec<f64>>,
    query_sizes: Option<Vec<usize>>,
    power_alpha: Option<f64>,
) -> PyResult<ExperimentConfig> {
    let profile: Profile = profile.parse().map_err(value_err)?;
    let mut c = ExperimentConfig::for_profile(profile, seed);
    c.n_repetitions = reps.unwrap_or(c.n_repetitions);
    c.n_resamples = resamples.unwrap_or(c.n_resamples);
    c.n_samples_per_list = samples.unwrap_or(c.n_samples_per_list);
    c.alpha_grid = alpha_grid.unwrap_or(c.alpha_grid);
    c.h_grid = h_grid.unwrap_or(c.h_grid);
    c.query_sizes = query_sizes.unwrap_or(c.query_sizes);
    c.power_alpha = power_alpha.unwrap_or(c.power_alpha);
    c.validate().map_err(value_err)?;
    Ok(c)
}

/// Type-I error rates: `{(test, alpha, n_queries): rate}`.
#[pyfunction]
#[pyo3(signature = (models, seed, profile = "desk", reps = None, resamples = None, samples = None,
                    alpha_grid = None, query_sizes = None))]
#[allow(clippy::too_many_arguments)]
fn type1(
    py: Python<'_>,
    models: &PyModelSet,
    seed: u64,
    profile: &str,
    reps: Option<usize>,
    resamples: Option<usize>,
    samples: Option<usize>,
    alpha_grid: Option<Vec<f64>>,
    query_sizes: Option<Vec<usize>>,
) -> PyResult<HashMap<(String, String, usize), f64>> {
    let c = config(profile, seed, reps, resamples, samples, alpha_grid, None, query_sizes, None)?;
    let r = py
        .detach(|| exp::type1_experiment(&models.0, &c))
        .map_err(value_err)?;
    Ok(r.rows
        .iter()
        .map(|row| ((row.test.to_string(), row.alpha.to_string(), row.n_queries), row.rejection_rate))
        .collect())
}

/// Power: `{(test, h, n_queries): p_reject}`; `h` keys are decimal strings.
#[pyfunction]
#[pyo3(signature = (models, seed, profile = "desk", reps = None, resamples = None, samples = None,
                    h_grid = None, query_sizes = None, alpha = None))]
#[allow(clippy::too_many_arguments)]
fn power(
    py: Python<'_>,
    models: &PyModelSet,
    seed: u64,
    profile: &str,
    reps: Option<usize>,
    resamples: Option<usize>,
    samples: Option<usize>,
    h_grid: Option<Vec<f64>>,
    query_sizes: Option<Vec<usize>>,
    alpha: Option<f64>,
) -> PyResult<HashMap<(String, String, usize), f64>> {
    let c = config(profile, seed, reps, resamples, samples, None, h_grid, query_sizes, alpha)?;
    let r = py
        .detach(|| exp::power_experiment(&models.0, &c))
        .map_err(value_err)?;
    Ok(r.rows
        .iter()
        .map(|row| ((row.test.to_string(), row.h.to_string(), row.n_queries), row.p_reject))
        .collect())
}

/// Mean AP against h: list of `(h, mean_ap)`.
#[pyfunction]
#[pyo3(signature = (models, seed, h_grid = None, simulations = None, samples = None))]
fn validity_curve(
    py: Python<'_>,
    models: &PyModelSet,
    seed: u64,
    h_grid: Option<Vec<f64>>,
    simulations: Option<usize>,
    samples: Option<usize>,
) -> PyResult<Vec<(f64, f64)>> {
    let mut c = config("desk", seed, None, None, samples, None, h_grid, None, None)?;
    c.validity_simulations = simulations.unwrap_or(c.validity_simulations);
    py.detach(|| exp::validity_map_curve(&models.0, &c)).map_err(value_err)
}

type DeltaRecord = (String, String, usize, Option<f64>);

/// Relative AP change in percent at `h`, one `(system, query, rep, value)`
/// per pair and repetition; `value` is None when the base AP is zero.
#[pyfunction]
#[pyo3(signature = (models, seed, h = 0.05, reps = 100, samples = None))]
fn delta_ap(
    py: Python<'_>,
    models: &PyModelSet,
    seed: u64,
    h: f64,
    reps: usize,
    samples: Option<usize>,
) -> PyResult<Vec<DeltaRecord>> {
    let c = config("desk", seed, None, None, samples, None, None, None, None)?;
    let recs = py
        .detach(|| exp::delta_ap_distribution(&models.0, h, reps, &c))
        .map_err(value_err)?;
    Ok(recs
        .into_iter()
        .map(|r| (r.system, r.query.to_string(), r.rep, r.delta_ap_pct))
        .collect())
}

#[pymodule]
fn sdpower(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMixture>()?;
    m.add_class::<PyModelSet>()?;
    m.add_function(wrap_pyfunction!(closed_form_mle, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lognormal, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mixture, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(t_test, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(sign_test, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_test, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_tests, m)?)?;
    m.add_function(wrap_pyfunction!(type1, m)?)?;
    m.add_function(wrap_pyfunction!(power, m)?)?;
    m.add_function(wrap_pyfunction!(validity_curve, m)?)?;
    m.add_function(wrap_pyfunction!(delta_ap, m)?)?;
    Ok(())
}
