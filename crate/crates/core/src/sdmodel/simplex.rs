//! Nelder-Mead downhill simplex minimizer.

use thiserror::Error;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub max_iterations: usize,
    /// Convergence threshold on `f(worst) - f(best)` across the simplex.
    /// The vertices must also lie within `sqrt(tolerance)` of the best one
    /// in every coordinate.
    pub tolerance: f64,
    /// Offset of each initial vertex from the start point along one axis.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("objective is not finite at initial vertex {vertex}")]
    NonFiniteObjective { vertex: usize },
    #[error("invalid simplex configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("empty start point")]
    EmptyStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x_min: Vec<f64>,
    pub f_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `objective` starting from `x0`.
///
/// The initial simplex is `x0` plus `x0 + initial_step * e_i` for each axis.
/// Non-finite objective values after the start are treated as `+inf`, which
/// lets callers encode hard constraints.
pub fn nelder_mead<F>(
    objective: F,
    x0: &[f64],
    cfg: &SimplexConfig,
) -> Result<SimplexResult, SimplexError>
where
    F: Fn(&[f64]) -> f64,
{
    if cfg.max_iterations == 0 {
        return Err(SimplexError::InvalidConfig("max_iterations must be >= 1"));
    }
    if !(cfg.tolerance > 0.0) || !(cfg.initial_step > 0.0) {
        return Err(SimplexError::InvalidConfig(
            "tolerance and initial_step must be positive",
        ));
    }
    let n = x0.len();
    if n == 0 {
        return Err(SimplexError::EmptyStart);
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += cfg.initial_step;
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(n + 1);
    for (vertex, v) in simplex.iter().enumerate() {
        let f = objective(v);
        if !f.is_finite() {
            return Err(SimplexError::NonFiniteObjective { vertex });
        }
        values.push(f);
    }
    let eval = |x: &[f64]| {
        let f = objective(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };

    let x_tolerance = cfg.tolerance.sqrt();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let x_spread = order[1..]
            .iter()
            .flat_map(|&i| simplex[i].iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if values[worst] - values[best] < cfg.tolerance && x_spread < x_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let reflected = lerp(&centroid, &simplex[worst], -REFLECT);
        let f_r = eval(&reflected);

        if f_r < values[best] {
            let expanded = lerp(&centroid, &simplex[worst], -EXPAND);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second] {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }

        let accepted = if f_r < values[worst] {
            // outside contraction
            let c = lerp(&centroid, &reflected, CONTRACT);
            let f_c = eval(&c);
            (f_c <= f_r).then_some((c, f_c))
        } else {
            // inside contraction
            let c = lerp(&centroid, &simplex[worst], CONTRACT);
            let f_c = eval(&c);
            (f_c < values[worst]).then_some((c, f_c))
        };
        match accepted {
            Some((c, f_c)) => {
                simplex[worst] = c;
                values[worst] = f_c;
            }
            None => {
                let anchor = simplex[best].clone();
                for &i in &order[1..] {
                    simplex[i] = lerp(&anchor, &simplex[i], SHRINK);
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Ok(SimplexResult {
        x_min: simplex.swap_remove(best),
        f_min: values[best],
        iterations,
        converged,
    })
}
