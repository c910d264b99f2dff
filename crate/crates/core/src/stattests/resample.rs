use rand::Rng;

use super::{
    check_finite, mean, PermutationMode, ResampleConfig, ResampleStatistic, StatError, TestKind,
    TestOutcome, EXACT_MAX_N, TIE_TOLERANCE,
};

fn check(d: &[f64], cfg: &ResampleConfig) -> Result<(), StatError> {
    if d.is_empty() {
        return Err(StatError::TooFewObservations { needed: 1, got: 0 });
    }
    if cfg.n_resamples == 0 {
        return Err(StatError::NoResamples);
    }
    check_finite(d)
}

fn add_one_p(exceed: usize, b: usize) -> f64 {
    (1 + exceed) as f64 / (b + 1) as f64
}

/// Counts sign vectors over `nz` whose signed sum reaches `threshold` in
/// absolute value. Splits the vector in two halves and combines the
/// tabulated partial sums, so no sum carries more than `n` roundings.
fn exact_sign_flip_exceedances(nz: &[f64], threshold: f64) -> u64 {
    let half = nz.len() / 2;
    let partial = |part: &[f64]| -> Vec<f64> {
        (0u32..1 << part.len())
            .map(|mask| {
                part.iter()
                    .enumerate()
                    .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                    .sum()
            })
            .collect()
    };
    let left = partial(&nz[..half]);
    let right = partial(&nz[half..]);
    let mut count = 0u64;
    for &l in &left {
        count += right.iter().filter(|&&r| (l + r).abs() >= threshold).count() as u64;
    }
    count
}

/// Paired permutation (sign-flip) test on the mean difference.
///
/// Under the null each pair's difference is equally likely to carry
/// either sign. With at most [`EXACT_MAX_N`] non-zero differences (and
/// [`PermutationMode::Auto`]) all `2^n` sign vectors are enumerated and
/// `p = #{|T*| >= |T|} / 2^n`. Otherwise `n_resamples` random sign vectors
/// give `p = (1 + #{|T*| >= |T|}) / (n_resamples + 1)`.
///
/// `|t|` is a strictly increasing function of `|sum|` under sign flips
/// (the sum of squares does not change), so the t-statistic variant yields
/// the same p-value and is not computed separately.
pub fn permutation_test(d: &[f64], cfg: &ResampleConfig) -> Result<TestOutcome, StatError> {
    check(d, cfg)?;
    let observed: f64 = d.iter().sum();
    let scale: f64 = d.iter().map(|x| x.abs()).sum();
    let threshold = observed.abs() - TIE_TOLERANCE * scale;
    let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();

    let p_value = if cfg.permutation_mode == PermutationMode::Auto && nz.len() <= EXACT_MAX_N {
        let exceed = exact_sign_flip_exceedances(&nz, threshold);
        exceed as f64 / (nz.len() as f64).exp2()
    } else {
        let mut rng = cfg.stream.rng();
        let mut exceed = 0usize;
        for _ in 0..cfg.n_resamples {
            let mut sum = 0.0;
            for chunk in d.chunks(64) {
                let bits: u64 = rng.random();
                for (j, &x) in chunk.iter().enumerate() {
                    sum += if bits >> j & 1 == 1 { x } else { -x };
                }
            }
            if sum.abs() >= threshold {
                exceed += 1;
            }
        }
        add_one_p(exceed, cfg.n_resamples)
    };

    let statistic = match cfg.statistic {
        ResampleStatistic::MeanDifference => observed / d.len() as f64,
        ResampleStatistic::TStatistic => t_statistic(d).unwrap_or(0.0),
    };
    Ok(TestOutcome {
        test: TestKind::Permutation,
        statistic,
        p_value,
        n_effective: d.len(),
    })
}

/// `mean / (s / sqrt(n))`; `None` when undefined (n < 2 or zero variance
/// with zero mean). Zero variance with a non-zero mean gives `inf`.
fn t_statistic(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let m = mean(x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return if m == 0.0 { None } else { Some(f64::INFINITY.copysign(m)) };
    }
    Some(m / (var.sqrt() / (n as f64).sqrt()))
}

/// One-sample bootstrap test of zero mean difference.
///
/// The data are shifted to satisfy the null (`c_i = d_i - mean(d)`), then
/// `n_resamples` samples of size `n` are drawn with replacement from `c`.
/// `p = (1 + #{|T*| >= |T|}) / (n_resamples + 1)` where `T` is the mean of
/// `d` (or its t-statistic, if configured) and `T*` the same statistic on
/// the resample.
pub fn bootstrap_test(d: &[f64], cfg: &ResampleConfig) -> Result<TestOutcome, StatError> {
    check(d, cfg)?;
    let n = d.len();
    let m = mean(d);
    let centered: Vec<f64> = d.iter().map(|x| x - m).collect();
    let scale: f64 = d.iter().map(|x| x.abs()).sum();
    let mut rng = cfg.stream.rng();
    let mut exceed = 0usize;
    let mut sample = vec![0.0; n];

    let statistic = match cfg.statistic {
        ResampleStatistic::MeanDifference => {
            // compare sums to avoid dividing every resample by n
            let threshold = (m * n as f64).abs() - TIE_TOLERANCE * scale;
            for _ in 0..cfg.n_resamples {
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += centered[rng.random_range(0..n)];
                }
                if sum.abs() >= threshold {
                    exceed += 1;
                }
            }
            m
        }
        ResampleStatistic::TStatistic => {
            let observed = t_statistic(d).unwrap_or(0.0);
            let threshold = observed.abs() * (1.0 - TIE_TOLERANCE);
            for _ in 0..cfg.n_resamples {
                for slot in sample.iter_mut() {
                    *slot = centered[rng.random_range(0..n)];
                }
                if t_statistic(&sample).unwrap_or(0.0).abs() >= threshold {
                    exceed += 1;
                }
            }
            observed
        }
    };
    Ok(TestOutcome {
        test: TestKind::Bootstrap,
        statistic,
        p_value: add_one_p(exceed, cfg.n_resamples),
        n_effective: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn cfg(b: usize) -> ResampleConfig {
        ResampleConfig::new(b, RngStream::new(2024))
    }

    #[test]
    fn permutation_exact_example() {
        let o = permutation_test(&[1.0, 2.0, 3.0], &cfg(10)).unwrap();
        assert_eq!(o.p_value, 0.25);
        assert_eq!(o.statistic, 2.0);
        assert_eq!(permutation_test(&[0.0; 6], &cfg(10)).unwrap().p_value, 1.0);
    }

    #[test]
    fn permutation_monte_carlo_example() {
        let mc = ResampleConfig {
            permutation_mode: PermutationMode::MonteCarlo,
            ..cfg(100_000)
        };
        let p = permutation_test(&[1.0, 2.0, 3.0], &mc).unwrap().p_value;
        assert!((p - 0.25).abs() < 0.01, "{p}");
        let zeros = permutation_test(&[0.0; 30], &mc).unwrap().p_value;
        assert_eq!(zeros, 1.0);
    }

    #[test]
    fn permutation_zeros_do_not_change_exact_p() {
        let a = permutation_test(&[0.4, -0.1, 0.3, 0.25], &cfg(1)).unwrap().p_value;
        let b = permutation_test(&[0.0, 0.4, -0.1, 0.0, 0.3, 0.25, 0.0], &cfg(1)).unwrap().p_value;
        assert_eq!(a, b);
        // all-positive, flipped -0.1, and their mirrors
        assert_eq!(a, 4.0 / 16.0);
    }

    #[test]
    fn bootstrap_examples() {
        assert_eq!(bootstrap_test(&[0.0; 5], &cfg(1000)).unwrap().p_value, 1.0);
        let o = bootstrap_test(&[1.0, 2.0, 3.0], &cfg(1000)).unwrap();
        assert_eq!(o.p_value, 1.0 / 1001.0);
        assert_eq!(o.statistic, 2.0);
    }

    #[test]
    fn bootstrap_mirrored_data_same_p() {
        let d = [0.12, -0.05, 0.3, 0.01, -0.2, 0.07, 0.02];
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        for stat in [ResampleStatistic::MeanDifference, ResampleStatistic::TStatistic] {
            let c = ResampleConfig { statistic: stat, ..cfg(5000) };
            assert_eq!(
                bootstrap_test(&d, &c).unwrap().p_value,
                bootstrap_test(&neg, &c).unwrap().p_value
            );
        }
    }

    #[test]
    fn t_statistic_variant_runs() {
        let c = ResampleConfig {
            statistic: ResampleStatistic::TStatistic,
            ..cfg(2000)
        };
        let d = [0.3, 0.1, 0.25, -0.05, 0.2, 0.15, 0.1, 0.3];
        let boot = bootstrap_test(&d, &c).unwrap();
        assert!(boot.p_value < 0.05, "{}", boot.p_value);
        let perm = permutation_test(&d, &c).unwrap();
        let perm_mean = permutation_test(&d, &cfg(2000)).unwrap();
        assert_eq!(perm.p_value, perm_mean.p_value);
        assert!(perm.statistic > 3.0);
    }

    #[test]
    fn errors() {
        assert!(permutation_test(&[], &cfg(10)).is_err());
        assert_eq!(bootstrap_test(&[1.0], &cfg(0)), Err(StatError::NoResamples));
        assert_eq!(permutation_test(&[1.0, f64::INFINITY], &cfg(1)), Err(StatError::NonFinite(1)));
    }
}
