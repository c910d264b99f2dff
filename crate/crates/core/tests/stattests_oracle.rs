mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sdpower_core::rng::RngStream;
use sdpower_core::stattests::{
    bootstrap_test, compute_all, permutation_test, sign_test, t_test_paired, wilcoxon_signed_rank,
    PermutationMode, ResampleConfig, StatError,
};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn statrs_two_sided(t: f64, df: f64) -> f64 {
    2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs())
}

#[test]
fn exact_rank_tests_match_enumeration_bit_for_bit() {
    let mut rng = RngStream::new(404).rng();
    for _ in 0..2000 {
        let d = common::random_differences(&mut rng);
        assert_eq!(wilcoxon_signed_rank(&d).unwrap().p_value, common::brute_wilcoxon_p(&d), "{d:?}");
        assert_eq!(sign_test(&d).unwrap().p_value, common::brute_sign_p(&d), "{d:?}");
    }
}

#[test]
fn sign_test_binomial_tail() {
    let mut d = vec![0.1; 8];
    d.extend([-0.2, -0.3]);
    assert_eq!(sign_test(&d).unwrap().p_value, 2.0 * (1.0 + 10.0 + 45.0) / 1024.0);
}

#[test]
fn t_test_matches_independent_cdfs() {
    let o = t_test_paired(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert!((o.p_value - common::student_t_two_sided_closed_form(o.statistic, 4)).abs() < 1e-12);
    assert!((o.p_value - 0.0132).abs() < 5e-5);

    let mut rng = RngStream::new(405).rng();
    let mut checked = 0;
    while checked < 2000 {
        let mut d = common::random_differences(&mut rng);
        // push some vectors far from zero to reach small p-values
        if rng.random::<bool>() {
            let shift = rng.random_range(0.0..0.5);
            d.iter_mut().for_each(|x| *x += shift);
        }
        let Ok(o) = t_test_paired(&d) else { continue };
        let df = d.len() as u32 - 1;
        let closed = common::student_t_two_sided_closed_form(o.statistic, df);
        let beta = statrs_two_sided(o.statistic, f64::from(df));
        assert!((o.p_value - closed).abs() < 1e-9, "{d:?}: {} vs {closed}", o.p_value);
        assert!((o.p_value - beta).abs() < 1e-9, "{d:?}: {} vs {beta}", o.p_value);
        checked += 1;
    }
}

#[test]
fn exact_permutation_matches_enumeration() {
    let mut rng = RngStream::new(406).rng();
    let cfg = ResampleConfig::new(1, RngStream::new(0));
    for _ in 0..500 {
        let d = common::random_differences(&mut rng);
        assert_eq!(permutation_test(&d, &cfg).unwrap().p_value, common::brute_permutation_p(&d), "{d:?}");
    }
}

#[test]
fn monte_carlo_permutation_inside_binomial_band() {
    const B: usize = 100_000;
    let mut rng = RngStream::new(407).rng();
    for case in 0..40u64 {
        let d = common::random_differences(&mut rng);
        let exact = common::brute_permutation_p(&d);
        let cfg = ResampleConfig {
            permutation_mode: PermutationMode::MonteCarlo,
            ..ResampleConfig::new(B, RngStream::new(408).child(case))
        };
        let p = permutation_test(&d, &cfg).unwrap().p_value;
        let hits = (p * (B + 1) as f64).round() as u64 - 1;
        let (lo, hi) = common::binomial_central_interval(B as u64, exact, 0.999);
        assert!((lo..=hi).contains(&hits), "{d:?}: {hits} not in [{lo}, {hi}]");
    }
}

#[test]
fn resampling_p_values_are_positive() {
    let cfg = ResampleConfig {
        permutation_mode: PermutationMode::MonteCarlo,
        ..ResampleConfig::new(200, RngStream::new(5))
    };
    let d: Vec<f64> = (1..=40).map(f64::from).collect();
    assert_eq!(permutation_test(&d, &cfg).unwrap().p_value, 1.0 / 201.0);
    assert_eq!(bootstrap_test(&d, &cfg).unwrap().p_value, 1.0 / 201.0);
}

#[test]
fn calibrated_on_symmetric_noise() {
    const TRIALS: u64 = 2000;
    let alpha = 0.05;
    let mut rejections = [0u64; 5];
    for trial in 0..TRIALS {
        let mut rng = RngStream::new(409).child(trial).rng();
        let d: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.1).collect();
        let cfg = ResampleConfig::new(2000, RngStream::new(410).child(trial));
        for (r, out) in rejections.iter_mut().zip(compute_all(&d, &cfg)) {
            if out.unwrap().p_value <= alpha {
                *r += 1;
            }
        }
    }
    let sigma = (alpha * (1.0 - alpha) / TRIALS as f64).sqrt();
    for r in rejections {
        let rate = r as f64 / TRIALS as f64;
        assert!(rate <= alpha + 3.0 * sigma, "{rejections:?}");
    }
}

fn all_p(d: &[f64], seed: u64) -> Vec<Result<f64, StatError>> {
    compute_all(d, &ResampleConfig::new(500, RngStream::new(seed)))
        .into_iter()
        .map(|r| r.map(|o| o.p_value))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mirrored_differences_give_identical_p(
        d in prop::collection::vec(-1.0f64..1.0, 2..30),
        seed in any::<u64>(),
    ) {
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        prop_assert_eq!(all_p(&d, seed), all_p(&neg, seed));
    }

    #[test]
    fn positive_rescaling_keeps_p(
        ints in prop::collection::vec(-40i32..=40, 2..16),
        c in 0.001f64..1000.0,
    ) {
        let d: Vec<f64> = ints.iter().map(|&i| f64::from(i) / 40.0).collect();
        let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
        prop_assert_eq!(wilcoxon_signed_rank(&d).unwrap().p_value, wilcoxon_signed_rank(&scaled).unwrap().p_value);
        prop_assert_eq!(sign_test(&d).unwrap().p_value, sign_test(&scaled).unwrap().p_value);
        let cfg = ResampleConfig::new(1, RngStream::new(0));
        prop_assert_eq!(permutation_test(&d, &cfg).unwrap().p_value, permutation_test(&scaled, &cfg).unwrap().p_value);
        if let (Ok(a), Ok(b)) = (t_test_paired(&d), t_test_paired(&scaled)) {
            prop_assert!((a.p_value - b.p_value).abs() < 1e-9);
        }
    }

    #[test]
    fn resampled_p_in_unit_interval(
        d in prop::collection::vec(-1.0f64..1.0, 21..40),
        seed in any::<u64>(),
    ) {
        let cfg = ResampleConfig::new(300, RngStream::new(seed));
        for p in [permutation_test(&d, &cfg).unwrap().p_value, bootstrap_test(&d, &cfg).unwrap().p_value] {
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
