use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sdpower_core::rng::RngStream;
use sdpower_core::sdmodel::{closed_form_mle, fit_lognormal_mle, LogNormalMixture, SimplexConfig};

fn lognormal_sample(mu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed).rng();
    (0..n)
        .map(|_| (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect()
}

#[test]
fn closed_form_on_exact_logs() {
    let e = std::f64::consts::E;
    let (mu, sigma) = closed_form_mle(&[e, e.powi(3)]).unwrap();
    assert!((mu - 2.0).abs() < 1e-12 && (sigma - 1.0).abs() < 1e-12);
    let fit = fit_lognormal_mle(&[e, e.powi(3)], &SimplexConfig::default()).unwrap();
    assert!((fit.mu() - 2.0).abs() < 1e-3 && (fit.sigma() - 1.0).abs() < 1e-3);
}

#[test]
fn recovers_generating_parameters() {
    let s = lognormal_sample(0.5, 0.3, 10_000, 99);
    let fit = fit_lognormal_mle(&s, &SimplexConfig::default()).unwrap();
    assert!((fit.mu() - 0.5).abs() < 0.02, "{fit:?}");
    assert!((fit.sigma() - 0.3).abs() < 0.02, "{fit:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_closed_form(
        mu in -3.0f64..3.0,
        sigma in 0.05f64..2.0,
        n in 10usize..3000,
        seed in any::<u64>(),
    ) {
        let s = lognormal_sample(mu, sigma, n, seed);
        let (mu_cf, sigma_cf) = closed_form_mle(&s).unwrap();
        let fit = fit_lognormal_mle(&s, &SimplexConfig::default()).unwrap();
        prop_assert!((fit.mu() - mu_cf).abs() <= 1e-3);
        prop_assert!((fit.sigma() - sigma_cf).abs() <= 1e-3);
    }

    #[test]
    fn scale_mu1_touches_one_field(
        lambda in 0.0f64..=1.0,
        mu1 in -2.0f64..2.0,
        mu0 in -2.0f64..2.0,
        h in 0.0f64..0.5,
    ) {
        let m = LogNormalMixture::from_params(lambda, mu1, 0.4, mu0, 0.7).unwrap();
        let a = m.scale_mu1(h);
        let b = m.scale_mu1(h);
        prop_assert_eq!(a, b);
        let s = a.mixture;
        prop_assert_eq!(s.lambda(), m.lambda());
        prop_assert_eq!(s.nonrelevant(), m.nonrelevant());
        prop_assert_eq!(s.relevant().sigma(), m.relevant().sigma());
        prop_assert_eq!(s.relevant().mu(), mu1 * (1.0 + h));
        prop_assert_eq!(a.nonpositive_mu1, mu1 <= 0.0);
    }
}
