//! Independent reference implementations used as test oracles. None of
//! them share code with the library: they enumerate outcomes directly or
//! use closed forms.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;

/// Difference vector of length 1..=12. Half are continuous, half sit on a
/// coarse grid so that zeros and ties are common.
pub fn random_differences<R: Rng>(rng: &mut R) -> Vec<f64> {
    let len = rng.random_range(1..=12);
    if rng.random::<bool>() {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    } else {
        (0..len).map(|_| f64::from(rng.random_range(-6i32..=6)) * 0.05).collect()
    }
}

/// Average ranks of `|x|`, doubled, by direct counting.
pub fn doubled_ranks(x: &[f64]) -> Vec<u64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| w.abs() < v.abs()).count() as u64;
            let equal = x.iter().filter(|w| w.abs() == v.abs()).count() as u64;
            2 * less + equal + 1
        })
        .collect()
}

fn doubled_two_sided(lower: u64, upper: u64, n: usize) -> f64 {
    ((2 * lower.min(upper)) as f64 / (n as f64).exp2()).min(1.0)
}

/// Signed-rank p-value by walking every sign assignment of the non-zero
/// differences.
pub fn brute_wilcoxon_p(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return 1.0;
    }
    let ranks = doubled_ranks(&nz);
    let observed: u64 = nz.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let (mut lower, mut upper) = (0u64, 0u64);
    for mask in 0u32..1 << n {
        let w: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        lower += u64::from(w <= observed);
        upper += u64::from(w >= observed);
    }
    doubled_two_sided(lower, upper, n)
}

/// Sign-test p-value by walking every sign assignment.
pub fn brute_sign_p(d: &[f64]) -> f64 {
    let n = d.iter().filter(|&&x| x != 0.0).count();
    if n == 0 {
        return 1.0;
    }
    let observed = d.iter().filter(|&&x| x > 0.0).count() as u32;
    let (mut lower, mut upper) = (0u64, 0u64);
    for mask in 0u32..1 << n {
        let k = mask.count_ones();
        lower += u64::from(k <= observed);
        upper += u64::from(k >= observed);
    }
    doubled_two_sided(lower, upper, n)
}

/// Sign-flip p-value `#{|sum*| >= |sum|} / 2^n` over the non-zero entries,
/// with ties judged at `1e-9 * sum |d|`.
pub fn brute_permutation_p(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    let n = nz.len();
    let observed: f64 = d.iter().sum::<f64>().abs();
    let tol = 1e-9 * d.iter().map(|x| x.abs()).sum::<f64>();
    let mut hits = 0u64;
    for mask in 0u32..1 << n {
        let s: f64 = nz
            .iter()
            .enumerate()
            .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
            .sum();
        hits += u64::from(s.abs() >= observed - tol);
    }
    hits as f64 / (n as f64).exp2()
}

/// `P(|T| >= |t|)` for Student's t with integer `df`, from the finite
/// trigonometric series for the central probability `P(|T| < t)`.
pub fn student_t_two_sided_closed_form(t: f64, df: u32) -> f64 {
    assert!(df >= 1);
    let theta = (t.abs() / f64::from(df).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    let central = if df % 2 == 1 {
        // 2/pi * (theta + sin cos (1 + 2/3 c^2 + 2*4/(3*5) c^4 + ...))
        let mut sum = 0.0;
        if df > 1 {
            let mut term = 1.0;
            sum = 1.0;
            let mut k = 1;
            while 2 * k + 1 < df {
                term *= f64::from(2 * k) / f64::from(2 * k + 1) * c2;
                sum += term;
                k += 1;
            }
            sum *= s * c;
        }
        2.0 / PI * (theta + sum)
    } else {
        // sin (1 + 1/2 c^2 + 1*3/(2*4) c^4 + ...)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k <= df - 2 {
            term *= f64::from(2 * k - 1) / f64::from(2 * k) * c2;
            sum += term;
            k += 1;
        }
        s * sum
    };
    (1.0 - central).max(0.0)
}

/// Central `coverage` interval `[lo, hi]` of Binomial(n, p): `lo` is the
/// largest k with `P(X < k) <= (1 - coverage) / 2`, `hi` the smallest with
/// `P(X > hi) <= (1 - coverage) / 2`.
pub fn binomial_central_interval(n: u64, p: f64, coverage: f64) -> (u64, u64) {
    if p <= 0.0 {
        return (0, 0);
    }
    if p >= 1.0 {
        return (n, n);
    }
    let tail = (1.0 - coverage) / 2.0;
    let mut ln_fact = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_choose = |k: u64| ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize];
    let pmf: Vec<f64> = (0..=n)
        .map(|k| (ln_choose(k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp())
        .collect();
    let mut below = 0.0;
    let mut lo = 0;
    for (k, q) in pmf.iter().enumerate() {
        if below + q > tail {
            lo = k as u64;
            break;
        }
        below += q;
    }
    let mut above = 0.0;
    let mut hi = n;
    for (k, q) in pmf.iter().enumerate().rev() {
        if above + q > tail {
            hi = k as u64;
            break;
        }
        above += q;
    }
    (lo, hi)
}

/// AP by walking the ranking and averaging precision at each relevant rank.
pub fn brute_average_precision(labels: &[bool]) -> f64 {
    let mut found = 0usize;
    let mut precisions = Vec::new();
    for (i, &rel) in labels.iter().enumerate() {
        if rel {
            found += 1;
            precisions.push(found as f64 / (i + 1) as f64);
        }
    }
    if precisions.is_empty() {
        0.0
    } else {
        precisions.iter().sum::<f64>() / precisions.len() as f64
    }
}
