use super::{check_finite, StatError, TestKind, TestOutcome, EXACT_MAX_N};
use crate::special::{beta_reg, normal_sf};

fn check_nonempty(d: &[f64]) -> Result<(), StatError> {
    if d.is_empty() {
        return Err(StatError::TooFewObservations { needed: 1, got: 0 });
    }
    check_finite(d)
}

/// Doubled average ranks of `|x|` (so tied ranks stay integral), in input
/// order. A tie block covering 1-based positions `a..=b` gets `a + b`.
pub fn wilcoxon_ranks(x: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()));
    let mut ranks = vec![0u64; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && x[order[end + 1]].abs() == x[order[start]].abs() {
            end += 1;
        }
        let doubled = (start + 1 + end + 1) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Two-sided p from tail counts over `2^n` equally likely outcomes.
fn two_sided_from_counts(lower: u128, upper: u128, n: usize) -> f64 {
    let tail = lower.min(upper);
    ((2 * tail) as f64 / (n as f64).exp2()).min(1.0)
}

/// Normal approximation to the two-sided signed-rank p-value, with tie
/// correction and continuity correction.
fn normal_approx_p(statistic: f64, ranks: &[u64]) -> f64 {
    let nf = ranks.len() as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut tie_term = 0.0;
    for block in sorted.chunk_by(|a, b| a == b) {
        let t = block.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}

/// Wilcoxon signed-rank test.
///
/// Zeros are dropped and ties get average ranks. The statistic is `W+`, the
/// rank sum of positive differences. Up to [`EXACT_MAX_N`] non-zero pairs the
/// null distribution over all sign assignments is tabulated exactly;
/// above that a normal approximation with tie-corrected variance and
/// continuity correction is used.
pub fn wilcoxon_signed_rank(d: &[f64]) -> Result<TestOutcome, StatError> {
    check_nonempty(d)?;
    let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Ok(TestOutcome {
            test: TestKind::Wilcoxon,
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
        });
    }
    let ranks = wilcoxon_ranks(&nz);
    let w2: u64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let p_value = if n <= EXACT_MAX_N {
        // counts[s] = number of sign assignments with doubled W+ equal to s
        let max: u64 = ranks.iter().sum();
        let mut counts = vec![0u64; max as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let w2 = w2 as usize;
        let lower: u64 = counts[..=w2].iter().sum();
        let upper: u64 = counts[w2..].iter().sum();
        two_sided_from_counts(u128::from(lower), u128::from(upper), n)
    } else {
        normal_approx_p(statistic, &ranks)
    };
    Ok(TestOutcome {
        test: TestKind::Wilcoxon,
        statistic,
        p_value,
        n_effective: n,
    })
}

fn binomial_coefficients(n: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row
}

/// Exact two-sided sign test on the non-zero differences. The statistic
/// is the number of positive differences.
pub fn sign_test(d: &[f64]) -> Result<TestOutcome, StatError> {
    check_nonempty(d)?;
    let pos = d.iter().filter(|&&x| x > 0.0).count();
    let neg = d.iter().filter(|&&x| x < 0.0).count();
    let n = pos + neg;
    let k = pos.min(neg);
    let p_value = if n == 0 {
        1.0
    } else if n <= 126 {
        let c = binomial_coefficients(n);
        let tail: u128 = c[..=k].iter().sum();
        two_sided_from_counts(tail, tail, n)
    } else {
        // P(X <= k) for X ~ Bin(n, 1/2)
        (2.0 * beta_reg((n - k) as f64, (k + 1) as f64, 0.5)).min(1.0)
    };
    Ok(TestOutcome {
        test: TestKind::Sign,
        statistic: pos as f64,
        p_value,
        n_effective: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_examples() {
        let o = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(o.statistic, 15.0);
        assert_eq!(o.p_value, 0.0625);

        let o = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert_eq!(o.statistic, 1.5);
        assert_eq!(o.p_value, 1.0);

        let o = wilcoxon_signed_rank(&[0.0, 0.0, 3.0]).unwrap();
        assert_eq!(o.n_effective, 1);
        assert_eq!(o.p_value, 1.0);

        let o = wilcoxon_signed_rank(&[0.0, 0.0]).unwrap();
        assert_eq!((o.n_effective, o.p_value), (0, 1.0));
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(wilcoxon_ranks(&[1.0, -1.0]), vec![3, 3]);
        assert_eq!(wilcoxon_ranks(&[3.0, -1.0, 2.0, -2.0]), vec![8, 2, 5, 5]);
    }

    #[test]
    fn exact_and_normal_regimes_agree_near_the_switch() {
        // n = 20 distinct magnitudes, assorted signs
        for pattern in [0b1010_0110_1100_0101_0011u32, 0b1111_1111_0000_1111_0001, 0b1111_1111_1111_1011_1101] {
            let d: Vec<f64> = (1..=20)
                .map(|i| if pattern >> (i - 1) & 1 == 1 { i as f64 } else { -(i as f64) })
                .collect();
            let o = wilcoxon_signed_rank(&d).unwrap();
            let (exact, approx) = (o.p_value, normal_approx_p(o.statistic, &wilcoxon_ranks(&d)));
            assert!((exact - approx).abs() < 0.02, "{exact} vs {approx}");
        }
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign_test(&[1.0; 5]).unwrap().p_value, 0.0625);
        let mut d = vec![0.3; 8];
        d.extend([-0.1, -0.2]);
        assert_eq!(sign_test(&d).unwrap().p_value, 0.109375);
        assert_eq!(sign_test(&[0.0; 4]).unwrap().p_value, 1.0);
        assert_eq!(sign_test(&[0.0, 1.0, -1.0]).unwrap().n_effective, 2);
    }

    #[test]
    fn sign_large_n_uses_beta_tail() {
        let mut d = vec![1.0; 80];
        d.extend(vec![-1.0; 70]);
        let p = sign_test(&d).unwrap().p_value;
        // reference: 2 * P(Bin(150, 0.5) <= 70)
        let mut tail = 0.0;
        let mut lc = 0.0f64; // ln C(150, j)
        for j in 0..=70 {
            if j > 0 {
                lc += ((150 - j + 1) as f64).ln() - (j as f64).ln();
            }
            tail += (lc - 150.0 * 2f64.ln()).exp();
        }
        assert!((p - 2.0 * tail).abs() < 1e-12, "{p} vs {}", 2.0 * tail);
    }
}
