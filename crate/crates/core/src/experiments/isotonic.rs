/// Least-squares non-decreasing fit (pool adjacent violators, unit weights).
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    // blocks of (mean, size)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Largest absolute gap between `values` and their isotonic fit; zero iff
/// the sequence is already non-decreasing.
pub fn max_isotonic_residual(values: &[f64]) -> f64 {
    isotonic_fit(values)
        .iter()
        .zip(values)
        .map(|(f, v)| (f - v).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_input_is_fixed_point() {
        let v = [0.1, 0.2, 0.2, 0.5];
        assert_eq!(isotonic_fit(&v), v.to_vec());
        assert_eq!(max_isotonic_residual(&v), 0.0);
    }

    #[test]
    fn violators_are_pooled() {
        assert_eq!(isotonic_fit(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_fit(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(max_isotonic_residual(&[3.0, 2.0, 1.0]), 1.0);
        assert!(isotonic_fit(&[]).is_empty());
    }
}
