use super::{check_finite, mean, StatError, TestKind, TestOutcome};
use crate::special::student_t_two_sided;

/// Paired t-test: `t = mean / (s / sqrt(n))`, `n - 1` degrees of freedom,
/// with `s` the sample standard deviation.
pub fn t_test_paired(d: &[f64]) -> Result<TestOutcome, StatError> {
    let n = d.len();
    if n < 2 {
        return Err(StatError::TooFewObservations { needed: 2, got: n });
    }
    check_finite(d)?;
    let outcome = |statistic, p_value| TestOutcome {
        test: TestKind::TTest,
        statistic,
        p_value,
        n_effective: n,
    };
    if d.iter().all(|&x| x == d[0]) {
        return if d[0] == 0.0 {
            Ok(outcome(0.0, 1.0))
        } else {
            Err(StatError::DegenerateVariance)
        };
    }
    let m = mean(d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = m / (var.sqrt() / (n as f64).sqrt());
    Ok(outcome(t, student_t_two_sided(t, (n - 1) as f64)))
}
