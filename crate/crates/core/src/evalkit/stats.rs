//! Summary statistics and the paired t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Mean and sample standard deviation over a fixed number of measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Summarize exactly `expected_n` measurements (trials × test folds).
///
/// The standard deviation uses the sample (n−1) denominator.
pub fn summarize(measurements: &[f64], expected_n: usize) -> Result<SummaryStat> {
    if measurements.len() != expected_n {
        return Err(Error::MeasurementCount {
            expected: expected_n,
            actual: measurements.len(),
        });
    }
    let n = measurements.len();
    let mean = measurements.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        measurements.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(SummaryStat {
        mean,
        std: var.sqrt(),
        n,
    })
}

/// Two-tailed paired Student's t-test on per-topic values.
///
/// Conventions: all-zero differences give p = 1; zero-variance differences
/// with nonzero mean give p = 0. The samples must be paired by topic and at
/// least two pairs long.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "paired t-test needs at least 2 pairs, got {}",
            a.len()
        )));
    }
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("df ≥ 1 is always a valid Student's t distribution");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn equal_samples_give_p_one() {
        let a = [0.1, 0.4, 0.3, 0.9];
        assert_eq!(paired_t_test(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn constant_nonzero_differences_give_p_zero() {
        let a = [2.0, 3.0, 4.0];
        let b = [1.0, 2.0, 3.0];
        assert_eq!(paired_t_test(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn two_tailed_symmetry() {
        let a = [0.5, 0.62, 0.41, 0.77, 0.33];
        let b = [0.42, 0.58, 0.45, 0.6, 0.3];
        assert_eq!(
            paired_t_test(&a, &b).unwrap(),
            paired_t_test(&b, &a).unwrap()
        );
    }

    // Reference p-values frozen from an independent statistics package
    // (two-sided paired t-test on the same data).
    #[test]
    fn p_values_match_reference_oracle() {
        let fixtures: [(&[f64], &[f64], f64); 5] = [
            (
                &[0.50, 0.62, 0.41, 0.77, 0.33, 0.59, 0.70, 0.45],
                &[0.42, 0.58, 0.45, 0.60, 0.30, 0.51, 0.66, 0.40],
                0.0313354670,
            ),
            (
                &[0.1, 0.2, 0.3, 0.4, 0.5],
                &[0.15, 0.22, 0.28, 0.46, 0.52],
                0.1368524411,
            ),
            (
                &[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05],
                &[0.85, 0.82, 0.65, 0.55, 0.52, 0.38, 0.33, 0.18, 0.12, 0.02],
                0.2400266840,
            ),
            (&[0.31, 0.42, 0.27], &[0.29, 0.40, 0.26], 0.0377495514),
            (
                &[0.6, 0.1, 0.8, 0.4, 0.7, 0.2],
                &[0.5, 0.2, 0.6, 0.5, 0.6, 0.3],
                0.7711118564,
            ),
        ];
        for (a, b, expected) in fixtures {
            let p = paired_t_test(a, b).unwrap();
            assert!(close(p, expected, 1e-6), "{p} vs {expected}");
        }
    }

    #[test]
    fn summarize_six_equal_values() {
        let s = summarize(&[0.3; 6], 6).unwrap();
        assert_eq!(s.mean, 0.3);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.n, 6);
    }

    // std frozen from independent arithmetic: sqrt(6·0.25/5)
    #[test]
    fn summarize_half_and_half() {
        let s = summarize(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 6).unwrap();
        assert!(close(s.mean, 0.5, 1e-12));
        assert!(close(s.std, 0.5477225575051661, 1e-12));
    }

    #[test]
    fn summarize_wrong_count_is_an_error() {
        assert!(matches!(
            summarize(&[1.0; 5], 6),
            Err(Error::MeasurementCount {
                expected: 6,
                actual: 5
            })
        ));
    }
}
