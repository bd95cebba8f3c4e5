use serde::Serialize;

use super::special::{f_cdf, f_sf};
use super::{mean, variance, SampleSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df_num: f64,
    pub df_den: f64,
    /// Zero spread where the statistic needs it.
    pub degenerate: bool,
}

/// Mean-centered Levene test for equal variances.
///
/// One-way ANOVA F over `|x_ij - mean_i|`; the p-value is the upper tail of
/// `F(k - 1, N - k)`.
pub fn levene_test(groups: &[SampleSet]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::Empty("levene test needs at least two groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::Empty("levene test needs at least two samples per group"));
    }

    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.mean();
            g.values.iter().map(|v| (v - m).abs()).collect()
        })
        .collect();
    let k = groups.len() as f64;
    let total: usize = deviations.iter().map(Vec::len).sum();
    let n = total as f64;

    let group_means: Vec<f64> = deviations.iter().map(|d| mean(d)).collect();
    let grand_mean = deviations.iter().flatten().sum::<f64>() / n;

    let between: f64 =
        deviations.iter().zip(&group_means).map(|(d, &m)| d.len() as f64 * (m - grand_mean) * (m - grand_mean)).sum();
    let within: f64 =
        deviations.iter().zip(&group_means).map(|(d, &m)| d.iter().map(|z| (z - m) * (z - m)).sum::<f64>()).sum();

    let df_num = k - 1.0;
    let df_den = n - k;
    let degenerate = within == 0.0 || deviations.iter().any(|d| d.iter().all(|&z| z == 0.0));
    let (statistic, p_value) = if within == 0.0 {
        if between == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let w = (df_den / df_num) * between / within;
        (w, f_sf(w, df_num, df_den))
    };

    Ok(TestResult { statistic, p_value, df_num, df_den, degenerate })
}

/// Two-sided variance-ratio test, `F = s_a^2 / s_b^2` on
/// `(n_a - 1, n_b - 1)` degrees of freedom.
pub fn pairwise_f_test(a: &SampleSet, b: &SampleSet) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Empty("F-test needs at least two samples per set"));
    }
    let (va, vb) = (variance(&a.values), variance(&b.values));
    let df_num = (a.len() - 1) as f64;
    let df_den = (b.len() - 1) as f64;

    let (statistic, p_value, degenerate) = if vb == 0.0 {
        if va == 0.0 {
            (1.0, 1.0, true)
        } else {
            (f64::INFINITY, 0.0, true)
        }
    } else {
        let f = va / vb;
        let tail = f_cdf(f, df_num, df_den).min(f_sf(f, df_num, df_den));
        (f, (2.0 * tail).min(1.0), false)
    };

    Ok(TestResult { statistic, p_value, df_num, df_den, degenerate })
}
