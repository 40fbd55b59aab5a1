use crate::model::{ValueId, VALUE_COUNT, VARIANTS_PER_VALUE};
use crate::parser::ResponseMatrix;

use super::AnalysisError;

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha for `k ≥ 2` item series of equal length `N ≥ 2`.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64, AnalysisError> {
    let k = items.len();
    if k < 2 {
        return Err(AnalysisError::InsufficientValues(k));
    }
    let n = items[0].len();
    if let Some(bad) = items.iter().find(|s| s.len() != n) {
        return Err(AnalysisError::LengthMismatch(n, bad.len()));
    }
    if n < 2 {
        return Err(AnalysisError::TooFewSessions { found: n, needed: 2 });
    }
    let totals: Vec<f64> = (0..n).map(|i| items.iter().map(|s| s[i]).sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var <= 1e-15 {
        return Err(AnalysisError::ZeroVariance);
    }
    let item_var: f64 = items.iter().map(|s| sample_variance(s)).sum();
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// Alpha over the three raw item scores of each value.
pub fn cronbach_by_value(
    matrix: &ResponseMatrix,
) -> [(ValueId, Result<f64, AnalysisError>); VALUE_COUNT] {
    ValueId::ALL.map(|value| {
        let series: Vec<Vec<f64>> = (0..VARIANTS_PER_VALUE)
            .map(|j| {
                (0..matrix.n_sessions())
                    .map(|k| f64::from(matrix.x(value, j, k)))
                    .collect()
            })
            .collect();
        (value, cronbach_alpha(&series))
    })
}
