use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rank::average_ranks;
use super::AnalysisError;

/// Direction of the alternative hypothesis on the differences `a − b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `a` tends to be smaller than `b`.
    Less,
    /// `a` tends to be larger than `b`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Nonzero differences used.
    pub n: usize,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal score with tie and continuity correction.
    pub z: f64,
    pub p_value: f64,
    /// Whether `p_value` came from the exact null distribution.
    pub exact: bool,
}

const EXACT_MAX_N: usize = 20;

/// Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped and tied magnitudes share their average rank.
pub fn wilcoxon_signed_rank(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(AnalysisError::AllZeroDifferences);
    }
    let n = d.len();
    if n < 6 {
        return Err(AnalysisError::TooFewDifferences(n));
    }
    let mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&mags, false);
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let nf = n as f64;
    let mean = total / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0).sqrt();
    let diff = w_plus - mean;
    let corrected = match alternative {
        Alternative::TwoSided => diff.signum() * (diff.abs() - 0.5).max(0.0),
        Alternative::Less => diff + 0.5,
        Alternative::Greater => diff - 0.5,
    };
    let z = if sd > 0.0 { corrected / sd } else { 0.0 };

    let exact = n <= EXACT_MAX_N;
    let p_value = if exact {
        exact_p(&ranks, w_plus, alternative)
    } else {
        let phi = Normal::new(0.0, 1.0).expect("standard normal");
        match alternative {
            Alternative::TwoSided => 2.0 * (1.0 - phi.cdf(z.abs())),
            Alternative::Less => phi.cdf(z),
            Alternative::Greater => 1.0 - phi.cdf(z),
        }
    }
    .min(1.0);
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        z,
        p_value,
        exact,
    })
}

/// Null distribution of W+ given the (possibly tied) ranks, by dynamic
/// programming over doubled ranks, which are always integers.
fn exact_p(ranks: &[f64], w_plus: f64, alternative: Alternative) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let t = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=t].iter().sum::<f64>() / total;
    let upper: f64 = counts[t..].iter().sum::<f64>() / total;
    match alternative {
        Alternative::TwoSided => 2.0 * lower.min(upper),
        Alternative::Less => lower,
        Alternative::Greater => upper,
    }
}
