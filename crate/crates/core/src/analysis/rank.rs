use crate::model::{Questionnaire, ValueId, ITEM_COUNT, VALUE_COUNT, VARIANTS_PER_VALUE};
use crate::parser::{ResponseMatrix, ScoreVector, ValueScores};

use super::correlation::pearson;
use super::AnalysisError;

/// Value scores of one session after subtracting its grand mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredProfile {
    pub v: [f64; VALUE_COUNT],
}

impl CenteredProfile {
    pub fn get(&self, value: ValueId) -> f64 {
        self.v[value.position()]
    }
}

/// Centers scores already grouped by value.
pub fn center_scores(scores: &ValueScores) -> CenteredProfile {
    let total: u32 = scores.iter().flatten().map(|&s| u32::from(s)).sum();
    let grand = f64::from(total) / ITEM_COUNT as f64;
    let mut v = [0.0; VALUE_COUNT];
    for (out, items) in v.iter_mut().zip(scores) {
        let sum: u32 = items.iter().map(|&s| u32::from(s)).sum();
        *out = f64::from(sum) / VARIANTS_PER_VALUE as f64 - grand;
    }
    CenteredProfile { v }
}

pub fn center_session(scores: &ScoreVector, questionnaire: &Questionnaire) -> CenteredProfile {
    let mut grouped = [[0u8; VARIANTS_PER_VALUE]; VALUE_COUNT];
    for item in questionnaire.items() {
        grouped[item.value.position()][item.variant - 1] = scores.item(item.index);
    }
    center_scores(&grouped)
}

pub fn session_profiles(matrix: &ResponseMatrix) -> Vec<CenteredProfile> {
    matrix.sessions().iter().map(center_scores).collect()
}

/// Per-value mean of the centered session profiles.
pub fn mean_profile(matrix: &ResponseMatrix) -> [f64; VALUE_COUNT] {
    let profiles = session_profiles(matrix);
    let n = profiles.len() as f64;
    let mut out = [0.0; VALUE_COUNT];
    for p in &profiles {
        for (o, x) in out.iter_mut().zip(p.v) {
            *o += x;
        }
    }
    out.map(|x| x / n)
}

/// 1-based ranks, ties averaged. `descending` puts the largest at rank 1.
pub fn average_ranks(x: &[f64], descending: bool) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = x[a].total_cmp(&x[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Ranks 1..19 with 1 for the highest score.
pub fn rank_profile(profile: &[f64; VALUE_COUNT]) -> [f64; VALUE_COUNT] {
    let r = average_ranks(profile, true);
    std::array::from_fn(|i| r[i])
}

pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    pearson(&average_ranks(a, false), &average_ranks(b, false)).ok_or(AnalysisError::DegenerateInput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::human_benchmark_profile;
    use proptest::prelude::*;

    #[test]
    fn centering_examples() {
        assert_eq!(center_scores(&[[4; 3]; 19]).v, [0.0; 19]);

        let mut s = [[3u8; 3]; 19];
        s[ValueId::BenevolenceCaring.position()] = [6, 6, 6];
        let p = center_scores(&s);
        assert!((p.get(ValueId::BenevolenceCaring) - (6.0 - 180.0 / 57.0)).abs() < 1e-12);
        assert!((p.get(ValueId::Hedonism) - (3.0 - 180.0 / 57.0)).abs() < 1e-12);
    }

    #[test]
    fn centering_by_item_order_matches_grouped() {
        let q = Questionnaire::synthetic();
        let scores: Vec<u8> = (0..57).map(|i| (i * 7 % 6 + 1) as u8).collect();
        let sv = ScoreVector::new(scores.clone()).unwrap();
        let p = center_session(&sv, &q);
        let grand = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / 57.0;
        for v in ValueId::ALL {
            let m = q.items_for(v).iter().map(|&i| f64::from(scores[i - 1])).sum::<f64>() / 3.0;
            assert!((p.get(v) - (m - grand)).abs() < 1e-12);
        }
    }

    #[test]
    fn human_ranks_reproduce_table() {
        let h = human_benchmark_profile();
        let ranks = rank_profile(&h.means());
        let expected = h.ranks();
        for i in 0..19 {
            assert_eq!(ranks[i], expected[i] as f64);
        }
    }

    #[test]
    fn tie_examples() {
        assert_eq!(rank_profile(&[0.3; 19]), [10.0; 19]);
        let mut p = [0.0; 19];
        p[3] = 2.0;
        p[8] = 2.0;
        let r = rank_profile(&p);
        assert_eq!((r[3], r[8]), (1.5, 1.5));
        assert_eq!(r[0], 11.0);
    }

    #[test]
    fn spearman_examples() {
        let x: Vec<f64> = (0..19).map(|i| (i as f64).powi(3)).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman_rho(&[1.0; 5], &x[..5]), Err(AnalysisError::DegenerateInput));
        // ranks a = [1, 2.5, 2.5, 4, 5], b = [2, 1, 3, 5, 4]
        let a = [1.0, 2.0, 2.0, 3.0, 4.0];
        let b = [20.0, 10.0, 30.0, 50.0, 40.0];
        let ra = [1.0, 2.5, 2.5, 4.0, 5.0];
        let rb = [2.0, 1.0, 3.0, 5.0, 4.0];
        let m = 3.0;
        let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
        let va: f64 = ra.iter().map(|x| (x - m) * (x - m)).sum();
        let vb: f64 = rb.iter().map(|x| (x - m) * (x - m)).sum();
        assert!((spearman_rho(&a, &b).unwrap() - cov / (va * vb).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn centering_identity(scores in proptest::collection::vec(1u8..=6, 57)) {
            let q = Questionnaire::synthetic();
            let p = center_session(&ScoreVector::new(scores).unwrap(), &q);
            prop_assert!(p.v.iter().map(|x| x * 3.0 / 57.0).sum::<f64>().abs() < 1e-9);
        }

        #[test]
        fn spearman_monotone_invariance(
            a in proptest::collection::vec(-10.0f64..10.0, 19),
            b in proptest::collection::vec(-10.0f64..10.0, 19),
        ) {
            let rho = spearman_rho(&a, &b).unwrap();
            let a2: Vec<f64> = a.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            prop_assert!((spearman_rho(&a2, &b).unwrap() - rho).abs() < 1e-12);
        }

        #[test]
        fn rank_affine_invariance(p in proptest::array::uniform19(-2.0f64..2.0), s in 0.1f64..5.0, t in -3.0f64..3.0) {
            prop_assert_eq!(rank_profile(&p), rank_profile(&p.map(|x| s * x + t)));
        }
    }
}
