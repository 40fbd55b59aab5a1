use serde::{Deserialize, Serialize};

use crate::model::{ValueId, VALUE_COUNT};
use crate::parser::ResponseMatrix;

use super::rank::session_profiles;
use super::AnalysisError;

/// Sample Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let scale = (saa * sbb).sqrt();
    if saa <= 1e-12 * n || sbb <= 1e-12 * n || scale == 0.0 {
        return None;
    }
    Some((sab / scale).clamp(-1.0, 1.0))
}

/// 19×19 correlations in circle order. Values with no variance are marked
/// invalid and their rows and columns hold zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub entries: Vec<Vec<f64>>,
    pub valid: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: ValueId, b: ValueId) -> Option<f64> {
        (self.valid[a.position()] && self.valid[b.position()])
            .then(|| self.entries[a.position()][b.position()])
    }

    pub fn valid_values(&self) -> Vec<ValueId> {
        ValueId::ALL
            .into_iter()
            .filter(|v| self.valid[v.position()])
            .collect()
    }
}

pub fn correlation_matrix(matrix: &ResponseMatrix) -> Result<CorrelationMatrix, AnalysisError> {
    let n = matrix.n_sessions();
    if n < 3 {
        return Err(AnalysisError::TooFewSessions { found: n, needed: 3 });
    }
    let profiles = session_profiles(matrix);
    let columns: Vec<Vec<f64>> = (0..VALUE_COUNT)
        .map(|i| profiles.iter().map(|p| p.v[i]).collect())
        .collect();
    let valid: Vec<bool> = columns
        .iter()
        .map(|c| pearson(c, c).is_some())
        .collect();
    let mut entries = vec![vec![0.0; VALUE_COUNT]; VALUE_COUNT];
    for i in 0..VALUE_COUNT {
        if !valid[i] {
            continue;
        }
        entries[i][i] = 1.0;
        for j in i + 1..VALUE_COUNT {
            if valid[j] {
                let r = pearson(&columns[i], &columns[j]).unwrap_or(0.0);
                entries[i][j] = r;
                entries[j][i] = r;
            }
        }
    }
    Ok(CorrelationMatrix { entries, valid })
}

/// `C_ij = cos(angle_i − angle_j)`: the structure of a perfect circumplex.
pub fn ideal_circumplex_matrix() -> CorrelationMatrix {
    let entries = ValueId::ALL
        .iter()
        .map(|a| ValueId::ALL.iter().map(|b| (a.angle() - b.angle()).cos()).collect())
        .collect();
    CorrelationMatrix {
        entries,
        valid: vec![true; VALUE_COUNT],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{administer_all, Mode, SyntheticProvider};
    use crate::model::{circle_distance, Questionnaire};
    use crate::parser::{assemble_dataset, ParseOptions, ScoreVector, SessionMeta};
    use crate::prompt::{plan_run_set, PlanInputs, StrategyKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta(id: u32) -> SessionMeta {
        SessionMeta {
            session_id: id,
            model: "m".into(),
            strategy: crate::prompt::PromptStrategy::Basic,
            gender_version: crate::model::Gender::Male,
            mode: Mode::Batch,
            temperature: 0.0,
        }
    }

    fn matrix(rows: Vec<Vec<u8>>) -> ResponseMatrix {
        let q = Questionnaire::synthetic();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| (meta(i as u32 + 1), ScoreVector::new(r).unwrap()))
            .collect();
        ResponseMatrix::from_scores(rows, &q).unwrap()
    }

    #[test]
    fn identical_value_columns_correlate_perfectly() {
        // items 1..19 are variant 1 of positions 0..18; value 0 and 1 always share scores.
        let rows = (0..6)
            .map(|k| {
                (0..57)
                    .map(|i| match i % 19 {
                        0 | 1 => (k % 6 + 1) as u8,
                        p => ((p * 5 + k * 3) % 6 + 1) as u8,
                    })
                    .collect()
            })
            .collect();
        let c = correlation_matrix(&matrix(rows)).unwrap();
        let r = c.get(ValueId::SelfDirectionThought, ValueId::SelfDirectionAction).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        for i in 0..19 {
            for j in 0..19 {
                assert_eq!(c.entries[i][j], c.entries[j][i]);
                assert!(c.entries[i][j].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn constant_value_is_flagged_invalid() {
        // Value 4 is always (3,3,3) and the other items are rotations of one
        // fixed multiset, so the session mean and hence v_4 never change.
        let base: Vec<u8> = (0..54).map(|i| (i * 7 % 6 + 1) as u8).collect();
        let rows = (0..5)
            .map(|k| {
                let mut others = base.iter().cycle().skip(k * 5);
                (0..57)
                    .map(|i| if i % 19 == 4 { 3 } else { *others.next().unwrap() })
                    .collect()
            })
            .collect();
        let c = correlation_matrix(&matrix(rows)).unwrap();
        assert!(!c.valid[4]);
        assert_eq!(c.get(ValueId::Achievement, ValueId::Hedonism), None);
        assert!(c.valid.iter().filter(|v| **v).count() > 10);
        assert!(c.entries[4].iter().all(|x| *x == 0.0));

        let flat = correlation_matrix(&matrix(vec![vec![4; 57]; 4])).unwrap();
        assert!(flat.valid.iter().all(|v| !v));
    }

    #[test]
    fn too_few_sessions() {
        assert_eq!(
            correlation_matrix(&matrix(vec![vec![4; 57]; 2])),
            Err(AnalysisError::TooFewSessions { found: 2, needed: 3 })
        );
    }

    #[test]
    fn independent_values_are_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = (0..10_000)
            .map(|_| (0..57).map(|_| rng.gen_range(1..=6)).collect())
            .collect();
        let c = correlation_matrix(&matrix(rows)).unwrap();
        // centering induces a small negative correlation of about −1/18
        for i in 0..19 {
            for j in 0..19 {
                if i != j {
                    assert!((c.entries[i][j] + 1.0 / 18.0).abs() < 0.05, "{}", c.entries[i][j]);
                }
            }
        }
    }

    #[test]
    fn synthetic_population_follows_circle_distance() {
        let q = Questionnaire::synthetic();
        let plan = plan_run_set(StrategyKind::ValueAnchor, 300, 11, 0.0, &PlanInputs::default()).unwrap();
        let ts: Vec<_> = administer_all(&plan.sessions, &q, Mode::Batch, &SyntheticProvider::default(), 4)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        let m = assemble_dataset(&ts, &q, ParseOptions::default()).unwrap().matrix;
        let c = correlation_matrix(&m).unwrap();
        let (mut r, mut d) = (Vec::new(), Vec::new());
        for a in ValueId::ALL {
            for b in ValueId::ALL {
                if a < b {
                    r.push(c.get(a, b).unwrap());
                    d.push(-(circle_distance(a, b) as f64));
                }
            }
        }
        assert!(super::super::spearman_rho(&r, &d).unwrap() > 0.9);
    }
}
