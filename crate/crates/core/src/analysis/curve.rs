use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{circular_offset, ValueId, VALUE_COUNT};
use crate::parser::ResponseMatrix;

use super::rank::{center_scores, CenteredProfile};
use super::AnalysisError;

/// Mean centered score by circular offset from the anchored value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoredCurve {
    pub y: Vec<f64>,
    pub counts: Vec<usize>,
}

impl AnchoredCurve {
    pub fn argmax(&self) -> usize {
        (0..self.y.len())
            .max_by(|&a, &b| self.y[a].total_cmp(&self.y[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn argmin(&self) -> usize {
        (0..self.y.len())
            .min_by(|&a, &b| self.y[a].total_cmp(&self.y[b]).then(a.cmp(&b)))
            .unwrap_or(0)
    }
}

pub fn anchored_curve_from(
    sessions: &[(ValueId, CenteredProfile)],
) -> Result<AnchoredCurve, AnalysisError> {
    if sessions.is_empty() {
        return Err(AnalysisError::NoAnchoredSessions);
    }
    let mut sum = [0.0; VALUE_COUNT];
    let mut counts = vec![0usize; VALUE_COUNT];
    for (anchor, profile) in sessions {
        for value in ValueId::ALL {
            let o = circular_offset(*anchor, value);
            sum[o] += profile.get(value);
            counts[o] += 1;
        }
    }
    let y = sum.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    Ok(AnchoredCurve { y, counts })
}

/// Uses every session whose strategy anchors a value on the circle.
pub fn anchored_curve(matrix: &ResponseMatrix) -> Result<AnchoredCurve, AnalysisError> {
    let sessions: Vec<(ValueId, CenteredProfile)> = matrix
        .sessions()
        .iter()
        .zip(matrix.meta())
        .filter_map(|(s, m)| m.strategy.anchor_value().map(|v| (v, center_scores(s))))
        .collect();
    anchored_curve_from(&sessions)
}

/// `y(o) ≈ offset + amplitude·cos(2πo/19 − phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub r_squared: f64,
}

impl SineFit {
    pub fn eval(&self, o: f64) -> f64 {
        self.offset
            + self.amplitude * (std::f64::consts::TAU * o / VALUE_COUNT as f64 - self.phase).cos()
    }
}

pub fn fit_sine(y: &[f64]) -> SineFit {
    let n = y.len();
    let w = std::f64::consts::TAU / VALUE_COUNT as f64;
    let x = DMatrix::from_fn(n, 3, |o, k| match k {
        0 => 1.0,
        1 => (w * o as f64).cos(),
        _ => (w * o as f64).sin(),
    });
    let yv = DVector::from_column_slice(y);
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .expect("svd solve");
    let (c, a, b) = (beta[0], beta[1], beta[2]);
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse: f64 = (&x * &beta - &yv).iter().map(|r| r * r).sum();
    let amplitude = a.hypot(b);
    SineFit {
        amplitude,
        phase: if amplitude > 1e-12 { b.atan2(a) } else { 0.0 },
        offset: c,
        r_squared: if sst <= 1e-24 { 0.0 } else { 1.0 - sse / sst },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{synthetic_respond, SyntheticPersonaParams};
    use crate::model::Questionnaire;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const W: f64 = std::f64::consts::TAU / 19.0;

    #[test]
    fn exact_cosine_is_recovered() {
        let y: Vec<f64> = (0..19).map(|o| 2.0 * (W * o as f64).cos()).collect();
        let f = fit_sine(&y);
        assert!((f.amplitude - 2.0).abs() < 1e-9);
        assert!(f.phase.abs() < 1e-9);
        assert!(f.offset.abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_curve() {
        let f = fit_sine(&[0.5; 19]);
        assert!(f.amplitude < 1e-12);
        assert!((f.offset - 0.5).abs() < 1e-12);
        assert_eq!(f.r_squared, 0.0);
    }

    #[test]
    fn noisy_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let y: Vec<f64> = (0..19)
            .map(|o| 1.5 * (W * o as f64).cos() + noise.sample(&mut rng))
            .collect();
        let f = fit_sine(&y);
        assert!((1.3..=1.7).contains(&f.amplitude), "{}", f.amplitude);
        assert!(f.r_squared >= 0.9);
    }

    #[test]
    fn residual_is_orthogonal_to_basis() {
        let y: Vec<f64> = (0..19).map(|o| ((o * o) % 7) as f64 * 0.3 - 1.0).collect();
        let f = fit_sine(&y);
        let w = f.amplitude * f.phase.cos();
        let v = f.amplitude * f.phase.sin();
        let resid: Vec<f64> = (0..19)
            .map(|o| y[o] - f.offset - w * (W * o as f64).cos() - v * (W * o as f64).sin())
            .collect();
        for basis in [|_o: f64| 1.0, |o: f64| (W * o).cos(), |o: f64| (W * o).sin()] {
            let dot: f64 = resid.iter().enumerate().map(|(o, r)| r * basis(o as f64)).sum();
            assert!(dot.abs() < 1e-9);
        }
    }

    fn synthetic_profiles(shift: usize) -> Vec<(ValueId, CenteredProfile)> {
        let q = Questionnaire::synthetic();
        ValueId::ALL
            .iter()
            .map(|&anchor| {
                let anchor = ValueId::from_position(anchor.position() + shift);
                let params = SyntheticPersonaParams {
                    theta: anchor.angle(),
                    amplitude: 1.5,
                    baseline: 3.5,
                    noise_sigma: 0.0,
                    seed: 0,
                };
                let mut s = [[0u8; 3]; 19];
                for item in q.items() {
                    s[item.value.position()][item.variant - 1] = synthetic_respond(item, &params);
                }
                (anchor, center_scores(&s))
            })
            .collect()
    }

    #[test]
    fn synthetic_curve_peaks_at_anchor() {
        let c = anchored_curve_from(&synthetic_profiles(0)).unwrap();
        assert_eq!(c.argmax(), 0);
        let min = c.y[c.argmin()];
        assert!((c.y[9] - min).abs() < 1e-12 && (c.y[10] - min).abs() < 1e-12);
        assert_eq!(c.counts.iter().sum::<usize>(), 19 * 19);
        let f = fit_sine(&c.y);
        for o in 0..19 {
            assert!((f.eval(o as f64) - c.y[o]).abs() <= 0.5);
        }
        // rounding to the scale is symmetric in the offset, so every shift gives the same curve
        let shifted = anchored_curve_from(&synthetic_profiles(1)).unwrap();
        for (a, b) in c.y.iter().zip(&shifted.y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_responders_give_flat_curve() {
        let p = center_scores(&[[4; 3]; 19]);
        let c = anchored_curve_from(&[(ValueId::Face, p), (ValueId::Humility, p)]).unwrap();
        assert!(c.y.iter().all(|&v| v == 0.0));
        assert_eq!(anchored_curve_from(&[]), Err(AnalysisError::NoAnchoredSessions));
    }
}
