use nalgebra::{Matrix2, RowVector2};
use serde::{Deserialize, Serialize};

use crate::model::ValueId;

use super::mds::Embedding2D;
use super::AnalysisError;

/// Result of aligning a source configuration onto a target.
///
/// `aligned[i] = scale · source[i] · rotation + translation` (row vectors),
/// compared against `target`, which is the mean-centered and, with
/// prescaling, unit-RMS version of the input target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcrustesFit {
    pub aligned: Vec<[f64; 2]>,
    pub target: Vec<[f64; 2]>,
    pub rotation: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub scale: f64,
    pub ssd: f64,
}

fn centroid(p: &[[f64; 2]]) -> [f64; 2] {
    let n = p.len() as f64;
    [
        p.iter().map(|q| q[0]).sum::<f64>() / n,
        p.iter().map(|q| q[1]).sum::<f64>() / n,
    ]
}

fn rms_radius(p: &[[f64; 2]]) -> f64 {
    (p.iter().map(|q| q[0] * q[0] + q[1] * q[1]).sum::<f64>() / p.len() as f64).sqrt()
}

fn shifted(p: &[[f64; 2]], c: [f64; 2], s: f64) -> Vec<[f64; 2]> {
    p.iter().map(|q| [(q[0] - c[0]) * s, (q[1] - c[1]) * s]).collect()
}

/// Orthogonal Procrustes in the plane, reflections allowed.
pub fn procrustes_align(
    source: &[[f64; 2]],
    target: &[[f64; 2]],
    prescale: bool,
) -> Result<ProcrustesFit, AnalysisError> {
    if source.len() != target.len() {
        return Err(AnalysisError::LengthMismatch(source.len(), target.len()));
    }
    if source.is_empty() {
        return Err(AnalysisError::DegenerateConfiguration);
    }
    let (cs, ct) = (centroid(source), centroid(target));
    let xs = shifted(source, cs, 1.0);
    let ys = shifted(target, ct, 1.0);
    let (rs, rt) = (rms_radius(&xs), rms_radius(&ys));
    if rs < 1e-12 || rt < 1e-12 {
        return Err(AnalysisError::DegenerateConfiguration);
    }
    let (sx, sy) = if prescale { (1.0 / rs, 1.0 / rt) } else { (1.0, 1.0) };
    let x: Vec<[f64; 2]> = xs.iter().map(|q| [q[0] * sx, q[1] * sx]).collect();
    let y: Vec<[f64; 2]> = ys
        .iter()
        .map(|q| {
            if prescale {
                [q[0] * sy, q[1] * sy]
            } else {
                [q[0] + ct[0], q[1] + ct[1]]
            }
        })
        .collect();

    let mut m = Matrix2::zeros();
    for (a, b) in x.iter().zip(&ys) {
        m += RowVector2::new(a[0], a[1]).transpose() * RowVector2::new(b[0], b[1]);
    }
    let svd = m.svd(true, true);
    let r = svd.u.expect("u") * svd.v_t.expect("v_t");

    let offset = if prescale { [0.0, 0.0] } else { ct };
    let aligned: Vec<[f64; 2]> = x
        .iter()
        .map(|a| {
            let p = RowVector2::new(a[0], a[1]) * r;
            [p[0] + offset[0], p[1] + offset[1]]
        })
        .collect();
    let ssd = aligned
        .iter()
        .zip(&y)
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    let c_rot = RowVector2::new(cs[0], cs[1]) * r * sx;
    Ok(ProcrustesFit {
        aligned,
        target: y,
        rotation: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
        translation: [offset[0] - c_rot[0], offset[1] - c_rot[1]],
        scale: sx,
        ssd,
    })
}

/// Aligns two embeddings over the values they share.
pub fn align_embeddings(
    source: &Embedding2D,
    target: &Embedding2D,
    prescale: bool,
) -> Result<(Vec<ValueId>, ProcrustesFit), AnalysisError> {
    let shared: Vec<ValueId> = source
        .values
        .iter()
        .copied()
        .filter(|v| target.values.contains(v))
        .collect();
    if shared.len() < 3 {
        return Err(AnalysisError::InsufficientValues(shared.len()));
    }
    let s: Vec<[f64; 2]> = shared.iter().filter_map(|&v| source.point(v)).collect();
    let t: Vec<[f64; 2]> = shared.iter().filter_map(|&v| target.point(v)).collect();
    Ok((shared, procrustes_align(&s, &t, prescale)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn transform(p: &[[f64; 2]], angle: f64, reflect: bool, scale: f64, t: [f64; 2]) -> Vec<[f64; 2]> {
        let (s, c) = angle.sin_cos();
        p.iter()
            .map(|q| {
                let y = if reflect { -q[1] } else { q[1] };
                [scale * (c * q[0] - s * y) + t[0], scale * (s * q[0] + c * y) + t[1]]
            })
            .collect()
    }

    /// Best SSD over proper rotations and reflections via the closed-form
    /// optimal angle for each case.
    fn oracle_ssd(x: &[[f64; 2]], y: &[[f64; 2]]) -> f64 {
        let best_for = |x: &[[f64; 2]]| {
            let (mut a, mut b) = (0.0, 0.0);
            for (p, q) in x.iter().zip(y) {
                a += p[0] * q[0] + p[1] * q[1];
                b += p[0] * q[1] - p[1] * q[0];
            }
            let theta = b.atan2(a);
            transform(x, theta, false, 1.0, [0.0, 0.0])
                .iter()
                .zip(y)
                .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .sum::<f64>()
        };
        let reflected: Vec<[f64; 2]> = x.iter().map(|p| [p[0], -p[1]]).collect();
        best_for(x).min(best_for(&reflected))
    }

    fn normalize(p: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let c = centroid(p);
        let centered = shifted(p, c, 1.0);
        let r = rms_radius(&centered);
        shifted(&centered, [0.0, 0.0], 1.0 / r)
    }

    #[test]
    fn identity_has_zero_ssd() {
        let p: Vec<[f64; 2]> = (0..19).map(|i| [(i as f64).cos(), (i as f64 * 1.3).sin()]).collect();
        assert!(procrustes_align(&p, &p, true).unwrap().ssd < 1e-20);
    }

    #[test]
    fn rotation_and_translation_are_recovered() {
        let p: Vec<[f64; 2]> = (0..19).map(|i| [(i as f64).cos() * 2.0, (i as f64 * 0.7).sin()]).collect();
        let moved = transform(&p, 37f64.to_radians(), false, 1.0, [0.3, -0.8]);
        for prescale in [true, false] {
            let fit = procrustes_align(&moved, &p, prescale).unwrap();
            assert!(fit.ssd < 1e-10, "{}", fit.ssd);
        }
        let fit = procrustes_align(&moved, &p, false).unwrap();
        for (q, a) in moved.iter().zip(&fit.aligned) {
            let r = fit.rotation;
            let x = fit.scale * (q[0] * r[0][0] + q[1] * r[1][0]) + fit.translation[0];
            let y = fit.scale * (q[0] * r[0][1] + q[1] * r[1][1]) + fit.translation[1];
            assert!((x - a[0]).abs() < 1e-12 && (y - a[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_configuration() {
        let p = vec![[1.0, 1.0]; 5];
        let q: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        assert_eq!(procrustes_align(&p, &q, true), Err(AnalysisError::DegenerateConfiguration));
    }

    proptest! {
        #[test]
        fn matches_closed_form_angle_search(
            x in proptest::collection::vec(proptest::array::uniform2(-3.0f64..3.0), 19),
            y in proptest::collection::vec(proptest::array::uniform2(-3.0f64..3.0), 19),
        ) {
            let fit = procrustes_align(&x, &y, true).unwrap();
            let expected = oracle_ssd(&normalize(&x), &normalize(&y));
            prop_assert!((fit.ssd - expected).abs() < 1e-9, "{} vs {}", fit.ssd, expected);
        }

        #[test]
        fn ssd_invariant_to_similarity_of_source(
            x in proptest::collection::vec(proptest::array::uniform2(-3.0f64..3.0), 19),
            y in proptest::collection::vec(proptest::array::uniform2(-3.0f64..3.0), 19),
            angle in 0.0f64..6.3, reflect: bool, scale in 0.1f64..10.0,
            t in proptest::array::uniform2(-5.0f64..5.0),
        ) {
            let base = procrustes_align(&x, &y, true).unwrap().ssd;
            let moved = procrustes_align(&transform(&x, angle, reflect, scale, t), &y, true).unwrap().ssd;
            prop_assert!((base - moved).abs() <= 1e-9);
        }
    }
}
