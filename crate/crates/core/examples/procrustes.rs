//! Aligns a distorted copy of the ideal circumplex back onto the original.

use value_probe::analysis::{align_embeddings, human_reference_embedding, Embedding2D, MdsOptions};

fn main() {
    let reference = human_reference_embedding(0, &MdsOptions::default());
    let (s, c) = 2.1f64.sin_cos();
    let moved = Embedding2D {
        values: reference.values.clone(),
        points: reference
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                // mirror, rotate, scale, shift, and jitter a little
                let (x, y) = (p[0], -p[1]);
                let wobble = 0.03 * (i as f64 * 1.7).sin();
                [3.0 * (c * x - s * y) + 5.0 + wobble, 3.0 * (s * x + c * y) - 2.0]
            })
            .collect(),
        stress1: 0.0,
    };

    for prescale in [true, false] {
        let (_, fit) = align_embeddings(&moved, &reference, prescale).unwrap();
        println!(
            "prescale {prescale}: SSD {:.6}, scale {:.4}, det(R) {:+.1}",
            fit.ssd,
            fit.scale,
            fit.rotation[0][0] * fit.rotation[1][1] - fit.rotation[0][1] * fit.rotation[1][0]
        );
    }
}
