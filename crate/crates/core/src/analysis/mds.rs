use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ValueCircle, ValueId};
use crate::prompt::mix_seed;

use super::correlation::{ideal_circumplex_matrix, CorrelationMatrix};
use super::AnalysisError;

/// How correlations become dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dissimilarity {
    /// `1 − r`
    OneMinusR,
    /// `sqrt(2(1 − r))`, the chord length between unit vectors at correlation r.
    #[default]
    SqrtTwoOneMinusR,
}

impl Dissimilarity {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            Dissimilarity::OneMinusR => 1.0 - r,
            Dissimilarity::SqrtTwoOneMinusR => (2.0 * (1.0 - r)).max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsOptions {
    pub dissimilarity: Dissimilarity,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when raw stress, relative to Σδ², improves by less than this.
    pub tolerance: f64,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            dissimilarity: Dissimilarity::default(),
            restarts: 8,
            max_iter: 512,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub values: Vec<ValueId>,
    pub points: Vec<[f64; 2]>,
    pub stress1: f64,
}

impl Embedding2D {
    pub fn point(&self, value: ValueId) -> Option<[f64; 2]> {
        self.values
            .iter()
            .position(|&v| v == value)
            .map(|i| self.points[i])
    }

    /// How many values have exactly their two circle neighbours as their
    /// angular neighbours around the centroid.
    pub fn neighbor_agreement(&self) -> usize {
        let n = self.points.len();
        if n < 3 {
            return 0;
        }
        let cx = self.points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = self.points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let mut order: Vec<usize> = (0..n).collect();
        let angle = |i: usize| (self.points[i][1] - cy).atan2(self.points[i][0] - cx);
        order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
        let circle = ValueCircle;
        (0..n)
            .filter(|&k| {
                let v = self.values[order[k]];
                let prev = self.values[order[(k + n - 1) % n]];
                let next = self.values[order[(k + 1) % n]];
                let want = circle.neighbors(v);
                (prev == want[0] && next == want[1]) || (prev == want[1] && next == want[0])
            })
            .count()
    }
}

fn distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| (x.row(i) - x.row(j)).norm())
}

fn raw_stress(delta: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let n = delta.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (delta[(i, j)] - d[(i, j)]).powi(2);
        }
    }
    s
}

/// `sqrt(Σ(δ − d)² / Σd²)` over pairs i < j.
pub fn stress1(delta: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let d = distances(x);
    let n = delta.nrows();
    let raw = raw_stress(delta, &d);
    let mut dd = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            dd += d[(i, j)].powi(2);
        }
    }
    if raw <= 1e-30 {
        0.0
    } else if dd <= 1e-30 {
        1.0
    } else {
        (raw / dd).sqrt()
    }
}

/// Torgerson scaling: top two eigenvectors of the double-centered −½δ².
pub fn classical_scaling(delta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = delta.nrows();
    let sq = delta.map(|v| v * v);
    let row: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let all = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row[i] - row[j] + all));
    let eig = SymmetricEigen::new(b);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_fn(n, 2, |i, k| {
        let c = idx[k];
        eig.eigenvectors[(i, c)] * eig.eigenvalues[c].max(0.0).sqrt()
    })
}

#[derive(Debug, Clone)]
pub struct SmacofRun {
    pub points: DMatrix<f64>,
    pub stress1: f64,
    pub iterations: usize,
    /// Raw stress after each Guttman transform, starting with the initial configuration.
    pub raw_stress_history: Vec<f64>,
}

/// Unit-weight SMACOF from a given start.
pub fn smacof(delta: &DMatrix<f64>, init: DMatrix<f64>, max_iter: usize, tolerance: f64) -> SmacofRun {
    let n = delta.nrows();
    let norm = {
        let s = delta.map(|v| v * v).sum() / 2.0;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let mut x = init;
    let mut d = distances(&x);
    let mut history = vec![raw_stress(delta, &d)];
    let mut iterations = 0;
    while iterations < max_iter {
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && d[(i, j)] > 1e-12 {
                    b[(i, j)] = -delta[(i, j)] / d[(i, j)];
                }
            }
            b[(i, i)] = -b.row(i).sum();
        }
        x = (b * &x) / n as f64;
        d = distances(&x);
        let s = raw_stress(delta, &d);
        let prev = *history.last().expect("nonempty");
        history.push(s);
        iterations += 1;
        if (prev - s) / norm < tolerance {
            break;
        }
    }
    SmacofRun {
        stress1: stress1(delta, &x),
        points: x,
        iterations,
        raw_stress_history: history,
    }
}

fn random_start(n: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0) * scale)
}

/// Embeds the valid values of `c` in the plane. Restart 0 starts from
/// classical scaling, the others from seeded random configurations; the
/// lowest stress-1 wins, ties going to the earlier restart.
pub fn mds_embed(
    c: &CorrelationMatrix,
    seed: u64,
    options: &MdsOptions,
) -> Result<Embedding2D, AnalysisError> {
    let values = c.valid_values();
    let n = values.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientValues(n));
    }
    let delta = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            options
                .dissimilarity
                .apply(c.entries[values[i].position()][values[j].position()])
        }
    });
    let scale = delta.mean().max(1e-12);
    let restarts = options.restarts.max(1);
    let runs: Vec<SmacofRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut init = if r == 0 {
                classical_scaling(&delta)
            } else {
                random_start(n, scale, mix_seed(seed, r as u64))
            };
            if init.norm() < 1e-12 && delta.norm() > 0.0 {
                init = random_start(n, scale, mix_seed(seed, r as u64));
            }
            smacof(&delta, init, options.max_iter, options.tolerance)
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.stress1.total_cmp(&b.stress1).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(Embedding2D {
        values,
        points: (0..n).map(|i| [best.points[(i, 0)], best.points[(i, 1)]]).collect(),
        stress1: best.stress1,
    })
}

/// Stand-in for a human sample configuration: the embedding of a perfect circumplex.
pub fn human_reference_embedding(seed: u64, options: &MdsOptions) -> Embedding2D {
    mds_embed(&ideal_circumplex_matrix(), seed, options).expect("ideal matrix is fully valid")
}
