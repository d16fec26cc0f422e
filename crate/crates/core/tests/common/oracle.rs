//! Brute-force reference computations, written directly from the
//! definitions and sharing no code with the library.

use zsl_core::corpus::{CompatibilityModel, EmbeddingTable, SampleSet};
use zsl_core::linalg::Matrix;

/// Every score of every sample, computed as an explicit double sum.
pub struct Problem {
    weights: Vec<Vec<f64>>,
    /// `scores[n][c]` for sample `n` and class `c`.
    scores: Vec<Vec<f64>>,
    targets: Vec<usize>,
}

impl Problem {
    pub fn from_tables(
        model: &CompatibilityModel,
        acoustic: &EmbeddingTable,
        semantic: &EmbeddingTable,
        samples: &SampleSet,
        classes: &[String],
    ) -> Self {
        let w = model.weights();
        let weights: Vec<Vec<f64>> = (0..w.rows())
            .map(|i| (0..w.cols()).map(|j| w.get(i, j)).collect())
            .collect();
        let mut scores = Vec::new();
        let mut targets = Vec::new();
        for s in samples.samples() {
            let theta = acoustic.get(&s.sample_id).unwrap();
            let row: Vec<f64> = classes
                .iter()
                .map(|c| {
                    let phi = semantic.get(c).unwrap();
                    let mut total = 0.0;
                    for (i, t) in theta.iter().enumerate() {
                        for (j, p) in phi.iter().enumerate() {
                            total += t * weights[i][j] * p;
                        }
                    }
                    total
                })
                .collect();
            scores.push(row);
            targets.push(classes.iter().position(|c| *c == s.class_id).unwrap());
        }
        Problem {
            weights,
            scores,
            targets,
        }
    }

    fn hinge(&self, n: usize, c: usize) -> f64 {
        1.0 + self.scores[n][c] - self.scores[n][self.targets[n]]
    }

    /// Smallest |hinge| over all samples and non-target classes.
    pub fn min_abs_hinge(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n in 0..self.scores.len() {
            for c in 0..self.scores[n].len() {
                if c != self.targets[n] {
                    best = best.min(self.hinge(n, c).abs());
                }
            }
        }
        best
    }

    /// Count of classes violating the margin for sample `n`, and which.
    pub fn rank(&self, n: usize) -> (usize, Vec<usize>) {
        let mut violators = Vec::new();
        for c in 0..self.scores[n].len() {
            if c != self.targets[n] && self.hinge(n, c) > 0.0 {
                violators.push(c);
            }
        }
        (violators.len(), violators)
    }

    pub fn objective(&self, lambda: f64) -> f64 {
        let mut data = 0.0;
        for n in 0..self.scores.len() {
            let (rank, violators) = self.rank(n);
            if rank == 0 {
                continue;
            }
            let mut harmonic = 0.0;
            for i in (1..=rank).rev() {
                harmonic += 1.0 / i as f64;
            }
            let total: f64 = violators.iter().map(|&c| self.hinge(n, c)).sum();
            data += harmonic / rank as f64 * total;
        }
        data /= self.scores.len() as f64;
        let norm: f64 = self.weights.iter().flatten().map(|w| w * w).sum();
        data + lambda * norm
    }
}

/// Central finite differences of `f` at `w`, one entry per weight in
/// row-major order.
pub fn central_differences(w: &Matrix, h: f64, f: impl Fn(&Matrix) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.rows() * w.cols());
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let mut plus = w.clone();
            plus.set(i, j, w.get(i, j) + h);
            let mut minus = w.clone();
            minus.set(i, j, w.get(i, j) - h);
            out.push((f(&plus) - f(&minus)) / (2.0 * h));
        }
    }
    out
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
