//! Multinomial logistic regression over standardized channel vectors.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    classes: usize,
    dim: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Weights (`classes x dim`, row-major) followed by biases.
    params: Vec<f64>,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl SoftmaxHead {
    /// All-zero weights and identity standardization.
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            params: vec![0.0; classes * (dim + 1)],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weights(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (self.classes, self.dim),
            &self.params[..self.classes * self.dim],
        )
        .expect("layout matches")
    }

    fn bias(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[self.classes * self.dim..])
    }

    fn standardize<S: AsRef<[f64]>>(&self, rows: &[S]) -> Result<Array2<f64>> {
        let mut x = Array2::zeros((rows.len(), self.dim));
        for (mut dst, src) in x.rows_mut().into_iter().zip(rows) {
            let src = src.as_ref();
            if src.len() != self.dim {
                return Err(Error::invalid(format!(
                    "classifier expects {} features, got {}",
                    self.dim,
                    src.len()
                )));
            }
            for ((d, &v), (m, s)) in dst
                .iter_mut()
                .zip(src)
                .zip(self.mean.iter().zip(&self.scale))
            {
                *d = (v - m) / s;
            }
        }
        Ok(x)
    }

    fn probabilities(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut p = x.dot(&self.weights().t()) + self.bias();
        softmax_rows(&mut p);
        p
    }

    fn objective_std(&self, x: &Array2<f64>, labels: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let n = x.nrows() as f64;
        let mut p = self.probabilities(x);
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            loss -= p[[i, y]].max(f64::MIN_POSITIVE).ln();
            p[[i, y]] -= 1.0;
        }
        let w = self.weights();
        loss = loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        let gw = p.t().dot(x) / n + &(&w * l2);
        let gb = p.sum_axis(Axis(0)) / n;
        let mut grad = gw.into_raw_vec_and_offset().0;
        grad.extend(gb.iter());
        (loss, grad)
    }

    /// Penalized mean cross-entropy on raw features and its gradient.
    pub fn objective<S: AsRef<[f64]>>(
        &self,
        features: &[S],
        labels: &[usize],
        l2: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_labels(features.len(), labels)?;
        let x = self.standardize(features)?;
        Ok(self.objective_std(&x, labels, l2))
    }

    fn check_labels(&self, rows: usize, labels: &[usize]) -> Result<()> {
        if rows != labels.len() || rows == 0 {
            return Err(Error::invalid(format!(
                "{rows} feature rows for {} labels",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= self.classes) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        Ok(())
    }

    pub fn predict_batch<S: AsRef<[f64]>>(&self, features: &[S]) -> Result<Vec<Prediction>> {
        let x = self.standardize(features)?;
        let p = self.probabilities(&x);
        Ok(p.rows()
            .into_iter()
            .map(|row| {
                let label = row
                    .iter()
                    .enumerate()
                    .fold(0, |best, (k, &v)| if v > row[best] { k } else { best });
                Prediction {
                    label,
                    probabilities: row.to_vec(),
                }
            })
            .collect())
    }
}

/// Largest eigenvalue of `x^T x / n` for `x` with a ones column appended.
fn gram_norm(x: &Array2<f64>, seed: u64) -> f64 {
    let n = x.nrows() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array1::from_shape_fn(x.ncols() + 1, |_| rng.gen_range(0.5f64..1.5));
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = v.dot(&v).sqrt();
        v /= norm;
        let xv = x.dot(&v.slice(ndarray::s![..x.ncols()])) + v[x.ncols()];
        let mut next = Array1::<f64>::zeros(v.len());
        next.slice_mut(ndarray::s![..x.ncols()])
            .assign(&x.t().dot(&xv));
        next[x.ncols()] = xv.sum();
        next /= n;
        lambda = v.dot(&next);
        v = next;
    }
    lambda
}

/// Fits standardization on `features`, then minimizes the penalized
/// cross-entropy by accelerated full-batch gradient descent with step
/// `1 / L` for the objective's smoothness bound `L`.
pub fn softmax_head_train<S: AsRef<[f64]>>(
    features: &[S],
    labels: &[usize],
    classes: usize,
    cfg: &HeadConfig,
) -> Result<SoftmaxHead> {
    if classes < 2 {
        return Err(Error::invalid("classifier needs at least two classes"));
    }
    let dim = features.first().map_or(0, |r| r.as_ref().len());
    if dim == 0 {
        return Err(Error::invalid("classifier needs non-empty feature vectors"));
    }
    let mut head = SoftmaxHead::zeros(classes, dim);
    head.check_labels(features.len(), labels)?;
    let n = features.len() as f64;
    for j in 0..dim {
        let col = features
            .iter()
            .map(|r| r.as_ref().get(j).copied().unwrap_or(0.0));
        let mean = col.clone().sum::<f64>() / n;
        let var: f64 = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        head.mean[j] = mean;
        head.scale[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    let x = head.standardize(features)?;
    let step = 1.0 / (0.5 * 1.05 * gram_norm(&x, cfg.seed) + cfg.l2);
    let mut prev = head.params.clone();
    let mut probe = head.clone();
    for k in 0..cfg.iterations {
        let momentum = k as f64 / (k as f64 + 3.0);
        for ((q, &p), &o) in probe.params.iter_mut().zip(&head.params).zip(&prev) {
            *q = p + momentum * (p - o);
        }
        let (loss, grad) = probe.objective_std(&x, labels, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "classifier loss diverged at iteration {k}"
            )));
        }
        prev.clone_from(&head.params);
        for ((p, &q), g) in head.params.iter_mut().zip(&probe.params).zip(grad) {
            *p = q - step * g;
        }
    }
    Ok(head)
}

pub fn softmax_head_predict(head: &SoftmaxHead, features: &[f64]) -> Result<Prediction> {
    Ok(head.predict_batch(&[features])?.remove(0))
}
