//! Dense symmetric autoencoder with PReLU hidden units, trained by
//! mini-batch backpropagation of the mean squared reconstruction error
//! under Adadelta.
//!
//! All parameters live in one flat vector, layer by layer: the weight
//! matrix (row-major, `out x in`), the bias, then the PReLU slopes for
//! every layer but the last.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AE_SIZES: [usize; 7] = [400, 200, 100, 20, 100, 200, 400];
pub const PRELU_INIT: f64 = 0.25;
pub const ADADELTA_RHO: f64 = 0.95;
pub const ADADELTA_EPS: f64 = 1e-6;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerOffsets {
    weights: usize,
    bias: usize,
    slope: Option<usize>,
    inputs: usize,
    outputs: usize,
}

fn layout(sizes: &[usize]) -> (Vec<LayerOffsets>, usize) {
    let last = sizes.len() - 2;
    let mut at = 0;
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(l, io)| {
            let (inputs, outputs) = (io[0], io[1]);
            let weights = at;
            let bias = weights + inputs * outputs;
            at = bias + outputs;
            let slope = (l != last).then(|| {
                let s = at;
                at += outputs;
                s
            });
            LayerOffsets {
                weights,
                bias,
                slope,
                inputs,
                outputs,
            }
        })
        .collect();
    (layers, at)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adadelta {
    pub rho: f64,
    pub eps: f64,
    pub learning_rate: f64,
    sq_grad: Vec<f64>,
    sq_update: Vec<f64>,
}

impl Adadelta {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            rho: ADADELTA_RHO,
            eps: ADADELTA_EPS,
            learning_rate,
            sq_grad: vec![0.0; len],
            sq_update: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let (rho, eps, lr) = (self.rho, self.eps, self.learning_rate);
        for (((p, &g), eg), ex) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.sq_grad)
            .zip(&mut self.sq_update)
        {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let delta = g * (*ex + eps).sqrt() / (*eg + eps).sqrt();
            *ex = rho * *ex + (1.0 - rho) * delta * delta;
            *p -= lr * delta;
        }
    }

    pub fn accumulators(&self) -> (&[f64], &[f64]) {
        (&self.sq_grad, &self.sq_update)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AEModel {
    sizes: Vec<usize>,
    layers: Vec<LayerOffsets>,
    params: Vec<f64>,
    optimizer: Adadelta,
    epoch: usize,
    seed: u64,
}

/// Fresh model with the standard 400-200-100-20-100-200-400 shape.
pub fn ae_init(seed: u64) -> AEModel {
    AEModel::with_sizes(&AE_SIZES, seed).expect("standard sizes are valid")
}

struct Cache {
    /// Input to each layer (post-dropout activation of the previous one).
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeChannels {
    pub latent: Vec<f64>,
    pub residual: Vec<f64>,
    pub score: f64,
}

impl AEModel {
    /// Symmetric model with the given layer widths; weights drawn from
    /// `Normal(0, sqrt(2 / fan_in))`.
    pub fn with_sizes(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 3 || sizes.len().is_multiple_of(2) || sizes.contains(&0) {
            return Err(Error::invalid(format!("bad autoencoder sizes {sizes:?}")));
        }
        if sizes.iter().ne(sizes.iter().rev()) {
            return Err(Error::invalid(format!(
                "autoencoder sizes {sizes:?} are not symmetric"
            )));
        }
        let (layers, count) = layout(sizes);
        let mut params = vec![0.0; count];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layers {
            let normal = Normal::new(0.0, (2.0 / l.inputs as f64).sqrt()).expect("positive std");
            for w in &mut params[l.weights..l.bias] {
                *w = normal.sample(&mut rng);
            }
            if let Some(s) = l.slope {
                params[s..s + l.outputs].fill(PRELU_INIT);
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            optimizer: Adadelta::new(count, 1.0),
            params,
            epoch: 0,
            seed,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn latent_len(&self) -> usize {
        self.sizes[self.sizes.len() / 2]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn optimizer(&self) -> &Adadelta {
        &self.optimizer
    }

    pub fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let l = self.layers[layer];
        ArrayView2::from_shape((l.outputs, l.inputs), &self.params[l.weights..l.bias])
            .expect("layout matches")
    }

    fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let l = self.layers[layer];
        ArrayView1::from(&self.params[l.bias..l.bias + l.outputs])
    }

    fn slope(&self, layer: usize) -> Option<ArrayView1<'_, f64>> {
        let l = self.layers[layer];
        l.slope
            .map(|s| ArrayView1::from(&self.params[s..s + l.outputs]))
    }

    /// Human-readable name of parameter `i`, e.g. `layer2.weight[3,5]`.
    pub fn param_name(&self, i: usize) -> String {
        for (k, l) in self.layers.iter().enumerate() {
            if i < l.bias {
                let j = i - l.weights;
                return format!("layer{k}.weight[{},{}]", j / l.inputs, j % l.inputs);
            }
            if i < l.bias + l.outputs {
                return format!("layer{k}.bias[{}]", i - l.bias);
            }
            if let Some(s) = l.slope {
                if i < s + l.outputs {
                    return format!("layer{k}.slope[{}]", i - s);
                }
            }
        }
        format!("param[{i}]")
    }

    fn drops(&self, layer: usize) -> bool {
        layer + 1 < self.layers.len() && layer + 1 != self.layers.len() / 2
    }

    fn batch<S: AsRef<[f64]>>(&self, rows: &[S]) -> Result<Array2<f64>> {
        let n = self.input_len();
        let mut x = Array2::zeros((rows.len(), n));
        for (mut dst, src) in x.rows_mut().into_iter().zip(rows) {
            let src = src.as_ref();
            if src.len() != n {
                return Err(Error::invalid(format!(
                    "autoencoder expects {n} samples, got {}",
                    src.len()
                )));
            }
            dst.assign(&ArrayView1::from(src));
        }
        Ok(x)
    }

    fn forward_cached(&self, x: Array2<f64>, masks: Vec<Option<Array2<f64>>>) -> Cache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x;
        for (l, mask) in masks.iter().enumerate() {
            let z = a.dot(&self.weights(l).t()) + self.bias(l);
            let mut next = match self.slope(l) {
                Some(s) => {
                    let mut out = z.clone();
                    for mut row in out.rows_mut() {
                        for (v, &k) in row.iter_mut().zip(s.iter()) {
                            if *v <= 0.0 {
                                *v *= k;
                            }
                        }
                    }
                    out
                }
                None => z.clone(),
            };
            if let Some(m) = mask {
                next *= m;
            }
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Cache {
            inputs,
            pre,
            masks,
            output: a,
        }
    }

    fn no_masks(&self) -> Vec<Option<Array2<f64>>> {
        vec![None; self.layers.len()]
    }

    fn sample_masks(&self, rows: usize, rate: f64, rng: &mut impl Rng) -> Vec<Option<Array2<f64>>> {
        (0..self.layers.len())
            .map(|l| {
                (rate > 0.0 && self.drops(l)).then(|| {
                    let keep = 1.0 - rate;
                    Array2::from_shape_simple_fn((rows, self.layers[l].outputs), || {
                        if rng.gen::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                })
            })
            .collect()
    }

    /// Gradient of the mean squared error with respect to every parameter.
    fn backward(&self, cache: &Cache, target: &Array2<f64>) -> (f64, Vec<f64>) {
        let diff = &cache.output - target;
        let count = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
        let mut grad = vec![0.0; self.params.len()];
        let mut d_a = diff * (2.0 / count);
        for l in (0..self.layers.len()).rev() {
            let off = self.layers[l];
            if let Some(m) = &cache.masks[l] {
                d_a *= m;
            }
            let z = &cache.pre[l];
            let d_z = match (self.slope(l), off.slope) {
                (Some(s), Some(so)) => {
                    let mut d_z = d_a;
                    let d_s = &mut grad[so..so + off.outputs];
                    for (mut row, zrow) in d_z.rows_mut().into_iter().zip(z.rows()) {
                        for (j, (g, &zv)) in row.iter_mut().zip(zrow.iter()).enumerate() {
                            if zv <= 0.0 {
                                d_s[j] += *g * zv;
                                *g *= s[j];
                            }
                        }
                    }
                    d_z
                }
                _ => d_a,
            };
            let d_w = d_z.t().dot(&cache.inputs[l]);
            for (g, v) in grad[off.weights..off.bias].iter_mut().zip(d_w.iter()) {
                *g = *v;
            }
            for (g, v) in grad[off.bias..off.bias + off.outputs]
                .iter_mut()
                .zip(d_z.sum_axis(Axis(0)).iter())
            {
                *g = *v;
            }
            d_a = d_z.dot(&self.weights(l));
        }
        (loss, grad)
    }

    /// Mean squared reconstruction error at inference.
    pub fn loss<S: AsRef<[f64]>>(&self, inputs: &[S]) -> Result<f64> {
        let x = self.batch(inputs)?;
        let cache = self.forward_cached(x.clone(), self.no_masks());
        let diff = &cache.output - &x;
        Ok(diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64)
    }

    /// Inference loss and its gradient over the whole parameter vector.
    pub fn loss_gradient<S: AsRef<[f64]>>(&self, inputs: &[S]) -> Result<(f64, Vec<f64>)> {
        let x = self.batch(inputs)?;
        let cache = self.forward_cached(x.clone(), self.no_masks());
        Ok(self.backward(&cache, &x))
    }

    fn forward_rows(&self, x: Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let cache = self.forward_cached(x, self.no_masks());
        let latent = cache.inputs[self.layers.len() / 2].clone();
        (latent, cache.output)
    }

    /// Latent code and reconstruction of many windows at inference.
    pub fn encode_batch<S: AsRef<[f64]>>(&self, inputs: &[S]) -> Result<Vec<AeChannels>> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(256) {
            let x = self.batch(chunk)?;
            let (latent, recon) = self.forward_rows(x.clone());
            let residual = &x - &recon;
            for (z, r) in latent.rows().into_iter().zip(residual.rows()) {
                let residual = r.to_vec();
                let score = residual.iter().map(|v| v * v).sum::<f64>() / residual.len() as f64;
                out.push(AeChannels {
                    latent: z.to_vec(),
                    residual,
                    score,
                });
            }
        }
        Ok(out)
    }
}

/// One forward pass. With `training` unset, or at rate 0, no dropout is
/// applied and the result is deterministic.
pub fn ae_forward(
    model: &AEModel,
    window: &[f64],
    dropout_rate: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = model.batch(&[window])?;
    let masks = if training {
        model.sample_masks(1, dropout_rate, rng)
    } else {
        model.no_masks()
    };
    let cache = model.forward_cached(x, masks);
    let latent = cache.inputs[model.layers.len() / 2].row(0).to_vec();
    Ok((latent, cache.output.row(0).to_vec()))
}

pub fn ae_channels(model: &AEModel, window: &[f64]) -> Result<AeChannels> {
    Ok(model.encode_batch(&[window])?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_start: f64,
    pub dropout_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 128,
            learning_rate: 1.0,
            dropout_start: 0.5,
            dropout_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_start) {
            return Err(Error::invalid("dropout_start must be in [0, 1)"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Linear decay from `dropout_start` at epoch 0 to 0 at `dropout_epochs`.
    pub fn dropout_rate(&self, epoch: usize) -> f64 {
        if self.dropout_epochs == 0 || epoch >= self.dropout_epochs {
            return 0.0;
        }
        self.dropout_start * (1.0 - epoch as f64 / self.dropout_epochs as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub dropout_rate: f64,
    /// Mean training-mode batch loss.
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub epochs: Vec<EpochLoss>,
}

impl LossTrace {
    pub fn first(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.loss)
    }

    pub fn last(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,dropout_rate,loss")?;
        for e in &self.epochs {
            writeln!(out, "{},{},{}", e.epoch, e.dropout_rate, e.loss)?;
        }
        Ok(())
    }
}

/// Trains `model` in place on `windows` for `cfg.epochs` further epochs.
pub fn ae_train<S: AsRef<[f64]>>(
    model: &mut AEModel,
    windows: &[S],
    cfg: &TrainConfig,
) -> Result<LossTrace> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::invalid(
            "autoencoder training needs at least one window",
        ));
    }
    let data = model.batch(windows)?;
    model.optimizer.learning_rate = cfg.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut trace = LossTrace::default();
    for _ in 0..cfg.epochs {
        let epoch = model.epoch;
        rng.set_stream(epoch as u64);
        rng.set_word_pos(0);
        let rate = cfg.dropout_rate(epoch);
        // Each epoch's order depends only on (seed, epoch), so training resumes exactly.
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.select(Axis(0), idx);
            let masks = model.sample_masks(idx.len(), rate, &mut rng);
            let cache = model.forward_cached(x.clone(), masks);
            let (loss, grad) = model.backward(&cache, &x);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite loss {loss} at epoch {epoch}, batch {b} (dropout {rate})"
                )));
            }
            total += loss * idx.len() as f64;
            model.optimizer.step(&mut model.params, &grad);
        }
        trace.epochs.push(EpochLoss {
            epoch,
            dropout_rate: rate,
            loss: total / windows.len() as f64,
        });
        model.epoch += 1;
    }
    Ok(trace)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelHeader {
    format_version: u32,
    sizes: Vec<usize>,
    hidden_activation: String,
    output_activation: String,
    epoch: usize,
    seed: u64,
    rho: f64,
    eps: f64,
    learning_rate: f64,
    param_count: usize,
    weights_file: String,
}

impl AEModel {
    /// Writes `path` (JSON header) and a sibling `.bin` holding parameters
    /// and optimizer state as little-endian f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bin = path.with_extension("bin");
        let header = ModelHeader {
            format_version: MODEL_FORMAT_VERSION,
            sizes: self.sizes.clone(),
            hidden_activation: "prelu".into(),
            output_activation: "linear".into(),
            epoch: self.epoch,
            seed: self.seed,
            rho: self.optimizer.rho,
            eps: self.optimizer.eps,
            learning_rate: self.optimizer.learning_rate,
            param_count: self.params.len(),
            weights_file: bin
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
        let mut out = BufWriter::new(fs::File::create(&bin)?);
        for v in self
            .params
            .iter()
            .chain(&self.optimizer.sq_grad)
            .chain(&self.optimizer.sq_update)
        {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let header: ModelHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {}",
                header.format_version
            )));
        }
        let mut model = Self::with_sizes(&header.sizes, header.seed)?;
        if model.params.len() != header.param_count {
            return Err(Error::invalid(
                "model header parameter count does not match sizes",
            ));
        }
        let bin: PathBuf = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&header.weights_file);
        let bytes = fs::read(&bin)?;
        let needed = 3 * header.param_count * 8;
        if bytes.len() != needed {
            return Err(Error::Truncated {
                needed,
                found: bytes.len(),
            });
        }
        let mut values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let n = header.param_count;
        model.params = values.by_ref().take(n).collect();
        model.optimizer.sq_grad = values.by_ref().take(n).collect();
        model.optimizer.sq_update = values.collect();
        model.optimizer.rho = header.rho;
        model.optimizer.eps = header.eps;
        model.optimizer.learning_rate = header.learning_rate;
        model.epoch = header.epoch;
        if model.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "{} holds non-finite weights",
                bin.display()
            )));
        }
        Ok(model)
    }
}
