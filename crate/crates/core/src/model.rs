//! Small feedforward regression networks: forward pass, exact input
//! gradients, deterministic training with parameter checkpoints, and a
//! versioned binary checkpoint format.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{stream, Purpose};
use crate::transforms::CollapsePair;

/// Anything that maps an input vector to a scalar prediction.
pub trait Model: Send + Sync {
    fn input_dim(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Result<f64>;

    fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// The model over `d - 1` inputs that treats the collapsed input as the
    /// original one. `None` when the model cannot be collapsed.
    fn collapse(&self, _pair: &CollapsePair) -> Option<Box<dyn Model>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    // Derivative given the pre-activation; ReLU'(0) = 0.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Identity),
            _ => Err(Error::Format(format!("unknown activation code {c}"))),
        }
    }
}

/// Dense layer, weights stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b),
        );
    }
}

/// Feedforward network; hidden layers use `activation`, the output layer is
/// linear and the first output is the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    layers: Vec<Layer>,
    activation: Activation,
}

impl NeuralModel {
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layer list"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::invalid(format!("layer {k} has a zero dimension")));
            }
            check_dim(l.inputs * l.outputs, l.weights.len())?;
            check_dim(l.outputs, l.biases.len())?;
            if k > 0 {
                check_dim(layers[k - 1].outputs, l.inputs)?;
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameters of layer {k}")));
            }
        }
        Ok(Self { layers, activation })
    }

    /// Glorot-uniform weights and zero biases drawn from the `Init` stream.
    pub fn random(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::invalid("need at least input and output sizes"));
        }
        let mut rng = stream(seed, Purpose::Init, 0);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Self::from_layers(layers, activation)
    }

    /// Single-layer model `f(x) = w . x + b`.
    pub fn linear(weights: &[f64], bias: f64) -> Result<Self> {
        Self::from_layers(
            vec![Layer { inputs: weights.len(), outputs: 1, weights: weights.to_vec(), biases: vec![bias] }],
            Activation::Identity,
        )
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All parameters flattened: per layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim(self.num_params(), params.len())?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameters".into()));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        check_dim(self.layers[0].inputs, x.len())
    }

    // Pre-activations and activations for every layer (activations[0] = x).
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = Vec::with_capacity(self.layers.len() + 1);
        act.push(x.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(&act[k], &mut z);
            let a = if k == last { z.clone() } else { z.iter().map(|v| self.activation.apply(*v)).collect() };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if k != last {
                next.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    // Backpropagate d(output0)/d(.) given a forward trace. Returns the input
    // gradient and, if requested, accumulates `scale * dparams` into `grads`.
    fn backward(&self, pre: &[Vec<f64>], act: &[Vec<f64>], scale: f64, grads: Option<&mut [f64]>) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut delta = vec![0.0; self.layers[last].outputs];
        delta[0] = 1.0;
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0usize, |acc, l| {
                let o = *acc;
                *acc += l.weights.len() + l.biases.len();
                Some(o)
            })
            .collect();
        let mut grads = grads;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if k != last {
                for (d, z) in delta.iter_mut().zip(&pre[k]) {
                    *d *= self.activation.derivative(*z);
                }
            }
            if let Some(g) = grads.as_deref_mut() {
                let off = offsets[k];
                let input = &act[k];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let row = &mut g[off + o * layer.inputs..off + (o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(gw, a)| *gw += scale * d * a);
                    g[off + layer.weights.len() + o] += scale * d;
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            delta = prev;
        }
        delta
    }

    /// Mean squared error over a dataset.
    pub fn mse(&self, data: &Dataset) -> Result<f64> {
        check_dim(self.input_dim(), data.dim())?;
        let sse: f64 = data.rows.iter().zip(&data.targets).map(|(x, y)| (self.eval(x) - y).powi(2)).sum();
        Ok(sse / data.len() as f64)
    }

    fn loss_gradient(&self, data: &Dataset, batch: &[usize], grads: &mut [f64]) -> f64 {
        grads.iter_mut().for_each(|g| *g = 0.0);
        let scale = 2.0 / batch.len() as f64;
        let mut sse = 0.0;
        for &i in batch {
            let (pre, act) = self.trace(&data.rows[i]);
            let err = act.last().unwrap()[0] - data.targets[i];
            sse += err * err;
            self.backward(&pre, &act, scale * err, Some(grads));
        }
        sse / batch.len() as f64
    }
}

impl Model for NeuralModel {
    fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.eval(x))
    }

    fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (pre, act) = self.trace(x);
        Ok(self.backward(&pre, &act, 1.0, None))
    }

    /// Drops input column `remove` and replaces column `keep` by the average
    /// of the two, so that on a perfectly redundant input (`x_keep = x_remove`)
    /// the collapsed input `x_keep (1 + 1)` reproduces the original
    /// pre-activations exactly.
    fn collapse(&self, pair: &CollapsePair) -> Option<Box<dyn Model>> {
        let d = self.input_dim();
        if pair.validate(d).is_err() {
            return None;
        }
        let mut layers = self.layers.clone();
        let first = &mut layers[0];
        let weights = first
            .weights
            .chunks_exact(d)
            .flat_map(|row| {
                let merged = 0.5 * (row[pair.keep] + row[pair.remove]);
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != pair.remove)
                    .map(move |(c, w)| if c == pair.keep { merged } else { *w })
            })
            .collect();
        first.weights = weights;
        first.inputs = d - 1;
        Some(Box::new(NeuralModel { layers, activation: self.activation }))
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A model given by closures, for analytic test functions such as `x1 * x2`.
/// Without an explicit gradient, central differences with step `1e-6` are used.
#[derive(Clone)]
pub struct FnModel {
    dim: usize,
    f: Arc<ScalarFn>,
    grad: Option<Arc<GradFn>>,
}

impl FnModel {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f), grad: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }
}

impl std::fmt::Debug for FnModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnModel").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl Model for FnModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let y = (self.f)(x);
        if !y.is_finite() {
            return Err(Error::NonFinite("model output".into()));
        }
        Ok(y)
    }

    fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        if let Some(g) = &self.grad {
            return Ok(g(x));
        }
        let h = 1e-6;
        let mut probe = x.to_vec();
        Ok((0..self.dim)
            .map(|i| {
                let orig = probe[i];
                probe[i] = orig + h;
                let up = (self.f)(&probe);
                probe[i] = orig - h;
                let down = (self.f)(&probe);
                probe[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect())
    }
}

/// Regression dataset, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        check_dim(rows.len(), targets.len())?;
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::invalid("dataset rows have no features"));
        }
        for r in &rows {
            check_dim(d, r.len())?;
        }
        if rows.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset".into()));
        }
        Ok(Self { rows, targets })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const ADAM: Optimizer = Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    pub snapshot_every: usize,
    pub optimizer: Optimizer,
    /// Minibatch size; `None` trains full-batch.
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and nonnegative"));
        }
        if self.steps == 0 || self.snapshot_every == 0 {
            return Err(Error::invalid("steps and snapshot_every must be positive"));
        }
        if self.snapshot_every > self.steps {
            return Err(Error::invalid("snapshot_every exceeds steps"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Deep copy of the parameters at a training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub params: NeuralModel,
    pub train_loss: f64,
}

/// Train with squared-error loss. Snapshots are taken after every
/// `snapshot_every` steps, and after the final step.
pub fn train(model: &NeuralModel, data: &Dataset, cfg: &TrainConfig) -> Result<Vec<Checkpoint>> {
    cfg.validate()?;
    check_dim(model.input_dim(), data.dim())?;
    let mut live = model.clone();
    let mut params = live.params();
    let mut grads = vec![0.0; params.len()];
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let full: Vec<usize> = (0..data.len()).collect();
    let mut checkpoints = Vec::new();

    for step in 1..=cfg.steps {
        let batch: Vec<usize> = match cfg.batch_size {
            Some(b) if b < data.len() => {
                let mut rng = stream(cfg.seed, Purpose::Training, step as u64);
                sample_indices(&mut rng, data.len(), b).into_vec()
            }
            _ => full.clone(),
        };
        let loss = live.loss_gradient(data, &batch, &mut grads);
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        match cfg.optimizer {
            Optimizer::Sgd => {
                params.iter_mut().zip(&grads).for_each(|(p, g)| *p -= cfg.learning_rate * g);
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(step as i32);
                let c2 = 1.0 - beta2.powi(step as i32);
                for i in 0..params.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
                    params[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, loss: f64::NAN });
        }
        live.set_params(&params)?;
        if step % cfg.snapshot_every == 0 || step == cfg.steps {
            let train_loss = live.mse(data)?;
            if !train_loss.is_finite() {
                return Err(Error::Diverged { step, loss: train_loss });
            }
            checkpoints.push(Checkpoint { step, params: live.clone(), train_loss });
        }
    }
    Ok(checkpoints)
}

const MAGIC: &[u8; 8] = b"ERICKPT\0";
const FORMAT_VERSION: u32 = 1;

impl Checkpoint {
    /// Binary layout (little endian): magic, u32 version, u64 step, f64 loss,
    /// u8 activation, u32 number of sizes, u64 sizes, then per layer the
    /// row-major weights followed by the biases as f64.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let sizes = self.params.layer_sizes();
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.step as u64).to_le_bytes())?;
        w.write_all(&self.train_loss.to_le_bytes())?;
        w.write_all(&[self.params.activation.code()])?;
        w.write_all(&(sizes.len() as u32).to_le_bytes())?;
        for s in &sizes {
            w.write_all(&(*s as u64).to_le_bytes())?;
        }
        for p in self.params.params() {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let step = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let train_loss = f64::from_le_bytes(read_array(&mut r)?);
        let [act] = read_array::<1>(&mut r)?;
        let activation = Activation::from_code(act)?;
        let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
        if !(2..=1024).contains(&count) {
            return Err(Error::Format(format!("implausible layer count {count}")));
        }
        let sizes = (0..count)
            .map(|_| read_array(&mut r).map(|b| u64::from_le_bytes(b) as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(count - 1);
        for w in sizes.windows(2) {
            let n = w[0].checked_mul(w[1]).ok_or_else(|| Error::Format("layer too large".into()))?;
            let mut read_vec = |len: usize| -> Result<Vec<f64>> {
                (0..len).map(|_| read_array(&mut r).map(f64::from_le_bytes)).collect()
            };
            let weights = read_vec(n)?;
            let biases = read_vec(w[1])?;
            layers.push(Layer { inputs: w[0], outputs: w[1], weights, biases });
        }
        let params = NeuralModel::from_layers(layers, activation).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { step, params, train_loss })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated checkpoint".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}
