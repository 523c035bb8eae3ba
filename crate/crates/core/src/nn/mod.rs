//! A small dense network trained with plain SGD.
//!
//! Each layer computes `y = W x + b` and then `f(y)` elementwise; the last
//! layer has no activation and the loss supplies the output nonlinearity.

mod data;
mod train;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, ActivationSpec, Registry};
use crate::{Error, Result};

pub use data::{generate_dataset, Dataset, DatasetName, Target};
pub use train::{train, Batch, EpochRecord, TrainConfig, TrainReport};

#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    /// `None` for the identity.
    pub spec: Option<ActivationSpec>,
    activation: Option<Arc<dyn Activation>>,
}

impl DenseLayer {
    /// Build a layer from explicit rows of weights.
    pub fn new(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        spec: Option<ActivationSpec>,
    ) -> Result<Self> {
        let outputs = weights.len();
        let inputs = weights.first().map_or(0, Vec::len);
        if outputs == 0 || inputs == 0 {
            return Err(Error::config(
                "layer needs at least one input and one output",
            ));
        }
        if weights.iter().any(|row| row.len() != inputs) {
            return Err(Error::config("weight rows have different lengths"));
        }
        if biases.len() != outputs {
            return Err(Error::config(format!(
                "{} biases for {outputs} outputs",
                biases.len()
            )));
        }
        let weights: Vec<f64> = weights.into_iter().flatten().collect();
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::config("layer parameters must be finite"));
        }
        let activation = spec.map(|s| Registry::builtin().resolve(&s)).transpose()?;
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
            spec,
            activation,
        })
    }

    /// Uniform `[-1/sqrt(inputs), 1/sqrt(inputs)]` weights and biases.
    pub fn random(
        inputs: usize,
        outputs: usize,
        activation: Option<Arc<dyn Activation>>,
        spec: Option<ActivationSpec>,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.gen_range(-bound..=bound);
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let biases = (0..outputs).map(|_| draw()).collect();
        Self {
            inputs,
            outputs,
            weights,
            biases,
            spec,
            activation,
        }
    }

    pub fn activation(&self) -> Option<&dyn Activation> {
        self.activation.as_deref()
    }

    fn affine(&self, x: &[f64], y: &mut [f64]) {
        for (o, (row, b)) in y
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            *o = row.iter().zip(x).fold(*b, |acc, (w, v)| acc + w * v);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MLPModel {
    pub layers: Vec<DenseLayer>,
    pub seed: u64,
}

/// Per-layer values recorded by [`MLPModel::forward`] for backprop.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    /// Pre-activations `y = W x + b`, one vector per layer.
    pub pre: Vec<Vec<f64>>,
    /// Post-activations `f(y)`, one vector per layer.
    pub post: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MLPModel) -> Self {
        Self {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        let pairs = self.weights.iter_mut().zip(&other.weights);
        for (a, b) in pairs.chain(self.biases.iter_mut().zip(&other.biases)) {
            a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        }
    }

    fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|a| *a *= k);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b))
            .copied()
    }
}

impl MLPModel {
    /// `sizes = [inputs, hidden..., outputs]`; hidden layers use `activation`
    /// from `registry`, the output layer is linear.
    pub fn with_registry(
        registry: &Registry,
        sizes: &[usize],
        activation: &ActivationSpec,
        seed: u64,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!("bad layer sizes {sizes:?}")));
        }
        let act = registry.resolve(activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (a, s) = if i == last {
                    (None, None)
                } else {
                    (Some(Arc::clone(&act)), Some(*activation))
                };
                DenseLayer::random(w[0], w[1], a, s, &mut rng)
            })
            .collect();
        Ok(Self { layers, seed })
    }

    pub fn new(sizes: &[usize], activation: &ActivationSpec, seed: u64) -> Result<Self> {
        Self::with_registry(Registry::builtin(), sizes, activation, seed)
    }

    pub fn from_layers(layers: Vec<DenseLayer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("model needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::config(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::config(format!(
                "input has {} features, model expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut cache = ForwardCache {
            input: input.to_vec(),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        for layer in &self.layers {
            let x = cache.post.last().unwrap_or(&cache.input);
            let mut y = vec![0.0; layer.outputs];
            layer.affine(x, &mut y);
            let out = match layer.activation() {
                Some(act) => {
                    let mut out = vec![0.0; y.len()];
                    act.forward_f64(&y, &mut out);
                    out
                }
                None => y.clone(),
            };
            cache.pre.push(y);
            cache.post.push(out);
        }
        let output = cache.post.last().cloned().unwrap_or_default();
        Ok((output, cache))
    }

    /// Gradients of the loss with respect to every weight and bias, given
    /// `d_output = dL/d(output)` and the cache from the matching forward pass.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<Gradients> {
        let consistent = cache.pre.len() == self.layers.len()
            && cache.post.len() == self.layers.len()
            && cache.input.len() == self.input_dim()
            && self
                .layers
                .iter()
                .zip(&cache.pre)
                .all(|(l, y)| y.len() == l.outputs);
        if !consistent {
            return Err(Error::Internal(
                "forward cache does not match this model".into(),
            ));
        }
        if d_output.len() != self.output_dim() {
            return Err(Error::Internal(format!(
                "output gradient has {} entries, model has {} outputs",
                d_output.len(),
                self.output_dim()
            )));
        }

        let mut grads = Gradients::zeros_like(self);
        let mut delta = d_output.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // dL/dy = dL/df(y) * f'(y)
            if let Some(act) = layer.activation() {
                let mut fprime = vec![0.0; delta.len()];
                act.derivative_f64(&cache.pre[l], &mut fprime);
                delta.iter_mut().zip(&fprime).for_each(|(d, g)| *d *= g);
            }
            let x = if l == 0 {
                &cache.input
            } else {
                &cache.post[l - 1]
            };
            let dw = &mut grads.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut dw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(x).for_each(|(g, &xi)| *g = d * xi);
            }
            grads.biases[l].copy_from_slice(&delta);
            if l > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                }
                delta = prev;
            }
        }
        Ok(grads)
    }

    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            layer
                .weights
                .iter_mut()
                .zip(gw)
                .for_each(|(w, g)| *w -= learning_rate * g);
            layer
                .biases
                .iter_mut()
                .zip(gb)
                .for_each(|(b, g)| *b -= learning_rate * g);
        }
    }

    /// Every weight then bias, layer by layer.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .copied()
    }

    pub fn parameter_mut(&mut self, index: usize) -> Option<&mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
            .nth(index)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// FNV-1a over the bit patterns of all parameters.
    pub fn checksum(&self) -> u64 {
        crate::perf::bench::fnv_words(self.parameters().map(f64::to_bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Mean over output components of the squared error.
    Mse,
    /// Softmax followed by negative log-likelihood.
    CrossEntropy,
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mse" => Ok(Loss::Mse),
            "cross_entropy" | "ce" | "xent" => Ok(Loss::CrossEntropy),
            _ => Err(Error::config(format!("unknown loss `{s}`"))),
        }
    }
}

impl Loss {
    /// Loss for one sample and its gradient with respect to the model output.
    pub fn evaluate(self, output: &[f64], target: &Target) -> Result<(f64, Vec<f64>)> {
        let n = output.len();
        match self {
            Loss::Mse => {
                let t = target.dense(n)?;
                let mut grad = vec![0.0; n];
                let mut loss = 0.0;
                for ((g, &o), &t) in grad.iter_mut().zip(output).zip(&t) {
                    let e = o - t;
                    loss += e * e;
                    *g = 2.0 * e / n as f64;
                }
                Ok((loss / n as f64, grad))
            }
            Loss::CrossEntropy => {
                let Target::Class(c) = *target else {
                    return Err(Error::config("cross-entropy needs class targets"));
                };
                if n < 2 || c >= n {
                    return Err(Error::config(format!(
                        "cross-entropy needs at least 2 outputs and class < outputs, got {n} outputs, class {c}"
                    )));
                }
                let m = output.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = output.iter().map(|o| (o - m).exp()).collect();
                let z: f64 = exps.iter().sum();
                let loss = z.ln() - (output[c] - m);
                let grad = exps
                    .iter()
                    .enumerate()
                    .map(|(i, e)| e / z - if i == c { 1.0 } else { 0.0 })
                    .collect();
                Ok((loss, grad))
            }
        }
    }
}

/// Whether `output` picks the right class: argmax, or `> 0.5` for a single
/// output unit.
pub fn is_correct(output: &[f64], target: &Target) -> Option<bool> {
    let Target::Class(c) = *target else {
        return None;
    };
    let predicted = if output.len() == 1 {
        usize::from(output[0] > 0.5)
    } else {
        output
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)?
    };
    Some(predicted == c)
}

/// Mean loss, mean gradients and correct-count over a batch.
pub fn batch_loss_and_grads(
    model: &MLPModel,
    inputs: &[Vec<f64>],
    targets: &[Target],
    loss: Loss,
) -> Result<(f64, Gradients, usize)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::config(
            "batch needs matching, non-empty inputs and targets",
        ));
    }
    let mut total = Gradients::zeros_like(model);
    let mut sum_loss = 0.0;
    let mut correct = 0;
    for (x, t) in inputs.iter().zip(targets) {
        let (out, cache) = model.forward(x)?;
        let (l, d_out) = loss.evaluate(&out, t)?;
        sum_loss += l;
        correct += usize::from(is_correct(&out, t).unwrap_or(false));
        total.add_assign(&model.backward(&cache, &d_out)?);
    }
    let k = 1.0 / inputs.len() as f64;
    total.scale(k);
    Ok((sum_loss * k, total, correct))
}
