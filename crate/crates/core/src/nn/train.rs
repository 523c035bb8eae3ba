use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{generate_dataset, DatasetName};
use super::{batch_loss_and_grads, Loss, MLPModel};
use crate::activation::{ActivationSpec, Registry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    Full,
    Size(usize),
}

impl std::str::FromStr for Batch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(Batch::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Batch::Size(n)),
            _ => Err(Error::config(format!(
                "batch must be `full` or a positive size, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dataset: DatasetName,
    /// Samples to generate (ignored for xor).
    pub n_samples: usize,
    pub noise: f64,
    /// Hidden layer widths; input and output widths follow from the data.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: Batch,
    pub loss: Loss,
    pub seed: u64,
    pub activation: ActivationSpec,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch == Batch::Size(0) {
            return Err(Error::config("batch size must be positive"));
        }
        self.activation.validate()
    }

    /// Output units: one per class for cross-entropy, a single unit for
    /// binary MSE and for regression.
    fn output_dim(&self, n_classes: Option<usize>) -> Result<usize> {
        match (self.loss, n_classes) {
            (Loss::CrossEntropy, Some(k)) => Ok(k),
            (Loss::CrossEntropy, None) => Err(Error::config(format!(
                "cross-entropy needs a classification dataset, `{}` is regression",
                self.dataset
            ))),
            (Loss::Mse, Some(2) | None) => Ok(1),
            (Loss::Mse, Some(k)) => Ok(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean sample loss over the epoch's batches, before each update.
    pub loss: f64,
    /// Share of samples classified correctly; `None` for regression.
    pub accuracy: Option<f64>,
    /// Wall-clock milliseconds for the epoch.
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub layer_sizes: Vec<usize>,
    pub epochs: Vec<EpochRecord>,
    /// FNV-1a over the final parameters' bit patterns.
    pub checksum: u64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.loss)
    }

    pub fn best_loss(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.loss)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn best_accuracy(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.accuracy)
            .reduce(f64::max)
    }

    /// First epoch whose recorded loss is below `threshold`.
    pub fn epochs_to_loss(&self, threshold: f64) -> Option<usize> {
        self.epochs
            .iter()
            .find(|e| e.loss < threshold)
            .map(|e| e.epoch)
    }

    pub fn epochs_to_accuracy(&self, threshold: f64) -> Option<usize> {
        self.epochs
            .iter()
            .find(|e| e.accuracy.is_some_and(|a| a >= threshold))
            .map(|e| e.epoch)
    }

    pub fn median_epoch_ms(&self) -> f64 {
        let mut ms: Vec<f64> = self.epochs.iter().map(|e| e.ms).collect();
        ms.sort_by(f64::total_cmp);
        ms[ms.len() / 2]
    }
}

pub fn train(config: &TrainConfig) -> Result<TrainReport> {
    train_with(Registry::builtin(), config)
}

/// Seeded, single-threaded training run: the same config always yields the
/// same losses and final checksum.
pub fn train_with(registry: &Registry, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let data = generate_dataset(config.dataset, config.n_samples, config.noise, config.seed)?;
    let mut sizes = vec![data.input_dim()];
    sizes.extend(&config.hidden);
    sizes.push(config.output_dim(data.n_classes)?);
    let mut model = MLPModel::with_registry(registry, &sizes, &config.activation, config.seed)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = match config.batch {
        Batch::Full => data.len(),
        Batch::Size(n) => n.min(data.len()),
    };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        if batch < data.len() {
            order.shuffle(&mut shuffle_rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(batch) {
            let inputs: Vec<Vec<f64>> = chunk.iter().map(|&i| data.inputs[i].clone()).collect();
            let targets: Vec<_> = chunk.iter().map(|&i| data.targets[i].clone()).collect();
            let (loss, grads, c) = batch_loss_and_grads(&model, &inputs, &targets, config.loss)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            correct += c;
            model.sgd_step(&grads, config.learning_rate);
        }
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        epochs.push(EpochRecord {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: data.n_classes.map(|_| correct as f64 / data.len() as f64),
            ms,
        });
    }

    Ok(TrainReport {
        config: config.clone(),
        layer_sizes: sizes,
        epochs,
        checksum: model.checksum(),
    })
}
