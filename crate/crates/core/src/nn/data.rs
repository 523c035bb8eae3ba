use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    Xor,
    TwoMoons,
    Spiral,
    SineRegression,
}

impl DatasetName {
    pub fn name(self) -> &'static str {
        match self {
            DatasetName::Xor => "xor",
            DatasetName::TwoMoons => "two_moons",
            DatasetName::Spiral => "spiral",
            DatasetName::SineRegression => "sine_regression",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "xor" => Ok(DatasetName::Xor),
            "two_moons" | "moons" => Ok(DatasetName::TwoMoons),
            "spiral" | "spirals" => Ok(DatasetName::Spiral),
            "sine_regression" | "sine" => Ok(DatasetName::SineRegression),
            _ => Err(Error::config(format!("unknown dataset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    Values(Vec<f64>),
}

impl Target {
    /// The target as a vector of `n` numbers: a single-unit output gets the
    /// class index itself, wider outputs get a one-hot vector.
    pub fn dense(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Target::Class(c) if n == 1 => Ok(vec![*c as f64]),
            Target::Class(c) if *c < n => {
                let mut v = vec![0.0; n];
                v[*c] = 1.0;
                Ok(v)
            }
            Target::Values(v) if v.len() == n => Ok(v.clone()),
            _ => Err(Error::config(format!(
                "target {self:?} does not fit {n} outputs"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: DatasetName,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Target>,
    /// `None` for regression.
    pub n_classes: Option<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n).map(move |i| lo + i as f64 * step)
}

/// Build a synthetic dataset. `n` is ignored for `xor`; every other generator
/// is seeded and adds `noise`-scaled standard normal jitter.
pub fn generate_dataset(name: DatasetName, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::config(format!("need at least 4 samples, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::config(format!(
            "noise must be finite and non-negative, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = move || noise * rng.sample::<f64, _>(StandardNormal);

    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let n_classes = match name {
        DatasetName::Xor => {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                inputs.push(vec![a, b]);
                targets.push(Target::Class(usize::from(a != b)));
            }
            Some(2)
        }
        DatasetName::TwoMoons => {
            // upper half circle centred at the origin, lower half circle
            // centred at (1, 0.5); both radius 1
            let upper = n / 2;
            for t in linspace(0.0, PI, upper) {
                inputs.push(vec![t.cos() + jitter(), t.sin() + jitter()]);
                targets.push(Target::Class(0));
            }
            for t in linspace(0.0, PI, n - upper) {
                inputs.push(vec![1.0 - t.cos() + jitter(), 0.5 - t.sin() + jitter()]);
                targets.push(Target::Class(1));
            }
            Some(2)
        }
        DatasetName::Spiral => {
            // r = s, theta = 4 pi s + k pi: two turns per arm
            let per_arm = [n / 2, n - n / 2];
            for (k, &m) in per_arm.iter().enumerate() {
                for i in 0..m {
                    let s = (i + 1) as f64 / m as f64;
                    let theta = 4.0 * PI * s + k as f64 * PI;
                    inputs.push(vec![s * theta.cos() + jitter(), s * theta.sin() + jitter()]);
                    targets.push(Target::Class(k));
                }
            }
            Some(2)
        }
        DatasetName::SineRegression => {
            for x in linspace(0.0, 1.0, n) {
                inputs.push(vec![x]);
                targets.push(Target::Values(vec![(2.0 * PI * x).sin() + jitter()]));
            }
            None
        }
    };
    Ok(Dataset {
        name,
        inputs,
        targets,
        n_classes,
    })
}
