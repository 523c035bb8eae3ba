use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu,
    Elu,
    Swish,
    Mish,
    Aptx,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Sigmoid,
        Kind::Tanh,
        Kind::Relu,
        Kind::LeakyRelu,
        Kind::Elu,
        Kind::Swish,
        Kind::Mish,
        Kind::Aptx,
    ];

    /// Registry key.
    pub fn name(self) -> &'static str {
        match self {
            Kind::Sigmoid => "sigmoid",
            Kind::Tanh => "tanh",
            Kind::Relu => "relu",
            Kind::LeakyRelu => "leaky_relu",
            Kind::Elu => "elu",
            Kind::Swish => "swish",
            Kind::Mish => "mish",
            Kind::Aptx => "aptx",
        }
    }

    /// Kinds with a derivative discontinuity at zero.
    pub fn has_kink(self) -> bool {
        matches!(self, Kind::Relu | Kind::LeakyRelu | Kind::Elu)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let kind = match norm.as_str() {
            "sigmoid" => Kind::Sigmoid,
            "tanh" => Kind::Tanh,
            "relu" => Kind::Relu,
            "leaky_relu" | "leakyrelu" => Kind::LeakyRelu,
            "elu" => Kind::Elu,
            "swish" => Kind::Swish,
            "mish" => Kind::Mish,
            "aptx" => Kind::Aptx,
            _ => return Err(Error::config(format!("unknown activation kind `{s}`"))),
        };
        Ok(kind)
    }
}

/// Which activation to use, and with what parameters.
///
/// Parameters that do not belong to `kind` are carried along but never read
/// during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: Kind,
    /// LeakyReLU slope for `x <= 0`.
    pub leak_alpha: f64,
    /// ELU scale for `x <= 0`.
    pub elu_alpha: f64,
    /// SWISH gate sharpness: `x * sigmoid(rho * x)`.
    pub swish_rho: f64,
    pub aptx_alpha: f64,
    pub aptx_beta: f64,
    pub aptx_gamma: f64,
}

impl ActivationSpec {
    pub const DEFAULT_LEAK_ALPHA: f64 = 0.05;
    pub const DEFAULT_ELU_ALPHA: f64 = 2.0;
    pub const DEFAULT_SWISH_RHO: f64 = 1.0;

    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            leak_alpha: Self::DEFAULT_LEAK_ALPHA,
            elu_alpha: Self::DEFAULT_ELU_ALPHA,
            swish_rho: Self::DEFAULT_SWISH_RHO,
            aptx_alpha: 1.0,
            aptx_beta: 1.0,
            aptx_gamma: 0.5,
        }
    }

    pub fn aptx(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            aptx_alpha: alpha,
            aptx_beta: beta,
            aptx_gamma: gamma,
            ..Self::new(Kind::Aptx)
        }
    }

    pub fn swish(rho: f64) -> Self {
        Self {
            swish_rho: rho,
            ..Self::new(Kind::Swish)
        }
    }

    pub fn leaky_relu(slope: f64) -> Self {
        Self {
            leak_alpha: slope,
            ..Self::new(Kind::LeakyRelu)
        }
    }

    pub fn elu(alpha: f64) -> Self {
        Self {
            elu_alpha: alpha,
            ..Self::new(Kind::Elu)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params = [
            ("leak_alpha", self.leak_alpha),
            ("elu_alpha", self.elu_alpha),
            ("swish_rho", self.swish_rho),
            ("aptx_alpha", self.aptx_alpha),
            ("aptx_beta", self.aptx_beta),
            ("aptx_gamma", self.aptx_gamma),
        ];
        for (name, v) in params {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.kind == Kind::Aptx {
            if self.aptx_beta == 0.0 {
                return Err(Error::config("aptx beta must be non-zero"));
            }
            if self.aptx_gamma == 0.0 {
                return Err(Error::config("aptx gamma must be non-zero"));
            }
        }
        Ok(())
    }

    /// Only the parameters `kind` actually uses, as `(name, value)` pairs.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            Kind::Sigmoid | Kind::Tanh | Kind::Relu | Kind::Mish => vec![],
            Kind::LeakyRelu => vec![("alpha", self.leak_alpha)],
            Kind::Elu => vec![("alpha", self.elu_alpha)],
            Kind::Swish => vec![("rho", self.swish_rho)],
            Kind::Aptx => vec![
                ("alpha", self.aptx_alpha),
                ("beta", self.aptx_beta),
                ("gamma", self.aptx_gamma),
            ],
        }
    }
}

impl Default for ActivationSpec {
    fn default() -> Self {
        Self::new(Kind::Aptx)
    }
}

/// `kind` or `kind:key=value,key=value`, e.g. `aptx:alpha=1,beta=0.5,gamma=0.5`.
impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        let params = self.params();
        for (i, (k, v)) in params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for ActivationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let mut spec = ActivationSpec::new(kind.parse()?);
        for pair in rest
            .into_iter()
            .flat_map(|r| r.split(','))
            .filter(|p| !p.trim().is_empty())
        {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got `{pair}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad number `{value}` for `{key}`")))?;
            let slot = match (spec.kind, key.trim()) {
                (Kind::LeakyRelu, "alpha" | "leak" | "slope") => &mut spec.leak_alpha,
                (Kind::Elu, "alpha") => &mut spec.elu_alpha,
                (Kind::Swish, "rho" | "beta") => &mut spec.swish_rho,
                (Kind::Aptx, "alpha") => &mut spec.aptx_alpha,
                (Kind::Aptx, "beta") => &mut spec.aptx_beta,
                (Kind::Aptx, "gamma") => &mut spec.aptx_gamma,
                (kind, key) => {
                    return Err(Error::config(format!("`{kind}` has no parameter `{key}`")))
                }
            };
            *slot = value;
        }
        spec.validate()?;
        Ok(spec)
    }
}
