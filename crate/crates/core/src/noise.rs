//! Noise distributions for perturbed Gödel interpretations.
//!
//! For noise `eps`, `theta(x) = P(x + eps > 0) = 1 - F(-x)` maps an unperturbed logit to
//! the probability that its perturbed sign is positive.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::sigmoid;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("theta undefined for noiseless model")]
    Noiseless,
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    Probability(f64),
    #[error("invalid noise parameters: {0}")]
    Parameters(String),
    #[error("unknown noise model '{0}' (expected logistic, uniform, gumbel or none)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    None,
    Logistic { scale: f64 },
    Uniform { a: f64, b: f64 },
    Gumbel { scale: f64 },
}

impl NoiseModel {
    pub const STANDARD_LOGISTIC: NoiseModel = NoiseModel::Logistic { scale: 1.0 };
    pub const SYMMETRIC_UNIFORM: NoiseModel = NoiseModel::Uniform { a: -1.0, b: 1.0 };
    pub const STANDARD_GUMBEL: NoiseModel = NoiseModel::Gumbel { scale: 1.0 };

    pub fn validate(&self) -> Result<(), NoiseError> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Logistic { scale } | NoiseModel::Gumbel { scale } => {
                if scale.is_finite() && scale > 0.0 {
                    Ok(())
                } else {
                    Err(NoiseError::Parameters(format!("scale must be positive, got {scale}")))
                }
            }
            NoiseModel::Uniform { a, b } => {
                if a.is_finite() && b.is_finite() && a < b {
                    Ok(())
                } else {
                    Err(NoiseError::Parameters(format!("uniform bounds need a < b, got ({a}, {b})")))
                }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseModel::None)
    }

    /// One draw. Logistic and Gumbel use the inverse CDF of an open-interval uniform.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            NoiseModel::Logistic { scale } => {
                let u = open_unit(rng);
                scale * (u / (1.0 - u)).ln()
            }
            NoiseModel::Gumbel { scale } => {
                let u = open_unit(rng);
                -scale * (-u.ln()).ln()
            }
        }
    }

    /// Fills `out` with independent draws.
    #[inline]
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for slot in out {
            *slot = self.sample(rng);
        }
    }

    /// `theta(x) = 1 - F(-x)`.
    pub fn theta(&self, x: f64) -> Result<f64, NoiseError> {
        Ok(match *self {
            NoiseModel::None => return Err(NoiseError::Noiseless),
            NoiseModel::Logistic { scale } => sigmoid(x / scale),
            NoiseModel::Uniform { a, b } => {
                if x < -b {
                    0.0
                } else if x > -a {
                    1.0
                } else {
                    (x + b) / (b - a)
                }
            }
            // F(x) = exp(-exp(-x/s))
            NoiseModel::Gumbel { scale } => -(-(x / scale).exp()).exp_m1(),
        })
    }

    /// Inverse of [`NoiseModel::theta`] on `(0, 1)`.
    pub fn theta_inv(&self, p: f64) -> Result<f64, NoiseError> {
        if self.is_none() {
            return Err(NoiseError::Noiseless);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(NoiseError::Probability(p));
        }
        Ok(match *self {
            NoiseModel::None => unreachable!(),
            NoiseModel::Logistic { scale } => scale * (p / (1.0 - p)).ln(),
            NoiseModel::Uniform { a, b } => p * (b - a) - b,
            NoiseModel::Gumbel { scale } => scale * (-(-p).ln_1p()).ln(),
        })
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::SYMMETRIC_UNIFORM
    }
}

#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Noise family names, as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Logistic,
    Uniform,
    Gumbel,
}

impl NoiseKind {
    /// Builds a model; `scale` applies to logistic/gumbel, `(a, b)` to uniform.
    pub fn with_params(self, scale: f64, a: f64, b: f64) -> Result<NoiseModel, NoiseError> {
        let model = match self {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Logistic => NoiseModel::Logistic { scale },
            NoiseKind::Uniform => NoiseModel::Uniform { a, b },
            NoiseKind::Gumbel => NoiseModel::Gumbel { scale },
        };
        model.validate()?;
        Ok(model)
    }
}

impl FromStr for NoiseKind {
    type Err = NoiseError;
    fn from_str(s: &str) -> Result<Self, NoiseError> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseKind::None),
            "logistic" => Ok(NoiseKind::Logistic),
            "uniform" => Ok(NoiseKind::Uniform),
            "gumbel" => Ok(NoiseKind::Gumbel),
            _ => Err(NoiseError::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => f.write_str("none"),
            NoiseModel::Logistic { scale } => write!(f, "logistic(scale={scale})"),
            NoiseModel::Uniform { a, b } => write!(f, "uniform({a}, {b})"),
            NoiseModel::Gumbel { scale } => write!(f, "gumbel(scale={scale})"),
        }
    }
}
