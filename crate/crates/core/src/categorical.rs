//! Categorical variables under the Gödel Trick.
//!
//! A categorical variable with class scores `z` is sampled by perturbing every score,
//! translating by the midpoint of the two largest entries, and taking signs. Exactly one
//! entry ends up positive, so the signed vector is a one-hot code over `{-1, +1}`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseModel;
use crate::sign::Sign;

#[derive(Debug, Error, PartialEq)]
pub enum CategoricalError {
    #[error("a categorical variable needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("class score {index} is not finite")]
    NonFinite { index: usize },
    #[error("entry {index} is {value}, expected -1 or +1")]
    NotSigned { index: usize, value: i8 },
    #[error("entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("noise has {found} entries for {expected} classes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("categorical sampling needs a noise model")]
    Noiseless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CategoricalLogits(Vec<f64>);

impl CategoricalLogits {
    pub fn new(z: Vec<f64>) -> Result<CategoricalLogits, CategoricalError> {
        if z.len() < 2 {
            return Err(CategoricalError::TooFewClasses(z.len()));
        }
        if let Some(index) = z.iter().position(|x| !x.is_finite()) {
            return Err(CategoricalError::NonFinite { index });
        }
        Ok(CategoricalLogits(z))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for CategoricalLogits {
    type Error = CategoricalError;
    fn try_from(z: Vec<f64>) -> Result<Self, CategoricalError> {
        CategoricalLogits::new(z)
    }
}

impl From<CategoricalLogits> for Vec<f64> {
    fn from(z: CategoricalLogits) -> Vec<f64> {
        z.0
    }
}

/// Indices of the largest and second largest entries. Ties go to the lowest index.
pub fn top_two(x: &[f64]) -> Result<(usize, usize), CategoricalError> {
    if x.len() < 2 {
        return Err(CategoricalError::TooFewClasses(x.len()));
    }
    let (mut i, mut j) = if x[1] > x[0] { (1, 0) } else { (0, 1) };
    for (k, &v) in x.iter().enumerate().skip(2) {
        if v > x[i] {
            j = i;
            i = k;
        } else if v > x[j] {
            j = k;
        }
    }
    Ok((i, j))
}

/// Writes `x - (x_i + x_j) / 2` into `out`, where `i`, `j` are the top two indices, and
/// returns `i`.
///
/// When the top two are exactly equal the raw result has no positive entry; entry `i`
/// is then set to `+EPSILON` and entry `j` to `-EPSILON`.
pub fn shift_into(x: &[f64], out: &mut Vec<f64>) -> Result<usize, CategoricalError> {
    let (i, j) = top_two(x)?;
    let mid = x[i] / 2.0 + x[j] / 2.0;
    out.clear();
    out.extend(x.iter().map(|&v| v - mid));
    if out[i] <= 0.0 || out[i].is_nan() {
        out[i] = f64::EPSILON;
        out[j] = -f64::EPSILON;
    }
    Ok(i)
}

pub fn shift(x: &[f64]) -> Result<Vec<f64>, CategoricalError> {
    let mut out = Vec::with_capacity(x.len());
    shift_into(x, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSample {
    pub signed: Vec<Sign>,
    pub argmax: usize,
}

/// `sign(shift(z + eps))` for a given noise vector.
pub fn categorical_gt_sample_with_noise(
    z: &CategoricalLogits,
    eps: &[f64],
) -> Result<CategoricalSample, CategoricalError> {
    if eps.len() != z.k() {
        return Err(CategoricalError::LengthMismatch { expected: z.k(), found: eps.len() });
    }
    let perturbed: Vec<f64> = z.0.iter().zip(eps).map(|(a, b)| a + b).collect();
    let shifted = shift(&perturbed)?;
    let signed: Vec<Sign> = shifted.iter().map(|&v| Sign::of(v)).collect();
    let argmax = signed.iter().position(|s| s.is_pos()).expect("shift leaves one positive entry");
    Ok(CategoricalSample { signed, argmax })
}

/// Draws fresh noise for every class and samples.
pub fn categorical_gt_sample<R: Rng + ?Sized>(
    z: &CategoricalLogits,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<CategoricalSample, CategoricalError> {
    if model.is_none() {
        return Err(CategoricalError::Noiseless);
    }
    let mut eps = vec![0.0; z.k()];
    model.fill(rng, &mut eps);
    categorical_gt_sample_with_noise(z, &eps)
}

/// `argmax(z + eps)`, lowest index on ties: the Gumbel-Max sample when `eps` is Gumbel.
pub fn perturbed_argmax(z: &CategoricalLogits, eps: &[f64]) -> Result<usize, CategoricalError> {
    if eps.len() != z.k() {
        return Err(CategoricalError::LengthMismatch { expected: z.k(), found: eps.len() });
    }
    let perturbed: Vec<f64> = z.0.iter().zip(eps).map(|(a, b)| a + b).collect();
    Ok(top_two(&perturbed)?.0)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Maps `-1 -> 0` and `+1 -> 1`.
pub fn rescale_pm1_to_01(v: &[i8]) -> Result<Vec<u8>, CategoricalError> {
    v.iter()
        .enumerate()
        .map(|(index, &value)| match value {
            -1 => Ok(0),
            1 => Ok(1),
            _ => Err(CategoricalError::NotSigned { index, value }),
        })
        .collect()
}

/// Maps `0 -> -1` and `1 -> +1`.
pub fn rescale_01_to_pm1(v: &[u8]) -> Result<Vec<i8>, CategoricalError> {
    v.iter()
        .enumerate()
        .map(|(index, &value)| match value {
            0 => Ok(-1),
            1 => Ok(1),
            _ => Err(CategoricalError::NotBinary { index, value }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(v: &[f64]) -> CategoricalLogits {
        CategoricalLogits::new(v.to_vec()).unwrap()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift(&[2.0, 5.0, -1.0]).unwrap(), vec![-1.5, 1.5, -4.5]);
        assert_eq!(shift(&[0.3, -0.3]).unwrap(), vec![0.3, -0.3]);
        assert_eq!(shift(&[1.0]), Err(CategoricalError::TooFewClasses(1)));
    }

    #[test]
    fn degenerate_tie() {
        assert_eq!(shift(&[0.7, 0.7]).unwrap(), vec![f64::EPSILON, -f64::EPSILON]);
        assert_eq!(top_two(&[1.0, 3.0, 3.0, 3.0]).unwrap(), (1, 2));
        let out = shift(&[-2.0, 3.0, 3.0]).unwrap();
        assert_eq!(out, vec![-5.0, f64::EPSILON, -f64::EPSILON]);
    }

    #[test]
    fn shift_preserves_order() {
        let x = [0.4, -1.2, 3.3, 2.9, 0.0];
        let y = shift(&x).unwrap();
        for a in 0..x.len() {
            for b in 0..x.len() {
                assert_eq!(x[a] < x[b], y[a] < y[b]);
            }
        }
    }

    #[test]
    fn uniform_scores_sample_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zz = z(&[0.0, 0.0, 0.0]);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let s = categorical_gt_sample(&zz, &NoiseModel::STANDARD_LOGISTIC, &mut rng).unwrap();
            assert_eq!(s.signed.iter().filter(|x| x.is_pos()).count(), 1);
            counts[s.argmax] += 1;
        }
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 3.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn gumbel_matches_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zz = z(&[2f64.ln(), 0.0, 0.0]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| categorical_gt_sample(&zz, &NoiseModel::STANDARD_GUMBEL, &mut rng).unwrap().argmax == 0)
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((hits as f64 - 0.5 * n as f64).abs() <= 3.0 * sigma, "{hits}");
        assert_eq!(softmax(zz.as_slice())[0], 0.5);
    }

    #[test]
    fn dominant_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let zz = z(&[0.0, 1000.0, 0.0, -3.0]);
        for _ in 0..1000 {
            assert_eq!(categorical_gt_sample(&zz, &NoiseModel::STANDARD_GUMBEL, &mut rng).unwrap().argmax, 1);
        }
        assert_eq!(categorical_gt_sample(&zz, &NoiseModel::None, &mut rng), Err(CategoricalError::Noiseless));
    }

    #[test]
    fn rescaling() {
        assert_eq!(rescale_pm1_to_01(&[-1, 1, -1]).unwrap(), vec![0, 1, 0]);
        assert_eq!(rescale_pm1_to_01(&[-1; 4]).unwrap(), vec![0; 4]);
        assert_eq!(rescale_01_to_pm1(&rescale_pm1_to_01(&[1, -1, 1]).unwrap()).unwrap(), vec![1, -1, 1]);
        assert_eq!(rescale_pm1_to_01(&rescale_01_to_pm1(&[0, 0, 1]).unwrap()).unwrap(), vec![0, 0, 1]);
        assert_eq!(rescale_pm1_to_01(&[1, 0]), Err(CategoricalError::NotSigned { index: 1, value: 0 }));
        assert!(rescale_01_to_pm1(&[2]).is_err());
    }
}
