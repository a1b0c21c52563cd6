//! Gaussian dequantization of class labels.
//!
//! Class `k` is encoded as `k + sigma·e` with `e` standard normal, giving one
//! narrow Gaussian mode per class at unit spacing. Decoding picks the nearest
//! mode centre.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DequantSpec {
    pub n_classes: usize,
    pub sigma: f64,
}

impl DequantSpec {
    pub fn new(n_classes: usize, sigma: f64) -> Result<Self> {
        let spec = Self { n_classes, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_classes(n_classes: usize) -> Result<Self> {
        Self::new(n_classes, DEFAULT_SIGMA)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two classes, got {}",
                self.n_classes
            )));
        }
        // unit spacing: three sigma must fit within half the gap
        if !(self.sigma >= 0.0 && self.sigma < 0.5 / 3.0) {
            return Err(Error::InvalidParameter(format!(
                "mode sigma {} must lie in [0, 1/6)",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Centre of mode `k`.
    pub fn center(&self, k: usize) -> f64 {
        k as f64
    }

    pub fn encode<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<f64> {
        if k >= self.n_classes {
            return invalid(format!("class {k} out of range for {} classes", self.n_classes));
        }
        let e: f64 = rng.sample(StandardNormal);
        Ok(self.center(k) + self.sigma * e)
    }

    /// Nearest centre, clipped to the valid classes; midpoints round up.
    pub fn decode(&self, x: f64) -> usize {
        let top = (self.n_classes - 1) as f64;
        if x.is_nan() {
            return 0;
        }
        (x + 0.5).floor().clamp(0.0, top) as usize
    }

    /// Parses a class label such as `2` or `2.0`.
    pub fn class_of(&self, v: f64) -> Result<usize> {
        if v.fract() != 0.0 || v < 0.0 || v >= self.n_classes as f64 {
            return Err(Error::Schema(format!(
                "value {v} is not a class label in 0..{}",
                self.n_classes
            )));
        }
        Ok(v as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_sigma_encodes_exactly() {
        let spec = DequantSpec::new(3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(spec.encode(0, &mut rng).unwrap(), 0.0);
        assert_eq!(spec.encode(2, &mut rng).unwrap(), 2.0);
    }

    #[test]
    fn encoded_moments() {
        let spec = DequantSpec::with_classes(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.encode(2, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 2.0).abs() < 0.01);
        assert!((sd - 0.1).abs() < 0.01);
    }

    #[test]
    fn decode_examples() {
        let spec = DequantSpec::with_classes(4).unwrap();
        assert_eq!(spec.decode(2.3), 2);
        assert_eq!(spec.decode(-5.0), 0);
        assert_eq!(spec.decode(99.0), 3);
        assert_eq!(spec.decode(1.5), 2);
        assert_eq!(spec.decode(1.4999), 1);
    }

    #[test]
    fn invalid_specs_and_classes() {
        assert!(DequantSpec::new(1, 0.1).is_err());
        assert!(DequantSpec::new(3, 0.2).is_err());
        let spec = DequantSpec::with_classes(3).unwrap();
        assert!(spec.encode(3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(spec.class_of(1.5).is_err());
        assert!(spec.class_of(3.0).is_err());
        assert_eq!(spec.class_of(2.0).unwrap(), 2);
    }

    #[test]
    fn expected_encoding_increases_with_class() {
        let spec = DequantSpec::with_classes(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let means: Vec<f64> = (0..5)
            .map(|k| (0..2000).map(|_| spec.encode(k, &mut rng).unwrap()).sum::<f64>() / 2000.0)
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]));
    }
}
