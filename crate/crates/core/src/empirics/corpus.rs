use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::Tensor;

/// One large value planted per block of the last axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub block_size: usize,
    /// Outlier magnitude in units of the Gaussian standard deviation.
    pub magnitude: f64,
}

/// A seeded corpus of i.i.d. standard normal matrices.
///
/// Tensor `i` is drawn from its own ChaCha8 stream, so any tensor can be
/// regenerated on its own and results do not depend on visiting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub tensors: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<OutlierSpec>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            tensors: 512,
            rows: 64,
            cols: 4096,
            seed: 0,
            outliers: None,
        }
    }
}

impl CorpusSpec {
    pub fn new(tensors: usize, rows: usize, cols: usize, seed: u64) -> Self {
        CorpusSpec {
            tensors,
            rows,
            cols,
            seed,
            outliers: None,
        }
    }

    pub fn with_outliers(mut self, block_size: usize, magnitude: f64) -> Self {
        self.outliers = Some(OutlierSpec { block_size, magnitude });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tensors == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::config(format!(
                "corpus needs positive tensors/rows/cols, got {}x{}x{}",
                self.tensors, self.rows, self.cols
            )));
        }
        if let Some(o) = &self.outliers {
            if o.block_size == 0 || !self.cols.is_multiple_of(o.block_size) {
                return Err(Error::shape(format!(
                    "outlier block size {} does not divide {} columns",
                    o.block_size, self.cols
                )));
            }
        }
        Ok(())
    }

    /// Parses `ROWSxCOLS`.
    pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
        let bad = || Error::config(format!("shape must look like 64x4096, got `{s}`"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok((
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    }

    pub fn tensor(&self, index: usize) -> Result<Tensor> {
        self.validate()?;
        if index >= self.tensors {
            return Err(Error::config(format!(
                "tensor {index} out of range ({} tensors)",
                self.tensors
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let mut data: Vec<f64> = (0..self.rows * self.cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        if let Some(o) = &self.outliers {
            for block in data.chunks_exact_mut(o.block_size) {
                let pos = rng.random_range(0..o.block_size);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                block[pos] = sign * o.magnitude;
            }
        }
        Tensor::new(vec![self.rows, self.cols], data)
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<Tensor>> + '_ {
        (0..self.tensors).map(|i| self.tensor(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensors_are_independent_and_reproducible() {
        let c = CorpusSpec::new(3, 4, 32, 42);
        let a = c.tensor(1).unwrap();
        assert_eq!(a, c.tensor(1).unwrap());
        assert_ne!(a, c.tensor(2).unwrap());
        assert_ne!(a, CorpusSpec::new(3, 4, 32, 43).tensor(1).unwrap());
        assert!(c.tensor(3).is_err());
    }

    #[test]
    fn outliers_are_planted_per_block() {
        let c = CorpusSpec::new(1, 2, 64, 0).with_outliers(32, 10.0);
        let t = c.tensor(0).unwrap();
        for block in t.data().chunks(32) {
            assert_eq!(block.iter().filter(|v| v.abs() == 10.0).count(), 1);
        }
        assert!(CorpusSpec::new(1, 2, 60, 0).with_outliers(32, 10.0).tensor(0).is_err());
    }

    #[test]
    fn shape_parsing() {
        assert_eq!(CorpusSpec::parse_shape("64x4096").unwrap(), (64, 4096));
        assert!(CorpusSpec::parse_shape("64*4096").is_err());
    }
}
