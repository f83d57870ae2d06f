use serde::Serialize;

use crate::error::{Error, Result};
use crate::quant::{Rotation, RotationSpec, Tensor};

/// Block size that makes each full channel (line along the axis) one block.
pub const PER_CHANNEL: isize = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCrest {
    pub kappa: f64,
    /// The block had zero RMS; `kappa` was set to 1.
    pub degenerate: bool,
}

/// `max|x| / rms(x)` of one block, at least 1.
pub fn block_crest(block: &[f64]) -> BlockCrest {
    let mut max = 0.0f64;
    let mut energy = 0.0;
    for v in block {
        max = max.max(v.abs());
        energy += v * v;
    }
    if energy == 0.0 {
        return BlockCrest {
            kappa: 1.0,
            degenerate: true,
        };
    }
    let rms = (energy / block.len() as f64).sqrt();
    BlockCrest {
        kappa: (max / rms).max(1.0),
        degenerate: false,
    }
}

/// Per-block crest factors of one tensor.
#[derive(Debug, Clone, Serialize)]
pub struct KappaSamples {
    pub kappas: Vec<f64>,
    pub degenerate_blocks: usize,
}

impl KappaSamples {
    pub fn mean(&self) -> f64 {
        self.kappas.iter().sum::<f64>() / self.kappas.len() as f64
    }
}

fn resolve_block(tensor: &Tensor, axis: usize, block_size: isize) -> Result<usize> {
    let len = tensor.shape()[axis];
    let g = match block_size {
        PER_CHANNEL => len,
        b if b > 0 => b as usize,
        b => return Err(Error::config(format!("block size must be positive or -1, got {b}"))),
    };
    if !len.is_multiple_of(g) {
        return Err(Error::shape(format!(
            "axis {axis} has length {len}, which is not a multiple of the block size {g}"
        )));
    }
    Ok(g)
}

/// Crest factor of every block along `axis`, after an optional block rotation.
pub fn block_kappas(
    tensor: &Tensor,
    axis: isize,
    block_size: isize,
    rotation: Option<&RotationSpec>,
) -> Result<KappaSamples> {
    let axis = tensor.resolve_axis(axis)?;
    let g = resolve_block(tensor, axis, block_size)?;
    let rotation = rotation.map(Rotation::new).transpose()?;
    if let Some(r) = &rotation {
        if !tensor.shape()[axis].is_multiple_of(r.dim()) {
            return Err(Error::shape(format!(
                "rotation dimension {} does not divide axis length {}",
                r.dim(),
                tensor.shape()[axis]
            )));
        }
    }
    let mut kappas = Vec::with_capacity(tensor.len() / g);
    let mut degenerate_blocks = 0;
    for mut line in tensor.lines(axis) {
        if let Some(r) = &rotation {
            r.rotate_blocks(&mut line);
        }
        for block in line.chunks_exact(g) {
            let c = block_crest(block);
            degenerate_blocks += usize::from(c.degenerate);
            kappas.push(c.kappa);
        }
    }
    Ok(KappaSamples {
        kappas,
        degenerate_blocks,
    })
}

/// Mean block crest factor along `axis`.
pub fn mean_block_kappa(
    tensor: &Tensor,
    axis: isize,
    block_size: isize,
    rotation: Option<&RotationSpec>,
) -> Result<f64> {
    Ok(block_kappas(tensor, axis, block_size, rotation)?.mean())
}

/// Boxplot summary of crest factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrestStats {
    /// `-1` for per-channel blocks.
    pub block_size: isize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Number of values summarized (blocks, or tensors for a corpus).
    pub count: usize,
    pub degenerate_blocks: usize,
}

/// Quantile with linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

impl CrestStats {
    fn from_values(block_size: isize, mut v: Vec<f64>, degenerate_blocks: usize) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::data("no crest factors to summarize"));
        }
        v.sort_by(f64::total_cmp);
        Ok(CrestStats {
            block_size,
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
            degenerate_blocks,
        })
    }
}

/// Boxplot over the blocks of a single tensor.
pub fn crest_factor_stats(
    tensor: &Tensor,
    axis: isize,
    block_size: isize,
    rotation: Option<&RotationSpec>,
) -> Result<CrestStats> {
    let s = block_kappas(tensor, axis, block_size, rotation)?;
    CrestStats::from_values(block_size, s.kappas, s.degenerate_blocks)
}

/// Boxplot over per-tensor mean crest factors of a set of tensors.
pub fn corpus_crest_stats<'a>(
    tensors: impl IntoIterator<Item = &'a Tensor>,
    axis: isize,
    block_size: isize,
    rotation: Option<&RotationSpec>,
) -> Result<CrestStats> {
    let mut means = Vec::new();
    let mut degenerate = 0;
    for t in tensors {
        let s = block_kappas(t, axis, block_size, rotation)?;
        degenerate += s.degenerate_blocks;
        means.push(s.mean());
    }
    CrestStats::from_values(block_size, means, degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crest_examples() {
        assert_eq!(block_crest(&[2.0, -2.0, 2.0, -2.0]).kappa, 1.0);
        let mut one_hot = vec![0.0; 32];
        one_hot[5] = -3.0;
        assert!((block_crest(&one_hot).kappa - 32f64.sqrt()).abs() < 1e-12);
        let z = block_crest(&[0.0; 4]);
        assert!(z.degenerate && z.kappa == 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = CrestStats::from_values(4, vec![4.0, 1.0, 3.0, 2.0, 5.0], 0).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let s = CrestStats::from_values(4, vec![1.0, 2.0], 0).unwrap();
        assert_eq!(s.q1, 1.25);
    }

    #[test]
    fn per_channel_blocks() {
        let t = Tensor::from_fn(vec![2, 8], |i| if i % 8 == 0 { 8.0 } else { 0.0 }).unwrap();
        let s = crest_factor_stats(&t, -1, PER_CHANNEL, None).unwrap();
        assert_eq!(s.count, 2);
        assert!((s.median - 8f64.sqrt()).abs() < 1e-12);
        assert!(crest_factor_stats(&t, -1, 3, None).is_err());
        assert!(crest_factor_stats(&t, -1, 0, None).is_err());
    }

    #[test]
    fn degenerate_blocks_are_counted() {
        let t = Tensor::from_fn(vec![1, 8], |i| if i < 4 { 0.0 } else { 1.0 }).unwrap();
        let s = crest_factor_stats(&t, -1, 4, None).unwrap();
        assert_eq!(s.degenerate_blocks, 1);
        assert!(s.min >= 1.0);
    }
}
