//! Measurements on concrete data: QSNR, crest factors, Monte-Carlo sweeps
//! over seeded Gaussian corpora, and low-precision rounding experiments.

mod corpus;
mod crest;
mod montecarlo;
pub mod precision;
mod stability;

pub use corpus::{CorpusSpec, OutlierSpec};
pub use crest::{
    block_crest, block_kappas, corpus_crest_stats, crest_factor_stats, mean_block_kappa, BlockCrest, CrestStats,
    KappaSamples, PER_CHANNEL,
};
pub use montecarlo::{mc_qsnr_scatter, McReport, McSample};
pub use precision::{emulate_precision, PrecisionKind, ScaleArithmetic};
pub use stability::{stability_experiment, StabilityReport};

use crate::error::{Error, Result};
use crate::quant::Tensor;

/// `−10·log10(‖x − x_q‖² / ‖x‖²)`; `+inf` when the two are identical.
pub fn measure_qsnr(original: &Tensor, quantized: &Tensor) -> Result<f64> {
    if original.shape() != quantized.shape() {
        return Err(Error::shape(format!(
            "cannot compare shapes {:?} and {:?}",
            original.shape(),
            quantized.shape()
        )));
    }
    qsnr_slices(original.data(), quantized.data())
}

pub(crate) fn qsnr_slices(original: &[f64], quantized: &[f64]) -> Result<f64> {
    let (mut signal, mut noise) = (0.0, 0.0);
    for (x, q) in original.iter().zip(quantized) {
        signal += x * x;
        noise += (x - q) * (x - q);
    }
    if signal == 0.0 {
        return Err(Error::UndefinedQsnr);
    }
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * (noise / signal).log10())
}
