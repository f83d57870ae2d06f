use rayon::prelude::*;
use serde::Serialize;

use super::corpus::CorpusSpec;
use super::crest::mean_block_kappa;
use crate::error::{Error, Result};
use crate::quant::{Quantizer, RotationSpec};
use crate::theory::FormatPair;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSample {
    pub tensor_id: usize,
    /// Mean block crest factor of the tensor as quantized (after rotation).
    pub kappa: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub qsnr_int: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub qsnr_fp: f64,
    /// Mean `s'/s` realized by the INT format's scales.
    pub rho_int: f64,
    pub rho_fp: f64,
}

/// Tensor-wise QSNR of an INT/FP pair over a corpus. Win/loss/tie are from
/// the INT format's point of view.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub int_format: String,
    pub fp_format: String,
    pub corpus: CorpusSpec,
    pub rotation: Option<RotationSpec>,
    pub samples: Vec<McSample>,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub mean_qsnr_int: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub mean_qsnr_fp: f64,
    pub mean_kappa: f64,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub win_rate: f64,
    pub loss_rate: f64,
    pub tie_rate: f64,
}

impl McReport {
    /// `(win_rate + loss_rate) + tie_rate`, which is exactly 1 by construction.
    pub fn rate_sum(&self) -> f64 {
        (self.win_rate + self.loss_rate) + self.tie_rate
    }
}

/// Quantizes every corpus tensor with both formats along the last axis.
pub fn mc_qsnr_scatter(pair: &FormatPair, corpus: &CorpusSpec, rotation: Option<&RotationSpec>) -> Result<McReport> {
    corpus.validate()?;
    if pair.int.block_size != pair.fp.block_size {
        return Err(Error::config(format!(
            "{} and {} use different block sizes",
            pair.int.name, pair.fp.name
        )));
    }
    let qi = Quantizer::new(&pair.int)?.with_rotation(rotation)?;
    let qf = Quantizer::new(&pair.fp)?.with_rotation(rotation)?;
    let g = pair.int.block_size as isize;
    let samples = (0..corpus.tensors)
        .into_par_iter()
        .map(|i| {
            let t = corpus.tensor(i)?;
            let ri = qi.quantize(&t, -1)?;
            let rf = qf.quantize(&t, -1)?;
            Ok(McSample {
                tensor_id: i,
                kappa: mean_block_kappa(&t, -1, g, rotation)?,
                qsnr_int: ri.qsnr_db,
                qsnr_fp: rf.qsnr_db,
                rho_int: ri.mean_rho().unwrap_or(1.0),
                rho_fp: rf.mean_rho().unwrap_or(1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = samples.len() as f64;
    let mean = |f: fn(&McSample) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let wins = samples.iter().filter(|s| s.qsnr_int > s.qsnr_fp).count();
    let losses = samples.iter().filter(|s| s.qsnr_int < s.qsnr_fp).count();
    let ties = samples.len() - wins - losses;
    let win_rate = wins as f64 / n;
    let loss_rate = losses as f64 / n;
    Ok(McReport {
        int_format: pair.int.name.clone(),
        fp_format: pair.fp.name.clone(),
        corpus: corpus.clone(),
        rotation: rotation.copied(),
        mean_qsnr_int: mean(|s| s.qsnr_int),
        mean_qsnr_fp: mean(|s| s.qsnr_fp),
        mean_kappa: mean(|s| s.kappa),
        wins,
        losses,
        ties,
        win_rate,
        loss_rate,
        tie_rate: 1.0 - (win_rate + loss_rate),
        samples,
    })
}
