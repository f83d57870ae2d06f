//! Block quantize/dequantize for INT and FP element formats.
//!
//! A tensor is cut into `1 × g` blocks along one axis (the GEMM reduction
//! axis). Each block gets its own scale `s'` according to the format's
//! [`ScaleMode`], then every element is mapped to the nearest representable
//! code of the element format: `clip(round(x / s'), q_min, q_max)` for INT,
//! nearest codebook value for FP. Rounding is half-to-even in both cases.
//! An optional randomized Hadamard rotation is applied to each block before
//! scaling and undone after dequantization.

mod linear;
pub mod rotation;
pub mod scale;
mod tensor;

use rayon::prelude::*;
use serde::Serialize;

pub use linear::{linear_layer_sim, LinearSimConfig, LinearSimReport, Site, SiteReport};
pub use rotation::{hadamard_matrix, Rotation, RotationSpec};
pub use scale::{absmax_scale, e4m3_two_level_scales, ue8m0_round_down, ue8m0_round_up, BlockScale, TwoLevelScales};
pub use tensor::Tensor;

use crate::empirics::measure_qsnr;
use crate::empirics::precision::ScaleArithmetic;
use crate::error::{Error, Result};
use crate::formats::{build_codebook, Codebook, ElementFormat, FormatSpec, ScaleMode};

/// Element grid a block is snapped onto.
#[derive(Debug, Clone)]
enum Grid {
    Int { q_min: i32, q_max: i32 },
    Fp(Codebook),
}

impl Grid {
    #[inline]
    fn snap(&self, scaled: f64) -> (i32, f64) {
        match self {
            Grid::Int { q_min, q_max } => {
                let c = scaled.round_ties_even().clamp(f64::from(*q_min), f64::from(*q_max));
                (c as i32, c)
            }
            Grid::Fp(cb) => {
                let code = cb.nearest_code(scaled);
                (code, cb.decode(code))
            }
        }
    }
}

/// Quantized form of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockQuant {
    /// INT codes, or signed codebook indices for FP formats.
    pub codes: Vec<i32>,
    pub dequantized: Vec<f64>,
}

/// Result of quantizing a whole tensor.
#[derive(Debug, Clone, Serialize)]
pub struct QuantResult {
    pub dequantized: Tensor,
    /// One scale per block, in line-major order.
    pub scales: Vec<BlockScale>,
    /// Per-element codes in the same order as `scales`' blocks, when retained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codes: Option<Vec<i32>>,
    /// Tensor QSNR in dB; `+inf` when the reconstruction is exact.
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub qsnr_db: f64,
    pub axis: usize,
    pub block_size: usize,
    /// Second-level scale for two-level formats.
    pub tensor_scale: Option<f64>,
}

impl QuantResult {
    /// Mean of `s'/s` over all non-zero blocks.
    pub fn mean_rho(&self) -> Option<f64> {
        let rhos: Vec<f64> = self.scales.iter().filter_map(BlockScale::rho).collect();
        (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64)
    }
}

/// A format prepared for repeated quantization.
#[derive(Debug, Clone)]
pub struct Quantizer {
    spec: FormatSpec,
    grid: Grid,
    rotation: Option<Rotation>,
    arithmetic: ScaleArithmetic,
    keep_codes: bool,
}

impl Quantizer {
    pub fn new(spec: &FormatSpec) -> Result<Self> {
        let grid = match &spec.element {
            ElementFormat::Int(l) => Grid::Int {
                q_min: l.q_min(),
                q_max: l.q_max(),
            },
            ElementFormat::Fp(l) => Grid::Fp(build_codebook(l)?),
        };
        Ok(Quantizer {
            spec: spec.clone(),
            grid,
            rotation: None,
            arithmetic: ScaleArithmetic::Exact,
            keep_codes: false,
        })
    }

    pub fn with_rotation(mut self, rotation: Option<&RotationSpec>) -> Result<Self> {
        self.rotation = rotation.map(Rotation::new).transpose()?;
        Ok(self)
    }

    /// Rounds scale computation and the scaled values to a lower working
    /// precision before the final integer/codebook rounding.
    pub fn with_scale_arithmetic(mut self, arithmetic: ScaleArithmetic) -> Self {
        self.arithmetic = arithmetic;
        self
    }

    pub fn keep_codes(mut self, keep: bool) -> Self {
        self.keep_codes = keep;
        self
    }

    pub fn spec(&self) -> &FormatSpec {
        &self.spec
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        match &self.grid {
            Grid::Fp(cb) => Some(cb),
            Grid::Int { .. } => None,
        }
    }

    /// Maps a value already divided by its scale onto the element grid.
    /// Returns the code and the grid value.
    #[inline]
    pub fn snap(&self, scaled: f64) -> (i32, f64) {
        self.grid.snap(scaled)
    }

    /// Scale for a block under this format, given the tensor's second-level
    /// scale (ignored by single-level modes).
    pub fn block_scale(&self, block: &[f64], tensor_scale: f64) -> Result<BlockScale> {
        let m = scale::absmax(block)?;
        Ok(scale::compute_block_scale(
            m,
            self.spec.q_ref(),
            self.spec.scale_mode,
            tensor_scale,
            self.arithmetic,
        ))
    }

    /// Quantizes one block with a precomputed scale.
    pub fn quantize_block(&self, block: &[f64], scale: &BlockScale) -> Result<BlockQuant> {
        if !(scale.value > 0.0) {
            return Err(Error::config(format!(
                "block scale must be positive, got {}",
                scale.value
            )));
        }
        let mut codes = Vec::with_capacity(block.len());
        let mut dequantized = Vec::with_capacity(block.len());
        for &x in block {
            if !x.is_finite() {
                return Err(Error::data(format!("non-finite value {x} in block")));
            }
            let scaled = self.arithmetic.round(self.arithmetic.round(x) / scale.value);
            let (code, v) = self.grid.snap(scaled);
            codes.push(code);
            dequantized.push(v * scale.value);
        }
        Ok(BlockQuant { codes, dequantized })
    }

    /// Quantizes `tensor` in blocks along `axis` (negative values count from the end).
    pub fn quantize(&self, tensor: &Tensor, axis: isize) -> Result<QuantResult> {
        let axis = tensor.resolve_axis(axis)?;
        let g = self.spec.block_size;
        let len = tensor.shape()[axis];
        if !len.is_multiple_of(g) {
            return Err(Error::shape(format!(
                "axis {axis} has length {len}, which is not a multiple of the block size {g}"
            )));
        }
        if let Some(r) = &self.rotation {
            if !len.is_multiple_of(r.dim()) {
                return Err(Error::shape(format!(
                    "rotation dimension {} does not divide axis length {len}",
                    r.dim()
                )));
            }
        }

        let mut lines = tensor.lines(axis);
        if let Some(r) = &self.rotation {
            lines.par_iter_mut().for_each(|l| r.rotate_blocks(l));
        }

        let tensor_scale = match self.spec.scale_mode {
            ScaleMode::E4m3TwoLevel => {
                let m = lines
                    .iter()
                    .map(|l| scale::absmax(l))
                    .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))?;
                Some(scale::nv_tensor_scale(self.arithmetic.round(m), self.spec.q_ref()))
            }
            _ => None,
        };

        let per_line: Vec<(Vec<f64>, Vec<BlockScale>, Vec<i32>)> = lines
            .par_iter()
            .map(|line| {
                let mut deq = Vec::with_capacity(line.len());
                let mut scales = Vec::with_capacity(line.len() / g);
                let mut codes = Vec::with_capacity(if self.keep_codes { line.len() } else { 0 });
                for block in line.chunks_exact(g) {
                    let s = self.block_scale(block, tensor_scale.unwrap_or(1.0))?;
                    let q = self.quantize_block(block, &s)?;
                    deq.extend_from_slice(&q.dequantized);
                    if self.keep_codes {
                        codes.extend_from_slice(&q.codes);
                    }
                    scales.push(s);
                }
                if let Some(r) = &self.rotation {
                    r.unrotate_blocks(&mut deq);
                }
                Ok((deq, scales, codes))
            })
            .collect::<Result<_>>()?;

        let mut deq_lines = Vec::with_capacity(per_line.len());
        let mut scales = Vec::new();
        let mut codes = self.keep_codes.then(Vec::new);
        for (d, s, c) in per_line {
            deq_lines.push(d);
            scales.extend(s);
            if let Some(all) = codes.as_mut() {
                all.extend(c);
            }
        }
        let dequantized = tensor.reassemble_lines(axis, &deq_lines);
        let qsnr_db = tensor_qsnr(tensor, &dequantized);
        Ok(QuantResult {
            dequantized,
            scales,
            codes,
            qsnr_db,
            axis,
            block_size: g,
            tensor_scale,
        })
    }
}

/// QSNR that treats an exact reconstruction (including an all-zero tensor) as `+inf`.
pub(crate) fn tensor_qsnr(original: &Tensor, quantized: &Tensor) -> f64 {
    if original.data() == quantized.data() {
        return f64::INFINITY;
    }
    measure_qsnr(original, quantized).unwrap_or(f64::NAN)
}

/// Quantizes `tensor` with `spec` along `axis`, optionally rotating each block first.
pub fn quantize_tensor(
    tensor: &Tensor,
    spec: &FormatSpec,
    axis: isize,
    rotation: Option<&RotationSpec>,
) -> Result<QuantResult> {
    Quantizer::new(spec)?.with_rotation(rotation)?.quantize(tensor, axis)
}

/// Quantizes a single block with an explicit scale.
pub fn quantize_block(block: &[f64], spec: &FormatSpec, scale: &BlockScale) -> Result<BlockQuant> {
    Quantizer::new(spec)?.quantize_block(block, scale)
}
