//! Emulation and analysis of fine-grained block quantization formats.
//!
//! * [`formats`]: element and scale formats, codebooks, the format registry
//! * [`quant`]: block scaling, quantize/dequantize, Hadamard rotation, linear-layer simulation
//! * [`theory`]: closed-form QSNR under a Gaussian model and INT/FP crossover points
//! * [`empirics`]: measured QSNR, crest factors, Monte-Carlo sweeps, low-precision rounding
//! * [`hwcost`]: gate-level area/energy of MAC arrays
//! * [`io`]: the `FTNSR1` tensor file format
//! * [`cli`]: the `fmtlab` command line

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod empirics;
pub mod error;
pub mod formats;
pub mod hwcost;
pub mod io;
mod jsonfmt;
pub mod quant;
pub mod theory;

pub use error::{Error, Result};
pub use formats::{lookup_format, FormatSpec};
pub use quant::{quantize_tensor, Tensor};
