//! Quantized forward and backward GEMMs of one linear layer.
//!
//! With `Y = X·W` (`X: m×k`, `W: k×n`, `dY: m×n`), every GEMM operand is
//! quantized along that GEMM's reduction dimension:
//!
//! | site | operand | GEMM            | blocked along |
//! |------|---------|-----------------|---------------|
//! | 1    | X       | `Y = X·W`       | k (axis 1)    |
//! | 2    | W       | `Y = X·W`       | k (axis 0)    |
//! | 3    | dY      | `dX = dY·Wᵀ`    | n (axis 1)    |
//! | 4    | Wᵀ      | `dX = dY·Wᵀ`    | n (axis 1 of W) |
//! | 5    | Xᵀ      | `dW = Xᵀ·dY`    | m (axis 0 of X) |
//! | 6    | dYᵀ     | `dW = Xᵀ·dY`    | m (axis 0)    |

use serde::{Deserialize, Serialize};

use super::{Quantizer, RotationSpec, Tensor};
use crate::empirics::precision::ScaleArithmetic;
use crate::empirics::{mean_block_kappa, measure_qsnr};
use crate::error::{Error, Result};
use crate::formats::FormatSpec;
use crate::theory::predict_qsnr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    X,
    W,
    Dy,
    Wt,
    Xt,
    Dyt,
}

impl Site {
    pub const ALL: [Site; 6] = [Site::X, Site::W, Site::Dy, Site::Wt, Site::Xt, Site::Dyt];

    /// 1-based position in the table above.
    pub fn number(self) -> usize {
        Site::ALL.iter().position(|s| *s == self).unwrap() + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Site::X => "X",
            Site::W => "W",
            Site::Dy => "dY",
            Site::Wt => "W^T",
            Site::Xt => "X^T",
            Site::Dyt => "dY^T",
        }
    }

    /// Axis of the stored operand (`X`, `W` or `dY`) that is blocked.
    fn axis(self) -> isize {
        match self {
            Site::X | Site::Dy | Site::Wt => 1,
            Site::W | Site::Xt | Site::Dyt => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSimConfig {
    pub rotation: Option<RotationSpec>,
    /// Which sites rotate when `rotation` is set, indexed like [`Site::ALL`].
    pub rotate_sites: [bool; 6],
    pub scale_arithmetic: ScaleArithmetic,
}

impl Default for LinearSimConfig {
    fn default() -> Self {
        LinearSimConfig {
            rotation: None,
            rotate_sites: [true; 6],
            scale_arithmetic: ScaleArithmetic::Exact,
        }
    }
}

impl LinearSimConfig {
    pub fn with_rotation(mut self, rotation: RotationSpec) -> Self {
        self.rotation = Some(rotation);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteReport {
    pub site: Site,
    pub number: usize,
    pub operand: &'static str,
    pub axis: usize,
    pub rotated: bool,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub qsnr_db: f64,
    /// Mean crest factor of the blocks as quantized.
    pub mean_kappa: f64,
    /// Mean realized scale overhead; absent when every block was zero.
    pub mean_rho: Option<f64>,
    /// Gaussian-model QSNR at `mean_kappa` and the realized overhead.
    pub predicted_qsnr_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearSimReport {
    pub format: String,
    pub sites: Vec<SiteReport>,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub y_qsnr_db: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub dx_qsnr_db: f64,
    #[serde(serialize_with = "crate::jsonfmt::f64_or_token")]
    pub dw_qsnr_db: f64,
}

impl LinearSimReport {
    pub fn site(&self, site: Site) -> &SiteReport {
        &self.sites[site.number() - 1]
    }
}

fn output_qsnr(reference: &Tensor, got: &Tensor) -> Result<f64> {
    if reference.data() == got.data() {
        return Ok(f64::INFINITY);
    }
    measure_qsnr(reference, got)
}

/// Runs all six quantization sites and the three GEMMs on dequantized operands.
pub fn linear_layer_sim(
    x: &Tensor,
    w: &Tensor,
    dy: &Tensor,
    spec: &FormatSpec,
    config: &LinearSimConfig,
) -> Result<LinearSimReport> {
    let (m, k) = x.dims2()?;
    let (k2, n) = w.dims2()?;
    let (m2, n2) = dy.dims2()?;
    if k != k2 || m != m2 || n != n2 {
        return Err(Error::shape(format!(
            "X {:?}, W {:?} and dY {:?} do not conform (need m×k, k×n, m×n)",
            x.shape(),
            w.shape(),
            dy.shape()
        )));
    }

    let plain = Quantizer::new(spec)?.with_scale_arithmetic(config.scale_arithmetic);
    let rotated = plain.clone().with_rotation(config.rotation.as_ref())?;

    let mut sites = Vec::with_capacity(6);
    let mut deq = Vec::with_capacity(6);
    for (i, site) in Site::ALL.into_iter().enumerate() {
        let operand = match site {
            Site::X | Site::Xt => x,
            Site::W | Site::Wt => w,
            Site::Dy | Site::Dyt => dy,
        };
        let rotate = config.rotation.is_some() && config.rotate_sites[i];
        let q = if rotate { &rotated } else { &plain };
        let r = q.quantize(operand, site.axis())?;
        let rot = if rotate { config.rotation.as_ref() } else { None };
        let mean_kappa = mean_block_kappa(operand, site.axis(), spec.block_size as isize, rot)?;
        let mean_rho = r.mean_rho();
        sites.push(SiteReport {
            site,
            number: i + 1,
            operand: site.label(),
            axis: r.axis,
            rotated: rotate,
            qsnr_db: r.qsnr_db,
            mean_kappa,
            mean_rho,
            predicted_qsnr_db: predict_qsnr(spec, mean_kappa, mean_rho),
        });
        deq.push(r.dequantized);
    }

    let y_ref = x.matmul(w)?;
    let dx_ref = dy.matmul(&w.transpose()?)?;
    let dw_ref = x.transpose()?.matmul(dy)?;
    let y = deq[0].matmul(&deq[1])?;
    let dx = deq[2].matmul(&deq[3].transpose()?)?;
    let dw = deq[4].transpose()?.matmul(&deq[5])?;

    Ok(LinearSimReport {
        format: spec.name.clone(),
        sites,
        y_qsnr_db: output_qsnr(&y_ref, &y)?,
        dx_qsnr_db: output_qsnr(&dx_ref, &dx)?,
        dw_qsnr_db: output_qsnr(&dw_ref, &dw)?,
    })
}
