//! Closed-form QSNR of block-quantized Gaussian data, and INT/FP crossover solving.
//!
//! All predictors take the block crest factor `κ = max|x| / rms(x)` and, for
//! power-of-two scales, the scale overhead `ρ = s'/s`. Results are in dB.

mod crossover;

pub use crossover::{
    crossover, crossover_kappa, default_bracket, parse_pair, qsnr_curve, standard_pairs, CrossoverResult, CurveRow,
    FormatPair, KappaGrid,
};

use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::formats::{ElementFormat, FormatSpec, FpLayout, ScaleMode};

/// Guard for the normal-element energy term of the two-level FP predictor.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// `10·log10(3·4^b)`, the uniform-noise constant written as `4.78 + 6.02 b`.
fn int_base(b: u32) -> f64 {
    4.78 + 6.02 * f64::from(b)
}

/// INT QSNR under a power-of-two (or exact, `rho = 1`) block scale.
pub fn qsnr_int_ue8m0(b: u32, rho: f64, kappa: f64) -> f64 {
    int_base(b) - 20.0 * rho.log10() - 20.0 * kappa.log10()
}

/// INT QSNR under an E4M3 block scale, crediting the block maximum as error free.
pub fn qsnr_int_e4m3(b: u32, kappa: f64, g: usize) -> f64 {
    let g = g as f64;
    int_base(b) - 20.0 * kappa.log10() + 10.0 * (g / (g - 1.0)).log10()
}

/// Noise-model terms of an FP element format for Gaussian blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpNoiseTerms {
    /// Relative noise of normal elements, `1 / (24 · 4^M)`.
    pub alpha_m: f64,
    /// Subnormal noise relative to `s'²`-normalized power, `4^(1−B−M) / (12 Q²)`.
    pub beta: f64,
    /// Fraction of block energy carried by normal elements.
    pub w_norm: f64,
    /// Probability that an element falls in the subnormal range.
    pub p_sub: f64,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// `(w_norm, p_sub)` for i.i.d. Gaussian elements whose subnormal threshold
/// sits at `t = ρ κ n_min / q_max` standard deviations.
pub fn gaussian_subnormal_stats(kappa: f64, rho: f64, layout: &FpLayout) -> (f64, f64) {
    let t = rho * kappa * layout.n_min() / layout.q_max();
    stats_at_threshold(t)
}

pub(crate) fn stats_at_threshold(t: f64) -> (f64, f64) {
    if !(t > 0.0) {
        return (1.0, 0.0);
    }
    let n = std_normal();
    let p_sub = 2.0 * n.cdf(t) - 1.0;
    // E[Z² 1{|Z|<t}] = (2Φ(t) − 1) − 2tφ(t)
    let sub_energy = p_sub - 2.0 * t * n.pdf(t);
    (1.0 - sub_energy, p_sub)
}

pub fn fp_noise_terms(layout: &FpLayout, kappa: f64, rho: f64) -> FpNoiseTerms {
    let m = f64::from(layout.mantissa_bits());
    let b = f64::from(layout.bias());
    let alpha_m = 1.0 / (24.0 * 4f64.powf(m));
    let beta = 4f64.powf(1.0 - b - m) / (12.0 * layout.q_max().powi(2));
    let (w_norm, p_sub) = gaussian_subnormal_stats(kappa, rho, layout);
    FpNoiseTerms {
        alpha_m,
        beta,
        w_norm,
        p_sub,
    }
}

/// FP QSNR under a power-of-two block scale with overhead `rho`.
pub fn qsnr_fp_ue8m0(layout: &FpLayout, rho: f64, kappa: f64) -> f64 {
    let t = fp_noise_terms(layout, kappa, rho);
    -10.0 * (t.alpha_m * t.w_norm + t.beta * (rho * kappa).powi(2) * t.p_sub).log10()
}

/// FP QSNR under an E4M3 block scale (`ρ = 1`), with the block maximum error free.
pub fn qsnr_fp_e4m3(layout: &FpLayout, kappa: f64, g: usize) -> f64 {
    let t = fp_noise_terms(layout, kappa, 1.0);
    let normal = (t.w_norm - kappa * kappa / g as f64).max(ENERGY_FLOOR);
    -10.0 * (t.alpha_m * normal + t.beta * kappa * kappa * t.p_sub).log10()
}

/// Predicted QSNR of `spec` at crest factor `kappa`. `rho` overrides the
/// format's modelled overhead for power-of-two scales.
pub fn predict_qsnr(spec: &FormatSpec, kappa: f64, rho: Option<f64>) -> f64 {
    let rho = match spec.scale_mode {
        ScaleMode::Exact => rho.unwrap_or(1.0),
        ScaleMode::E4m3TwoLevel => 1.0,
        _ => rho.unwrap_or(spec.rho_model),
    };
    match (&spec.element, spec.scale_mode) {
        (ElementFormat::Int(l), ScaleMode::E4m3TwoLevel) => qsnr_int_e4m3(l.bits(), kappa, spec.block_size),
        (ElementFormat::Int(l), _) => qsnr_int_ue8m0(l.bits(), rho, kappa),
        (ElementFormat::Fp(l), ScaleMode::E4m3TwoLevel) => qsnr_fp_e4m3(l, kappa, spec.block_size),
        (ElementFormat::Fp(l), _) => qsnr_fp_ue8m0(l, rho, kappa),
    }
}

/// A single evaluation point of the Gaussian noise model.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianQsnrModel {
    pub kappa: f64,
    pub rho: f64,
    pub g: usize,
    pub format: FormatSpec,
}

/// Output of [`GaussianQsnrModel::evaluate`].
#[derive(Debug, Clone, Serialize)]
pub struct QsnrPrediction {
    pub format: String,
    pub kappa: f64,
    pub rho: f64,
    pub g: usize,
    pub qsnr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp_terms: Option<FpNoiseTerms>,
    /// Set when κ exceeds √g, which no real block can reach.
    pub beyond_block_bound: bool,
}

impl GaussianQsnrModel {
    /// Model for `format` at `kappa`, using the format's block size and default ρ.
    /// A crest factor above `√g` is rejected unless `allow_beyond_bound` is set.
    pub fn new(format: &FormatSpec, kappa: f64, rho: Option<f64>, allow_beyond_bound: bool) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::config(format!("crest factor must be positive, got {kappa}")));
        }
        let rho = rho.unwrap_or(format.rho_model);
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::config(format!("rho must be >= 1, got {rho}")));
        }
        let g = format.block_size;
        if kappa > (g as f64).sqrt() && !allow_beyond_bound {
            return Err(Error::config(format!(
                "crest factor {kappa} exceeds sqrt({g}) = {:.4}, the largest a block of {g} can have",
                (g as f64).sqrt()
            )));
        }
        Ok(GaussianQsnrModel {
            kappa,
            rho,
            g,
            format: format.clone(),
        })
    }

    pub fn qsnr_db(&self) -> f64 {
        predict_qsnr(&self.format, self.kappa, Some(self.rho))
    }

    pub fn evaluate(&self) -> QsnrPrediction {
        let effective_rho = match self.format.scale_mode {
            ScaleMode::E4m3TwoLevel => 1.0,
            _ => self.rho,
        };
        QsnrPrediction {
            format: self.format.name.clone(),
            kappa: self.kappa,
            rho: effective_rho,
            g: self.g,
            qsnr_db: self.qsnr_db(),
            fp_terms: self
                .format
                .fp_layout()
                .map(|l| fp_noise_terms(l, self.kappa, effective_rho)),
            beyond_block_bound: self.kappa > (self.g as f64).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::lookup_format;
    use approx::assert_abs_diff_eq;

    #[test]
    fn int_examples() {
        assert_abs_diff_eq!(qsnr_int_ue8m0(8, 1.0, 1.0), 52.94, epsilon = 1e-9);
        assert_abs_diff_eq!(qsnr_int_ue8m0(8, 1.5, 3.0), 39.88, epsilon = 5e-3);
        assert_abs_diff_eq!(
            qsnr_int_ue8m0(7, 1.3, 2.2) - qsnr_int_ue8m0(6, 1.3, 2.2),
            6.02,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(qsnr_int_e4m3(4, 2.0, 16), 23.12, epsilon = 5e-3);
        assert_abs_diff_eq!(qsnr_int_e4m3(4, 1.0, 16), 29.14, epsilon = 5e-3);
        assert_abs_diff_eq!(
            qsnr_int_e4m3(6, 2.5, 1 << 30),
            qsnr_int_ue8m0(6, 1.0, 2.5),
            epsilon = 1e-8
        );
    }

    #[test]
    fn subnormal_stats_examples() {
        assert_eq!(stats_at_threshold(0.0), (1.0, 0.0));
        let (w, p) = gaussian_subnormal_stats(2.0, 1.5, &FpLayout::e2m1());
        assert_abs_diff_eq!(p, 0.38293, epsilon = 1e-5);
        assert_abs_diff_eq!(w, 0.96914, epsilon = 1e-5);
        let (_, p) = gaussian_subnormal_stats(8.0, 1.5, &FpLayout::e4m3());
        assert_abs_diff_eq!(p, 3.34e-4, epsilon = 1e-5);
    }

    /// Composite Simpson rule for `∫_{-t}^{t} z² φ(z) dz`.
    fn sub_energy_quadrature(t: f64) -> f64 {
        let n = 20_000;
        let h = 2.0 * t / n as f64;
        let f = |z: f64| z * z * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = f(-t) + f(t);
        for i in 1..n {
            let z = -t + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
        }
        acc * h / 3.0
    }

    #[test]
    fn energy_split_matches_quadrature() {
        for t in [1e-3, 0.1, 0.5, 1.0, 2.5, 6.0] {
            let (w, _) = stats_at_threshold(t);
            assert_abs_diff_eq!(w + sub_energy_quadrature(t), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn fp_examples() {
        // M = 3 ceiling
        let e4m3 = FpLayout::e4m3();
        assert_abs_diff_eq!(qsnr_fp_ue8m0(&e4m3, 1.0, 1.0), 31.86, epsilon = 0.01);
        assert_abs_diff_eq!(qsnr_fp_ue8m0(&FpLayout::e2m1(), 1.5, 2.0), 19.18, epsilon = 0.01);
        let e2m3 = FpLayout::e2m3();
        let m1 = FpLayout::new(4, 1, 7, crate::formats::SpecialCodes::None).unwrap();
        let d = qsnr_fp_ue8m0(&e2m3, 1.0, 0.01) - qsnr_fp_ue8m0(&m1, 1.0, 0.01);
        assert_abs_diff_eq!(d, 12.04, epsilon = 0.01);
    }

    #[test]
    fn fp_ceiling_holds_on_grid() {
        for layout in [FpLayout::e4m3(), FpLayout::e2m3(), FpLayout::e2m1()] {
            let ceiling = 13.80 + 6.02 * f64::from(layout.mantissa_bits());
            for i in 0..200 {
                let kappa = 0.05 + i as f64 * 0.1;
                for rho in [1.0, 1.25, 1.5, 1.99] {
                    let q = qsnr_fp_ue8m0(&layout, rho, kappa);
                    assert!(q <= ceiling + 0.01, "{} κ={kappa} ρ={rho}: {q}", layout.name());
                }
            }
        }
    }

    #[test]
    fn int_monotone() {
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let q = qsnr_int_ue8m0(6, 1.5, i as f64 * 0.2);
            assert!(q < last);
            last = q;
        }
        assert!(qsnr_int_ue8m0(6, 1.6, 2.0) < qsnr_int_ue8m0(6, 1.5, 2.0));
    }

    #[test]
    fn nvfp4_rises_below_four() {
        let l = FpLayout::e2m1();
        let mut last = qsnr_fp_e4m3(&l, 1.0, 16);
        for i in 1..=28 {
            let q = qsnr_fp_e4m3(&l, 1.0 + i as f64 * 0.1, 16);
            assert!(q > last, "κ = {}", 1.0 + i as f64 * 0.1);
            last = q;
        }
    }

    #[test]
    fn e4m3_curves_continuous_and_finite() {
        for spec in ["NVFP4", "MXFP4", "MXFP6", "MXFP8"] {
            let f = lookup_format(spec).unwrap();
            let g = f.block_size as f64;
            let mut prev: Option<f64> = None;
            for i in 1..=1000 {
                let kappa = g.sqrt() * i as f64 / 1000.0;
                let q = predict_qsnr(&f, kappa, None);
                assert!(q.is_finite());
                if let Some(p) = prev {
                    assert!((q - p).abs() < 1.0, "{spec} jumps at κ={kappa}");
                }
                prev = Some(q);
            }
        }
    }

    #[test]
    fn model_checks_block_bound() {
        let f = lookup_format("NVINT4").unwrap();
        assert!(GaussianQsnrModel::new(&f, 5.0, None, false).is_err());
        let m = GaussianQsnrModel::new(&f, 5.0, None, true).unwrap();
        assert!(m.evaluate().beyond_block_bound);
        let f = lookup_format("MXFP4").unwrap();
        let p = GaussianQsnrModel::new(&f, 2.0, None, false).unwrap().evaluate();
        assert_abs_diff_eq!(p.qsnr_db, 19.18, epsilon = 0.01);
        assert!(p.fp_terms.is_some());
    }
}
