use std::str::FromStr;

use serde::Serialize;

use super::predict_qsnr;
use crate::error::{Error, Result};
use crate::formats::{lookup_format, FormatSpec, ScaleMode};

/// Where `INT − FP` changes sign, if it does inside the bracket.
#[derive(Debug, Clone, Serialize)]
pub struct CrossoverResult {
    pub int_format: String,
    pub fp_format: String,
    pub rho: f64,
    pub kappa_star: Option<f64>,
    pub qsnr_at_crossover_db: Option<f64>,
    pub bracket: (f64, f64),
    /// `INT − FP` in dB at the root.
    pub residual_db: Option<f64>,
}

impl CrossoverResult {
    pub fn found(&self) -> bool {
        self.kappa_star.is_some()
    }
}

/// Bisection on `int(κ) − fp(κ)` until the difference is below 1e−6 dB.
/// Returns `None` when the ends of the bracket have the same sign.
pub fn crossover_kappa(
    int_curve: impl Fn(f64) -> f64,
    fp_curve: impl Fn(f64) -> f64,
    bracket: (f64, f64),
) -> Option<(f64, f64)> {
    let diff = |k: f64| int_curve(k) - fp_curve(k);
    let (mut lo, mut hi) = bracket;
    let (mut d_lo, d_hi) = (diff(lo), diff(hi));
    if d_lo == 0.0 {
        return Some((lo, int_curve(lo)));
    }
    if d_hi == 0.0 {
        return Some((hi, int_curve(hi)));
    }
    if !(d_lo.signum() != d_hi.signum()) || d_lo.is_nan() || d_hi.is_nan() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = diff(mid);
        if d.abs() < 1e-6 || hi - lo < 1e-14 * mid.abs().max(1.0) {
            return Some((mid, int_curve(mid)));
        }
        if d.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Some((mid, int_curve(mid)))
}

/// An (INT, FP) pair compared at the same block size and scale kind.
#[derive(Debug, Clone, Serialize)]
pub struct FormatPair {
    pub int: FormatSpec,
    pub fp: FormatSpec,
}

impl FormatPair {
    pub fn new(int: FormatSpec, fp: FormatSpec) -> Result<Self> {
        if !int.is_int() || fp.is_int() {
            return Err(Error::config(format!("a pair is INT:FP, got {}:{}", int.name, fp.name)));
        }
        Ok(FormatPair { int, fp })
    }

    pub fn label(&self) -> String {
        format!("{}:{}", self.int.name, self.fp.name)
    }
}

/// Parses `INT:FP`, e.g. `MXINT8:MXFP8`. Either order is accepted.
pub fn parse_pair(s: &str) -> Result<FormatPair> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::config(format!("expected a pair like MXINT8:MXFP8, got `{s}`")))?;
    let (a, b) = (lookup_format(a.trim())?, lookup_format(b.trim())?);
    if a.is_int() {
        FormatPair::new(a, b)
    } else {
        FormatPair::new(b, a)
    }
}

/// The four INT/FP pairs of the standard registry.
pub fn standard_pairs() -> Vec<FormatPair> {
    ["MXINT8:MXFP8", "MXINT6:MXFP6", "MXINT4:MXFP4", "NVINT4:NVFP4"]
        .iter()
        .map(|p| parse_pair(p).expect("standard pair"))
        .collect()
}

/// Search interval used when none is given: two-level formats cross below
/// the point where the FP normal-energy term vanishes.
pub fn default_bracket(pair: &FormatPair) -> (f64, f64) {
    if pair.fp.scale_mode == ScaleMode::E4m3TwoLevel {
        (1.0, (pair.fp.block_size as f64).sqrt())
    } else {
        (1.0, 16.0)
    }
}

/// Crossover crest factor of `pair` at scale overhead `rho`.
pub fn crossover(pair: &FormatPair, rho: f64, bracket: Option<(f64, f64)>) -> Result<CrossoverResult> {
    let bracket = bracket.unwrap_or_else(|| default_bracket(pair));
    if !(bracket.0 > 0.0 && bracket.0 < bracket.1) {
        return Err(Error::config(format!("invalid bracket {bracket:?}")));
    }
    let root = crossover_kappa(
        |k| predict_qsnr(&pair.int, k, Some(rho)),
        |k| predict_qsnr(&pair.fp, k, Some(rho)),
        bracket,
    );
    Ok(CrossoverResult {
        int_format: pair.int.name.clone(),
        fp_format: pair.fp.name.clone(),
        rho,
        kappa_star: root.map(|r| r.0),
        qsnr_at_crossover_db: root.map(|r| r.1),
        bracket,
        residual_db: root.map(|(k, _)| predict_qsnr(&pair.int, k, Some(rho)) - predict_qsnr(&pair.fp, k, Some(rho))),
    })
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl KappaGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for KappaGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config(format!("bad kappa grid `{s}`: {e}")))?;
        let grid = match nums.as_slice() {
            [start, stop, step] => KappaGrid {
                start: *start,
                stop: *stop,
                step: *step,
            },
            [start, stop] => KappaGrid {
                start: *start,
                stop: *stop,
                step: 0.05,
            },
            _ => {
                return Err(Error::config(format!(
                    "kappa grid must be start:stop[:step], got `{s}`"
                )))
            }
        };
        if !(grid.start > 0.0 && grid.stop >= grid.start && grid.step > 0.0) {
            return Err(Error::config(format!("kappa grid `{s}` is empty or non-positive")));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub kappa: f64,
    pub format: String,
    pub qsnr_db: f64,
}

/// Both curves of every pair over the grid, grouped by pair then kappa.
pub fn qsnr_curve(pairs: &[FormatPair], kappas: &[f64], rho: f64) -> Vec<CurveRow> {
    let mut rows = Vec::with_capacity(pairs.len() * kappas.len() * 2);
    for pair in pairs {
        for &kappa in kappas {
            for spec in [&pair.int, &pair.fp] {
                rows.push(CurveRow {
                    kappa,
                    format: spec.name.clone(),
                    qsnr_db: predict_qsnr(spec, kappa, Some(rho)),
                });
            }
        }
    }
    rows
}
