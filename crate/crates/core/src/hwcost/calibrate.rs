//! Fitting cell factors to measured cost ratios.
//!
//! Every cost is linear in the factors, so a ratio of two costs depends only
//! on relative factors. The fit minimizes the squared log-ratio error by
//! gradient descent on `log A_g`, `log E_g`, with a weak pull towards the
//! starting factors so that under-determined fits stay near them.

use serde::{Deserialize, Serialize};

use super::mixed::scheme_counts;
use super::{mmu_gate_counts, CellFactors, Gate, MacConfig, MixedScheme, DEFAULT_PSUM_BITS};
use crate::error::{Error, Result};
use crate::formats::lookup_format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Area,
    Energy,
}

/// A registry format (`"MXINT8"`) or a mixed scheme (`"mixed:int_reuse_2"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Subject {
    Format(String),
    Mixed(MixedScheme),
}

impl TryFrom<String> for Subject {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        match s.strip_prefix("mixed:") {
            Some(scheme) => Ok(Subject::Mixed(scheme.parse()?)),
            None => {
                lookup_format(&s)?;
                Ok(Subject::Format(s))
            }
        }
    }
}

impl From<Subject> for String {
    fn from(s: Subject) -> String {
        match s {
            Subject::Format(f) => f,
            Subject::Mixed(m) => format!("mixed:{m}"),
        }
    }
}

impl Subject {
    /// Per-gate weights `w` such that area = Σ w_g A_g and energy = τ Σ v_g E_g.
    fn weights(&self) -> Result<([f64; 6], [f64; 6])> {
        let to_f = |v: super::GateVector| Gate::ALL.map(|g| v.get(g) as f64);
        match self {
            Subject::Format(name) => {
                let cfg = MacConfig::from_format(&lookup_format(name)?)?;
                let v = to_f(mmu_gate_counts(&cfg).total());
                Ok((v, v))
            }
            Subject::Mixed(m) => {
                let (all, on8, on4) = scheme_counts(*m, 32, DEFAULT_PSUM_BITS);
                let (e8, e4) = (to_f(on8), to_f(on4));
                let mut energy = [0.0; 6];
                for i in 0..6 {
                    energy[i] = 0.5 * (e8[i] + e4[i]);
                }
                Ok((to_f(all.total()), energy))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTarget {
    pub numerator: Subject,
    pub denominator: Subject,
    pub metric: Metric,
    /// Desired `cost(numerator) / cost(denominator)`.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedRatio {
    pub numerator: Subject,
    pub denominator: Subject,
    pub metric: Metric,
    pub target: f64,
    pub initial: f64,
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub cells: CellFactors,
    pub ratios: Vec<FittedRatio>,
    /// Root-mean-square log error of the fitted ratios.
    pub rms_log_error: f64,
    pub iterations: usize,
}

struct Prepared {
    num: [f64; 6],
    den: [f64; 6],
    /// Offset into the parameter vector: 0 for area, 6 for energy.
    offset: usize,
    log_target: f64,
}

fn ratio(p: &Prepared, theta: &[f64; 12]) -> f64 {
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..6 {
        let f = theta[p.offset + i].exp();
        a += p.num[i] * f;
        b += p.den[i] * f;
    }
    a / b
}

/// Fits cell factors so that the listed cost ratios approach their targets.
pub fn calibrate_cells(targets: &[RatioTarget], start: &CellFactors, iterations: usize) -> Result<CalibrationReport> {
    start.validate()?;
    if targets.is_empty() {
        return Err(Error::config("calibration needs at least one ratio target"));
    }
    let prepared = targets
        .iter()
        .map(|t| {
            if !(t.target > 0.0 && t.target.is_finite()) {
                return Err(Error::config(format!(
                    "ratio target must be positive, got {}",
                    t.target
                )));
            }
            let (na, ne) = t.numerator.weights()?;
            let (da, de) = t.denominator.weights()?;
            let (num, den, offset) = match t.metric {
                Metric::Area => (na, da, 0),
                Metric::Energy => (ne, de, 6),
            };
            Ok(Prepared {
                num,
                den,
                offset,
                log_target: t.target.ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut theta0 = [0.0; 12];
    for (i, g) in Gate::ALL.into_iter().enumerate() {
        theta0[i] = start.get(g).area.ln();
        theta0[6 + i] = start.get(g).energy.ln();
    }
    let mut theta = theta0;
    let prior = 1e-4;
    let lr = 0.05;
    // Adam moments
    let (mut m, mut v) = ([0.0; 12], [0.0; 12]);
    let (b1, b2, eps) = (0.9, 0.999, 1e-12);
    for step in 1..=iterations {
        let mut grad = [0.0; 12];
        for p in &prepared {
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..6 {
                let f = theta[p.offset + i].exp();
                a += p.num[i] * f;
                b += p.den[i] * f;
            }
            let err = (a / b).ln() - p.log_target;
            for i in 0..6 {
                let f = theta[p.offset + i].exp();
                // d log(a/b) / d log f_i
                let d = p.num[i] * f / a - p.den[i] * f / b;
                grad[p.offset + i] += 2.0 * err * d;
            }
        }
        for j in 0..12 {
            grad[j] += 2.0 * prior * (theta[j] - theta0[j]);
            m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
            v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
            let mh = m[j] / (1.0 - b1.powi(step as i32));
            let vh = v[j] / (1.0 - b2.powi(step as i32));
            theta[j] -= lr * mh / (vh.sqrt() + eps);
        }
    }

    let mut cells = start.clone();
    for (i, g) in Gate::ALL.into_iter().enumerate() {
        let f = cells.get_mut(g);
        f.area = theta[i].exp();
        f.energy = theta[6 + i].exp();
    }
    let ratios: Vec<FittedRatio> = targets
        .iter()
        .zip(&prepared)
        .map(|(t, p)| FittedRatio {
            numerator: t.numerator.clone(),
            denominator: t.denominator.clone(),
            metric: t.metric,
            target: t.target,
            initial: ratio(p, &theta0),
            achieved: ratio(p, &theta),
        })
        .collect();
    let rms_log_error =
        (ratios.iter().map(|r| (r.achieved / r.target).ln().powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
    Ok(CalibrationReport {
        cells,
        ratios,
        rms_log_error,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(n: &str, d: &str, metric: Metric, t: f64) -> RatioTarget {
        RatioTarget {
            numerator: Subject::try_from(n.to_string()).unwrap(),
            denominator: Subject::try_from(d.to_string()).unwrap(),
            metric,
            target: t,
        }
    }

    #[test]
    fn fits_a_single_reachable_ratio() {
        let t = vec![target("MXINT8", "MXFP8", Metric::Energy, 0.63)];
        let r = calibrate_cells(&t, &CellFactors::default(), 3000).unwrap();
        assert!(r.rms_log_error < 1e-3, "{r:?}");
        assert!(r.cells.validate().is_ok());
    }

    #[test]
    fn improves_a_joint_fit() {
        let t = vec![
            target("MXINT8", "MXFP8", Metric::Energy, 0.63),
            target("MXINT8", "MXFP8", Metric::Area, 0.79),
            target("NVFP4", "MXFP8", Metric::Area, 0.54),
            target("mixed:int_reuse_2", "mixed:fp_reuse", Metric::Area, 0.66),
        ];
        let r = calibrate_cells(&t, &CellFactors::default(), 3000).unwrap();
        let before: f64 = r.ratios.iter().map(|x| (x.initial / x.target).ln().powi(2)).sum();
        let after: f64 = r.ratios.iter().map(|x| (x.achieved / x.target).ln().powi(2)).sum();
        assert!(after < before);
    }

    #[test]
    fn subject_parsing() {
        assert!(Subject::try_from("MXFP9".to_string()).is_err());
        let s: Subject = serde_json::from_str("\"mixed:fp_reuse\"").unwrap();
        assert_eq!(s, Subject::Mixed(MixedScheme::FpReuse));
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"mixed:fp_reuse\"");
        assert!(calibrate_cells(&[], &CellFactors::default(), 10).is_err());
    }
}
