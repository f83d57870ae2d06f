use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Gate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellFactor {
    pub area: f64,
    pub energy: f64,
}

const fn cf(area: f64, energy: f64) -> CellFactor {
    CellFactor { area, energy }
}

/// Per-cell area/energy factors and the shared toggle rate.
///
/// JSON form: `{"FA": {"area": 1.0, "energy": 1.0}, ..., "toggle_rate": 1.0}`.
/// Missing cells keep their default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellFactors {
    #[serde(rename = "FA")]
    pub fa: CellFactor,
    #[serde(rename = "HA")]
    pub ha: CellFactor,
    #[serde(rename = "XOR")]
    pub xor: CellFactor,
    #[serde(rename = "AND")]
    pub and: CellFactor,
    #[serde(rename = "OR")]
    pub or: CellFactor,
    #[serde(rename = "MUX")]
    pub mux: CellFactor,
    pub toggle_rate: f64,
}

impl Default for CellFactors {
    /// Placeholder relative units.
    fn default() -> Self {
        CellFactors {
            fa: cf(1.0, 1.0),
            ha: cf(0.5, 0.5),
            xor: cf(0.5, 0.5),
            and: cf(0.25, 0.2),
            or: cf(0.25, 0.2),
            mux: cf(0.45, 0.4),
            toggle_rate: 1.0,
        }
    }
}

impl CellFactors {
    pub fn get(&self, g: Gate) -> CellFactor {
        match g {
            Gate::Fa => self.fa,
            Gate::Ha => self.ha,
            Gate::Xor => self.xor,
            Gate::And => self.and,
            Gate::Or => self.or,
            Gate::Mux => self.mux,
        }
    }

    pub fn get_mut(&mut self, g: Gate) -> &mut CellFactor {
        match g {
            Gate::Fa => &mut self.fa,
            Gate::Ha => &mut self.ha,
            Gate::Xor => &mut self.xor,
            Gate::And => &mut self.and,
            Gate::Or => &mut self.or,
            Gate::Mux => &mut self.mux,
        }
    }

    pub fn set(mut self, g: Gate, area: f64, energy: f64) -> Self {
        *self.get_mut(g) = cf(area, energy);
        self
    }

    /// Every area and energy factor multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        let mut c = self.clone();
        for g in Gate::ALL {
            let v = c.get_mut(g);
            v.area *= f;
            v.energy *= f;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        for g in Gate::ALL {
            let f = self.get(g);
            if !(f.area > 0.0 && f.energy > 0.0 && f.area.is_finite() && f.energy.is_finite()) {
                return Err(Error::config(format!(
                    "{} factors must be positive, got {f:?}",
                    g.name()
                )));
            }
        }
        if !(self.toggle_rate > 0.0 && self.toggle_rate <= 1.0) {
            return Err(Error::config(format!(
                "toggle_rate must be in (0, 1], got {}",
                self.toggle_rate
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: CellFactors = serde_json::from_str(text).map_err(|e| Error::config(format!("cell factors: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c = CellFactors::from_json(r#"{"MUX": {"area": 2.0, "energy": 1.5}, "toggle_rate": 0.5}"#).unwrap();
        assert_eq!(c.mux, cf(2.0, 1.5));
        assert_eq!(c.fa, CellFactors::default().fa);
        assert_eq!(c.toggle_rate, 0.5);
    }

    #[test]
    fn rejects_bad_factors() {
        assert!(CellFactors::from_json(r#"{"FA": {"area": 0.0, "energy": 1.0}}"#).is_err());
        assert!(CellFactors::from_json(r#"{"toggle_rate": 1.5}"#).is_err());
        assert!(CellFactors::from_json(r#"{"NAND": {"area": 1.0, "energy": 1.0}}"#).is_err());
        assert!(CellFactors::default().validate().is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let c = CellFactors::default().set(Gate::Xor, 0.7, 0.6);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"XOR\""));
        assert_eq!(CellFactors::from_json(&s).unwrap(), c);
    }
}
