//! Arrays that serve both an 8-bit and a 4-bit format at a 1:2 throughput ratio.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    acc32_counts, aggregate_cost, dequant_counts, mac_gate_counts, rect_multiplier, ripple_adder, CellFactors, Gate,
    GateCounts, GateVector, MacConfig, MmuCostReport, ScaleKind, SubBlock,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedScheme {
    /// One int8 array plus two int4 arrays.
    IntNoReuse,
    /// One int8 array (also run as int4) plus one int4 array.
    IntReuse1,
    /// Two int8×(u)int4 arrays, paired for int8 or independent for int4.
    IntReuse2,
    /// One e4m3 array plus two e2m1 arrays.
    FpNoReuse,
    /// One e4m3 array (also run as e2m1) plus one e2m1 array.
    FpReuse,
}

impl MixedScheme {
    pub const ALL: [MixedScheme; 5] = [
        MixedScheme::IntNoReuse,
        MixedScheme::IntReuse1,
        MixedScheme::IntReuse2,
        MixedScheme::FpNoReuse,
        MixedScheme::FpReuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MixedScheme::IntNoReuse => "int_no_reuse",
            MixedScheme::IntReuse1 => "int_reuse_1",
            MixedScheme::IntReuse2 => "int_reuse_2",
            MixedScheme::FpNoReuse => "fp_no_reuse",
            MixedScheme::FpReuse => "fp_reuse",
        }
    }

    pub fn is_int(self) -> bool {
        matches!(
            self,
            MixedScheme::IntNoReuse | MixedScheme::IntReuse1 | MixedScheme::IntReuse2
        )
    }
}

impl fmt::Display for MixedScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MixedScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        MixedScheme::ALL.into_iter().find(|m| m.name() == norm).ok_or_else(|| {
            let names: Vec<&str> = MixedScheme::ALL.iter().map(|m| m.name()).collect();
            Error::config(format!("unknown scheme `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Unit {
    Int8,
    Int4,
    Int8xInt4,
    E4m3,
    E2m1,
}

impl Unit {
    fn name(self) -> &'static str {
        match self {
            Unit::Int8 => "int8_mac",
            Unit::Int4 => "int4_mac",
            Unit::Int8xInt4 => "int8_uint4_mac",
            Unit::E4m3 => "e4m3_mac",
            Unit::E2m1 => "e2m1_mac",
        }
    }

    fn counts(self, lanes: u32, psum: u32) -> GateCounts {
        let mac = |x, y, kind| {
            mac_gate_counts(
                &MacConfig::new(self.name(), x, y, lanes, kind)
                    .expect("fixed datapath")
                    .with_psum_bit_width(psum),
            )
        };
        match self {
            Unit::Int8 => mac(0, 7, ScaleKind::Ue8m0),
            Unit::Int4 => mac(0, 3, ScaleKind::E4m3),
            Unit::E4m3 => mac(4, 3, ScaleKind::Ue8m0),
            Unit::E2m1 => mac(2, 1, ScaleKind::E4m3),
            Unit::Int8xInt4 => {
                // 8×5 signed/unsigned multiplier, a mode mux per product bit,
                // and an adder sized for int8 products
                let k = u64::from(lanes);
                let mut c = GateCounts::new(lanes);
                c.push(SubBlock::Multiplier, false, rect_multiplier(8, 5) * k);
                c.push(
                    SubBlock::LaneMux,
                    false,
                    GateVector::default().with(Gate::Mux, 8 + 5) * k,
                );
                c.push(SubBlock::Adder, false, ripple_adder(16.min(u64::from(psum))) * k);
                c
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitUse {
    pub unit: &'static str,
    pub instances: u64,
    /// Instances switching in 8-bit and in 4-bit operation.
    pub active_8bit: u64,
    pub active_4bit: u64,
}

fn composition(scheme: MixedScheme) -> Vec<(Unit, u64, u64, u64)> {
    // (unit, instances, active in 8-bit mode, active in 4-bit mode)
    match scheme {
        MixedScheme::IntNoReuse => vec![(Unit::Int8, 1, 1, 0), (Unit::Int4, 2, 0, 2)],
        MixedScheme::IntReuse1 => vec![(Unit::Int8, 1, 1, 1), (Unit::Int4, 1, 0, 1)],
        MixedScheme::IntReuse2 => vec![(Unit::Int8xInt4, 2, 2, 2)],
        MixedScheme::FpNoReuse => vec![(Unit::E4m3, 1, 1, 0), (Unit::E2m1, 2, 0, 2)],
        MixedScheme::FpReuse => vec![(Unit::E4m3, 1, 1, 1), (Unit::E2m1, 1, 0, 1)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedCostReport {
    pub scheme: MixedScheme,
    pub lanes: u32,
    pub units: Vec<UnitUse>,
    /// Area of everything instantiated, with the energy figures of all
    /// blocks switching at once.
    pub area: MmuCostReport,
    /// MX 8-bit operation: active 8-bit lanes, UE8M0 dequantizer, accumulator.
    pub energy_8bit: f64,
    /// NV 4-bit operation at twice the product rate, E4M3 dequantizer, accumulator.
    pub energy_4bit: f64,
    /// Mean of the two operating modes.
    pub energy: f64,
}

impl MixedCostReport {
    pub fn area_total(&self) -> f64 {
        self.area.area_total
    }
}

/// Gate counts of everything instantiated by `scheme`, and of the blocks
/// active in 8-bit and 4-bit operation.
pub(crate) fn scheme_counts(scheme: MixedScheme, lanes: u32, psum: u32) -> (GateCounts, GateVector, GateVector) {
    let deq8 = dequant_counts(&MacConfig::new("deq", 0, 7, lanes, ScaleKind::Ue8m0).expect("fixed datapath"));
    let deq4 = dequant_counts(&MacConfig::new("deq", 0, 3, lanes, ScaleKind::E4m3).expect("fixed datapath"));
    let acc = acc32_counts(lanes);
    let mut all = GateCounts::new(lanes);
    let mut on8 = deq8.total() + acc.total();
    let mut on4 = deq4.total() + acc.total();
    for (unit, n, a8, a4) in composition(scheme) {
        let c = unit.counts(lanes, psum);
        on8 += c.total() * a8;
        on4 += c.total() * a4;
        all.extend(c.repeated(n));
    }
    all.extend(deq8);
    all.extend(deq4);
    all.extend(acc);
    (all, on8, on4)
}

/// Area and per-mode energy of a mixed 8-bit/4-bit array with `lanes` lanes per unit.
pub fn mixed_format_cost(scheme: MixedScheme, cells: &CellFactors, lanes: u32) -> Result<MixedCostReport> {
    cells.validate()?;
    if lanes == 0 {
        return Err(Error::config("lanes must be positive"));
    }
    let (all, on8, on4) = scheme_counts(scheme, lanes, super::DEFAULT_PSUM_BITS);
    let (e8, e4) = (on8.energy(cells), on4.energy(cells));
    Ok(MixedCostReport {
        scheme,
        lanes,
        units: composition(scheme)
            .into_iter()
            .map(|(u, n, a8, a4)| UnitUse {
                unit: u.name(),
                instances: n,
                active_8bit: a8,
                active_4bit: a4,
            })
            .collect(),
        area: aggregate_cost(scheme.name(), &all, cells),
        energy_8bit: e8,
        energy_4bit: e4,
        energy: 0.5 * (e8 + e4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mac_area(s: MixedScheme, cells: &CellFactors) -> f64 {
        let r = mixed_format_cost(s, cells, 32).unwrap();
        r.area.area_total - r.area.area_of(SubBlock::Dequantizer) - r.area.area_of(SubBlock::Acc32)
    }

    #[test]
    fn compositions_follow_unit_formulas() {
        let cells = CellFactors::default();
        let unit = |u: Unit| u.counts(32, 24).total().area(&cells);
        assert!((mac_area(MixedScheme::IntReuse2, &cells) - 2.0 * unit(Unit::Int8xInt4)).abs() < 1e-9);
        assert!((mac_area(MixedScheme::FpReuse, &cells) - (unit(Unit::E4m3) + unit(Unit::E2m1))).abs() < 1e-9);
        assert!((mac_area(MixedScheme::IntNoReuse, &cells) - (unit(Unit::Int8) + 2.0 * unit(Unit::Int4))).abs() < 1e-9);
    }

    #[test]
    fn int_reuse_2_beats_fp_reuse_by_default() {
        let cells = CellFactors::default();
        let i = mixed_format_cost(MixedScheme::IntReuse2, &cells, 32).unwrap();
        let f = mixed_format_cost(MixedScheme::FpReuse, &cells, 32).unwrap();
        assert!(i.area_total() < f.area_total());
        assert!(i.energy < f.energy);
        assert!(i.energy_4bit < f.energy_4bit);
    }

    #[test]
    fn no_reuse_dominates_gatewise() {
        let (a, _, _) = scheme_counts(MixedScheme::IntNoReuse, 32, 24);
        let (b, _, _) = scheme_counts(MixedScheme::IntReuse1, 32, 24);
        let (c, _, _) = scheme_counts(MixedScheme::FpNoReuse, 32, 24);
        let (d, _, _) = scheme_counts(MixedScheme::FpReuse, 32, 24);
        for g in Gate::ALL {
            assert!(a.total().get(g) >= b.total().get(g));
            assert!(c.total().get(g) >= d.total().get(g));
        }
        // the reconfigurable lane adds muxes that the fixed arrays lack
        let (e, _, _) = scheme_counts(MixedScheme::IntReuse2, 32, 24);
        assert!(e.total().get(Gate::Mux) > a.total().get(Gate::Mux));
    }

    #[test]
    fn reuse_2_dominance_near_default_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let mut cells = CellFactors::default();
            for g in Gate::ALL {
                let f = cells.get_mut(g);
                f.area *= rng.random_range(0.8..1.2);
                f.energy *= rng.random_range(0.8..1.2);
            }
            assert!(mac_area(MixedScheme::IntNoReuse, &cells) >= mac_area(MixedScheme::IntReuse2, &cells));
        }
    }

    #[test]
    fn parse_schemes() {
        assert_eq!("int_reuse_2".parse::<MixedScheme>().unwrap(), MixedScheme::IntReuse2);
        assert_eq!("FP-REUSE".parse::<MixedScheme>().unwrap(), MixedScheme::FpReuse);
        assert!("int_reuse_3".parse::<MixedScheme>().is_err());
    }
}
