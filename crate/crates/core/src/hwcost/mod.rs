//! Gate-level area/energy model of a k-lane MAC array whose normalization,
//! dequantization and FP32 accumulation hardware is shared across lanes.
//!
//! Sub-blocks are decomposed into six standard cells:
//!
//! * m-bit array multiplier: m² AND, m(m−2) FA, m HA
//! * w-bit ripple adder: (w−1) FA, 1 HA
//! * x-bit comparator: x XOR, x AND, x OR
//! * x-bit subtractor: x XOR, x FA
//! * n-bit barrel aligner: n·⌈log2 n⌉ MUX
//! * n-bit normalizer: n·⌈log2 n⌉ MUX, n OR
//!
//! Cost is `Σ count · factor`, with energy additionally scaled by a global
//! toggle rate. Factors are relative units, not µm² or pJ.

mod calibrate;
mod cells;
mod mixed;

pub use calibrate::{calibrate_cells, CalibrationReport, FittedRatio, Metric, RatioTarget, Subject};
pub use cells::{CellFactor, CellFactors};
pub use mixed::{mixed_format_cost, MixedCostReport, MixedScheme, UnitUse};

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{ElementFormat, FormatSpec, ScaleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gate {
    Fa,
    Ha,
    Xor,
    And,
    Or,
    Mux,
}

impl Gate {
    pub const ALL: [Gate; 6] = [Gate::Fa, Gate::Ha, Gate::Xor, Gate::And, Gate::Or, Gate::Mux];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Fa => "FA",
            Gate::Ha => "HA",
            Gate::Xor => "XOR",
            Gate::And => "AND",
            Gate::Or => "OR",
            Gate::Mux => "MUX",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Cell counts indexed by [`Gate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateVector([u64; 6]);

impl GateVector {
    pub fn get(&self, g: Gate) -> u64 {
        self.0[g.index()]
    }

    pub fn with(mut self, g: Gate, count: u64) -> Self {
        self.0[g.index()] += count;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn total_cells(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Gate, u64)> + '_ {
        Gate::ALL.into_iter().map(|g| (g, self.get(g)))
    }

    pub fn area(&self, cells: &CellFactors) -> f64 {
        self.iter().map(|(g, c)| c as f64 * cells.get(g).area).sum()
    }

    pub fn energy(&self, cells: &CellFactors) -> f64 {
        self.iter().map(|(g, c)| c as f64 * cells.get(g).energy).sum::<f64>() * cells.toggle_rate
    }
}

impl Add for GateVector {
    type Output = GateVector;
    fn add(mut self, rhs: GateVector) -> GateVector {
        self += rhs;
        self
    }
}

impl AddAssign for GateVector {
    fn add_assign(&mut self, rhs: GateVector) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Mul<u64> for GateVector {
    type Output = GateVector;
    fn mul(self, k: u64) -> GateVector {
        GateVector(self.0.map(|c| c * k))
    }
}

impl Serialize for GateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(6))?;
        for (g, c) in self.iter() {
            m.serialize_entry(g.name(), &c)?;
        }
        m.end()
    }
}

/// m-bit array multiplier.
pub fn multiplier(m: u64) -> GateVector {
    rect_multiplier(m, m)
}

/// `a × b` array multiplier (`a ≥ b`): `a·b` AND, `a(b−2)` FA, `a` HA.
pub fn rect_multiplier(a: u64, b: u64) -> GateVector {
    let (a, b) = (a.max(b), a.min(b));
    let adders = if b >= 2 { a * (b - 2) } else { 0 };
    let halves = if b >= 2 { a } else { 0 };
    GateVector::default()
        .with(Gate::And, a * b)
        .with(Gate::Fa, adders)
        .with(Gate::Ha, halves)
}

/// w-bit ripple-carry adder.
pub fn ripple_adder(w: u64) -> GateVector {
    if w == 0 {
        return GateVector::default();
    }
    GateVector::default().with(Gate::Fa, w - 1).with(Gate::Ha, 1)
}

pub fn comparator(x: u64) -> GateVector {
    GateVector::default()
        .with(Gate::Xor, x)
        .with(Gate::And, x)
        .with(Gate::Or, x)
}

pub fn subtractor(x: u64) -> GateVector {
    GateVector::default().with(Gate::Xor, x).with(Gate::Fa, x)
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

pub fn barrel_aligner(n: u64) -> GateVector {
    GateVector::default().with(Gate::Mux, n * ceil_log2(n))
}

pub fn normalizer(n: u64) -> GateVector {
    barrel_aligner(n).with(Gate::Or, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubBlock {
    Multiplier,
    Adder,
    ExponentAdder,
    ExponentSubtractor,
    Comparator,
    Aligner,
    Normalizer,
    /// Mode-select multiplexers of a reconfigurable lane.
    LaneMux,
    Dequantizer,
    Acc32,
}

impl fmt::Display for SubBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializable");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScaleKind {
    Ue8m0,
    E4m3,
}

/// Datapath parameters: `x` exponent bits (0 for INT), `y` mantissa bits
/// (`y + 1` magnitude bits for INT), `lanes` k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    pub label: String,
    pub x: u32,
    pub y: u32,
    pub lanes: u32,
    pub psum_bit_width: u32,
    pub scale_kind: ScaleKind,
}

pub const DEFAULT_PSUM_BITS: u32 = 24;
/// Aligner cap of the FP32 accumulator.
pub const ACC32_PSUM_BITS: u32 = 48;

impl MacConfig {
    pub fn new(label: impl Into<String>, x: u32, y: u32, lanes: u32, scale_kind: ScaleKind) -> Result<Self> {
        let c = MacConfig {
            label: label.into(),
            x,
            y,
            lanes,
            psum_bit_width: DEFAULT_PSUM_BITS,
            scale_kind,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 || self.psum_bit_width == 0 {
            return Err(Error::config("lanes and psum_bit_width must be positive"));
        }
        if self.x > 16 || self.y > 32 {
            return Err(Error::config(format!("unsupported datapath x={} y={}", self.x, self.y)));
        }
        Ok(())
    }

    /// Datapath of a registry format; the lane count is the block size.
    pub fn from_format(spec: &FormatSpec) -> Result<Self> {
        let (x, y) = match &spec.element {
            ElementFormat::Int(l) => (0, l.bits() - 1),
            ElementFormat::Fp(l) => (l.exponent_bits(), l.mantissa_bits()),
        };
        let scale_kind = match spec.scale_mode {
            ScaleMode::E4m3TwoLevel => ScaleKind::E4m3,
            _ => ScaleKind::Ue8m0,
        };
        let lanes = u32::try_from(spec.block_size).map_err(|_| Error::config("block size too large"))?;
        MacConfig::new(spec.name.clone(), x, y, lanes, scale_kind)
    }

    pub fn with_lanes(mut self, lanes: u32) -> Self {
        self.lanes = lanes;
        self
    }

    pub fn with_psum_bit_width(mut self, bits: u32) -> Self {
        self.psum_bit_width = bits;
        self
    }

    pub fn is_int(&self) -> bool {
        self.x == 0
    }
}

/// `n = min(2^(x+1) + 2y, psum_bit_width)`.
pub fn aligner_width(config: &MacConfig) -> u64 {
    aligner_width_raw(config.x, config.y, config.psum_bit_width)
}

fn aligner_width_raw(x: u32, y: u32, psum: u32) -> u64 {
    ((1u64 << (x + 1)) + 2 * u64::from(y)).min(u64::from(psum))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountEntry {
    pub block: SubBlock,
    /// One instance serves all lanes.
    pub shared: bool,
    pub gates: GateVector,
}

/// Cell counts per sub-block for one unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCounts {
    pub lanes: u32,
    pub entries: Vec<CountEntry>,
}

impl GateCounts {
    pub fn new(lanes: u32) -> Self {
        GateCounts {
            lanes,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, block: SubBlock, shared: bool, gates: GateVector) {
        self.entries.push(CountEntry { block, shared, gates });
    }

    /// Sum of all entries of `block`.
    pub fn get(&self, block: SubBlock) -> GateVector {
        self.entries
            .iter()
            .filter(|e| e.block == block)
            .fold(GateVector::default(), |acc, e| acc + e.gates)
    }

    pub fn total(&self) -> GateVector {
        self.entries.iter().fold(GateVector::default(), |acc, e| acc + e.gates)
    }

    pub fn extend(&mut self, other: GateCounts) {
        self.entries.extend(other.entries);
    }

    /// Every entry repeated `times`.
    pub fn repeated(mut self, times: u64) -> Self {
        for e in &mut self.entries {
            e.gates = e.gates * times;
        }
        self
    }
}

/// Multiplier, adder tree and (for FP) alignment/normalization logic of the MAC array.
pub fn mac_gate_counts(config: &MacConfig) -> GateCounts {
    let k = u64::from(config.lanes);
    let x = u64::from(config.x);
    let m = u64::from(config.y) + 1;
    let n = aligner_width(config);
    let mut c = GateCounts::new(config.lanes);
    c.push(SubBlock::Multiplier, false, multiplier(m) * k);
    if config.is_int() {
        // aligner-width formula at x = 0 gives the 2b-wide integer adder
        c.push(SubBlock::Adder, false, ripple_adder(n) * k);
        for b in [
            SubBlock::ExponentAdder,
            SubBlock::ExponentSubtractor,
            SubBlock::Comparator,
            SubBlock::Aligner,
            SubBlock::Normalizer,
        ] {
            c.push(b, b == SubBlock::Normalizer, GateVector::default());
        }
    } else {
        c.push(SubBlock::Adder, false, ripple_adder(n) * k);
        c.push(SubBlock::ExponentAdder, false, ripple_adder(x) * k);
        c.push(SubBlock::ExponentSubtractor, false, subtractor(x) * k);
        c.push(SubBlock::Comparator, false, comparator(x) * k);
        c.push(SubBlock::Aligner, false, barrel_aligner(n) * k);
        c.push(SubBlock::Normalizer, true, normalizer(n));
    }
    c
}

fn fp_multiply(x: u64, y: u64) -> GateVector {
    multiplier(y + 1) + ripple_adder(x)
}

/// Shared dequantizer: two 8-bit adds for UE8M0 scales, two E4M3 multiplies otherwise.
pub fn dequant_counts(config: &MacConfig) -> GateCounts {
    let gates = match config.scale_kind {
        ScaleKind::Ue8m0 => ripple_adder(8) * 2,
        ScaleKind::E4m3 => fp_multiply(4, 3) * 2,
    };
    let mut c = GateCounts::new(config.lanes);
    c.push(SubBlock::Dequantizer, true, gates);
    c
}

/// FP32 adder datapath (x = 8, y = 23) with its aligner capped at 48 bits.
pub fn acc32_gates() -> GateVector {
    let n = aligner_width_raw(8, 23, ACC32_PSUM_BITS);
    ripple_adder(n) + subtractor(8) + comparator(8) + barrel_aligner(n) + normalizer(n)
}

/// Shared FP32 accumulator for a `lanes`-wide array.
pub fn acc32_counts(lanes: u32) -> GateCounts {
    let mut c = GateCounts::new(lanes);
    c.push(SubBlock::Acc32, true, acc32_gates());
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCost {
    pub block: SubBlock,
    pub shared: bool,
    pub gates: GateVector,
    pub area: f64,
    pub energy: f64,
    pub area_per_lane: f64,
    pub energy_per_lane: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmuCostReport {
    pub label: String,
    pub lanes: u32,
    pub area_total: f64,
    pub energy_total: f64,
    pub area_per_lane: f64,
    pub energy_per_lane: f64,
    pub breakdown: Vec<BlockCost>,
    pub cells: CellFactors,
}

impl MmuCostReport {
    pub fn area_of(&self, block: SubBlock) -> f64 {
        self.breakdown.iter().filter(|b| b.block == block).map(|b| b.area).sum()
    }

    pub fn energy_of(&self, block: SubBlock) -> f64 {
        self.breakdown
            .iter()
            .filter(|b| b.block == block)
            .map(|b| b.energy)
            .sum()
    }
}

/// Area and energy of `counts`; per-lane figures divide every block by k.
pub fn aggregate_cost(label: impl Into<String>, counts: &GateCounts, cells: &CellFactors) -> MmuCostReport {
    let k = f64::from(counts.lanes.max(1));
    let breakdown: Vec<BlockCost> = counts
        .entries
        .iter()
        .map(|e| {
            let (area, energy) = (e.gates.area(cells), e.gates.energy(cells));
            BlockCost {
                block: e.block,
                shared: e.shared,
                gates: e.gates,
                area,
                energy,
                area_per_lane: area / k,
                energy_per_lane: energy / k,
            }
        })
        .collect();
    let area_total = breakdown.iter().map(|b| b.area).sum::<f64>();
    let energy_total = breakdown.iter().map(|b| b.energy).sum::<f64>();
    MmuCostReport {
        label: label.into(),
        lanes: counts.lanes,
        area_total,
        energy_total,
        area_per_lane: area_total / k,
        energy_per_lane: energy_total / k,
        breakdown,
        cells: cells.clone(),
    }
}

/// Full per-format datapath: the MAC array plus its shared dequantizer and accumulator.
pub fn mmu_gate_counts(config: &MacConfig) -> GateCounts {
    let mut c = mac_gate_counts(config);
    c.extend(dequant_counts(config));
    c.extend(acc32_counts(config.lanes));
    c
}

pub fn mmu_cost(config: &MacConfig, cells: &CellFactors) -> MmuCostReport {
    aggregate_cost(config.label.clone(), &mmu_gate_counts(config), cells)
}

/// Full MMU cost of a registry format.
pub fn format_cost(spec: &FormatSpec, cells: &CellFactors) -> Result<MmuCostReport> {
    Ok(mmu_cost(&MacConfig::from_format(spec)?, cells))
}
