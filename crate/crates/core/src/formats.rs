//! Low-bit element formats, their codebooks, and the format registry.
//!
//! Every block format is described by a [`FormatSpec`]: an element layout
//! (integer or minifloat), the number of elements sharing one scale, and the
//! way that scale is represented. The standard table covers the MX formats
//! (block 32, power-of-two UE8M0 scale) and the NV formats (block 16, E4M3
//! scale with a second per-tensor FP32 level), in both INT and FP flavours.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `E + M` accepted for a custom minifloat layout. Keeps codebooks
/// small enough to enumerate (2^20 entries at most).
const MAX_CODE_BITS: u32 = 20;

/// Encodings that are removed from the finite codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCodes {
    /// Every bit pattern is a finite number (E2M3, E2M1).
    None,
    /// Only the all-ones exponent with all-ones mantissa is NaN (OCP E4M3).
    NanAllOnes,
    /// The all-ones exponent is reserved for Inf/NaN (IEEE 754 style).
    IeeeInfNan,
}

/// Sign/exponent/mantissa minifloat layout with subnormals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpLayout {
    exponent_bits: u32,
    mantissa_bits: u32,
    bias: i32,
    q_max: f64,
    n_min: f64,
    s_min: f64,
    special_codes: SpecialCodes,
}

impl FpLayout {
    pub fn new(exponent_bits: u32, mantissa_bits: u32, bias: i32, special_codes: SpecialCodes) -> Result<Self> {
        if exponent_bits == 0 {
            return Err(Error::config("FP layouts need at least one exponent bit"));
        }
        if exponent_bits + mantissa_bits > MAX_CODE_BITS {
            return Err(Error::config(format!(
                "E{exponent_bits}M{mantissa_bits} is too wide to enumerate (E + M must be <= {MAX_CODE_BITS})"
            )));
        }
        let n_min = pow2(1 - bias);
        let s_min = n_min * pow2(-(mantissa_bits as i32));
        let mut layout = FpLayout {
            exponent_bits,
            mantissa_bits,
            bias,
            q_max: 0.0,
            n_min,
            s_min,
            special_codes,
        };
        let magnitudes = layout.enumerate_magnitudes();
        layout.q_max = *magnitudes
            .last()
            .ok_or_else(|| Error::config("layout has no finite codes"))?;
        if layout.q_max <= 0.0 || !layout.q_max.is_finite() {
            return Err(Error::config(format!(
                "E{exponent_bits}M{mantissa_bits} with bias {bias} has no finite positive value"
            )));
        }
        Ok(layout)
    }

    /// IEEE-style bias `2^(E-1) - 1`.
    pub fn with_default_bias(exponent_bits: u32, mantissa_bits: u32, special_codes: SpecialCodes) -> Result<Self> {
        if exponent_bits == 0 {
            return Err(Error::config("FP layouts need at least one exponent bit"));
        }
        let bias = (1i32 << (exponent_bits - 1)) - 1;
        Self::new(exponent_bits, mantissa_bits, bias, special_codes)
    }

    /// OCP FP8 E4M3: max 448, smallest subnormal 2^-9.
    pub fn e4m3() -> Self {
        Self::new(4, 3, 7, SpecialCodes::NanAllOnes).expect("E4M3 is a valid layout")
    }

    /// OCP FP6 E2M3: max 7.5, smallest subnormal 0.125.
    pub fn e2m3() -> Self {
        Self::new(2, 3, 1, SpecialCodes::None).expect("E2M3 is a valid layout")
    }

    /// OCP FP4 E2M1: max 6, smallest subnormal 0.5.
    pub fn e2m1() -> Self {
        Self::new(2, 1, 1, SpecialCodes::None).expect("E2M1 is a valid layout")
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn bias(&self) -> i32 {
        self.bias
    }

    /// Largest finite magnitude.
    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Smallest positive normal, `2^(1 - bias)`.
    pub fn n_min(&self) -> f64 {
        self.n_min
    }

    /// Subnormal spacing, which is also the smallest positive value.
    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn special_codes(&self) -> SpecialCodes {
        self.special_codes
    }

    /// Ratio of the largest to the smallest positive representable magnitude.
    pub fn dynamic_range(&self) -> f64 {
        self.q_max / self.s_min
    }

    pub fn name(&self) -> String {
        format!("E{}M{}", self.exponent_bits, self.mantissa_bits)
    }

    /// Non-negative finite magnitudes in code order (code 0 is +0).
    fn enumerate_magnitudes(&self) -> Vec<f64> {
        let exp_codes = 1u32 << self.exponent_bits;
        let man_codes = 1u32 << self.mantissa_bits;
        let man_scale = pow2(-(self.mantissa_bits as i32));
        let mut out = Vec::with_capacity((exp_codes * man_codes) as usize);
        for e in 0..exp_codes {
            let top_exponent = e == exp_codes - 1;
            if top_exponent && self.special_codes == SpecialCodes::IeeeInfNan {
                break;
            }
            for m in 0..man_codes {
                if top_exponent && m == man_codes - 1 && self.special_codes == SpecialCodes::NanAllOnes {
                    continue;
                }
                let frac = f64::from(m) * man_scale;
                let v = if e == 0 {
                    frac * self.n_min
                } else {
                    (1.0 + frac) * pow2(e as i32 - self.bias)
                };
                out.push(v);
            }
        }
        out
    }
}

/// Whether a signed integer grid keeps the extra two's-complement negative code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntClipping {
    /// `[-(2^(b-1) - 1), 2^(b-1) - 1]`
    Symmetric,
    /// `[-2^(b-1), 2^(b-1) - 1]`
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntLayout {
    bits: u32,
    q_max: i32,
    q_min: i32,
    clipping: IntClipping,
}

impl IntLayout {
    pub fn new(bits: u32, clipping: IntClipping) -> Result<Self> {
        if !(2..=24).contains(&bits) {
            return Err(Error::config(format!(
                "INT width must be within 2..=24 bits, got {bits}"
            )));
        }
        let q_max = (1i32 << (bits - 1)) - 1;
        let q_min = match clipping {
            IntClipping::Symmetric => -q_max,
            IntClipping::Asymmetric => -q_max - 1,
        };
        Ok(IntLayout {
            bits,
            q_max,
            q_min,
            clipping,
        })
    }

    pub fn symmetric(bits: u32) -> Self {
        Self::new(bits, IntClipping::Symmetric).expect("valid INT width")
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn clipping(&self) -> IntClipping {
        self.clipping
    }

    pub fn with_clipping(&self, clipping: IntClipping) -> Self {
        Self::new(self.bits, clipping).expect("width already validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementFormat {
    Int(IntLayout),
    Fp(FpLayout),
}

impl ElementFormat {
    /// The magnitude that the block maximum is mapped onto by AbsMax scaling.
    pub fn q_ref(&self) -> f64 {
        match self {
            ElementFormat::Int(l) => f64::from(l.q_max()),
            ElementFormat::Fp(l) => l.q_max(),
        }
    }

    /// Total storage width including the sign bit.
    pub fn bit_width(&self) -> u32 {
        match self {
            ElementFormat::Int(l) => l.bits(),
            ElementFormat::Fp(l) => 1 + l.exponent_bits() + l.mantissa_bits(),
        }
    }

    /// Smallest positive representable magnitude.
    pub fn min_positive(&self) -> f64 {
        match self {
            ElementFormat::Int(_) => 1.0,
            ElementFormat::Fp(l) => l.s_min(),
        }
    }
}

/// How the per-block scale is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScaleMode {
    /// Power-of-two scale, exponent rounded up so the block maximum never clips.
    Ue8m0RoundUp,
    /// Power-of-two scale from floor exponents (OCP reference rule; may clip).
    Ue8m0RoundDown,
    /// E4M3 per-block scale under an FP32 per-tensor scale.
    E4m3TwoLevel,
    /// Unrounded AbsMax scale.
    Exact,
}

impl ScaleMode {
    pub fn is_ue8m0(self) -> bool {
        matches!(self, ScaleMode::Ue8m0RoundUp | ScaleMode::Ue8m0RoundDown)
    }

    pub fn default_rho(self) -> f64 {
        if self.is_ue8m0() {
            1.5
        } else {
            1.0
        }
    }
}

/// One row of the format table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormatSpec {
    pub name: String,
    pub element: ElementFormat,
    pub block_size: usize,
    pub scale_mode: ScaleMode,
    /// Scale-overhead factor used by the closed-form QSNR models only.
    pub rho_model: f64,
}

impl FormatSpec {
    pub fn new(
        name: impl Into<String>,
        element: ElementFormat,
        block_size: usize,
        scale_mode: ScaleMode,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::config("block size must be positive"));
        }
        Ok(FormatSpec {
            name: name.into(),
            element,
            block_size,
            scale_mode,
            rho_model: scale_mode.default_rho(),
        })
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho_model = rho;
        self
    }

    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn with_scale_mode(mut self, scale_mode: ScaleMode) -> Self {
        self.scale_mode = scale_mode;
        self
    }

    pub fn q_ref(&self) -> f64 {
        self.element.q_ref()
    }

    pub fn is_int(&self) -> bool {
        matches!(self.element, ElementFormat::Int(_))
    }

    pub fn fp_layout(&self) -> Option<&FpLayout> {
        match &self.element {
            ElementFormat::Fp(l) => Some(l),
            ElementFormat::Int(_) => None,
        }
    }

    pub fn int_layout(&self) -> Option<&IntLayout> {
        match &self.element {
            ElementFormat::Int(l) => Some(l),
            ElementFormat::Fp(_) => None,
        }
    }

    /// Flattened description used for the JSON registry dump.
    pub fn summary(&self) -> FormatSummary {
        let (scale_1, scale_2) = match self.scale_mode {
            ScaleMode::Ue8m0RoundUp | ScaleMode::Ue8m0RoundDown => ("UE8M0", None),
            ScaleMode::E4m3TwoLevel => ("E4M3", Some("FP32")),
            ScaleMode::Exact => ("EXACT", None),
        };
        let min_value = self.element.min_positive();
        FormatSummary {
            name: self.name.clone(),
            element_name: match &self.element {
                ElementFormat::Int(l) => format!("INT{}", l.bits()),
                ElementFormat::Fp(l) => l.name(),
            },
            spec: self.clone(),
            max_value: self.q_ref(),
            min_value,
            dynamic_range: self.q_ref() / min_value,
            scale_1: scale_1.to_string(),
            scale_2: scale_2.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormatSummary {
    pub name: String,
    pub element_name: String,
    #[serde(flatten)]
    pub spec: FormatSpec,
    pub max_value: f64,
    pub min_value: f64,
    pub dynamic_range: f64,
    pub scale_1: String,
    pub scale_2: Option<String>,
}

/// Sorted finite values of a minifloat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// Non-negative magnitudes indexed by their bit code.
    magnitudes: Vec<f64>,
    normal_threshold: f64,
}

impl Codebook {
    /// Full signed value set, strictly increasing, with a single zero.
    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.magnitudes[1..].iter().rev().map(|v| -v).collect();
        out.extend_from_slice(&self.magnitudes);
        out
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn normal_threshold(&self) -> f64 {
        self.normal_threshold
    }

    pub fn max(&self) -> f64 {
        *self.magnitudes.last().expect("codebooks are never empty")
    }

    /// Number of distinct signed values.
    pub fn len(&self) -> usize {
        2 * self.magnitudes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed magnitude code of the nearest codebook value. Out-of-range inputs
    /// saturate to the largest magnitude; ties go to the even code, which is the
    /// even-mantissa neighbour.
    pub fn nearest_code(&self, x: f64) -> i32 {
        let a = x.abs();
        let mags = &self.magnitudes;
        let hi = mags.partition_point(|&v| v < a);
        let idx = if hi == mags.len() {
            mags.len() - 1
        } else if hi == 0 || mags[hi] == a {
            hi
        } else {
            let lo = hi - 1;
            let d_lo = a - mags[lo];
            let d_hi = mags[hi] - a;
            if d_lo < d_hi {
                lo
            } else if d_hi < d_lo {
                hi
            } else if lo % 2 == 0 {
                lo
            } else {
                hi
            }
        };
        let code = idx as i32;
        if x.is_sign_negative() {
            -code
        } else {
            code
        }
    }

    pub fn decode(&self, code: i32) -> f64 {
        let v = self.magnitudes[code.unsigned_abs() as usize];
        if code < 0 {
            -v
        } else {
            v
        }
    }

    pub fn nearest(&self, x: f64) -> f64 {
        self.decode(self.nearest_code(x))
    }
}

/// Enumerates every finite value of `layout`. Negative zero is folded into zero.
pub fn build_codebook(layout: &FpLayout) -> Result<Codebook> {
    if layout.exponent_bits == 0 {
        return Err(Error::config("codebooks require at least one exponent bit"));
    }
    let magnitudes = layout.enumerate_magnitudes();
    debug_assert!(magnitudes.windows(2).all(|w| w[0] < w[1]));
    Ok(Codebook {
        magnitudes,
        normal_threshold: layout.n_min,
    })
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn table_formats() -> Vec<FormatSpec> {
    use ElementFormat::{Fp, Int};
    use ScaleMode::{E4m3TwoLevel, Ue8m0RoundUp};
    let row = |name: &str, element, g, mode| FormatSpec::new(name, element, g, mode).expect("static table row");
    vec![
        row("MXFP8", Fp(FpLayout::e4m3()), 32, Ue8m0RoundUp),
        row("MXINT8", Int(IntLayout::symmetric(8)), 32, Ue8m0RoundUp),
        row("MXFP6", Fp(FpLayout::e2m3()), 32, Ue8m0RoundUp),
        row("MXINT6", Int(IntLayout::symmetric(6)), 32, Ue8m0RoundUp),
        row("MXFP4", Fp(FpLayout::e2m1()), 32, Ue8m0RoundUp),
        row("MXINT4", Int(IntLayout::symmetric(4)), 32, Ue8m0RoundUp),
        row("NVFP4", Fp(FpLayout::e2m1()), 16, E4m3TwoLevel),
        row("NVINT4", Int(IntLayout::symmetric(4)), 16, E4m3TwoLevel),
    ]
}

/// The eight standard block formats, in table order.
pub fn standard_formats() -> &'static [FormatSpec] {
    static TABLE: OnceLock<Vec<FormatSpec>> = OnceLock::new();
    TABLE.get_or_init(table_formats)
}

/// Looks a standard format up by (case-insensitive) name.
pub fn lookup_format(name: &str) -> Result<FormatSpec> {
    FormatRegistry::standard().lookup(name)
}

/// Name-keyed collection of formats. Starts from the standard table; custom
/// layouts can be added for E/M sweeps.
#[derive(Debug, Clone)]
pub struct FormatRegistry {
    formats: Vec<FormatSpec>,
}

impl FormatRegistry {
    pub fn standard() -> Self {
        FormatRegistry {
            formats: standard_formats().to_vec(),
        }
    }

    pub fn empty() -> Self {
        FormatRegistry { formats: Vec::new() }
    }

    /// Adds or replaces a format with the same name.
    pub fn register(&mut self, spec: FormatSpec) {
        match self.position(&spec.name) {
            Some(i) => self.formats[i] = spec,
            None => self.formats.push(spec),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<FormatSpec> {
        self.position(name)
            .map(|i| self.formats[i].clone())
            .ok_or_else(|| Error::UnknownFormat {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.formats.iter().map(|f| f.name.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FormatSpec> {
        self.formats.iter()
    }

    fn position(&self, name: &str) -> Option<usize> {
        if name.is_empty() {
            return None;
        }
        self.formats.iter().position(|f| f.name.eq_ignore_ascii_case(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e2m1_codebook_matches_table() {
        let cb = build_codebook(&FpLayout::e2m1()).unwrap();
        assert_eq!(
            cb.values(),
            vec![-6.0, -4.0, -3.0, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]
        );
        assert_eq!(cb.max(), 6.0);
        assert_eq!(cb.normal_threshold(), 1.0);
    }

    #[test]
    fn e4m3_range() {
        let l = FpLayout::e4m3();
        let cb = build_codebook(&l).unwrap();
        assert_eq!(cb.max(), 448.0);
        assert_eq!(l.q_max(), 448.0);
        assert_eq!(cb.magnitudes()[1], 2f64.powi(-9));
        assert_eq!(l.n_min(), 2f64.powi(-6));
        // 254 finite codes counting +0 and -0 separately
        assert_eq!(2 * cb.magnitudes().len(), 254);
        assert_eq!(cb.len(), 253);
        assert_eq!(l.dynamic_range(), 1.75 * 2f64.powi(17));
    }

    #[test]
    fn e2m3_range() {
        let l = FpLayout::e2m3();
        let cb = build_codebook(&l).unwrap();
        assert_eq!(cb.max(), 7.5);
        assert_eq!(cb.magnitudes()[1], 0.125);
        assert_eq!(l.dynamic_range(), 60.0);
    }

    #[test]
    fn zero_exponent_is_rejected() {
        assert!(matches!(
            FpLayout::new(0, 3, 0, SpecialCodes::None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ieee_layout_drops_top_binade() {
        let half = FpLayout::with_default_bias(5, 10, SpecialCodes::IeeeInfNan).unwrap();
        assert_eq!(half.q_max(), 65504.0);
        assert_eq!(half.s_min(), 2f64.powi(-24));
    }

    #[test]
    fn subnormal_spacing_is_s_min() {
        for l in [FpLayout::e4m3(), FpLayout::e2m3(), FpLayout::e2m1()] {
            let cb = build_codebook(&l).unwrap();
            let below: Vec<f64> = cb.magnitudes().iter().copied().filter(|&v| v <= l.n_min()).collect();
            for w in below.windows(2) {
                assert_eq!(w[1] - w[0], l.s_min());
            }
        }
    }

    #[test]
    fn spacing_ratios_are_powers_of_two() {
        for spec in standard_formats().iter().filter_map(|f| f.fp_layout()) {
            let cb = build_codebook(spec).unwrap();
            let v = cb.values();
            let gaps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
            for g in gaps.windows(2) {
                let r = g[1] / g[0];
                let (m, _) = frexp(r);
                assert_eq!(m, 0.5, "gap ratio {r} is not a power of two");
            }
        }
    }

    fn frexp(x: f64) -> (f64, i32) {
        let e = x.abs().log2().floor() as i32 + 1;
        (x / 2f64.powi(e), e)
    }

    #[test]
    fn codebook_is_symmetric_and_deterministic() {
        let a = build_codebook(&FpLayout::e4m3()).unwrap();
        let b = build_codebook(&FpLayout::e4m3()).unwrap();
        assert_eq!(a, b);
        let v = a.values();
        for (x, y) in v.iter().zip(v.iter().rev()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn nearest_breaks_ties_to_even_mantissa() {
        let cb = build_codebook(&FpLayout::e2m1()).unwrap();
        // 5 sits between 4 (code 6) and 6 (code 7)
        assert_eq!(cb.nearest(5.0), 4.0);
        assert_eq!(cb.nearest(-5.0), -4.0);
        // 2.5 between 2 (code 4) and 3 (code 5)
        assert_eq!(cb.nearest(2.5), 2.0);
        // 3.5 between 3 (code 5) and 4 (code 6)
        assert_eq!(cb.nearest(3.5), 4.0);
        assert_eq!(cb.nearest(0.25), 0.0);
        assert_eq!(cb.nearest(0.75), 1.0);
        assert_eq!(cb.nearest(100.0), 6.0);
    }

    #[test]
    fn lookup_standard_rows() {
        let mxint8 = lookup_format("MXINT8").unwrap();
        assert_eq!(mxint8.block_size, 32);
        assert_eq!(mxint8.scale_mode, ScaleMode::Ue8m0RoundUp);
        let l = mxint8.int_layout().unwrap();
        assert_eq!((l.bits(), l.q_max(), l.q_min()), (8, 127, -127));

        let nvfp4 = lookup_format("nvfp4").unwrap();
        assert_eq!(nvfp4.block_size, 16);
        assert_eq!(nvfp4.scale_mode, ScaleMode::E4m3TwoLevel);
        assert_eq!(nvfp4.fp_layout().unwrap(), &FpLayout::e2m1());
        assert_eq!(nvfp4.rho_model, 1.0);
        assert_eq!(lookup_format("MXFP6").unwrap().rho_model, 1.5);
    }

    #[test]
    fn unknown_format_lists_alternatives() {
        match lookup_format("") {
            Err(Error::UnknownFormat { available, .. }) => assert_eq!(available.len(), 8),
            other => panic!("expected unknown-format error, got {other:?}"),
        }
    }

    #[test]
    fn table_max_values() {
        let expect = [
            ("MXFP8", 448.0, 32),
            ("MXINT8", 127.0, 32),
            ("MXFP6", 7.5, 32),
            ("MXINT6", 31.0, 32),
            ("MXFP4", 6.0, 32),
            ("MXINT4", 7.0, 32),
            ("NVFP4", 6.0, 16),
            ("NVINT4", 7.0, 16),
        ];
        for (name, max, g) in expect {
            let f = lookup_format(name).unwrap();
            assert_eq!(f.q_ref(), max, "{name}");
            assert_eq!(f.block_size, g, "{name}");
        }
    }

    #[test]
    fn custom_formats_can_be_registered() {
        let mut reg = FormatRegistry::standard();
        let e3m2 = FpLayout::with_default_bias(3, 2, SpecialCodes::None).unwrap();
        reg.register(FormatSpec::new("MXFP6_E3M2", ElementFormat::Fp(e3m2), 32, ScaleMode::Ue8m0RoundUp).unwrap());
        assert_eq!(reg.lookup("mxfp6_e3m2").unwrap().q_ref(), 28.0);
        assert_eq!(reg.names().len(), 9);
    }

    #[test]
    fn asymmetric_int_keeps_extra_negative_code() {
        let l = IntLayout::new(8, IntClipping::Asymmetric).unwrap();
        assert_eq!((l.q_min(), l.q_max()), (-128, 127));
    }
}
