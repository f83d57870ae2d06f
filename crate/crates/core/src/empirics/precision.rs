//! Software rounding onto IEEE-style binary formats narrower than f64.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionKind {
    Bf16,
    Fp16,
    Fp32,
}

impl PrecisionKind {
    pub const ALL: [PrecisionKind; 3] = [PrecisionKind::Bf16, PrecisionKind::Fp16, PrecisionKind::Fp32];

    pub fn exponent_bits(self) -> u32 {
        match self {
            PrecisionKind::Bf16 | PrecisionKind::Fp32 => 8,
            PrecisionKind::Fp16 => 5,
        }
    }

    /// Explicit (stored) mantissa bits.
    pub fn mantissa_bits(self) -> u32 {
        match self {
            PrecisionKind::Bf16 => 7,
            PrecisionKind::Fp16 => 10,
            PrecisionKind::Fp32 => 23,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecisionKind::Bf16 => "bf16",
            PrecisionKind::Fp16 => "fp16",
            PrecisionKind::Fp32 => "fp32",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bf16" | "bfloat16" => Ok(PrecisionKind::Bf16),
            "fp16" | "f16" | "float16" | "half" => Ok(PrecisionKind::Fp16),
            "fp32" | "f32" | "float32" | "single" => Ok(PrecisionKind::Fp32),
            other => Err(Error::config(format!(
                "unknown precision `{other}` (expected bf16, fp16 or fp32)"
            ))),
        }
    }
}

impl std::fmt::Display for PrecisionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rounds `x` to the nearest value of the target format (ties to even),
/// including gradual underflow and overflow to infinity.
pub fn emulate_precision(x: f64, kind: PrecisionKind) -> f64 {
    round_to_binary_format(x, kind.exponent_bits(), kind.mantissa_bits())
}

/// Round-to-nearest-even onto a binary format with `exponent_bits` exponent
/// bits (IEEE bias, top binade reserved for Inf/NaN) and `mantissa_bits`
/// explicit fraction bits.
pub fn round_to_binary_format(x: f64, exponent_bits: u32, mantissa_bits: u32) -> f64 {
    debug_assert!((2..=11).contains(&exponent_bits) && mantissa_bits <= 52);
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let bias = (1i32 << (exponent_bits - 1)) - 1;
    let e_min = 1 - bias;
    let e_max = bias;
    let a = x.abs();
    let e = floor_log2(a).max(e_min);
    if e > e_max {
        return f64::INFINITY.copysign(x);
    }
    // a / quantum is exact: both are binary and quantum is a power of two
    let quantum_exp = e - mantissa_bits as i32;
    let r = ldexp((ldexp(a, -quantum_exp)).round_ties_even(), quantum_exp);
    let max_finite = ldexp(2.0 - ldexp(1.0, -(mantissa_bits as i32)), e_max);
    let r = if r > max_finite { f64::INFINITY } else { r };
    r.copysign(x)
}

/// `floor(log2(a))` for finite positive `a`, computed exactly from the bits.
pub(crate) fn floor_log2(a: f64) -> i32 {
    debug_assert!(a > 0.0 && a.is_finite());
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // f64 subnormal: value = frac * 2^-1074
        let frac = bits & ((1u64 << 52) - 1);
        -1074 + 63 - frac.leading_zeros() as i32
    } else {
        biased - 1023
    }
}

/// `a * 2^e` without intermediate overflow for the exponent ranges used here.
pub(crate) fn ldexp(a: f64, e: i32) -> f64 {
    if (-1022..=1023).contains(&e) {
        a * f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        let half = e / 2;
        ldexp(ldexp(a, half), e - half)
    }
}

/// Arithmetic in which every intermediate of the scale computation is
/// rounded to a chosen working precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArithmetic {
    /// Full f64 working precision.
    #[default]
    Exact,
    Emulated(PrecisionKind),
}

impl ScaleArithmetic {
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            ScaleArithmetic::Exact => x,
            ScaleArithmetic::Emulated(kind) => emulate_precision(x, kind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values_pass_through() {
        for kind in PrecisionKind::ALL {
            assert_eq!(emulate_precision(1.0, kind), 1.0);
            assert_eq!(emulate_precision(-0.5, kind), -0.5);
            assert_eq!(emulate_precision(127.0, kind), 127.0);
        }
    }

    #[test]
    fn bf16_relative_error_bound() {
        let x = 1.0 / 127.0;
        let r = emulate_precision(x, PrecisionKind::Bf16);
        assert_ne!(r, x);
        assert!(((r - x) / x).abs() <= 2f64.powi(-8));
    }

    #[test]
    fn fp16_overflow() {
        assert_eq!(emulate_precision(70000.0, PrecisionKind::Fp16), f64::INFINITY);
        assert_eq!(emulate_precision(-70000.0, PrecisionKind::Fp16), f64::NEG_INFINITY);
        assert_eq!(emulate_precision(65504.0, PrecisionKind::Fp16), 65504.0);
        // halfway between 65504 and 65536 rounds to even, i.e. to infinity
        assert_eq!(emulate_precision(65520.0, PrecisionKind::Fp16), f64::INFINITY);
        assert_eq!(emulate_precision(65519.0, PrecisionKind::Fp16), 65504.0);
    }

    #[test]
    fn fp16_subnormals() {
        let tiny = 2f64.powi(-24);
        assert_eq!(emulate_precision(tiny, PrecisionKind::Fp16), tiny);
        assert_eq!(emulate_precision(tiny * 0.5, PrecisionKind::Fp16), 0.0);
        assert_eq!(emulate_precision(tiny * 0.51, PrecisionKind::Fp16), tiny);
        assert_eq!(emulate_precision(tiny * 1.5, PrecisionKind::Fp16), 2.0 * tiny);
    }

    #[test]
    fn floor_log2_handles_subnormals() {
        assert_eq!(floor_log2(1.0), 0);
        assert_eq!(floor_log2(0.75), -1);
        assert_eq!(floor_log2(f64::MIN_POSITIVE), -1022);
        assert_eq!(floor_log2(f64::from_bits(1)), -1074);
        assert_eq!(floor_log2(f64::from_bits(3)), -1073);
    }

    #[test]
    fn parse_names() {
        assert_eq!(PrecisionKind::parse("BF16").unwrap(), PrecisionKind::Bf16);
        assert_eq!(PrecisionKind::parse("float16").unwrap(), PrecisionKind::Fp16);
        assert!(PrecisionKind::parse("fp8").is_err());
    }
}
