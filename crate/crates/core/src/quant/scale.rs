//! Per-block scale factors.

use std::sync::OnceLock;

use serde::Serialize;

use crate::empirics::precision::{floor_log2, ldexp, ScaleArithmetic};
use crate::error::{Error, Result};
use crate::formats::{build_codebook, Codebook, FpLayout, ScaleMode};

/// Exponent range of an unsigned E8M0 scale.
pub const UE8M0_MIN_EXP: i32 = -127;
pub const UE8M0_MAX_EXP: i32 = 127;

/// Scale assigned to all-zero blocks. Every code is zero, so any positive
/// value reproduces the block exactly.
pub const MIN_SCALE: f64 = 5.877_471_754_111_438e-39; // 2^-127

/// Largest finite E4M3 value, the ceiling for first-level NV scales.
pub const E4M3_MAX: f64 = 448.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockScale {
    /// Effective scale `s'` applied to the element codes.
    pub value: f64,
    pub mode: ScaleMode,
    /// Per-tensor FP32 scale for two-level modes.
    pub second_level: Option<f64>,
    /// Unrounded AbsMax scale `s` the block asked for (zero for empty blocks).
    pub ideal: f64,
}

impl BlockScale {
    /// Realized overhead `s'/s`; `None` for all-zero blocks.
    pub fn rho(&self) -> Option<f64> {
        (self.ideal > 0.0).then(|| self.value / self.ideal)
    }
}

/// Largest magnitude in a block, rejecting NaN and infinities.
pub fn absmax(block: &[f64]) -> Result<f64> {
    let mut m = 0.0f64;
    for (i, &v) in block.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::data(format!("non-finite value {v} at block position {i}")));
        }
        m = m.max(v.abs());
    }
    Ok(m)
}

/// `AbsMax(block) / q_ref`, or [`MIN_SCALE`] for an all-zero block.
pub fn absmax_scale(block: &[f64], q_ref: f64) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::data("empty block"));
    }
    if !(q_ref > 0.0) {
        return Err(Error::config(format!("q_ref must be positive, got {q_ref}")));
    }
    let m = absmax(block)?;
    Ok(if m == 0.0 { MIN_SCALE } else { m / q_ref })
}

fn ceil_log2(s: f64) -> i32 {
    let f = floor_log2(s);
    if ldexp(1.0, f) == s {
        f
    } else {
        f + 1
    }
}

/// Smallest power of two `>= s`, saturated to the E8M0 exponent range.
pub fn ue8m0_round_up(s: f64) -> BlockScale {
    debug_assert!(s > 0.0);
    let e = ceil_log2(s).clamp(UE8M0_MIN_EXP, UE8M0_MAX_EXP);
    BlockScale {
        value: ldexp(1.0, e),
        mode: ScaleMode::Ue8m0RoundUp,
        second_level: None,
        ideal: s,
    }
}

/// `2^(floor(log2 absmax) - floor(log2 q_max))`; may leave the block maximum
/// above the representable range.
pub fn ue8m0_round_down(absmax: f64, q_max: f64) -> BlockScale {
    debug_assert!(absmax > 0.0 && q_max > 0.0);
    let e = (floor_log2(absmax) - floor_log2(q_max)).clamp(UE8M0_MIN_EXP, UE8M0_MAX_EXP);
    BlockScale {
        value: ldexp(1.0, e),
        mode: ScaleMode::Ue8m0RoundDown,
        second_level: None,
        ideal: absmax / q_max,
    }
}

fn e4m3_codebook() -> &'static Codebook {
    static CB: OnceLock<Codebook> = OnceLock::new();
    CB.get_or_init(|| build_codebook(&FpLayout::e4m3()).expect("E4M3 codebook"))
}

/// Nearest E4M3 value (ties to even, saturating at 448), never below the
/// smallest positive subnormal.
pub fn round_to_e4m3_scale(x: f64) -> f64 {
    let cb = e4m3_codebook();
    let v = cb.nearest(x.abs());
    if v == 0.0 {
        cb.magnitudes()[1]
    } else {
        v
    }
}

/// Second-level FP32 scale for a tensor whose largest magnitude is `tensor_absmax`.
/// Chosen so that the largest block scale lands on the top E4M3 value, then
/// rounded to f32 as the scale is stored in that format.
pub fn nv_tensor_scale(tensor_absmax: f64, q_ref: f64) -> f64 {
    if tensor_absmax == 0.0 {
        return MIN_SCALE;
    }
    let t = f64::from((tensor_absmax / (q_ref * E4M3_MAX)) as f32);
    t.clamp(MIN_SCALE, f64::from(f32::MAX))
}

/// Two-level scale of one block: the E4M3-rounded block scale times the
/// per-tensor scale.
pub fn e4m3_block_scale(block_absmax: f64, q_ref: f64, tensor_scale: f64) -> BlockScale {
    let ideal = block_absmax / q_ref;
    let first = round_to_e4m3_scale(ideal / tensor_scale);
    BlockScale {
        value: first * tensor_scale,
        mode: ScaleMode::E4m3TwoLevel,
        second_level: Some(tensor_scale),
        ideal,
    }
}

/// Per-tensor and per-block scales of the NV two-level scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLevelScales {
    pub tensor_scale: f64,
    /// First-level scales, each an E4M3 value.
    pub block_scales: Vec<f64>,
}

/// Two-level scales for consecutive blocks of `block_size` elements of a
/// flat buffer.
pub fn e4m3_two_level_scales(values: &[f64], block_size: usize, q_ref: f64) -> Result<TwoLevelScales> {
    if block_size == 0 || !values.len().is_multiple_of(block_size) {
        return Err(Error::shape(format!(
            "{} values cannot be split into blocks of {block_size}",
            values.len()
        )));
    }
    let tensor_scale = nv_tensor_scale(absmax(values)?, q_ref);
    let block_scales = values
        .chunks(block_size)
        .map(|b| {
            let m = absmax(b)?;
            Ok(round_to_e4m3_scale(m / q_ref / tensor_scale))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoLevelScales {
        tensor_scale,
        block_scales,
    })
}

/// Computes the block scale for `mode`. `tensor_scale` is only consulted by
/// the two-level mode. Under emulated arithmetic the AbsMax and the division
/// by `q_ref` are both rounded to the working precision.
pub fn compute_block_scale(
    block_absmax: f64,
    q_ref: f64,
    mode: ScaleMode,
    tensor_scale: f64,
    arith: ScaleArithmetic,
) -> BlockScale {
    if block_absmax == 0.0 {
        return BlockScale {
            value: MIN_SCALE,
            mode,
            second_level: (mode == ScaleMode::E4m3TwoLevel).then_some(tensor_scale),
            ideal: 0.0,
        };
    }
    let m = arith.round(block_absmax);
    match mode {
        ScaleMode::Exact => {
            let s = arith.round(m / q_ref);
            BlockScale {
                value: s,
                mode,
                second_level: None,
                ideal: block_absmax / q_ref,
            }
        }
        ScaleMode::Ue8m0RoundUp => {
            let mut sc = ue8m0_round_up(arith.round(m / q_ref));
            sc.ideal = block_absmax / q_ref;
            sc
        }
        ScaleMode::Ue8m0RoundDown => ue8m0_round_down(m, q_ref),
        ScaleMode::E4m3TwoLevel => e4m3_block_scale(m, q_ref, tensor_scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn absmax_scale_examples() {
        assert_relative_eq!(absmax_scale(&[0.5, -3.0, 2.0], 127.0).unwrap(), 3.0 / 127.0);
        assert_relative_eq!(
            absmax_scale(&[0.5, -3.0, 2.0], 127.0).unwrap(),
            0.023622,
            epsilon = 1e-6
        );
        assert_eq!(absmax_scale(&[0.0, 0.0, 0.0], 7.0).unwrap(), MIN_SCALE);
        assert_eq!(absmax_scale(&[-6.0], 6.0).unwrap(), 1.0);
        assert!(matches!(absmax_scale(&[1.0, f64::NAN], 7.0), Err(Error::Data(_))));
        assert!(matches!(absmax_scale(&[f64::INFINITY], 7.0), Err(Error::Data(_))));
    }

    #[test]
    fn min_scale_is_smallest_e8m0() {
        assert_eq!(MIN_SCALE, 2f64.powi(-127));
    }

    #[test]
    fn round_up_examples() {
        // 2^-6 < 3/127 <= 2^-5
        assert!(2f64.powi(-6) < 3.0 / 127.0 && 3.0 / 127.0 <= 2f64.powi(-5));
        assert_eq!(ue8m0_round_up(3.0 / 127.0).value, 0.03125);
        assert_eq!(ue8m0_round_up(0.25).value, 0.25);
        assert_eq!(ue8m0_round_up(7.0 / 6.0).value, 2.0);
        assert_eq!(ue8m0_round_up(1e-300).value, 2f64.powi(-127));
        assert_eq!(ue8m0_round_up(1e300).value, 2f64.powi(127));
    }

    #[test]
    fn round_down_examples() {
        assert_eq!(ue8m0_round_down(7.0, 6.0).value, 1.0);
        assert_eq!(ue8m0_round_down(4.0, 127.0).value, 2f64.powi(-4));
        assert_eq!(ue8m0_round_down(2f64.powi(9), 2f64.powi(3)).value, 2f64.powi(6));
        // the round-down scale can clip: 7 / 1.0 exceeds E2M1's 6
        assert!(7.0 / ue8m0_round_down(7.0, 6.0).value > 6.0);
    }

    #[test]
    fn e4m3_rounding() {
        assert_eq!(round_to_e4m3_scale(448.0), 448.0);
        assert_eq!(round_to_e4m3_scale(1000.0), 448.0);
        assert_eq!(round_to_e4m3_scale(0.0), 2f64.powi(-9));
        assert_eq!(round_to_e4m3_scale(1.0 + 1.0 / 16.0), 1.0); // tie to even mantissa
        assert_eq!(round_to_e4m3_scale(1.0 + 3.0 / 16.0), 1.25);
    }

    #[test]
    fn single_block_two_level_scale_hits_448() {
        let block: Vec<f64> = (0..16).map(|i| (i as f64 - 7.3) * 0.37).collect();
        let s = e4m3_two_level_scales(&block, 16, 6.0).unwrap();
        assert_eq!(s.block_scales.len(), 1);
        let b = s.block_scales[0];
        assert!((b - 448.0).abs() <= 448.0 * 2f64.powi(-4));
        assert!(b <= E4M3_MAX);
    }

    #[test]
    fn zero_tensor_two_level() {
        let s = e4m3_two_level_scales(&[0.0; 32], 16, 6.0).unwrap();
        assert_eq!(s.tensor_scale, MIN_SCALE);
        assert!(s.block_scales.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn uniform_blocks_share_a_scale() {
        let v: Vec<f64> = (0..64)
            .map(|i| if i % 16 == 3 { -2.5 } else { 0.1 * (i % 7) as f64 })
            .collect();
        let s = e4m3_two_level_scales(&v, 16, 7.0).unwrap();
        assert!(s.block_scales.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn emulated_arithmetic_perturbs_exact_scale() {
        use crate::empirics::precision::PrecisionKind;
        let exact = compute_block_scale(3.0, 127.0, ScaleMode::Exact, 1.0, ScaleArithmetic::Exact);
        let bf16 = compute_block_scale(
            3.0,
            127.0,
            ScaleMode::Exact,
            1.0,
            ScaleArithmetic::Emulated(PrecisionKind::Bf16),
        );
        assert_eq!(exact.value, 3.0 / 127.0);
        assert_ne!(bf16.value, exact.value);
        assert!(((bf16.value - exact.value) / exact.value).abs() <= 2f64.powi(-8));
    }
}
