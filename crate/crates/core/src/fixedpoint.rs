//! Signed two's-complement fixed-point quantization.
//!
//! A [`FixedPointFormat`] with `m` total bits and `i` fractional bits maps a
//! real `x` to `clip(trunc(x * 2^i))`, saturated to the signed `m`-bit range
//! and rendered as an `m`-character binary string, most significant bit
//! first. The same scheme is used for inputs, weights and activations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    total_bits: u32,
    fractional_bits: u32,
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, fractional_bits: u32) -> Result<Self> {
        if !(1..=64).contains(&total_bits) {
            return Err(Error::input(format!(
                "total bits must be in 1..=64, got {total_bits}"
            )));
        }
        if fractional_bits >= total_bits {
            return Err(Error::input(format!(
                "fractional bits ({fractional_bits}) must leave one sign bit out of {total_bits}"
            )));
        }
        Ok(Self {
            total_bits,
            fractional_bits,
        })
    }

    /// `m`
    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// `i`
    pub fn fractional_bits(&self) -> u32 {
        self.fractional_bits
    }

    /// `k = m - i`, including the sign bit.
    pub fn integer_bits(&self) -> u32 {
        self.total_bits - self.fractional_bits
    }

    /// Largest representable signed integer code, `2^(m-1) - 1`.
    pub fn max_code(&self) -> i64 {
        ((1i128 << (self.total_bits - 1)) - 1) as i64
    }

    /// Smallest representable signed integer code, `-2^(m-1)`.
    pub fn min_code(&self) -> i64 {
        (-(1i128 << (self.total_bits - 1))) as i64
    }

    /// Value of one unit in the last place, `2^-i`.
    pub fn resolution(&self) -> f64 {
        (-(self.fractional_bits as f64)).exp2()
    }

    /// Smallest and largest representable real values.
    pub fn range(&self) -> (f64, f64) {
        (
            self.min_code() as f64 * self.resolution(),
            self.max_code() as f64 * self.resolution(),
        )
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.total_bits, self.fractional_bits)
    }
}

/// Fixed-width binary string, most significant bit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::input("bit string must have positive width"));
        }
        Ok(Self { bits })
    }

    pub fn zeros(width: usize) -> Self {
        assert!(width > 0, "bit string must have positive width");
        Self {
            bits: vec![false; width],
        }
    }

    /// Two's-complement encoding of `value` truncated to `width` bits.
    pub fn from_code(value: i64, width: u32) -> Self {
        assert!((1..=64).contains(&width));
        let bits = (0..width)
            .rev()
            .map(|b| (value as u64 >> b) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Bits, most significant first.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bits, least significant first.
    pub fn lsb_first(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().rev().copied()
    }

    /// Unsigned interpretation; widths above 64 keep the low 64 bits.
    pub fn to_unsigned(&self) -> u64 {
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Signed two's-complement interpretation (width at most 64).
    pub fn to_signed(&self) -> i64 {
        let w = self.width();
        assert!(w <= 64, "signed view limited to 64 bits");
        if w == 0 {
            return 0;
        }
        let shift = 64 - w as u32;
        ((self.to_unsigned() << shift) as i64) >> shift
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BitString::new(bits)
    }
}

/// Quantized signed integer code of `x`: `x * 2^i` truncated toward zero
/// and saturated to the signed `m`-bit range.
pub fn quantize_code(x: f64, fmt: FixedPointFormat) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::input(format!("cannot quantize non-finite value {x}")));
    }
    let (lo, hi) = (fmt.min_code(), fmt.max_code());
    // Power-of-two scaling is exact unless it overflows; anything beyond
    // 2^63 in magnitude saturates regardless of m.
    let scaled = (x * (fmt.fractional_bits() as f64).exp2()).trunc();
    let limit = 63f64.exp2();
    let code = if scaled >= limit {
        hi
    } else if scaled < -limit {
        lo
    } else {
        (scaled as i128).clamp(lo as i128, hi as i128) as i64
    };
    Ok(code)
}

pub fn quantize(x: f64, fmt: FixedPointFormat) -> Result<BitString> {
    Ok(BitString::from_code(quantize_code(x, fmt)?, fmt.total_bits()))
}

pub fn dequantize(b: &BitString, fmt: FixedPointFormat) -> Result<f64> {
    if b.width() != fmt.total_bits() as usize {
        return Err(Error::input(format!(
            "bit string width {} does not match format width {}",
            b.width(),
            fmt.total_bits()
        )));
    }
    Ok(dequantize_code(b.to_signed(), fmt))
}

pub fn dequantize_code(code: i64, fmt: FixedPointFormat) -> f64 {
    code as f64 * fmt.resolution()
}

/// Elementwise [`quantize`], preserving shape.
pub fn quantize_matrix(values: &[Vec<f64>], fmt: FixedPointFormat) -> Result<Vec<Vec<BitString>>> {
    values
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, &x)| {
                    quantize(x, fmt).map_err(|e| Error::input(format!("element ({r}, {c}): {e}")))
                })
                .collect()
        })
        .collect()
}
