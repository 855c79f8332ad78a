//! Floating-point precisions and the typed value buffers stored at each of them.
//!
//! Binary16 has no native host arithmetic. Every binary16 operation is carried
//! out by widening to binary32 and rounding the result back to binary16 with
//! round-to-nearest-even. Since binary32 carries more than twice the binary16
//! significand plus two bits, this double rounding yields the correctly rounded
//! binary16 result for `+`, `-`, `*` and `/`.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use half::f16;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Precision {
    #[serde(rename = "fp16")]
    Binary16,
    #[serde(rename = "fp32")]
    Binary32,
    #[serde(rename = "fp64")]
    Binary64,
}

impl Precision {
    pub const ALL: [Precision; 3] = [Precision::Binary16, Precision::Binary32, Precision::Binary64];

    pub const fn bytes_per_value(self) -> usize {
        match self {
            Precision::Binary16 => 2,
            Precision::Binary32 => 4,
            Precision::Binary64 => 8,
        }
    }

    /// Tag byte used by the binary ground-set format.
    pub const fn tag(self) -> u8 {
        match self {
            Precision::Binary16 => 0,
            Precision::Binary32 => 1,
            Precision::Binary64 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Precision::Binary16),
            1 => Some(Precision::Binary32),
            2 => Some(Precision::Binary64),
            _ => None,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Precision::Binary16 => "fp16",
            Precision::Binary32 => "fp32",
            Precision::Binary64 => "fp64",
        }
    }

    /// Rounds `value` to this precision and widens it back.
    pub fn round(self, value: f64) -> f64 {
        match self {
            Precision::Binary16 => f16::from_f64(value).to_f64(),
            Precision::Binary32 => value as f32 as f64,
            Precision::Binary64 => value,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fp16" | "binary16" | "half" => Ok(Precision::Binary16),
            "fp32" | "binary32" | "single" => Ok(Precision::Binary32),
            "fp64" | "binary64" | "double" => Ok(Precision::Binary64),
            other => Err(Error::Format(format!("unknown precision `{other}`"))),
        }
    }
}

/// A scalar type the evaluation kernels can be instantiated with.
///
/// `Acc` is the type row reductions accumulate in: binary32 for binary16 data,
/// the element type itself otherwise.
pub trait Element: Float + Send + Sync + fmt::Debug + Default + 'static {
    type Acc: Float + AddAssign + Send + Sync + fmt::Debug + 'static;

    const PRECISION: Precision;

    fn from_f64(value: f64) -> Self;
    fn to_f64(self) -> f64;
    fn widen(self) -> Self::Acc;
    fn narrow(acc: Self::Acc) -> Self;
    fn acc_to_f64(acc: Self::Acc) -> f64;
    fn acc_from_usize(n: usize) -> Self::Acc;

    fn slice(values: &Values) -> Option<&[Self]>;
    fn wrap(values: Vec<Self>) -> Values;
}

impl Element for f16 {
    type Acc = f32;
    const PRECISION: Precision = Precision::Binary16;

    #[inline]
    fn from_f64(value: f64) -> Self {
        f16::from_f64(value)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f16::to_f64(self)
    }
    #[inline]
    fn widen(self) -> f32 {
        self.to_f32()
    }
    #[inline]
    fn narrow(acc: f32) -> Self {
        f16::from_f32(acc)
    }
    #[inline]
    fn acc_to_f64(acc: f32) -> f64 {
        acc as f64
    }
    #[inline]
    fn acc_from_usize(n: usize) -> f32 {
        n as f32
    }
    fn slice(values: &Values) -> Option<&[Self]> {
        match values {
            Values::Binary16(v) => Some(v),
            _ => None,
        }
    }
    fn wrap(values: Vec<Self>) -> Values {
        Values::Binary16(values)
    }
}

impl Element for f32 {
    type Acc = f32;
    const PRECISION: Precision = Precision::Binary32;

    #[inline]
    fn from_f64(value: f64) -> Self {
        value as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn widen(self) -> f32 {
        self
    }
    #[inline]
    fn narrow(acc: f32) -> Self {
        acc
    }
    #[inline]
    fn acc_to_f64(acc: f32) -> f64 {
        acc as f64
    }
    #[inline]
    fn acc_from_usize(n: usize) -> f32 {
        n as f32
    }
    fn slice(values: &Values) -> Option<&[Self]> {
        match values {
            Values::Binary32(v) => Some(v),
            _ => None,
        }
    }
    fn wrap(values: Vec<Self>) -> Values {
        Values::Binary32(values)
    }
}

impl Element for f64 {
    type Acc = f64;
    const PRECISION: Precision = Precision::Binary64;

    #[inline]
    fn from_f64(value: f64) -> Self {
        value
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn widen(self) -> f64 {
        self
    }
    #[inline]
    fn narrow(acc: f64) -> Self {
        acc
    }
    #[inline]
    fn acc_to_f64(acc: f64) -> f64 {
        acc
    }
    #[inline]
    fn acc_from_usize(n: usize) -> f64 {
        n as f64
    }
    fn slice(values: &Values) -> Option<&[Self]> {
        match values {
            Values::Binary64(v) => Some(v),
            _ => None,
        }
    }
    fn wrap(values: Vec<Self>) -> Values {
        Values::Binary64(values)
    }
}

/// A flat value buffer at one of the supported precisions.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Binary16(Vec<f16>),
    Binary32(Vec<f32>),
    Binary64(Vec<f64>),
}

impl Values {
    /// Rounds every value to `precision`.
    pub fn from_f64(values: &[f64], precision: Precision) -> Self {
        match precision {
            Precision::Binary16 => Values::Binary16(values.iter().map(|&v| f16::from_f64(v)).collect()),
            Precision::Binary32 => Values::Binary32(values.iter().map(|&v| v as f32).collect()),
            Precision::Binary64 => Values::Binary64(values.to_vec()),
        }
    }

    pub fn zeros(len: usize, precision: Precision) -> Self {
        match precision {
            Precision::Binary16 => Values::Binary16(vec![f16::ZERO; len]),
            Precision::Binary32 => Values::Binary32(vec![0.0; len]),
            Precision::Binary64 => Values::Binary64(vec![0.0; len]),
        }
    }

    pub fn precision(&self) -> Precision {
        match self {
            Values::Binary16(_) => Precision::Binary16,
            Values::Binary32(_) => Precision::Binary32,
            Values::Binary64(_) => Precision::Binary64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Values::Binary16(v) => v.len(),
            Values::Binary32(v) => v.len(),
            Values::Binary64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.precision().bytes_per_value()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            Values::Binary16(v) => v[index].to_f64(),
            Values::Binary32(v) => v[index] as f64,
            Values::Binary64(v) => v[index],
        }
    }

    /// Stores `value` rounded to the buffer's precision.
    pub fn set(&mut self, index: usize, value: f64) {
        match self {
            Values::Binary16(v) => v[index] = f16::from_f64(value),
            Values::Binary32(v) => v[index] = value as f32,
            Values::Binary64(v) => v[index] = value,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Bit pattern of one value, widened to 64 bits. Used for bit-exact comparisons.
    pub fn bits(&self, index: usize) -> u64 {
        match self {
            Values::Binary16(v) => v[index].to_bits() as u64,
            Values::Binary32(v) => v[index].to_bits() as u64,
            Values::Binary64(v) => v[index].to_bits(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_per_value_follows_tag() {
        assert_eq!(Precision::Binary16.bytes_per_value(), 2);
        assert_eq!(Precision::Binary32.bytes_per_value(), 4);
        assert_eq!(Precision::Binary64.bytes_per_value(), 8);
        for p in Precision::ALL {
            assert_eq!(Precision::from_tag(p.tag()), Some(p));
            assert_eq!(p.name().parse::<Precision>().unwrap(), p);
        }
        assert_eq!(Precision::from_tag(3), None);
    }

    #[test]
    fn binary16_arithmetic_rounds_to_nearest_even() {
        // 2048 + 1 is a tie between 2048 and 2050; even mantissa wins.
        let a = f16::from_f32(2048.0);
        let b = f16::from_f32(1.0);
        assert_eq!((a + b).to_f32(), 2048.0);
        // 2050 + 1 ties between 2050 and 2052; 2052 has the even mantissa.
        let c = f16::from_f32(2050.0);
        assert_eq!((c + b).to_f32(), 2052.0);
        assert_eq!(<f16 as Float>::max_value().to_f32(), 65504.0);
    }

    #[test]
    fn values_round_on_store() {
        let mut v = Values::zeros(2, Precision::Binary16);
        v.set(0, 0.1);
        assert_eq!(v.get(0), f16::from_f64(0.1).to_f64());
        assert_eq!(v.byte_len(), 4);
        assert_eq!(Precision::Binary32.round(0.1), 0.1f32 as f64);
    }
}
