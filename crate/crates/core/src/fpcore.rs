//! Bit-level IEEE-754 introspection: decomposition into sign, integral
//! significand and exponent, unit in the last place, directed neighbors and
//! round-to-nearest-even onto a narrower format.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eft::two_sum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatName {
    Binary32,
    Binary64,
}

impl FormatName {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatName::Binary32 => "binary32",
            FormatName::Binary64 => "binary64",
        }
    }

    pub fn format(self) -> FloatFormat {
        match self {
            FormatName::Binary32 => FloatFormat::BINARY32,
            FormatName::Binary64 => FloatFormat::BINARY64,
        }
    }
}

impl Display for FormatName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormatName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary32" | "f32" | "float" | "single" => Ok(FormatName::Binary32),
            "binary64" | "f64" | "double" => Ok(FormatName::Binary64),
            _ => Err(Error::InvalidFormat(s.to_string())),
        }
    }
}

/// Parameters of a binary interchange format.
///
/// `precision_bits` counts the implicit leading bit, so a normal value is
/// `(-1)^s * m * 2^e` with `2^(p-1) <= m < 2^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    pub name: FormatName,
    pub precision_bits: u32,
    pub emin: i32,
    pub emax: i32,
}

impl FloatFormat {
    pub const BINARY32: FloatFormat =
        FloatFormat { name: FormatName::Binary32, precision_bits: 24, emin: -126, emax: 127 };

    pub const BINARY64: FloatFormat =
        FloatFormat { name: FormatName::Binary64, precision_bits: 53, emin: -1022, emax: 1023 };

    pub const fn storage_bits(&self) -> u32 {
        match self.name {
            FormatName::Binary32 => 32,
            FormatName::Binary64 => 64,
        }
    }

    pub const fn fraction_bits(&self) -> u32 {
        self.precision_bits - 1
    }

    pub const fn bias(&self) -> i32 {
        self.emax
    }

    /// Exponent of the smallest subnormal, `emin - (p - 1)`.
    pub const fn quantum_min(&self) -> i32 {
        self.emin - (self.precision_bits as i32 - 1)
    }

    const fn sign_mask(&self) -> u64 {
        1 << (self.storage_bits() - 1)
    }

    const fn fraction_mask(&self) -> u64 {
        (1 << self.fraction_bits()) - 1
    }

    const fn exponent_mask(&self) -> u64 {
        !self.sign_mask() & !self.fraction_mask() & (u64::MAX >> (64 - self.storage_bits()))
    }

    /// Largest number of decimal significant digits the format can carry,
    /// `p * log10(2)`.
    pub fn decimal_digits_cap(&self) -> f64 {
        self.precision_bits as f64 * std::f64::consts::LOG10_2
    }
}

/// Operations shared by `f32` and `f64` that the rounding machinery needs.
pub trait IeeeFloat:
    Copy
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const FORMAT: FloatFormat;
    const ZERO: Self;
    const ONE: Self;
    const INFINITY: Self;
    const NAN: Self;
    const MAX: Self;

    /// Raw bit pattern, zero-extended to 64 bits.
    fn to_raw(self) -> u64;
    fn from_raw(bits: u64) -> Self;

    /// Hardware fused multiply-add, `self * b + c` with a single rounding.
    fn fma(self, b: Self, c: Self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;
    fn is_nan(self) -> bool;
    fn to_f64(self) -> f64;
    /// Round-to-nearest conversion from `f64`.
    fn from_f64(x: f64) -> Self;

    /// A uniform value on `[0, 1)` with `p` bits of resolution, built from
    /// the top bits of `word`. Exact in `Self`.
    fn uniform_from_u64(word: u64) -> Self;

    fn is_zero(self) -> bool {
        self == Self::ZERO
    }
}

macro_rules! impl_ieee_float {
    ($t:ty, $bits:ty, $fmt:expr) => {
        impl IeeeFloat for $t {
            const FORMAT: FloatFormat = $fmt;
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const INFINITY: Self = <$t>::INFINITY;
            const NAN: Self = <$t>::NAN;
            const MAX: Self = <$t>::MAX;

            #[inline]
            fn to_raw(self) -> u64 {
                self.to_bits() as u64
            }

            #[inline]
            fn from_raw(bits: u64) -> Self {
                <$t>::from_bits(bits as $bits)
            }

            #[inline]
            fn fma(self, b: Self, c: Self) -> Self {
                self.mul_add(b, c)
            }

            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }

            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }

            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }

            #[inline]
            fn is_nan(self) -> bool {
                <$t>::is_nan(self)
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn uniform_from_u64(word: u64) -> Self {
                const P: u32 = $fmt.precision_bits;
                (word >> (64 - P)) as $t * (1.0 / (1u64 << P) as $t)
            }
        }
    };
}

impl_ieee_float!(f32, u32, FloatFormat::BINARY32);
impl_ieee_float!(f64, u64, FloatFormat::BINARY64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FloatClass {
    Zero,
    Subnormal,
    Normal,
    Infinite,
    Nan,
}

/// `x = (-1)^sign * significand * 2^exponent`.
///
/// Zeros and subnormals carry the exponent of the smallest subnormal.
/// Infinities and NaNs carry `emax + 1`; for NaN the significand holds the
/// raw payload bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecomposedFloat {
    pub sign: u8,
    pub significand: u64,
    pub exponent: i32,
    pub class: FloatClass,
}

impl DecomposedFloat {
    pub fn recompose<F: IeeeFloat>(&self) -> F {
        let fmt = F::FORMAT;
        let sign = if self.sign != 0 { fmt.sign_mask() } else { 0 };
        let body = match self.class {
            FloatClass::Zero | FloatClass::Subnormal => self.significand & fmt.fraction_mask(),
            FloatClass::Normal => {
                let biased = (self.exponent + fmt.fraction_bits() as i32 + fmt.bias()) as u64;
                (biased << fmt.fraction_bits()) | (self.significand & fmt.fraction_mask())
            }
            FloatClass::Infinite => fmt.exponent_mask(),
            FloatClass::Nan => fmt.exponent_mask() | (self.significand & fmt.fraction_mask()),
        };
        F::from_raw(sign | body)
    }
}

pub fn decompose<F: IeeeFloat>(x: F) -> DecomposedFloat {
    let fmt = F::FORMAT;
    let bits = x.to_raw();
    let sign = ((bits & fmt.sign_mask()) != 0) as u8;
    let biased = ((bits & fmt.exponent_mask()) >> fmt.fraction_bits()) as i32;
    let fraction = bits & fmt.fraction_mask();
    let all_ones = (fmt.exponent_mask() >> fmt.fraction_bits()) as i32;

    let (significand, exponent, class) = if biased == all_ones {
        let class = if fraction == 0 { FloatClass::Infinite } else { FloatClass::Nan };
        (fraction, fmt.emax + 1, class)
    } else if biased == 0 {
        let class = if fraction == 0 { FloatClass::Zero } else { FloatClass::Subnormal };
        (fraction, fmt.quantum_min(), class)
    } else {
        (fraction | (1 << fmt.fraction_bits()), biased - fmt.bias() - fmt.fraction_bits() as i32, FloatClass::Normal)
    };

    DecomposedFloat { sign, significand, exponent, class }
}

/// `floor(log2(|x|))` for finite non-zero `x`, subnormals included.
pub fn binade_exponent<F: IeeeFloat>(x: F) -> i32 {
    let d = decompose(x);
    debug_assert!(matches!(d.class, FloatClass::Normal | FloatClass::Subnormal));
    d.exponent + 63 - d.significand.leading_zeros() as i32
}

/// Exact `2^e`, flushing to zero below the subnormal range and to infinity
/// above `emax`.
pub fn pow2<F: IeeeFloat>(e: i32) -> F {
    let fmt = F::FORMAT;
    if e > fmt.emax {
        F::INFINITY
    } else if e >= fmt.emin {
        F::from_raw(((e + fmt.bias()) as u64) << fmt.fraction_bits())
    } else if e >= fmt.quantum_min() {
        F::from_raw(1 << (e - fmt.quantum_min()))
    } else {
        F::ZERO
    }
}

pub fn is_power_of_two<F: IeeeFloat>(x: F) -> bool {
    let d = decompose(x);
    match d.class {
        FloatClass::Normal | FloatClass::Subnormal => d.significand.is_power_of_two(),
        _ => false,
    }
}

/// Spacing of the binade containing `|x|`. At an exact power of two this is
/// the spacing above `|x|`. Zero maps to zero.
pub fn ulp<F: IeeeFloat>(x: F) -> Result<F> {
    if !x.is_finite() {
        return Err(Error::Domain("ulp of a non-finite value"));
    }
    if x.is_zero() {
        return Ok(F::ZERO);
    }
    Ok(ulp_unchecked(x))
}

#[inline]
pub(crate) fn ulp_unchecked<F: IeeeFloat>(x: F) -> F {
    let fmt = F::FORMAT;
    let e = binade_exponent(x).max(fmt.emin);
    pow2(e - fmt.fraction_bits() as i32)
}

/// Smallest representable value strictly greater than `x`.
pub fn succ<F: IeeeFloat>(x: F) -> F {
    if x.is_nan() || x == F::INFINITY {
        return x;
    }
    if x.is_zero() {
        return F::from_raw(1);
    }
    let bits = x.to_raw();
    if bits & F::FORMAT.sign_mask() == 0 {
        F::from_raw(bits + 1)
    } else {
        F::from_raw(bits - 1)
    }
}

/// Largest representable value strictly less than `x`.
pub fn pred<F: IeeeFloat>(x: F) -> F {
    -succ(-x)
}

/// An exact real carried as the unevaluated sum `head + tail`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extended<F> {
    pub head: F,
    pub tail: F,
}

impl<F: IeeeFloat> Extended<F> {
    /// Renormalizes so that `head` is the nearest float to the sum.
    pub fn new(head: F, tail: F) -> Self {
        let pair = two_sum(head, tail);
        Extended { head: pair.head, tail: pair.tail }
    }

    pub fn from_value(x: F) -> Self {
        Extended { head: x, tail: F::ZERO }
    }
}

/// `(max{y <= x}, min{y >= x})` over the representable values of `F`.
pub fn neighbors<F: IeeeFloat>(x: Extended<F>) -> (F, F) {
    let x = Extended::new(x.head, x.tail);
    if x.head == F::INFINITY {
        return (F::MAX, F::INFINITY);
    }
    if x.head == -F::INFINITY {
        return (-F::INFINITY, -F::MAX);
    }
    if x.tail > F::ZERO {
        (x.head, succ(x.head))
    } else if x.tail < F::ZERO {
        (pred(x.head), x.head)
    } else {
        (x.head, x.head)
    }
}

/// Round-to-nearest, ties-to-even, of an extended value.
pub fn round_nearest<F: IeeeFloat>(x: Extended<F>) -> F {
    x.head + x.tail
}

/// Software round-to-nearest-even of `x` onto `fmt`, including gradual
/// underflow and overflow to infinity. The result is returned widened to
/// `f64`, where it is exact.
pub fn round_to_format(x: f64, fmt: FloatFormat) -> f64 {
    if !x.is_finite() || x == 0.0 || fmt == FloatFormat::BINARY64 {
        return x;
    }
    let d = decompose(x);
    let negative = d.sign != 0;
    let (m, e) = (d.significand, d.exponent);
    let leading = e + 63 - m.leading_zeros() as i32;
    let p = fmt.precision_bits as i32;
    let quantum = (leading - (p - 1)).max(fmt.quantum_min());

    let magnitude = if e >= quantum {
        x.abs()
    } else {
        let shift = (quantum - e) as u32;
        let kept = if shift > 54 {
            0
        } else {
            let kept = m >> shift;
            let rem = m & ((1u64 << shift) - 1);
            let half = 1u64 << (shift - 1);
            if rem > half || (rem == half && kept & 1 == 1) {
                kept + 1
            } else {
                kept
            }
        };
        kept as f64 * pow2::<f64>(quantum)
    };

    let magnitude = if magnitude >= pow2::<f64>(fmt.emax + 1) { f64::INFINITY } else { magnitude };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Round-to-nearest-even narrowing of a binary64 value to binary32.
pub fn narrow_to_f32(x: f64) -> f32 {
    round_to_format(x, FloatFormat::BINARY32) as f32
}
