//! Error-free transformations.
//!
//! Each transform returns the round-to-nearest result together with the
//! residual that the probabilistic rounding modes use to locate the exact
//! value between two neighboring floats. None of them touch the hardware
//! rounding-mode register.

use crate::error::{Error, Result};
use crate::fpcore::{decompose, FloatClass, IeeeFloat};

/// Quality of a transform result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EftStatus {
    /// `head + tail` is the exact result.
    Exact,
    /// The rounded result overflowed; `tail` is NaN.
    Overflow,
    /// The residual fell below the subnormal quantum and may be inexact.
    Underflow,
    /// An operand was infinite or NaN.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EftPair<F> {
    pub head: F,
    pub tail: F,
    pub status: EftStatus,
}

impl<F: IeeeFloat> EftPair<F> {
    fn finite(head: F, tail: F) -> Self {
        EftPair { head, tail, status: EftStatus::Exact }
    }

    fn non_finite(head: F, operands_finite: bool) -> Self {
        EftPair { head, tail: F::NAN, status: if operands_finite { EftStatus::Overflow } else { EftStatus::NonFinite } }
    }

    pub fn is_exact(&self) -> bool {
        self.status == EftStatus::Exact
    }
}

/// Knuth's branch-free TwoSum: `head = RN(a + b)`, `head + tail = a + b`.
#[inline]
pub fn two_sum<F: IeeeFloat>(a: F, b: F) -> EftPair<F> {
    let s = a + b;
    if !s.is_finite() {
        return EftPair::non_finite(s, a.is_finite() && b.is_finite());
    }
    let b_virtual = s - a;
    let a_virtual = s - b_virtual;
    let b_roundoff = b - b_virtual;
    let a_roundoff = a - a_virtual;
    EftPair::finite(s, a_roundoff + b_roundoff)
}

/// `head = RN(a * b)`, `tail = fma(a, b, -head)`.
#[inline]
pub fn two_prod_fma<F: IeeeFloat>(a: F, b: F) -> EftPair<F> {
    let p = a * b;
    if !p.is_finite() {
        return EftPair::non_finite(p, a.is_finite() && b.is_finite());
    }
    let e = a.fma(b, -p);
    let mut pair = EftPair::finite(p, e);
    if product_residual_may_underflow(a, b) {
        pair.status = EftStatus::Underflow;
    }
    pair
}

/// True when `a * b` has bits below the smallest subnormal quantum, so the
/// FMA residual is not guaranteed to be exact.
fn product_residual_may_underflow<F: IeeeFloat>(a: F, b: F) -> bool {
    let (da, db) = (decompose(a), decompose(b));
    if da.class == FloatClass::Zero || db.class == FloatClass::Zero {
        return false;
    }
    let low_bit = |d: crate::fpcore::DecomposedFloat| d.exponent + d.significand.trailing_zeros() as i32;
    low_bit(da) + low_bit(db) < F::FORMAT.quantum_min()
}

/// Exact remainder `a - q * b` of the quotient `q = RN(a / b)`.
///
/// The true quotient is `q + r / b`, so `sign(r / b)` gives the direction
/// of `a / b` relative to `q`.
#[inline]
pub fn residual_div<F: IeeeFloat>(a: F, b: F, q: F) -> Result<F> {
    if b.is_zero() {
        return Err(Error::Domain("division residual with zero divisor"));
    }
    Ok((-q).fma(b, a))
}

/// Exact remainder `x - s * s` of the root `s = RN(sqrt(x))`.
#[inline]
pub fn residual_sqrt<F: IeeeFloat>(x: F, s: F) -> Result<F> {
    if x < F::ZERO {
        return Err(Error::Domain("square-root residual of a negative value"));
    }
    Ok((-s).fma(s, x))
}

/// `head = RN(a * b + c)` and `tail = RN(a * b + c - head)`.
///
/// The residual is assembled from a TwoProdFMA of `a * b` followed by two
/// TwoSums, as in Boldo and Muller's ErrFmaNearest:
///
/// ```text
/// sigma       = RN(a*b + c)
/// (u1, u2)    = TwoProdFMA(a, b)
/// (a1, a2)    = TwoSum(c, u2)
/// (b1, b2)    = TwoSum(u1, a1)
/// gamma       = RN(RN(b1 - sigma) + b2)
/// tau         = RN(gamma + a2)
/// ```
///
/// `tail` is zero exactly when `a * b + c` is representable.
#[inline]
pub fn fma_pair<F: IeeeFloat>(a: F, b: F, c: F) -> EftPair<F> {
    let sigma = a.fma(b, c);
    if !sigma.is_finite() {
        return EftPair::non_finite(sigma, a.is_finite() && b.is_finite() && c.is_finite());
    }
    let u = two_prod_fma(a, b);
    let alpha = two_sum(c, u.tail);
    let beta = two_sum(u.head, alpha.head);
    if !(u.head.is_finite() && beta.head.is_finite()) {
        // a*b alone overflows even though a*b + c does not; the residual
        // cannot be assembled in the working format.
        return EftPair { head: sigma, tail: F::ZERO, status: EftStatus::Overflow };
    }
    let gamma = (beta.head - sigma) + beta.tail;
    let tau = gamma + alpha.tail;
    EftPair { head: sigma, tail: tau, status: u.status }
}
