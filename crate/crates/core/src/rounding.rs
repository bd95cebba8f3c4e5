//! Probabilistic rounding modes and the perturbed operator set
//! `{+, -, *, /, sqrt, fma}`.
//!
//! SR, CESTAC and MCA random rounding locate the exact result between two
//! neighbors with an error-free transformation and then pick one of them.
//! Up-Down rounding instead perturbs the round-to-nearest result by one ulp
//! in a random direction.
//!
//! Variate budget, fixed so that traces replay bitwise:
//!
//! | mode            | variates per operation                             |
//! |-----------------|----------------------------------------------------|
//! | `rn`            | none                                               |
//! | `sr`, `cestac`  | one uniform, always                                |
//! | `mca@t`         | one uniform, always                                |
//! | `ud`            | one sign, except when the RN result is 0 or non-finite |

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eft::{fma_pair, two_prod_fma, two_sum};
use crate::error::{Error, Result};
use crate::fpcore::{binade_exponent, is_power_of_two, pow2, pred, succ, ulp_unchecked, IeeeFloat};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RoundingMode {
    /// IEEE-754 round-to-nearest, ties-to-even.
    Nearest,
    /// Stochastic rounding: the far neighbor is chosen with probability
    /// proportional to the distance from the near one.
    Stochastic,
    /// Up-Down rounding: RN result moved by one ulp up or down.
    UpDown,
    /// Floor or ceiling of the exact result with equal probability.
    Cestac,
    /// Monte Carlo Arithmetic random rounding at virtual precision `t`;
    /// `None` means the precision of the active format.
    Mca { t: Option<u32> },
}

impl RoundingMode {
    /// Virtual precision used by this mode under `F`, validated against
    /// `1..=p`. Modes other than MCA report `p`.
    pub fn virtual_precision<F: IeeeFloat>(&self) -> Result<u32> {
        let p = F::FORMAT.precision_bits;
        match *self {
            RoundingMode::Mca { t: Some(t) } if t == 0 || t > p => {
                Err(Error::VirtualPrecision { t, precision: p, format: F::FORMAT.name.as_str() })
            }
            RoundingMode::Mca { t: Some(t) } => Ok(t),
            _ => Ok(p),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        *self == RoundingMode::Nearest
    }
}

impl fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingMode::Nearest => f.write_str("rn"),
            RoundingMode::Stochastic => f.write_str("sr"),
            RoundingMode::UpDown => f.write_str("ud"),
            RoundingMode::Cestac => f.write_str("cestac"),
            RoundingMode::Mca { t: None } => f.write_str("mca"),
            RoundingMode::Mca { t: Some(t) } => write!(f, "mca@{t}"),
        }
    }
}

impl FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "rn" => Ok(RoundingMode::Nearest),
            "sr" => Ok(RoundingMode::Stochastic),
            "ud" => Ok(RoundingMode::UpDown),
            "cestac" => Ok(RoundingMode::Cestac),
            "mca" => Ok(RoundingMode::Mca { t: None }),
            other => match other.strip_prefix("mca@").map(str::parse::<u32>) {
                Some(Ok(t)) if t >= 1 => Ok(RoundingMode::Mca { t: Some(t) }),
                _ => Err(Error::InvalidMode(s.to_string())),
            },
        }
    }
}

impl From<RoundingMode> for String {
    fn from(mode: RoundingMode) -> String {
        mode.to_string()
    }
}

impl TryFrom<String> for RoundingMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Stochastic rounding of `head + tail`, where `head = RN(exact)` and
/// `tail` is the residual. Consumes one uniform.
#[inline]
pub fn sr_finalize<F: IeeeFloat>(head: F, tail: F, stream: &mut RngStream) -> F {
    let z = stream.next_unit_uniform();
    match toward_neighbor(head, tail) {
        Some((neighbor, gap)) => {
            let prob = tail.abs().to_f64() / gap.to_f64();
            if z < prob {
                neighbor
            } else {
                head
            }
        }
        None => head,
    }
}

/// CESTAC rounding of `head + tail`: floor or ceiling of the exact value with
/// probability one half each. Consumes one uniform.
#[inline]
pub fn cestac_round<F: IeeeFloat>(head: F, tail: F, stream: &mut RngStream) -> F {
    let z = stream.next_unit_uniform();
    match toward_neighbor(head, tail) {
        Some((neighbor, _)) if z < 0.5 => neighbor,
        _ => head,
    }
}

/// Up-Down rounding of an already round-to-nearest value. Consumes one sign
/// unless `x_rn` is zero or non-finite.
#[inline]
pub fn ud_round<F: IeeeFloat>(x_rn: F, stream: &mut RngStream) -> F {
    if x_rn.is_zero() || !x_rn.is_finite() {
        return x_rn;
    }
    let up = stream.next_sign() > 0;
    let eps = ulp_unchecked(x_rn);
    let moved = if up { x_rn + eps } else { x_rn - eps };
    if moved.is_finite() {
        moved
    } else {
        x_rn
    }
}

/// MCA random rounding at virtual precision `t`: `RN(x + xi * 2^(e_x - t))`
/// with `xi` uniform on `[-1/2, 1/2)` and `2^(e_x - 1) <= |x| < 2^e_x`.
///
/// `x = head + tail` and the perturbed sum are carried as double-word values
/// so the only rounding is the final one. Consumes one uniform.
#[inline]
pub fn mca_rr_round<F: IeeeFloat>(head: F, tail: F, t: u32, stream: &mut RngStream) -> F {
    let word = stream.next_u64();
    if !head.is_finite() || head.is_zero() {
        return head;
    }
    let mut e = binade_exponent(head);
    // x just below a power of two rounds up onto it; its binade is the one below.
    if is_power_of_two(head) && (tail < F::ZERO) != (head < F::ZERO) && !tail.is_zero() {
        e -= 1;
    }
    let xi = F::uniform_from_u64(word) - F::from_f64(0.5);
    let delta = xi * pow2::<F>(e + 1 - t as i32);
    let shifted = two_sum(head, delta);
    let low = shifted.tail + tail;
    let result = shifted.head + low;
    if result.is_finite() {
        result
    } else {
        head
    }
}

/// The neighbor of `head` in the direction of `tail` and its distance, or
/// `None` when no perturbation applies (exact, non-finite, or the neighbor
/// would leave the finite range).
#[inline]
fn toward_neighbor<F: IeeeFloat>(head: F, tail: F) -> Option<(F, F)> {
    if !head.is_finite() || tail.is_zero() || tail.is_nan() {
        return None;
    }
    let neighbor = if tail > F::ZERO { succ(head) } else { pred(head) };
    if !neighbor.is_finite() {
        return None;
    }
    Some((neighbor, (neighbor - head).abs()))
}

/// Rounding mode plus the random stream feeding it, for one float format.
pub struct OpContext<'s, F> {
    mode: RoundingMode,
    t: u32,
    stream: &'s mut RngStream,
    _format: PhantomData<F>,
}

impl<'s, F: IeeeFloat> OpContext<'s, F> {
    pub fn new(mode: RoundingMode, stream: &'s mut RngStream) -> Result<Self> {
        let t = mode.virtual_precision::<F>()?;
        Ok(OpContext { mode, t, stream, _format: PhantomData })
    }

    pub fn mode(&self) -> RoundingMode {
        self.mode
    }

    pub fn stream(&self) -> &RngStream {
        self.stream
    }

    /// Applies the mode to an exact value given as `head = RN(x)` plus
    /// residual. Up-Down ignores the residual.
    #[inline]
    pub fn finalize(&mut self, head: F, tail: F) -> F {
        match self.mode {
            RoundingMode::Nearest => head,
            RoundingMode::Stochastic => sr_finalize(head, tail, self.stream),
            RoundingMode::UpDown => ud_round(head, self.stream),
            RoundingMode::Cestac => cestac_round(head, tail, self.stream),
            RoundingMode::Mca { .. } => mca_rr_round(head, tail, self.t, self.stream),
        }
    }

    #[inline]
    pub fn add(&mut self, a: F, b: F) -> F {
        match self.mode {
            RoundingMode::Nearest => a + b,
            RoundingMode::UpDown => ud_round(a + b, self.stream),
            _ => {
                let pair = two_sum(a, b);
                self.finalize(pair.head, pair.tail)
            }
        }
    }

    #[inline]
    pub fn sub(&mut self, a: F, b: F) -> F {
        self.add(a, -b)
    }

    #[inline]
    pub fn mul(&mut self, a: F, b: F) -> F {
        match self.mode {
            RoundingMode::Nearest => a * b,
            RoundingMode::UpDown => ud_round(a * b, self.stream),
            _ => {
                let pair = two_prod_fma(a, b);
                self.finalize(pair.head, pair.tail)
            }
        }
    }

    /// The residual passed on is `RN(r / b)` with `r = a - q*b` exact, which
    /// has the sign of `a/b - q` and approximates it to working precision.
    #[inline]
    pub fn div(&mut self, a: F, b: F) -> F {
        let q = a / b;
        match self.mode {
            RoundingMode::Nearest => q,
            RoundingMode::UpDown => ud_round(q, self.stream),
            _ => {
                let tail = if q.is_finite() && !b.is_zero() { (-q).fma(b, a) / b } else { F::ZERO };
                self.finalize(q, tail)
            }
        }
    }

    /// The residual passed on is `RN(r / 2s)` with `r = x - s*s` exact, the
    /// first-order correction `sqrt(x) - s`.
    #[inline]
    pub fn sqrt(&mut self, x: F) -> F {
        let s = x.sqrt();
        match self.mode {
            RoundingMode::Nearest => s,
            RoundingMode::UpDown => ud_round(s, self.stream),
            _ => {
                let tail = if s.is_finite() && !s.is_zero() { (-s).fma(s, x) / (s + s) } else { F::ZERO };
                self.finalize(s, tail)
            }
        }
    }

    /// `a * b + c` with a single probabilistic rounding.
    #[inline]
    pub fn fma(&mut self, a: F, b: F, c: F) -> F {
        match self.mode {
            RoundingMode::Nearest => a.fma(b, c),
            RoundingMode::UpDown => ud_round(a.fma(b, c), self.stream),
            _ => {
                let pair = fma_pair(a, b, c);
                let tail = if pair.tail.is_nan() { F::ZERO } else { pair.tail };
                self.finalize(pair.head, tail)
            }
        }
    }
}
