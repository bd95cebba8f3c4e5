//! Exact rational oracle and test-data helpers shared by the integration
//! tests. Nothing here calls into the library under test.

#![allow(dead_code)]

pub mod stats;

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational `num / den`, `den > 0`, not necessarily reduced.
#[derive(Debug, Clone)]
pub struct Q {
    pub num: BigInt,
    pub den: BigInt,
}

impl Q {
    pub fn int(v: i64) -> Q {
        Q { num: BigInt::from(v), den: BigInt::one() }
    }

    /// `m * 2^e`.
    pub fn dyadic(m: BigInt, e: i32) -> Q {
        if e >= 0 {
            Q { num: m << e as usize, den: BigInt::one() }
        } else {
            Q { num: m, den: BigInt::one() << (-e) as usize }
        }
    }

    pub fn from_f64(x: f64) -> Q {
        assert!(x.is_finite(), "oracle needs a finite value, got {x}");
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
        let m = BigInt::from(m);
        Q::dyadic(if neg { -m } else { m }, e)
    }

    pub fn from_f32(x: f32) -> Q {
        Q::from_f64(x as f64)
    }

    pub fn add(&self, o: &Q) -> Q {
        Q { num: &self.num * &o.den + &o.num * &self.den, den: &self.den * &o.den }
    }

    pub fn sub(&self, o: &Q) -> Q {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Q {
        Q { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, o: &Q) -> Q {
        Q { num: &self.num * &o.num, den: &self.den * &o.den }
    }

    pub fn div(&self, o: &Q) -> Q {
        assert!(!o.num.is_zero());
        let (num, den) = (&self.num * &o.den, &self.den * &o.num);
        if den.is_negative() {
            Q { num: -num, den: -den }
        } else {
            Q { num, den }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn abs(&self) -> Q {
        Q { num: self.num.abs(), den: self.den.clone() }
    }

    /// Nearest `f64` to within one unit of 2^-60 relative; used only to
    /// report probabilities and tolerances.
    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        let shift = self.den.bits() as i64 - self.num.bits() as i64 + 64;
        let scaled = if shift >= 0 {
            (&self.num << shift as usize) / &self.den
        } else {
            &self.num / (&self.den << (-shift) as usize)
        };
        scaled.to_f64().unwrap() * 2f64.powi(-(shift as i32))
    }
}

impl PartialEq for Q {
    fn eq(&self, o: &Q) -> bool {
        &self.num * &o.den == &o.num * &self.den
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, o: &Q) -> Option<Ordering> {
        Some((&self.num * &o.den).cmp(&(&o.num * &self.den)))
    }
}

/// `sqrt(q)` for a dyadic `q >= 0`, truncated to `bits` fractional bits
/// below its leading bit. Accurate far beyond binary64.
pub fn sqrt_q(q: &Q, bits: u32) -> Q {
    assert!(!q.num.is_negative());
    if q.num.is_zero() {
        return Q::int(0);
    }
    // q = n / 2^k with den a power of two
    let k = q.den.bits() as i64 - 1;
    assert_eq!(q.den, BigInt::one() << k as usize, "sqrt oracle needs a dyadic value");
    let mut n = q.num.clone();
    let mut k = k;
    if k % 2 != 0 {
        n <<= 1usize;
        k += 1;
    }
    let extra = 2 * bits as usize;
    let root = (n << extra).sqrt();
    Q::dyadic(root, -(k as i32 / 2) - bits as i32)
}

/// Unit in the last place in the binary32 or binary64 sense, computed from
/// the bit pattern.
pub fn ulp_f64(x: f64) -> f64 {
    let biased = ((x.to_bits() >> 52) & 0x7ff) as i32;
    match biased {
        0 => f64::from_bits(1),
        1..=52 => f64::from_bits(1 << (biased - 1)),
        _ => f64::from_bits(((biased - 52) as u64) << 52),
    }
}

pub fn ulp_f32(x: f32) -> f32 {
    let biased = ((x.to_bits() >> 23) & 0xff) as i32;
    match biased {
        0 => f32::from_bits(1),
        1..=23 => f32::from_bits(1 << (biased - 1)),
        _ => f32::from_bits(((biased - 23) as u32) << 23),
    }
}

pub fn next_up_f64(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

pub fn next_down_f64(x: f64) -> f64 {
    -next_up_f64(-x)
}

pub fn next_up_f32(x: f32) -> f32 {
    if x == 0.0 {
        return f32::from_bits(1);
    }
    let b = x.to_bits();
    f32::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

pub fn next_down_f32(x: f32) -> f32 {
    -next_up_f32(-x)
}

/// SplitMix64, independent of the generator under test.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 * 2f64.powi(-53)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    /// Random finite binary64 with exponent in `[lo, hi]` and random sign.
    pub fn f64_in(&mut self, lo: i32, hi: i32) -> f64 {
        let e = lo + self.below((hi - lo + 1) as u64) as i32;
        let m = 1.0 + (self.next() >> 12) as f64 * 2f64.powi(-52);
        let x = m * 2f64.powi(e);
        if self.next() & 1 == 1 {
            -x
        } else {
            x
        }
    }

    pub fn f32_in(&mut self, lo: i32, hi: i32) -> f32 {
        let e = lo + self.below((hi - lo + 1) as u64) as i32;
        let m = 1.0 + (self.next() >> 41) as f32 * 2f32.powi(-23);
        let x = (m as f64 * 2f64.powi(e)) as f32;
        if self.next() & 1 == 1 {
            -x
        } else {
            x
        }
    }

    /// Any bit pattern that is a finite binary64 value.
    pub fn f64_any(&mut self) -> f64 {
        loop {
            let x = f64::from_bits(self.next());
            if x.is_finite() {
                return x;
            }
        }
    }

    pub fn f32_any(&mut self) -> f32 {
        loop {
            let x = f32::from_bits(self.next() as u32);
            if x.is_finite() {
                return x;
            }
        }
    }
}

/// Outcome check for a two-point distribution: all samples are `lo` or
/// `hi`, and the fraction at `hi` lies within `z` standard errors of `p`.
pub fn two_point_within(hits_hi: u64, trials: u64, p: f64, z: f64) -> bool {
    let frac = hits_hi as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    (frac - p).abs() <= z * se + 1e-12
}

pub fn sign_of(q: &Q) -> Sign {
    q.num.sign()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Fma,
}

pub const OPS: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt, Op::Fma];

/// Exact result of `op` on binary64 operands; square roots carry 256
/// correct bits.
pub fn exact(op: Op, a: f64, b: f64, c: f64) -> Q {
    let (qa, qb, qc) = (Q::from_f64(a), Q::from_f64(b), Q::from_f64(c));
    match op {
        Op::Add => qa.add(&qb),
        Op::Sub => qa.sub(&qb),
        Op::Mul => qa.mul(&qb),
        Op::Div => qa.div(&qb),
        Op::Sqrt => sqrt_q(&qa, 256),
        Op::Fma => qa.mul(&qb).add(&qc),
    }
}

/// Hardware round-to-nearest in binary64.
pub fn rn_f64(op: Op, a: f64, b: f64, c: f64) -> f64 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Sqrt => a.sqrt(),
        Op::Fma => a.mul_add(b, c),
    }
}

pub fn rn_f32(op: Op, a: f32, b: f32, c: f32) -> f32 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Sqrt => a.sqrt(),
        Op::Fma => a.mul_add(b, c),
    }
}

/// Neighbors `lo <= x <= hi` of the exact value around its RN image and
/// the probability `(x - lo) / (hi - lo)` that SR picks `hi`. `lo == hi`
/// when `x` is representable.
pub fn bracket_f64(x: &Q, rn: f64) -> (f64, f64, f64) {
    let q = Q::from_f64(rn);
    let (lo, hi) = match x.partial_cmp(&q).unwrap() {
        Ordering::Equal => return (rn, rn, 0.0),
        Ordering::Less => (next_down_f64(rn), rn),
        Ordering::Greater => (rn, next_up_f64(rn)),
    };
    let p = x.sub(&Q::from_f64(lo)).div(&Q::from_f64(hi).sub(&Q::from_f64(lo)));
    (lo, hi, p.to_f64())
}

pub fn bracket_f32(x: &Q, rn: f32) -> (f32, f32, f64) {
    let q = Q::from_f32(rn);
    let (lo, hi) = match x.partial_cmp(&q).unwrap() {
        Ordering::Equal => return (rn, rn, 0.0),
        Ordering::Less => (next_down_f32(rn), rn),
        Ordering::Greater => (rn, next_up_f32(rn)),
    };
    let p = x.sub(&Q::from_f32(lo)).div(&Q::from_f32(hi).sub(&Q::from_f32(lo)));
    (lo, hi, p.to_f64())
}

/// Random operands for `op` with results well inside the normal range.
pub fn operands_f32(rng: &mut Mix, op: Op) -> (f32, f32, f32) {
    let a = rng.f32_in(-8, 8);
    let b = rng.f32_in(-8, 8);
    let c = rng.f32_in(-8, 8);
    match op {
        Op::Sqrt => (a.abs(), 0.0, 0.0),
        _ => (a, b, c),
    }
}

pub fn operands_f64(rng: &mut Mix, op: Op) -> (f64, f64, f64) {
    let a = rng.f64_in(-8, 8);
    let b = rng.f64_in(-8, 8);
    let c = rng.f64_in(-8, 8);
    match op {
        Op::Sqrt => (a.abs(), 0.0, 0.0),
        _ => (a, b, c),
    }
}

/// Operands whose exact result is representable in binary32 (and so in
/// binary64).
pub fn exact_operands(rng: &mut Mix, op: Op) -> (f64, f64, f64) {
    let small =
        |rng: &mut Mix, bits: u32| (rng.below(1 << bits) as f64 + 1.0) * if rng.next() & 1 == 1 { -1.0 } else { 1.0 };
    let scale = 2f64.powi(rng.below(16) as i32 - 8);
    match op {
        Op::Add | Op::Sub => (small(rng, 20) * scale, small(rng, 20) * scale, 0.0),
        Op::Mul => (small(rng, 11) * scale, small(rng, 11), 0.0),
        Op::Div => {
            let (m1, m2) = (small(rng, 11), small(rng, 11));
            (m1 * m2 * scale, m2, 0.0)
        }
        Op::Sqrt => {
            let m = small(rng, 11).abs();
            (m * m * scale * scale, 0.0, 0.0)
        }
        Op::Fma => (small(rng, 10), small(rng, 10), small(rng, 20)),
    }
}
