mod common;

use common::{ulp_f32, ulp_f64, Mix, Q};
use stochastic_arith::eft::{fma_pair, residual_div, residual_sqrt, two_prod_fma, two_sum, EftStatus};

const PAIRS: usize = 200_000;

fn half_ulp_bound_f64(head: f64, tail: f64) -> bool {
    tail.abs() <= 0.5 * ulp_f64(head)
}

fn half_ulp_bound_f32(head: f32, tail: f32) -> bool {
    tail.abs() <= 0.5 * ulp_f32(head)
}

#[test]
fn two_sum_is_exact_binary64() {
    let mut rng = Mix(1);
    for i in 0..PAIRS {
        let (a, b) =
            if i % 2 == 0 { (rng.f64_in(-60, 60), rng.f64_in(-60, 60)) } else { (rng.f64_any(), rng.f64_any()) };
        let p = two_sum(a, b);
        if p.status != EftStatus::Exact {
            assert!(p.head.is_infinite());
            continue;
        }
        let exact = Q::from_f64(a).add(&Q::from_f64(b));
        assert!(Q::from_f64(p.head).add(&Q::from_f64(p.tail)) == exact, "{a:e} + {b:e}");
        assert!(half_ulp_bound_f64(p.head, p.tail), "{a:e} {b:e} -> {:e} {:e}", p.head, p.tail);
    }
}

#[test]
fn two_sum_is_exact_binary32() {
    let mut rng = Mix(2);
    for _ in 0..PAIRS {
        let (a, b) = (rng.f32_any(), rng.f32_in(-30, 30));
        let p = two_sum(a, b);
        if p.status != EftStatus::Exact {
            continue;
        }
        let exact = Q::from_f32(a).add(&Q::from_f32(b));
        assert!(Q::from_f32(p.head).add(&Q::from_f32(p.tail)) == exact);
        assert!(half_ulp_bound_f32(p.head, p.tail));
    }
}

#[test]
fn two_prod_is_exact_unless_flagged() {
    let mut rng = Mix(3);
    let mut flagged = 0;
    for _ in 0..PAIRS {
        let (a, b) = (rng.f64_any(), rng.f64_any());
        let p = two_prod_fma(a, b);
        if p.status != EftStatus::Exact {
            flagged += 1;
            continue;
        }
        let exact = Q::from_f64(a).mul(&Q::from_f64(b));
        assert!(Q::from_f64(p.head).add(&Q::from_f64(p.tail)) == exact, "{a:e} * {b:e}");
        assert!(half_ulp_bound_f64(p.head, p.tail), "{a:e} {b:e} -> {:e} {:e}", p.head, p.tail);
    }
    assert!(flagged < PAIRS, "every pair flagged");

    let mut rng = Mix(4);
    for _ in 0..PAIRS {
        let (a, b) = (rng.f32_in(-40, 40), rng.f32_in(-40, 40));
        let p = two_prod_fma(a, b);
        assert_eq!(p.status, EftStatus::Exact);
        let exact = Q::from_f32(a).mul(&Q::from_f32(b));
        assert!(Q::from_f32(p.head).add(&Q::from_f32(p.tail)) == exact);
        assert!(half_ulp_bound_f32(p.head, p.tail));
    }
}

#[test]
fn product_underflow_is_flagged() {
    let tiny = 2f64.powi(-600);
    let x = 1.0 + 2f64.powi(-52);
    let p = two_prod_fma(tiny * x, tiny * x);
    assert_eq!(p.status, EftStatus::Underflow);
}

#[test]
fn division_and_root_residuals_are_exact() {
    let mut rng = Mix(5);
    for _ in 0..PAIRS / 4 {
        let (a, b) = (rng.f64_in(-40, 40), rng.f64_in(-40, 40));
        let q = a / b;
        let r = residual_div(a, b, q).unwrap();
        // a = q*b + r exactly
        let rhs = Q::from_f64(q).mul(&Q::from_f64(b)).add(&Q::from_f64(r));
        assert!(rhs == Q::from_f64(a));

        let x = a.abs();
        let s = x.sqrt();
        let r = residual_sqrt(x, s).unwrap();
        let rhs = Q::from_f64(s).mul(&Q::from_f64(s)).add(&Q::from_f64(r));
        assert!(rhs == Q::from_f64(x));
    }
    assert!(residual_div(1.0f32, 0.0, 0.0).is_err());
    assert!(residual_sqrt(-1.0f64, 0.0).is_err());
}

/// Residual of the FMA computed with the sign of the last correction
/// flipped, as an alternative reading of the algorithm.
fn fma_residual_minus(a: f64, b: f64, c: f64) -> (f64, f64) {
    let sigma = a.mul_add(b, c);
    let u = two_prod_fma(a, b);
    let alpha = two_sum(c, u.tail);
    let beta = two_sum(u.head, alpha.head);
    let gamma = (beta.head - sigma) - beta.tail;
    (sigma, gamma + alpha.tail)
}

fn fma_residual_error(a: f64, b: f64, c: f64, head: f64, tail: f64) -> Q {
    let exact = Q::from_f64(a).mul(&Q::from_f64(b)).add(&Q::from_f64(c));
    exact.sub(&Q::from_f64(head)).sub(&Q::from_f64(tail)).abs()
}

#[test]
fn fma_residual_matches_exact_oracle() {
    let mut rng = Mix(6);
    let mut minus_failures = 0;
    let trials = PAIRS / 2;
    for _ in 0..trials {
        let a = rng.f64_in(-20, 20);
        let b = rng.f64_in(-20, 20);
        // c close to -a*b makes the residual large relative to the head
        let c = if rng.next() & 1 == 0 { rng.f64_in(-40, 40) } else { -(a * b) * (1.0 + rng.f64_in(-30, -10)) };
        let p = fma_pair(a, b, c);
        assert_eq!(p.status, EftStatus::Exact);
        let exact = Q::from_f64(a).mul(&Q::from_f64(b)).add(&Q::from_f64(c));
        let residual = exact.sub(&Q::from_f64(p.head));
        // the residual is returned to working precision: within half an
        // ulp of the tail
        let err = residual.sub(&Q::from_f64(p.tail)).abs();
        if p.tail == 0.0 {
            assert!(residual.is_zero(), "{a:e} {b:e} {c:e}");
        } else {
            assert!(err <= Q::from_f64(0.5 * ulp_f64(p.tail)), "{a:e} {b:e} {c:e}");
        }
        let (_, minus_tail) = fma_residual_minus(a, b, c);
        let minus_err = fma_residual_error(a, b, c, p.head, minus_tail);
        if minus_err > Q::from_f64(0.5 * ulp_f64(p.tail.abs().max(f64::MIN_POSITIVE))) {
            minus_failures += 1;
        }
    }
    // the alternative sign is wrong on a large share of inputs
    assert!(minus_failures > trials / 10, "minus reading failed only {minus_failures} times");
}

#[test]
fn fma_exact_results_have_zero_tail() {
    let mut rng = Mix(7);
    for _ in 0..10_000 {
        let a = (rng.below(1 << 20) as f64 - 524_288.0) * 2f64.powi(rng.below(20) as i32 - 10);
        let b = (rng.below(1 << 20) as f64) * 2f64.powi(-(rng.below(10) as i32));
        let c = (rng.below(1 << 30) as f64) * 2f64.powi(-20);
        let p = fma_pair(a, b, c);
        let exact = Q::from_f64(a).mul(&Q::from_f64(b)).add(&Q::from_f64(c));
        if Q::from_f64(p.head) == exact {
            assert_eq!(p.tail, 0.0);
        } else {
            assert!(p.tail != 0.0);
        }
    }
}
