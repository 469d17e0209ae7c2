//! Bessel functions of the first kind, orders 0..=3, for the beam pattern.
//!
//! For `|x| <= 12` the ascending series of `J_n(x)/x^n` is summed directly
//! (no division by `x`, so the origin is exact). Beyond that the Hankel
//! asymptotic expansion gives `J_0`, `J_1`, and higher orders follow by
//! upward recurrence, which is stable for `n < x`.

use crate::num::Scalar;

const SERIES_LIMIT: f64 = 12.0;
const MIN_TERMS: usize = 25;
const MAX_TERMS: usize = 120;

/// `J_n(x) / x^n` by its power series.
pub fn bessel_j_over_pow<T: Scalar>(n: u32, x: T) -> T {
    if x.abs() > T::lit(SERIES_LIMIT) {
        return bessel_j(n, x) / x.powi(n as i32);
    }
    let quarter_sq = x * x / T::lit(4.0);
    // 1 / (2^n n!)
    let mut term = T::one();
    for j in 1..=n {
        term /= T::lit(2.0 * j as f64);
    }
    let mut sum = term;
    for k in 1..MAX_TERMS {
        term = -term * quarter_sq / T::lit((k * (k + n as usize)) as f64);
        sum += term;
        if k >= MIN_TERMS && term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

fn hankel_asymptotic<T: Scalar>(order: u32, x: T) -> T {
    let mu = T::lit(4.0 * (order * order) as f64);
    let (mut p, mut q) = (T::one(), T::zero());
    let mut a = T::one();
    let eight_x = T::lit(8.0) * x;
    for k in 1..=14u32 {
        let odd = T::lit((2 * k - 1) as f64);
        a = a * (mu - odd * odd) / (T::lit(k as f64) * eight_x);
        let sign = if k.div_ceil(2) % 2 == 1 { -T::one() } else { T::one() };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            // Q = a1 - a3 + a5 ...
            let s = if (k / 2) % 2 == 0 { T::one() } else { -T::one() };
            q += s * a;
        }
        if a.abs() < T::epsilon() {
            break;
        }
    }
    let chi = x - (T::lit(order as f64) / T::lit(2.0) + T::lit(0.25)) * T::PI();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

pub fn bessel_j<T: Scalar>(n: u32, x: T) -> T {
    if x.abs() <= T::lit(SERIES_LIMIT) {
        return bessel_j_over_pow(n, x) * x.powi(n as i32);
    }
    // J_n(-x) = (-1)^n J_n(x)
    if x < T::zero() {
        let v = bessel_j(n, -x);
        return if n.is_multiple_of(2) { v } else { -v };
    }
    let j0 = hankel_asymptotic(0, x);
    if n == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = hankel_asymptotic(1, x);
    for k in 1..n {
        let next = T::lit(2.0 * k as f64) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}
