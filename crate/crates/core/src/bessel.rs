//! Bessel functions of the first kind of integer order, and their zeros.

use core::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_ORDER: i32 = 200;
pub const MAX_ARGUMENT: f64 = 1e3;
/// Arguments up to this size use the ascending series.
const SERIES_LIMIT: f64 = 6.0;

/// J_k(x) for integer k with |k| ≤ 200 and |x| ≤ 1000.
pub fn bessel_j(k: i32, x: f64) -> Result<f64> {
    if k.abs() > MAX_ORDER || !(libm::fabs(x) <= MAX_ARGUMENT) {
        return Err(Error::UnsupportedRange(alloc::format!(
            "J_{k}({x}) is outside |k| <= {MAX_ORDER}, |x| <= {MAX_ARGUMENT}"
        )));
    }
    let order = k.unsigned_abs();
    // J_{-k} = (-1)^k J_k and J_k(-x) = (-1)^k J_k(x).
    let mut sign = 1.0;
    if k < 0 && order % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    let ax = libm::fabs(x);
    let v = if ax <= SERIES_LIMIT {
        series(order, ax)
    } else {
        miller(order, ax)
    };
    Ok(sign * v)
}

/// Σ_m (−1)^m (x/2)^{2m+k} / (m! (m+k)!).
fn series(k: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // Leading term (x/2)^k / k!, built up multiplicatively to avoid overflow.
    let mut term = 1.0;
    for j in 1..=k {
        term *= half / j as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut sum = term;
    let mut comp = 0.0;
    let mut m = 1u32;
    loop {
        term *= q / (m as f64 * (m + k) as f64);
        // Kahan summation keeps the cancellation error near one ulp of the
        // largest term.
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if libm::fabs(term) < 1e-18 * libm::fabs(sum).max(1e-300) && m as f64 > half {
            break;
        }
        m += 1;
        if m > 500 {
            break;
        }
    }
    sum
}

/// Downward recurrence normalized with J_0 + 2 Σ J_{2m} = 1.
fn miller(k: u32, x: f64) -> f64 {
    let big = libm::fmax(k as f64, x);
    let mut start = (big + 30.0 + 2.5 * libm::sqrt(40.0 * big)) as u32;
    if start % 2 == 1 {
        start += 1;
    }
    let mut j_next = 0.0; // J_{n+1}
    let mut j_cur = 1e-300; // J_n
    let mut norm = 0.0;
    let mut result = 0.0;
    let mut n = start;
    while n > 0 {
        let j_prev = (2.0 * n as f64 / x) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        n -= 1;
        if libm::fabs(j_cur) > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
        if n.is_multiple_of(2) && n > 0 {
            norm += 2.0 * j_cur;
        }
        if n == k {
            result = j_cur;
        }
    }
    norm += j_cur;
    result / norm
}

pub const MAX_ZERO_ORDER: u32 = 50;
pub const MAX_ZERO_INDEX: u32 = 20;

/// The `index`-th positive zero of J_k (index counts from 1).
pub fn bessel_zero(k: u32, index: u32) -> Result<f64> {
    if k > MAX_ZERO_ORDER || index == 0 || index > MAX_ZERO_INDEX {
        return Err(Error::UnsupportedRange(alloc::format!(
            "zero #{index} of J_{k} is outside k <= {MAX_ZERO_ORDER}, 1 <= index <= {MAX_ZERO_INDEX}"
        )));
    }
    let order = k as i32;
    let f = |x: f64| bessel_j(order, x);
    // Zeros are separated by roughly π; a quarter-π scan cannot skip one.
    let step = 0.25 * PI;
    let mut lo = (k as f64).max(1.0);
    let mut f_lo = f(lo)?;
    let mut found = 0;
    let limit = lo + (index as f64 + 4.0) * PI + 4.0 * k as f64 + 10.0;
    while lo < limit {
        let hi = lo + step;
        let f_hi = f(hi)?;
        if f_hi == 0.0 {
            found += 1;
            if found == index {
                return Ok(hi);
            }
            // Skip past the exact zero so it is not counted twice.
            lo = hi + 1e-9;
            f_lo = f(lo)?;
            continue;
        }
        if f_lo * f_hi < 0.0 {
            found += 1;
            if found == index {
                return bisect(&f, lo, hi, f_lo);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::Numeric(alloc::format!(
        "failed to bracket zero #{index} of J_{k}"
    )))
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = libm::fabs(f(root)?);
    if residual < 1e-10 {
        Ok(root)
    } else {
        Err(Error::Numeric(alloc::format!("bisection stalled with |J| = {residual}")))
    }
}
