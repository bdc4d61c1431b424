//! Exact scaled-ceiling arithmetic.
//!
//! The cipher repeatedly evaluates `ceil(x * 10^k) mod D` on chaotic state
//! values. Computing `x * 10^k` in double precision rounds before the ceiling
//! is taken, which can move the result across an integer boundary on some
//! inputs. All conversions here decompose the double into its exact
//! `mantissa * 2^exponent` form and take the ceiling with integer arithmetic,
//! so the result is exact for every representable input.

use crate::error::{Error, Result};

/// `x mod 1` with the floor convention: `x - floor(x)`, in `[0, 1)`.
/// Holds for negative inputs too (`-0.25` maps to `0.75`).
pub fn mod1(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let r = x - x.floor();
    // x - floor(x) can round to exactly 1.0 for tiny negative x
    Ok(if r >= 1.0 { 0.0 } else { r })
}

/// Decompose a finite non-negative double into `(mantissa, exponent)` with
/// `value = mantissa * 2^exponent` exactly.
fn decompose(x: f64) -> (u128, i32) {
    debug_assert!(x.is_finite() && x >= 0.0);
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_field == 0 {
        // subnormal (or zero)
        (frac as u128, -1074)
    } else {
        ((frac | (1u64 << 52)) as u128, exp_field - 1075)
    }
}

/// Exact `ceil(x * 10^pow10)` for a finite `x` with `0 <= x < 2^40`.
pub fn ceil_scaled(x: f64, pow10: u32) -> Result<u128> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    assert!(x >= 0.0 && x < (1u64 << 40) as f64, "ceil_scaled domain");
    assert!(pow10 <= 20, "ceil_scaled scale");
    let (mant, exp) = decompose(x);
    let scaled = mant * 10u128.pow(pow10); // < 2^53 * 10^20 < 2^120
    if exp >= 0 {
        Ok(scaled << exp)
    } else {
        let k = (-exp) as u32;
        if k >= 128 {
            return Ok(u128::from(scaled > 0));
        }
        let q = scaled >> k;
        let rem = scaled & ((1u128 << k) - 1);
        Ok(q + u128::from(rem != 0))
    }
}

/// `(ceil(x * 10^pow10) mod modulus) + 1`, the conversion the cipher uses for
/// index material. Result lies in `1..=modulus`.
pub fn ceil_scaled_mod_plus1(x: f64, pow10: u32, modulus: usize) -> Result<usize> {
    let v = ceil_scaled(x, pow10)?;
    Ok((v % modulus as u128) as usize + 1)
}

/// `ceil(x * 10^pow10) mod 256` as a byte.
pub fn ceil_scaled_mod256(x: f64, pow10: u32) -> Result<u8> {
    let v = ceil_scaled(x, pow10)?;
    Ok((v % 256) as u8)
}
