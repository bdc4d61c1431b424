//! The 2D Logistic-adjusted-Sine map (2D-LASM) in 64-bit floating point.
//!
//! One iteration maps `(x, y)` to
//!
//! ```text
//! x' = sin(pi * mu * (y + 3) * x * (1 - x))
//! y' = sin(pi * mu * (x + 3) * y * (1 - y))
//! ```
//!
//! with both right-hand sides read from the pre-step state. For the valid
//! control-parameter range the sine argument stays in `[0, pi)`, so outputs
//! stay in `[0, 1]`.

use crate::error::{Error, Result};

/// A point of the unit square, the map's state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub x: f64,
    pub y: f64,
}

impl StateVector {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::SeedOutOfRange { name: "x", value: x });
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::SeedOutOfRange { name: "y", value: y });
        }
        Ok(StateVector { x, y })
    }
}

/// Control parameter, restricted to the union of intervals where the map is
/// reported chaotic: `[0.37, 0.38] ∪ [0.4, 0.42] ∪ [0.44, 0.93]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParam(f64);

impl ControlParam {
    pub fn new(mu: f64) -> Result<Self> {
        let ok = (0.37..=0.38).contains(&mu)
            || (0.4..=0.42).contains(&mu)
            || (0.44..=0.93).contains(&mu);
        if ok {
            Ok(ControlParam(mu))
        } else {
            Err(Error::InvalidMu(mu))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// The five-component secret key: two seed pairs plus the control parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecretKey {
    pub x0: f64,
    pub y0: f64,
    pub x0p: f64,
    pub y0p: f64,
    pub mu: ControlParam,
}

impl SecretKey {
    pub fn new(x0: f64, y0: f64, x0p: f64, y0p: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("x0", x0), ("y0", y0), ("x0p", x0p), ("y0p", y0p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::SeedOutOfRange { name, value: v });
            }
        }
        Ok(SecretKey {
            x0,
            y0,
            x0p,
            y0p,
            mu: ControlParam::new(mu)?,
        })
    }
}

/// One simultaneous-update iteration of 2D-LASM.
pub fn lasm_step(state: StateVector, mu: ControlParam) -> StateVector {
    let m = mu.get();
    let (x, y) = (state.x, state.y);
    let nx = (std::f64::consts::PI * m * (y + 3.0) * x * (1.0 - x)).sin();
    let ny = (std::f64::consts::PI * m * (x + 3.0) * y * (1.0 - y)).sin();
    assert!(
        (0.0..=1.0).contains(&nx) && (0.0..=1.0).contains(&ny),
        "2D-LASM output left the unit square: ({nx}, {ny})"
    );
    StateVector { x: nx, y: ny }
}

/// Iterate `skip + n` times from `seed`, discard the first `skip` states and
/// return the remaining ones interleaved as `x, y, x, y, ...` (length `2n`).
pub fn lasm_sequence(seed: StateVector, mu: ControlParam, skip: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n);
    let mut s = seed;
    for i in 0..skip + n {
        s = lasm_step(s, mu);
        if i >= skip {
            out.push(s.x);
            out.push(s.y);
        }
    }
    out
}
