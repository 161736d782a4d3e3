//! Special functions needed by the weight metrology.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const PI2_OVER_6: f64 = PI * PI / 6.0;

/// Power series `sum z^n / n^2`, accurate for `0 <= z <= 1/2`.
fn dilog_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = z;
    for n in 1..200 {
        let term = power / (n * n) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        power *= z;
    }
    sum
}

/// Real dilogarithm `Li_2(z)` on `[0, 1]`.
///
/// The series is used directly below `1/2`; above, the reflection
/// `Li_2(z) + Li_2(1 - z) = pi^2/6 - ln(z) ln(1 - z)` maps the argument back.
pub fn dilog(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain { value: z, domain: "[0, 1]".into() });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(PI2_OVER_6);
    }
    if z <= 0.5 {
        Ok(dilog_series(z))
    } else {
        let w = 1.0 - z;
        Ok(PI2_OVER_6 - z.ln() * w.ln() - dilog_series(w))
    }
}

/// Inverse hyperbolic tangent on `(-1, 1)`.
pub fn artanh(x: f64) -> f64 {
    0.5 * (x.ln_1p() - (-x).ln_1p())
}
