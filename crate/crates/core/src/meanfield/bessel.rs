//! Modified Bessel functions of the first kind for integer order.
//!
//! Small arguments use the power series directly. Large arguments use the
//! Hankel asymptotic expansion, either for the requested order or for `I_0`
//! followed by downward ratio recurrence seeded by a continued fraction.

use crate::error::{Error, Result};

/// Arguments at or below this value are summed from the power series.
pub const SERIES_LIMIT: f64 = 15.0;

/// Largest argument for which `exp(x)` is finite in `f64`.
const EXP_LIMIT: f64 = 709.78;

/// `I_nu(x)`. Fails with [`Error::Overflow`] once the result leaves the `f64`
/// range; use [`bessel_i_scaled`] there.
pub fn bessel_i(nu: u32, x: f64) -> Result<f64> {
    check_arg(x)?;
    if x <= SERIES_LIMIT {
        return Ok(series(nu, x));
    }
    if x > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "I_{nu}({x}) exceeds the f64 range; use the scaled form"
        )));
    }
    Ok(bessel_i_scaled(nu, x) * x.exp())
}

/// `exp(-x) I_nu(x)`, finite for every `x >= 0`.
pub fn bessel_i_scaled(nu: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= SERIES_LIMIT {
        return series(nu, x) * (-x).exp();
    }
    let nuf = nu as f64;
    if nu <= 1 || x >= 4.0 * nuf * nuf {
        return asymptotic_scaled(nu, x);
    }
    // I_nu = I_0 * prod_{k<nu} I_{k+1}/I_k
    let mut ratio = ratio_cf(nu - 1, x);
    let mut prod = ratio;
    for k in (1..nu).rev() {
        ratio = 1.0 / (2.0 * k as f64 / x + ratio);
        prod *= ratio;
    }
    asymptotic_scaled(0, x) * prod
}

/// Power series; all terms positive so no cancellation.
pub fn series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=nu {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Hankel expansion of `exp(-x) I_nu(x)`, truncated at the smallest term.
pub fn asymptotic_scaled(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let mut term: f64 = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        sum += next;
        last = next.abs();
        term = next;
        if last < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `I_{nu+1}(x) / I_nu(x)` by the modified Lentz continued fraction.
pub fn ratio_cf(nu: u32, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..100_000u32 {
        let b = 2.0 * (nu + k) as f64 / x;
        d = b + d;
        if d == 0.0 {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// `I_1(t) / (t I_0(t))`, accurate down to `t = 0` where it equals 1/2.
pub fn i1_over_t_i0(t: f64) -> f64 {
    if t < 1e-3 {
        // I1/t = 1/2 (1 + q/2 + ...), I0 = 1 + q + ..., q = t^2/4
        let q = 0.25 * t * t;
        return 0.5 * (1.0 + 0.5 * q + q * q / 12.0) / (1.0 + q + 0.25 * q * q);
    }
    bessel_i_scaled(1, t) / (t * bessel_i_scaled(0, t))
}

fn check_arg(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}
