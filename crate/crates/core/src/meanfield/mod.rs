//! Mean-field thermodynamics of the planar rotator.

mod bessel;

pub use bessel::{bessel_i, bessel_i_scaled, i1_over_t_i0, SERIES_LIMIT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest magnetization modulus accepted by the entropy.
pub const RHO_MAX: f64 = 1.0 - 1e-9;

pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Inverse temperature together with its spontaneous magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoContext {
    pub beta: f64,
    pub m_beta: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl ThermoContext {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_tolerance(beta, DEFAULT_NEWTON_TOL, DEFAULT_MAX_ITER)
    }

    pub fn with_tolerance(beta: f64, newton_tol: f64, max_iter: usize) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !(newton_tol > 0.0) || max_iter == 0 {
            return Err(Error::Config("newton_tol must be > 0 and max_iter >= 1".into()));
        }
        let m_beta = solve_m_beta(beta, newton_tol)?;
        Ok(Self { beta, m_beta, newton_tol, max_iter })
    }

    pub fn free_energy_density(&self, m: f64) -> Result<f64> {
        free_energy_density(m, self)
    }
}

/// Bessel ratio `I_1(t) / I_0(t)`, the inverse of the entropy derivative.
pub fn f(t: f64) -> f64 {
    if t < 0.0 {
        return -f(-t);
    }
    if t == 0.0 {
        return 0.0;
    }
    if t <= SERIES_LIMIT {
        return bessel::series(1, t) / bessel::series(0, t);
    }
    bessel_i_scaled(1, t) / bessel_i_scaled(0, t)
}

/// Derivative of [`f`], `1 - f^2 - f/t`, with the value 1/2 at the origin.
pub fn f_prime(t: f64) -> f64 {
    let t = t.abs();
    if t > 1e3 {
        let x = 1.0 / t;
        let x2 = x * x;
        return x2 * (0.5 + x * (0.25 + x * (0.375 + x * (0.78125 + x * 2.03125))));
    }
    let ft = f(t);
    1.0 - ft * ft - i1_over_t_i0(t)
}

/// Value of the entropy together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    /// `sup_t (t rho - log I_0(t))`
    pub value: f64,
    /// maximizer, equal to the first derivative
    pub t_star: f64,
    /// second derivative, `1 / f'(t_star)`
    pub second: f64,
}

/// Entropy of a block magnetization with modulus `rho`.
pub fn entropy(rho: f64) -> Result<Entropy> {
    entropy_with_tolerance(rho, DEFAULT_NEWTON_TOL, DEFAULT_MAX_ITER)
}

pub fn entropy_with_tolerance(rho: f64, tol: f64, max_iter: usize) -> Result<Entropy> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("entropy needs rho >= 0, got {rho}")));
    }
    if rho > RHO_MAX {
        return Err(Error::Domain(format!(
            "entropy diverges at saturation (rho = {rho} > {RHO_MAX})"
        )));
    }
    if rho == 0.0 {
        return Ok(Entropy { value: 0.0, t_star: 0.0, second: 2.0 });
    }
    let t = invert_f(rho, tol, max_iter)?;
    let value = t * rho - (t + bessel_i_scaled(0, t).ln());
    Ok(Entropy { value, t_star: t, second: 1.0 / f_prime(t) })
}

/// Solves `f(t) = rho` for `t >= 0` by bisection-safeguarded Newton.
pub fn invert_f(rho: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0 / (1.0 - rho) + 1.0;
    while f(hi) < rho {
        lo = hi;
        hi *= 2.0;
    }
    // start from the large-t inverse when rho is close to 1, small-t otherwise
    let mut t = if rho > 0.5 { 0.5 / (1.0 - rho) } else { 2.0 * rho };
    t = t.clamp(lo, hi);
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let r = f(t) - rho;
        if r.abs() <= tol * 1e-4 {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let slope = f_prime(t);
        let mut next = t - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        last = (next - t).abs();
        t = next;
        if last <= tol * t.max(1.0) * 1e-3 {
            return Ok(t);
        }
    }
    if (f(t) - rho).abs() <= tol {
        return Ok(t);
    }
    Err(Error::NoConvergence { what: "entropy inversion", iterations: max_iter, last_change: last })
}

/// Largest fixed point of `m -> f(beta m)`; zero when `beta <= 2`.
pub fn solve_m_beta(beta: f64, tol: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if beta <= 2.0 {
        return Ok(0.0);
    }
    let g = |m: f64| m - f(beta * m);
    let mut lo = 1e-300_f64;
    let mut hi = RHO_MAX;
    // positive root of m (1 - beta/2) + beta^3 m^3 / 16 near the threshold
    let mut m = (16.0 * (0.5 * beta - 1.0) / beta.powi(3)).sqrt().clamp(1e-8, 0.999);
    if beta > 3.0 {
        m = 1.0 - 0.5 / beta;
    }
    for _ in 0..DEFAULT_MAX_ITER {
        let r = g(m);
        if r < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
        let slope = 1.0 - beta * f_prime(beta * m);
        let mut next = m - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let change = (next - m).abs();
        m = next;
        if change <= 1e-3 * tol * m || hi - lo <= 1e-3 * tol * m {
            break;
        }
    }
    if (m - f(beta * m)).abs() > tol {
        return Err(Error::NoConvergence {
            what: "spontaneous magnetization",
            iterations: DEFAULT_MAX_ITER,
            last_change: (m - f(beta * m)).abs(),
        });
    }
    Ok(m)
}

/// Mean-field free energy density `-m^2/2 + entropy(m)/beta`.
pub fn free_energy_density(m: f64, ctx: &ThermoContext) -> Result<f64> {
    if m >= 1.0 {
        return Err(Error::Domain(format!("free energy undefined at |m| = {m} >= 1")));
    }
    let ent = entropy(m.abs())?;
    Ok(-0.5 * m * m + ent.value / ctx.beta)
}

/// `I_0''(t)/I_0(t) - f(t)^2`, the Bessel form of `f'`.
pub fn f_prime_from_bessel(t: f64) -> f64 {
    let i0 = bessel_i_scaled(0, t);
    let i2 = bessel_i_scaled(2, t);
    let ft = f(t);
    0.5 * (i0 + i2) / i0 - ft * ft
}
