//! Density of the mean of `N` independent uniform unit vectors in the plane.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{bessel_i_scaled, entropy, f, f_prime};
use crate::quad::gauss_legendre;

/// Below this value of `exp(-N I(m))` the radial integral loses its digits
/// to cancellation and the tilted integral takes over.
const TILT_THRESHOLD: f64 = 1e-10;

/// The tilted integrand decays only like `|v|^{-N/2}`, so the tilted route
/// is used for large blocks only.
const TILT_MIN_BLOCK: usize = 16;

/// Truncation target for the tilted lattice sum, relative to its centre.
const TILT_EDGE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityRoute {
    /// two vectors: `1 / (pi^2 s sqrt(1 - s^2))`
    Closed,
    Radial,
    Tilted,
}

fn check(n: usize, m: f64) -> Result<()> {
    if n < 2 || n == 3 || n == 4 {
        return Err(Error::Domain(format!(
            "block size {n} unsupported: the density is evaluated for N = 2 and N >= 5"
        )));
    }
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("|m| = {m} outside [0, 1)")));
    }
    Ok(())
}

/// Route used by [`nu_density`] for the given arguments.
pub fn route(n: usize, m: f64) -> Result<DensityRoute> {
    check(n, m)?;
    if n == 2 {
        return Ok(DensityRoute::Closed);
    }
    let ent = entropy(m)?;
    if n >= TILT_MIN_BLOCK && (-(n as f64) * ent.value).exp() < TILT_THRESHOLD {
        Ok(DensityRoute::Tilted)
    } else {
        Ok(DensityRoute::Radial)
    }
}

/// Plane density of the block mean at modulus `m`, with respect to `d^2 m`.
pub fn nu_density(n: usize, m: f64) -> Result<f64> {
    match route(n, m)? {
        DensityRoute::Closed if m == 0.0 => Err(Error::Singular("two-vector density diverges at m = 0".into())),
        DensityRoute::Closed => Ok(1.0 / (PI * PI * m * (1.0 - m * m).sqrt())),
        DensityRoute::Radial => nu_density_radial(n, m),
        DensityRoute::Tilted => nu_density_tilted(n, m),
    }
}

/// `(N^2 / 2 pi) int_0^inf J_0(N t m) J_0(t)^N t dt` by Gauss-Legendre
/// panels one oscillation wide. Absolutely convergent for `N >= 5`.
pub fn nu_density_radial(n: usize, m: f64) -> Result<f64> {
    check(n, m)?;
    let nf = n as f64;
    let horizon = (1e-8f64).powf(-2.0 / (nf - 3.0)).clamp(200.0, 2e4);
    let width = (2.0 * PI / (nf * (1.0 + m) + 1.0)).min(0.5);
    let panels = (horizon / width).ceil() as usize;
    let (x, w) = gauss_legendre(16);
    let mut total = 0.0;
    for k in 0..panels {
        let lo = k as f64 * width;
        let mut part = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let t = lo + 0.5 * width * (xi + 1.0);
            part += wi * puruspe::Jn(0, nf * t * m) * puruspe::Jn(0, t).powi(n as i32) * t;
        }
        total += 0.5 * width * part;
    }
    Ok(nf * nf / (2.0 * PI) * total)
}

/// Exponentially tilted Fourier inversion:
/// `exp(-N I(m)) (N / 2 pi)^2 int psi(v)^N d^2 v`, where `psi` is the
/// characteristic function of `sigma - m` under the tilted single-spin law.
pub fn nu_density_tilted(n: usize, m: f64) -> Result<f64> {
    check(n, m)?;
    let nf = n as f64;
    let ent = entropy(m)?;
    let t = ent.t_star;
    let (var_par, var_perp) = if t > 1e-8 { (f_prime(t), f(t) / t) } else { (0.5, 0.5) };
    // no aliasing: the tilted sum of N centred spins lives in a disc of radius 2N
    let h = 0.9 * PI / (2.0 * nf);
    let i0s = bessel_i_scaled(0, t);
    let mut spread = 12.0;
    loop {
        let v1_max = spread / (nf * var_par).sqrt();
        let v2_max = spread / (nf * var_perp).sqrt();
        let (sum, edge) = tilted_sum(n, m, t, i0s, h, v1_max, v2_max);
        if edge < TILT_EDGE || spread > 200.0 {
            let dens = (-nf * ent.value).exp() * (nf / (2.0 * PI)).powi(2) * h * h * sum;
            return Ok(dens);
        }
        spread *= 1.5;
    }
}

/// Quadrant sum of `Re psi^N` on the trapezoid lattice, and the largest
/// `|psi|^N` seen on the outer edges.
fn tilted_sum(n: usize, m: f64, t: f64, i0s: f64, h: f64, v1_max: f64, v2_max: f64) -> (f64, f64) {
    let a_max = (v1_max / h).ceil() as usize;
    let b_max = (v2_max / h).ceil() as usize;
    let reach = (a_max.max(b_max) as f64) * h;
    let points = (((t + reach) * 2.0 + 40.0) / 4.0).ceil() as usize * 4;
    let angles: Vec<(f64, f64, f64)> = (0..points)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / points as f64;
            (th.cos(), th.sin(), (t * (th.cos() - 1.0)).exp() / i0s / points as f64)
        })
        .collect();
    let mut total = 0.0;
    let mut edge: f64 = 0.0;
    for a in 0..=a_max {
        let v1 = a as f64 * h;
        let ca = if a == 0 { 1.0 } else { 2.0 };
        for b in 0..=b_max {
            let v2 = b as f64 * h;
            let cb = if b == 0 { 1.0 } else { 2.0 };
            let mut phi = Complex64::new(0.0, 0.0);
            for &(c, s, w) in &angles {
                phi += Complex64::from_polar(w, v1 * (c - m) + v2 * s);
            }
            let pw = phi.powu(n as u32);
            total += ca * cb * pw.re;
            if a == a_max || b == b_max {
                edge = edge.max(pw.norm());
            }
        }
    }
    (total, edge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub n: usize,
    pub m: f64,
    pub density: f64,
    /// `|(1/N) log density + I(m)|`
    pub error: f64,
    pub route: DensityRoute,
    /// density was not positive; the point is excluded from the fit
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub points: Vec<EntropyPoint>,
    /// envelope `(1/N) log[C0 (N/2 pi)^2 (N^2 + N^q (1 - m)^{-1/2})]`
    pub c0: f64,
    pub q_prime: f64,
    /// every non-skipped point lies under the fitted envelope
    pub under_envelope: bool,
}

pub fn envelope(n: usize, m: f64, c0: f64, q_prime: f64) -> f64 {
    let nf = n as f64;
    (c0 * (nf / (2.0 * PI)).powi(2) * (nf * nf + nf.powf(q_prime) / (1.0 - m).sqrt())).ln() / nf
}

/// Density-versus-entropy discrepancy on a grid of block sizes and moduli,
/// with the tightest envelope over `q'` in `{0, 0.5, ..., 4}`.
pub fn entropy_check(n_list: &[usize], m_grid: &[f64]) -> Result<EntropyCheck> {
    if let Some(m) = m_grid.iter().find(|m| !(0.0..=0.95).contains(*m)) {
        return Err(Error::Domain(format!("|m| = {m} outside [0, 0.95]")));
    }
    let mut points = Vec::new();
    for &n in n_list {
        for &m in m_grid {
            let density = nu_density(n, m)?;
            let skipped = !(density > 0.0);
            let error = if skipped { f64::NAN } else { ((density.ln()) / n as f64 + entropy(m)?.value).abs() };
            points.push(EntropyPoint { n, m, density, error, route: route(n, m)?, skipped });
        }
    }
    let kept: Vec<&EntropyPoint> = points.iter().filter(|p| !p.skipped).collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData("no positive density values".into()));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for step in 0..=8 {
        let q = 0.5 * step as f64;
        let c0 = kept
            .iter()
            .map(|p| {
                let nf = p.n as f64;
                (nf * p.error).exp() / ((nf / (2.0 * PI)).powi(2) * (nf * nf + nf.powf(q) / (1.0 - p.m).sqrt()))
            })
            .fold(0.0, f64::max);
        let slack: f64 = kept.iter().map(|p| envelope(p.n, p.m, c0, q) - p.error).sum();
        if best.is_none_or(|b| slack < b.2) {
            best = Some((c0, q, slack));
        }
    }
    let (c0, q_prime, _) = best.expect("grid is non-empty");
    let under_envelope = kept.iter().all(|p| p.error <= envelope(p.n, p.m, c0, q_prime) * (1.0 + 1e-12) + 1e-15);
    Ok(EntropyCheck { points, c0, q_prime, under_envelope })
}
