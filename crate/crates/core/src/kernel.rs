//! Interaction kernels and their mode-n radial reductions.
//!
//! A kernel is specified through its Fourier profile `FJ(rho)` (radial, with
//! `FJ(0) = 1` so that the spatial profile integrates to one). The mode-n
//! radial kernel is `K_n(r, s) = int_0^inf FJ(rho) J_n(r rho) J_n(s rho) rho drho`,
//! taken with respect to the measure `s ds`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::bessel_i_scaled;
use crate::quad::{gauss_legendre, integrate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `FJ(rho) = exp(-p rho^2)`.
    Gaussian { p: f64 },
    /// `FJ(rho) = exp(-p rho) (1 + p rho)`.
    Exponential { p: f64 },
    /// Samples of `FJ` on an ascending grid starting at 0, linear in between
    /// and zero past the last sample.
    Tabulated { rho: Vec<f64>, values: Vec<f64> },
}

impl KernelSpec {
    pub fn gaussian(p: f64) -> Result<Self> {
        let spec = Self::Gaussian { p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exponential(p: f64) -> Result<Self> {
        let spec = Self::Exponential { p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tabulated(rho: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spec = Self::Tabulated { rho, values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { p } | Self::Exponential { p } => {
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(Error::Config(format!("kernel width p must be positive, got {p}")));
                }
            }
            Self::Tabulated { rho, values } => {
                if rho.len() != values.len() || rho.len() < 2 {
                    return Err(Error::Config("tabulated kernel needs matching sample vectors".into()));
                }
                if rho[0] != 0.0 || !rho.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Config(
                        "tabulated kernel abscissae must start at 0 and increase".into(),
                    ));
                }
                if (values[0] - 1.0).abs() > 1e-12 {
                    return Err(Error::Normalization(format!(
                        "Fourier profile must equal 1 at the origin, got {}",
                        values[0]
                    )));
                }
                if values.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
                    return Err(Error::Normalization(
                        "Fourier profile must lie in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Exponential { .. } => "exponential",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    /// Radial Fourier profile `FJ(rho)`.
    pub fn fourier(&self, rho: f64) -> f64 {
        match self {
            Self::Gaussian { p } => (-p * rho * rho).exp(),
            Self::Exponential { p } => (-p * rho).exp() * (1.0 + p * rho),
            Self::Tabulated { rho: xs, values } => {
                if rho >= *xs.last().expect("validated") {
                    return 0.0;
                }
                let k = xs.partition_point(|&x| x <= rho).max(1) - 1;
                let t = (rho - xs[k]) / (xs[k + 1] - xs[k]);
                values[k] + t * (values[k + 1] - values[k])
            }
        }
    }

    /// Frequency beyond which `FJ < 1e-14`.
    pub fn fourier_cutoff(&self) -> f64 {
        match self {
            Self::Gaussian { p } => (32.3 / p).sqrt(),
            Self::Exponential { p } => {
                let mut x: f64 = 10.0;
                while (-x).exp() * (1.0 + x) > 1e-14 {
                    x += 0.5;
                }
                x / p
            }
            Self::Tabulated { rho, .. } => *rho.last().expect("validated"),
        }
    }

    /// Spatial profile `J(|x|)`, normalized so that its plane integral is one.
    pub fn spatial(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { p } => (-x * x / (4.0 * p)).exp() / (4.0 * PI * p),
            Self::Exponential { p } => 3.0 * p.powi(3) / (2.0 * PI * (p * p + x * x).powf(2.5)),
            Self::Tabulated { .. } => {
                hankel_quadrature(|rho| self.fourier(rho), 0, 0, x, 0.0, 0, self.fourier_cutoff())
                    / (2.0 * PI)
            }
        }
    }

    /// `int_0^upper s^3 J(s) ds`.
    pub fn cubic_moment(&self, upper: f64) -> Result<f64> {
        match self {
            Self::Gaussian { p } => {
                let s = upper * upper / (4.0 * p);
                Ok(2.0 * p / PI * gamma2_lower(s))
            }
            Self::Exponential { p } => {
                let q = (p * p + upper * upper).sqrt();
                Ok(p.powi(3) / (2.0 * PI) * (2.0 / p - 3.0 / q + p * p / q.powi(3)))
            }
            Self::Tabulated { .. } => Err(Error::UnsupportedKernel(
                "cubic moment needs a closed-form spatial profile".into(),
            )),
        }
    }

    /// Coefficient `c` in `FJ(rho) = 1 - c rho^2 + O(rho^3)`.
    pub fn curvature(&self) -> Result<f64> {
        match self {
            Self::Gaussian { p } => Ok(*p),
            Self::Exponential { p } => Ok(0.5 * p * p),
            Self::Tabulated { .. } => Err(Error::UnsupportedKernel(
                "curvature of a tabulated profile is not defined".into(),
            )),
        }
    }

    /// L1 norm of the gradient of the spatial profile.
    pub fn gradient_l1(&self) -> Result<f64> {
        match self {
            Self::Gaussian { p } => Ok((PI / (4.0 * p)).sqrt()),
            Self::Exponential { p } => Ok(2.0 / p),
            Self::Tabulated { .. } => Err(Error::UnsupportedKernel(
                "gradient norm of a tabulated profile".into(),
            )),
        }
    }

    /// Mode-n radial kernel `K_n(r, s)`.
    pub fn radial(&self, n: u32, r: f64, s: f64) -> Result<f64> {
        match self {
            Self::Gaussian { p } => Ok(weber_kernel(n, *p, r, s)),
            Self::Exponential { p } => {
                if r * s == 0.0 {
                    // axis value: only the n = 0 mode survives
                    return Ok(if n == 0 { 2.0 * PI * self.spatial(r.max(s)) } else { 0.0 });
                }
                legendre_kernel(n, *p, r, s)
            }
            Self::Tabulated { .. } => Ok(hankel_quadrature(
                |rho| self.fourier(rho),
                n,
                n,
                r,
                s,
                1,
                self.fourier_cutoff(),
            )),
        }
    }
}

/// `1 - (1 + s) exp(-s)`, summed as a series for small `s`.
fn gamma2_lower(s: f64) -> f64 {
    if s > 0.5 {
        return 1.0 - (1.0 + s) * (-s).exp();
    }
    let mut term = s;
    let mut sum = 0.0;
    for k in 2..30 {
        term *= -s / k as f64;
        sum -= term * (k - 1) as f64;
    }
    sum
}

/// Closed form of the Gaussian mode-n kernel,
/// `exp(-(r^2 + s^2)/4p) I_n(r s / 2p) / 2p`, evaluated in scaled form.
pub fn weber_kernel(n: u32, p: f64, r: f64, s: f64) -> f64 {
    let x = r * s / (2.0 * p);
    let d = r - s;
    (-d * d / (4.0 * p)).exp() * bessel_i_scaled(n, x) / (2.0 * p)
}

/// Derivative of [`weber_kernel`] with respect to `p`.
pub fn weber_kernel_dp(n: u32, p: f64, r: f64, s: f64) -> f64 {
    let x = r * s / (2.0 * p);
    let d = r - s;
    let env = (-d * d / (4.0 * p)).exp() / (2.0 * p);
    let i_n = bessel_i_scaled(n, x);
    let i_lo = bessel_i_scaled(n.abs_diff(1), x);
    let i_hi = bessel_i_scaled(n + 1, x);
    env * ((-1.0 / p + (r * r + s * s) / (4.0 * p * p)) * i_n - 0.5 * x / p * (i_lo + i_hi))
}

/// Kernel of the dilation commutator for the Gaussian profile,
/// `-4p d/dp K_n`, i.e. the mode-n reduction of `4p rho^2 exp(-p rho^2)`.
pub fn dilation_kernel(n: u32, p: f64, r: f64, s: f64) -> f64 {
    -4.0 * p * weber_kernel_dp(n, p, r, s)
}

/// `(d/dr + n/r) K_n(r, s)` for the Gaussian profile.
pub fn weber_derivative_kernel(n: u32, p: f64, r: f64, s: f64) -> f64 {
    (s * weber_kernel(n.abs_diff(1), p, r, s) - r * weber_kernel(n, p, r, s)) / (2.0 * p)
}

/// Legendre function `Q_{n-1/2}(cosh eta)` from its integral representation,
/// with `chi_minus_one = cosh(eta) - 1`.
pub fn legendre_q_half(n: u32, chi_minus_one: f64) -> Result<f64> {
    if !(chi_minus_one > 0.0) {
        return Err(Error::Singular(format!(
            "Legendre argument must exceed 1, got 1 + {chi_minus_one}"
        )));
    }
    let eta = 2.0 * (0.5 * chi_minus_one).sqrt().asinh();
    let nf = n as f64;
    let upper = (60.0 / (nf + 0.5)).sqrt();
    let g = |t: f64| {
        let h = 0.5 * t * t;
        let shc = if h < 1e-8 { 1.0 + h * h / 6.0 } else { h.sinh() / h };
        let lead = (-nf * (eta + t * t)).exp();
        lead * std::f64::consts::SQRT_2 / (shc * (eta + h).sinh()).sqrt()
    };
    // the integrand varies on the scale sqrt(eta) near the origin
    let knee = eta.sqrt().min(upper);
    let a = integrate(g, 0.0, knee, 1e-300, 1e-14)?;
    let b = integrate(g, knee, upper, 1e-300, 1e-14)?;
    Ok(a + b)
}

/// `int_0^inf exp(-p rho) J_n(r rho) J_n(s rho) drho`.
pub fn legendre_generating(n: u32, p: f64, r: f64, s: f64) -> Result<f64> {
    if r * s <= 0.0 {
        return Err(Error::Singular("Legendre kernel undefined on the axis".into()));
    }
    let chi_minus_one = ((r - s) * (r - s) + p * p) / (2.0 * r * s);
    Ok(legendre_q_half(n, chi_minus_one)? / (PI * (r * s).sqrt()))
}

/// Mode-n kernel of the exponential profile, `-G'(p) + p G''(p)` with `G` the
/// Laplace-Bessel integral above; derivatives by Richardson-extrapolated
/// central differences.
pub fn legendre_kernel(n: u32, p: f64, r: f64, s: f64) -> Result<f64> {
    if r * s <= 0.0 {
        return Err(Error::Singular("Legendre kernel undefined on the axis".into()));
    }
    let h = 0.02 * p;
    let g = |q: f64| legendre_generating(n, q, r, s);
    let g0 = g(p)?;
    let (gp1, gm1) = (g(p + h)?, g(p - h)?);
    let (gp2, gm2) = (g(p + 0.5 * h)?, g(p - 0.5 * h)?);
    let d1 = |hh: f64, plus: f64, minus: f64| (plus - minus) / (2.0 * hh);
    let d2 = |hh: f64, plus: f64, minus: f64| (plus - 2.0 * g0 + minus) / (hh * hh);
    let first = (4.0 * d1(0.5 * h, gp2, gm2) - d1(h, gp1, gm1)) / 3.0;
    let second = (4.0 * d2(0.5 * h, gp2, gm2) - d2(h, gp1, gm1)) / 3.0;
    Ok((-first + p * second).max(0.0))
}

/// `int_0^cutoff FJ(rho) J_a(r rho) J_b(s rho) rho^power drho` by composite
/// Gauss-Legendre on panels no wider than the oscillation half-period.
pub fn hankel_quadrature(
    fourier: impl Fn(f64) -> f64,
    a: u32,
    b: u32,
    r: f64,
    s: f64,
    power: i32,
    cutoff: f64,
) -> f64 {
    let (x, w) = gauss_legendre(16);
    let freq = r + s;
    let width = if freq > 0.0 { (PI / freq).min(0.5) } else { 0.5 };
    let panels = (cutoff / width).ceil().max(1.0) as usize;
    let h = cutoff / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let rho = lo + 0.5 * h * (xi + 1.0);
            let v = fourier(rho)
                * puruspe::Jn(a, r * rho)
                * puruspe::Jn(b, s * rho)
                * rho.powi(power);
            total += 0.5 * h * wi * v;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weber_axis_values() {
        assert_eq!(weber_kernel(1, PI, 0.0, 5.0), 0.0);
        assert!((weber_kernel(0, PI, 0.0, 0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn tabulated_normalization_is_checked() {
        let err = KernelSpec::tabulated(vec![0.0, 1.0], vec![0.9, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Normalization(_)));
        assert!(KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 1.5]).is_err());
        assert!(KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn spatial_profiles_integrate_to_one() {
        for spec in [KernelSpec::Gaussian { p: PI }, KernelSpec::Exponential { p: 1.3 }] {
            let m = integrate(|x| 2.0 * PI * x * spec.spatial(x), 0.0, 400.0, 1e-13, 1e-12).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "{} {m}", spec.name());
        }
    }

    #[test]
    fn cubic_moments_match_quadrature() {
        for spec in [KernelSpec::Gaussian { p: PI }, KernelSpec::Exponential { p: 0.7 }] {
            for &a in &[0.5, 3.0, 20.0] {
                let q = integrate(|x| x.powi(3) * spec.spatial(x), 0.0, a, 1e-14, 1e-12).unwrap();
                assert!((q - spec.cubic_moment(a).unwrap()).abs() < 1e-10);
            }
        }
        assert!((KernelSpec::Gaussian { p: PI }.cubic_moment(1e3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_kernel_vanishes_on_axis() {
        assert_eq!(dilation_kernel(1, PI, 0.0, 3.0), 0.0);
        assert_eq!(dilation_kernel(2, PI, 4.0, 0.0), 0.0);
    }

    #[test]
    fn legendre_rejects_axis() {
        assert!(matches!(legendre_kernel(0, 1.0, 0.0, 2.0), Err(Error::Singular(_))));
    }
}
