//! Weighted sup-norms on sampled radial functions, with far-field fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of nodes in the far-field fit window.
pub const MIN_FIT_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// `sup_{r<=1}|v| + sup_{r>=1} r^k |v|`
    X0,
    /// adds `sup_{r<=1}|v'| + sup_{r>=1} r^{k+1}|v'|`
    X1,
    /// X0 plus a remainder after subtracting the fitted far-field expansion
    Y0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// fitted far-field coefficients (`l` for k = 1, `l0, l1` for k = 2)
    pub coefficients: Vec<f64>,
}

/// Three-point derivative on a non-uniform grid, one-sided at the ends.
pub fn central_derivative(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert_eq!(n, values.len());
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = nodes[i] - nodes[i - 1];
        let h1 = nodes[i + 1] - nodes[i];
        d[i] = (-h1 / (h0 * (h0 + h1))) * values[i - 1]
            + ((h1 - h0) / (h0 * h1)) * values[i]
            + (h0 / (h1 * (h0 + h1))) * values[i + 1];
    }
    let one_sided = |a: usize, b: usize, c: usize| {
        // derivative at node a from nodes a, b, c
        let (x0, x1, x2) = (nodes[a], nodes[b], nodes[c]);
        let (y0, y1, y2) = (values[a], values[b], values[c]);
        y0 * (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    d[0] = one_sided(0, 1, 2);
    d[n - 1] = one_sided(n - 1, n - 2, n - 3);
    d
}

pub fn diagnostic_norms(nodes: &[f64], values: &[f64], kind: NormKind, k: u32) -> Result<NormReport> {
    if nodes.len() != values.len() {
        return Err(Error::Shape { expected: nodes.len(), got: values.len() });
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Config(format!("weight exponent {k} not in {{1, 2}}")));
    }
    if nodes.len() < 3 {
        return Err(Error::InsufficientData(format!("{} nodes", nodes.len())));
    }
    let kf = k as f64;
    let near = |g: &dyn Fn(usize) -> f64| {
        (0..nodes.len()).filter(|&i| nodes[i] <= 1.0).map(g).fold(0.0, f64::max)
    };
    let far = |g: &dyn Fn(usize) -> f64| {
        (0..nodes.len()).filter(|&i| nodes[i] >= 1.0).map(g).fold(0.0, f64::max)
    };
    let base = near(&|i| values[i].abs()) + far(&|i| nodes[i].powf(kf) * values[i].abs());
    match kind {
        NormKind::X0 => Ok(NormReport { value: base, coefficients: vec![] }),
        NormKind::X1 => {
            let d = central_derivative(nodes, values);
            let value = base + near(&|i| d[i].abs()) + far(&|i| nodes[i].powf(kf + 1.0) * d[i].abs());
            Ok(NormReport { value, coefficients: vec![] })
        }
        NormKind::Y0 => {
            let radius = *nodes.last().unwrap();
            let window: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] >= 0.5 * radius).collect();
            if window.len() < MIN_FIT_NODES {
                return Err(Error::InsufficientData(format!(
                    "fit window [R/2, R] holds {} nodes, need {MIN_FIT_NODES}",
                    window.len()
                )));
            }
            let coefficients = fit_inverse_powers(nodes, values, &window, k as usize)?;
            let rem = |i: usize| {
                let r = nodes[i];
                if k == 1 {
                    r * (r * values[i] - coefficients[0])
                } else {
                    r.sqrt() * (r * r * values[i] - r * coefficients[0] - coefficients[1])
                }
            };
            let value = base + far(&|i| rem(i).abs());
            Ok(NormReport { value, coefficients })
        }
    }
}

/// Least squares for `v ~ sum_j c_j r^{-(j+1)}`, j < terms.
fn fit_inverse_powers(nodes: &[f64], values: &[f64], window: &[usize], terms: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(window.len(), terms, |row, j| nodes[window[row]].powi(-(j as i32 + 1)));
    let b = DVector::from_iterator(window.len(), window.iter().map(|&i| values[i]));
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes() -> Vec<f64> {
        (0..400).map(|i| (i as f64 + 0.5) * 0.1).collect()
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let r = nodes();
        let z = vec![0.0; r.len()];
        for kind in [NormKind::X0, NormKind::X1, NormKind::Y0] {
            assert_eq!(diagnostic_norms(&r, &z, kind, 2).unwrap().value, 0.0);
        }
    }

    #[test]
    fn weight_two_on_lorentzian() {
        let r = nodes();
        let v: Vec<f64> = r.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let n2 = diagnostic_norms(&r, &v, NormKind::X0, 2).unwrap().value;
        // sup near the axis is v(0.05), r^2 v stays below 1
        assert!(n2 < 2.0 && n2 > 1.9);
        let r3: f64 = r.iter().zip(&v).map(|(x, y)| x.powi(3) * y).fold(0.0, f64::max);
        assert!(r3 > 30.0);
    }

    #[test]
    fn inverse_r_has_exact_expansion() {
        let r = nodes();
        let v: Vec<f64> = r.iter().map(|x| 1.0 / x).collect();
        let rep = diagnostic_norms(&r, &v, NormKind::Y0, 1).unwrap();
        assert!((rep.coefficients[0] - 1.0).abs() < 1e-12);
        let far_only: f64 = r
            .iter()
            .zip(&v)
            .filter(|(x, _)| **x >= 1.0)
            .map(|(x, y)| x * y)
            .fold(0.0, f64::max);
        let near: f64 = v.iter().zip(&r).filter(|(_, x)| **x <= 1.0).map(|(y, _)| *y).fold(0.0, f64::max);
        assert!((rep.value - far_only - near).abs() < 1e-9);
    }

    #[test]
    fn short_window_rejected() {
        let r: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let v = vec![1.0; 10];
        assert!(matches!(
            diagnostic_norms(&r, &v, NormKind::Y0, 1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn derivative_exact_for_quadratics() {
        let r: Vec<f64> = (0..20).map(|i| 0.1 + (i as f64).powf(1.3) * 0.2).collect();
        let v: Vec<f64> = r.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        for (x, d) in r.iter().zip(central_derivative(&r, &v)) {
            assert!((d - (6.0 * x - 1.0)).abs() < 1e-9);
        }
    }
}
