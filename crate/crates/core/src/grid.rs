//! Radial quadrature grids realizing the measure `r dr`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Points per panel of the composite Gauss-Legendre scheme.
pub const PANEL_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    UniformMidpoint,
    GaussLegendreComposite,
}

impl std::str::FromStr for GridScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-midpoint" => Ok(Self::UniformMidpoint),
            "gauss-legendre-composite" => Ok(Self::GaussLegendreComposite),
            other => Err(Error::Config(format!("unknown grid scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for GridScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::UniformMidpoint => "uniform-midpoint",
            Self::GaussLegendreComposite => "gauss-legendre-composite",
        })
    }
}

/// Nodes on `(0, R)` with weights including the `r` Jacobian, plus a second
/// set of nodes covering `(R, R_ext)` used only for far-field integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub radius: f64,
    pub ext_radius: f64,
    pub scheme: GridScheme,
    pub tail_nodes: Vec<f64>,
    pub tail_weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub len: usize,
    pub radius: f64,
    pub ext_radius: f64,
    pub scheme: GridScheme,
}

pub fn build_grid(n: usize, radius: f64, ext_radius: f64, scheme: GridScheme) -> Result<RadialGrid> {
    if n < 16 {
        return Err(Error::Config(format!("grid needs at least 16 nodes, got {n}")));
    }
    if !(radius > 0.0) || !(ext_radius >= radius) || !ext_radius.is_finite() {
        return Err(Error::Config(format!(
            "need 0 < R <= R_ext, got R = {radius}, R_ext = {ext_radius}"
        )));
    }
    let (nodes, weights, cell) = match scheme {
        GridScheme::UniformMidpoint => {
            let h = radius / n as f64;
            let (x, w) = midpoint(0.0, radius, n);
            (x, w, h)
        }
        GridScheme::GaussLegendreComposite => {
            if n % PANEL_ORDER != 0 {
                return Err(Error::Config(format!(
                    "composite Gauss-Legendre grid needs a multiple of {PANEL_ORDER} nodes, got {n}"
                )));
            }
            let panels = n / PANEL_ORDER;
            let (x, w) = composite(0.0, radius, panels);
            (x, w, radius / panels as f64)
        }
    };
    let tail_cells = ((ext_radius - radius) / cell).round() as usize;
    let (tail_nodes, tail_weights) = if tail_cells == 0 {
        (Vec::new(), Vec::new())
    } else {
        match scheme {
            GridScheme::UniformMidpoint => midpoint(radius, ext_radius, tail_cells),
            GridScheme::GaussLegendreComposite => composite(radius, ext_radius, tail_cells),
        }
    };
    Ok(RadialGrid { nodes, weights, radius, ext_radius, scheme, tail_nodes, tail_weights })
}

fn midpoint(a: f64, b: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / cells as f64;
    let nodes: Vec<f64> = (0..cells).map(|i| a + (i as f64 + 0.5) * h).collect();
    let weights = nodes.iter().map(|r| r * h).collect();
    (nodes, weights)
}

fn composite(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let r = lo + 0.5 * h * (xi + 1.0);
            nodes.push(r);
            weights.push(0.5 * h * wi * r);
        }
    }
    (nodes, weights)
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            len: self.len(),
            radius: self.radius,
            ext_radius: self.ext_radius,
            scheme: self.scheme,
        }
    }

    /// `sum_i w_i g(r_i)`, approximating `int_0^R g(r) r dr`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, w)| w * g(r)).sum()
    }

    /// Number of nodes with `r <= lambda`.
    pub fn count_at_or_below(&self, lambda: f64) -> usize {
        self.nodes.partition_point(|&r| r <= lambda)
    }

    /// Weighted L2 norm for the `r dr` measure.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }

    /// Same grid with twice as many nodes.
    pub fn refined(&self) -> Result<RadialGrid> {
        build_grid(2 * self.len(), self.radius, self.ext_radius, self.scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_constant_exactness() {
        let g = build_grid(256, 20.0, 40.0, GridScheme::UniformMidpoint).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 200.0).abs() < 1e-10);
        assert_eq!(g.tail_nodes.len(), 256);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let g = build_grid(256, 20.0, 40.0, GridScheme::GaussLegendreComposite).unwrap();
        let v = g.integrate_fn(|r| r);
        assert!((v - 20f64.powi(3) / 3.0).abs() / (20f64.powi(3) / 3.0) < 1e-12);
        assert!((g.weights.iter().sum::<f64>() - 200.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_sizes() {
        assert!(build_grid(8, 20.0, 40.0, GridScheme::UniformMidpoint).is_err());
        assert!(build_grid(64, 20.0, 10.0, GridScheme::UniformMidpoint).is_err());
        assert!(build_grid(60, 20.0, 40.0, GridScheme::GaussLegendreComposite).is_err());
        assert!(build_grid(64, 0.0, 10.0, GridScheme::UniformMidpoint).is_err());
    }

    #[test]
    fn ordering_and_positivity() {
        for scheme in [GridScheme::UniformMidpoint, GridScheme::GaussLegendreComposite] {
            let g = build_grid(64, 10.0, 25.0, scheme).unwrap();
            assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!(g.tail_nodes.first().unwrap() > g.nodes.last().unwrap());
        }
    }
}
