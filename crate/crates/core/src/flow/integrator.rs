//! Exponential collocation on the Lobatto nodes `0, h/2, h` for
//! `du/dt = -u + g(u)`, written in integrating-factor form.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// `w[k][j] = int_0^{s_k} e^{s - s_k} l_j(s) ds` for the collocation nodes
/// `s = (0, h/2, h)` and their Lagrange basis `l_j`.
#[derive(Debug, Clone)]
pub struct CollocationWeights {
    pub dt: f64,
    pub decay: [f64; 3],
    pub weights: [[f64; 3]; 3],
}

impl CollocationWeights {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step {dt} must be positive")));
        }
        let s = [0.0, 0.5 * dt, dt];
        let basis = |j: usize, x: f64| {
            let mut v = 1.0;
            for m in 0..3 {
                if m != j {
                    v *= (x - s[m]) / (s[j] - s[m]);
                }
            }
            v
        };
        let (gx, gw) = gauss_legendre(24);
        let mut weights = [[0.0; 3]; 3];
        for k in 1..3 {
            let top = s[k];
            for (j, wkj) in weights[k].iter_mut().enumerate() {
                *wkj = gx
                    .iter()
                    .zip(&gw)
                    .map(|(xi, wi)| {
                        let x = 0.5 * top * (xi + 1.0);
                        0.5 * top * wi * (x - top).exp() * basis(j, x)
                    })
                    .sum();
            }
        }
        Ok(Self { dt, decay: [1.0, (-0.5 * dt).exp(), (-dt).exp()], weights })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub last_change: f64,
}

/// One step from `u`. `rhs` maps a state to its nonlinear source `g(U)`;
/// only the first `active` components move, the rest stay at their input.
pub fn collocation_step(
    u: &[f64],
    active: usize,
    weights: &CollocationWeights,
    tol: f64,
    max_iter: usize,
    rhs: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, StepStats)> {
    let g0 = rhs(u)?;
    let mut g = [g0.clone(), g0.clone(), g0];
    let mut stages = [u.to_vec(), u.to_vec(), u.to_vec()];
    let mut last_change = f64::INFINITY;
    for it in 1..=max_iter {
        let mut change: f64 = 0.0;
        for k in 1..3 {
            let w = weights.weights[k];
            let e = weights.decay[k];
            for i in 0..active {
                let v = e * u[i] + w[0] * g[0][i] + w[1] * g[1][i] + w[2] * g[2][i];
                change = change.max((v - stages[k][i]).abs());
                stages[k][i] = v;
            }
        }
        last_change = change;
        if change <= tol {
            let out = std::mem::take(&mut stages[2]);
            return Ok((out, StepStats { iterations: it, last_change }));
        }
        g[1] = rhs(&stages[1])?;
        g[2] = rhs(&stages[2])?;
    }
    Err(Error::NoConvergence { what: "collocation fixed point", iterations: max_iter, last_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_weights_are_a_partition_of_unity() {
        let w = CollocationWeights::new(0.3).unwrap();
        let s: f64 = w.weights[2].iter().sum::<f64>() + w.decay[2];
        assert!((s - 1.0).abs() < 1e-14);
        assert!(w.weights[2].iter().all(|&x| x > 0.0));
    }

    #[test]
    fn linear_forcing_is_fourth_order() {
        // du/dt = -u + sin(u) has no closed form; compare dt against dt/2
        let run = |dt: f64, steps: usize| {
            let w = CollocationWeights::new(dt).unwrap();
            let mut u = vec![0.3];
            for _ in 0..steps {
                u = collocation_step(&u, 1, &w, 1e-15, 100, |x| Ok(vec![(2.0 * x[0]).sin()])).unwrap().0;
            }
            u[0]
        };
        let a = run(0.2, 5);
        let b = run(0.1, 10);
        let c = run(0.05, 20);
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn frozen_components_stay_put() {
        let w = CollocationWeights::new(0.1).unwrap();
        let (u, _) = collocation_step(&[0.1, 0.7], 1, &w, 1e-14, 50, |x| Ok(vec![0.5; x.len()])).unwrap();
        assert_eq!(u[1], 0.7);
    }
}
