//! Comparison of the whole-box dynamics with the dynamics confined to a
//! disc whose exterior stays at the initial profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_step, collocation_step, source, CollocationWeights, Profile};
use crate::error::{Error, Result};
use crate::meanfield::{f, ThermoContext};
use crate::norms::central_derivative;
use crate::operator::RadialOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub lambda: f64,
    /// `sup_{r <= lambda, t <= T} |u - u_partial|`
    pub d: f64,
    /// same for the radial derivative
    pub d_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierTable {
    pub rows: Vec<BarrierRow>,
    pub horizon: f64,
    pub dt: f64,
    /// least-squares slope of `log d` against `log lambda`
    pub exponent: f64,
    pub derivative_exponent: f64,
    pub warnings: Vec<String>,
}

pub fn barrier_compare(
    u0: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    lambdas: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<BarrierTable> {
    check_step(ctx.beta, dt)?;
    let radius = u0.grid.radius;
    let mut warnings = Vec::new();
    for &l in lambdas {
        if !(l > 0.0 && l <= radius) {
            return Err(Error::Domain(format!("box radius {l} outside (0, {radius}]")));
        }
        if l >= 0.5 * radius && l < radius {
            warnings.push(format!("lambda = {l} >= R/2: far-field truncation pollutes the comparison"));
        }
    }
    let w = CollocationWeights::new(dt)?;
    let tail = u0.tail_field(op)?;
    let steps = (horizon / dt).round() as usize;
    let n = u0.values.len();
    let (tol, max_iter) = (1e-13, 200);

    let mut full = Vec::with_capacity(steps + 1);
    full.push(u0.values.clone());
    for _ in 0..steps {
        let prev = full.last().unwrap();
        let (next, _) = collocation_step(prev, n, &w, tol, max_iter, |x| source(op, &tail, ctx.beta, x))?;
        full.push(next);
    }
    let nodes = &u0.grid.nodes;

    let rows = lambdas
        .par_iter()
        .map(|&lambda| -> Result<BarrierRow> {
            let cut = u0.grid.count_at_or_below(lambda);
            let mut u = u0.values.clone();
            let mut d: f64 = 0.0;
            let mut d_prime: f64 = 0.0;
            for step in 0..=steps {
                if step > 0 {
                    u = collocation_step(&u, cut, &w, tol, max_iter, |x| {
                        let a = op.apply_interior(x)?;
                        Ok(a.iter().zip(&tail).map(|(v, t)| f(ctx.beta * (v + t))).collect())
                    })?
                    .0;
                }
                let reference = &full[step];
                let diff: Vec<f64> = u.iter().zip(reference).map(|(a, b)| a - b).collect();
                let dd = central_derivative(nodes, &diff);
                for i in 0..cut {
                    d = d.max(diff[i].abs());
                    d_prime = d_prime.max(dd[i].abs());
                }
            }
            Ok(BarrierRow { lambda, d, d_prime })
        })
        .collect::<Result<Vec<_>>>()?;

    let exponent = log_slope(rows.iter().map(|r| (r.lambda, r.d)));
    let derivative_exponent = log_slope(rows.iter().map(|r| (r.lambda, r.d_prime)));
    Ok(BarrierTable { rows, horizon, dt, exponent, derivative_exponent, warnings })
}

/// Least-squares slope in log-log coordinates, over positive pairs.
pub fn log_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
