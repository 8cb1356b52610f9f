//! Gradient-flow relaxation `du/dt = -u + f(beta A_n u)` on a radial grid,
//! in the whole box or with the exterior of a disc held fixed.

mod barrier;
mod integrator;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use barrier::{barrier_compare, BarrierRow, BarrierTable};
pub use integrator::{collocation_step, CollocationWeights, StepStats};

use crate::energy::{dissipation_rate, renormalized_energy, RenormConfig};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::meanfield::{entropy, f, ThermoContext};
use crate::norms::{diagnostic_norms, NormKind};
use crate::operator::{PartialSplit, RadialOperator};

/// Declared decay class of `u - m_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayClass {
    X02,
    X01,
    Y01,
    Y02,
    X12,
    Bounded,
}

impl DecayClass {
    fn norm(self) -> Option<(NormKind, u32)> {
        match self {
            Self::X02 => Some((NormKind::X0, 2)),
            Self::X01 => Some((NormKind::X0, 1)),
            Self::Y01 => Some((NormKind::Y0, 1)),
            Self::Y02 => Some((NormKind::Y0, 2)),
            Self::X12 => Some((NormKind::X1, 2)),
            Self::Bounded => None,
        }
    }
}

/// Radial modulus `u(r)` of a configuration `u(r) e^{i n theta}`.
#[derive(Debug, Clone)]
pub struct Profile {
    pub mode: u32,
    pub values: Vec<f64>,
    /// constant value assumed beyond the grid
    pub far_field: f64,
    pub grid: Arc<RadialGrid>,
    pub decay_class: DecayClass,
    /// explicit values on the far-field nodes, overriding `far_field` there
    pub tail: Option<Vec<f64>>,
}

impl Profile {
    pub fn new(
        mode: u32,
        values: Vec<f64>,
        far_field: f64,
        grid: Arc<RadialGrid>,
        decay_class: DecayClass,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), got: values.len() });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("profile value {v} at node {i} outside [0, 1]")));
        }
        if !(0.0..1.0).contains(&far_field) {
            return Err(Error::Domain(format!("far-field value {far_field} outside [0, 1)")));
        }
        let p = Self { mode, values, far_field, grid, decay_class, tail: None };
        let norm = p.decay_norm()?;
        if !norm.is_finite() {
            return Err(Error::Inadmissible(format!("{decay_class:?} norm is not finite")));
        }
        Ok(p)
    }

    /// Samples `g(r)` on the grid.
    pub fn from_fn(
        mode: u32,
        grid: Arc<RadialGrid>,
        far_field: f64,
        decay_class: DecayClass,
        g: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = grid.nodes.iter().map(|&r| g(r)).collect();
        Self::new(mode, values, far_field, grid, decay_class)
    }

    /// Same profile with the far-field nodes set to `g(s)`.
    pub fn with_tail_fn(mut self, g: impl Fn(f64) -> f64) -> Self {
        self.tail = Some(self.grid.tail_nodes.iter().map(|&s| g(s)).collect());
        self
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, ..self.clone() }
    }

    /// Declared diagnostic norm of `u - far_field`.
    pub fn decay_norm(&self) -> Result<f64> {
        match self.decay_class.norm() {
            None => Ok(self.values.iter().map(|u| (u - self.far_field).abs()).fold(0.0, f64::max)),
            Some((kind, k)) => {
                let v: Vec<f64> = self.values.iter().map(|u| u - self.far_field).collect();
                Ok(diagnostic_norms(&self.grid.nodes, &v, kind, k)?.value)
            }
        }
    }

    fn check_operator(&self, op: &RadialOperator) -> Result<()> {
        let g = &op.grid;
        if g.len() != self.grid.len()
            || g.radius != self.grid.radius
            || g.ext_radius != self.grid.ext_radius
            || g.scheme != self.grid.scheme
        {
            return Err(Error::Shape { expected: g.len(), got: self.grid.len() });
        }
        Ok(())
    }

    /// Contribution of the far-field nodes to `A u` on the grid.
    pub fn tail_field(&self, op: &RadialOperator) -> Result<Vec<f64>> {
        self.check_operator(op)?;
        match &self.tail {
            Some(t) => {
                let zero = vec![0.0; self.values.len()];
                op.apply_with_tail(&zero, t)
            }
            None => Ok(op.tail_sums.iter().map(|t| t * self.far_field).collect()),
        }
    }

    /// `A u` on the grid, including the far-field nodes.
    pub fn field(&self, op: &RadialOperator) -> Result<Vec<f64>> {
        let tail = self.tail_field(op)?;
        let mut out = op.apply_interior(&self.values)?;
        out.iter_mut().zip(&tail).for_each(|(o, t)| *o += t);
        Ok(out)
    }

    /// `u(r)` off the grid through the fixed-point relation `u = f(beta A u)`.
    pub fn interpolate(&self, r: f64, op: &RadialOperator, ctx: &ThermoContext) -> Result<f64> {
        self.check_operator(op)?;
        let (inner, outer) = op.row_at(r)?;
        let mut a: f64 = inner.iter().zip(&self.values).map(|(k, u)| k * u).sum();
        a += match &self.tail {
            Some(t) => outer.iter().zip(t).map(|(k, u)| k * u).sum::<f64>(),
            None => self.far_field * outer.iter().sum::<f64>(),
        };
        Ok(f(ctx.beta * a))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_total: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// threshold on `sup |du/dt|` over the compact
    pub convergence_tol: f64,
    pub compact_radius: f64,
    /// keep a profile snapshot every this many steps (0: none)
    pub snapshot_every: usize,
    /// evaluate the free energy and dissipation at every step
    pub track_energy: Option<RenormConfig>,
}

impl FlowConfig {
    pub fn new(dt: f64, t_total: f64, compact_radius: f64) -> Self {
        Self {
            dt,
            t_total,
            picard_tol: 1e-12,
            picard_max: 100,
            convergence_tol: 1e-7,
            compact_radius,
            snapshot_every: 0,
            track_energy: None,
        }
    }

    /// Rejects steps for which the per-window fixed-point map need not contract.
    pub fn validate(&self, beta: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.t_total >= 0.0 && self.picard_tol > 0.0 && self.picard_max > 0) {
            return Err(Error::Config("dt, t_total, picard controls must be positive".into()));
        }
        check_step(beta, self.dt)
    }
}

pub fn check_step(beta: f64, dt: f64) -> Result<()> {
    let q = beta * beta * dt * (1.0 - (-2.0 * dt).exp());
    if q >= 8.0 {
        return Err(Error::Config(format!(
            "time step {dt} too large for beta {beta}: contraction quantity {q:.3} >= 8"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub sup_change: Vec<f64>,
    pub energy: Vec<f64>,
    /// running integral of the dissipation rate (trapezoid rule)
    pub dissipation: Vec<f64>,
    pub dissipation_rate: Vec<f64>,
    pub residual: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub converged: bool,
    pub steps: usize,
}

/// Source term `f(beta (M u + tail))` for the grid nodes.
fn source(op: &RadialOperator, tail: &[f64], beta: f64, u: &[f64]) -> Result<Vec<f64>> {
    let mut a = op.apply_interior(u)?;
    for (x, t) in a.iter_mut().zip(tail) {
        *x = f(beta * (*x + t));
    }
    Ok(a)
}

/// One step of the whole-box dynamics.
pub fn step_full(
    u: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    dt: f64,
    picard_tol: f64,
    picard_max: usize,
) -> Result<(Profile, StepStats)> {
    check_step(ctx.beta, dt)?;
    let w = CollocationWeights::new(dt)?;
    let tail = u.tail_field(op)?;
    let (next, stats) = collocation_step(&u.values, u.values.len(), &w, picard_tol, picard_max, |x| {
        source(op, &tail, ctx.beta, x)
    })?;
    Ok((u.with_values(next), stats))
}

/// One step of the dynamics inside the disc of the split, with grid values
/// outside it (and the far-field nodes) frozen at those of `u`.
pub fn step_partial(
    u: &Profile,
    op: &RadialOperator,
    split: &PartialSplit,
    ctx: &ThermoContext,
    dt: f64,
    picard_tol: f64,
    picard_max: usize,
) -> Result<(Profile, StepStats)> {
    check_step(ctx.beta, dt)?;
    let w = CollocationWeights::new(dt)?;
    let mut tail = u.tail_field(op)?;
    let outer = split.apply_outer(&u.values);
    tail.iter_mut().zip(&outer).for_each(|(t, o)| *t += o);
    let (next, stats) = collocation_step(&u.values, split.cut, &w, picard_tol, picard_max, |x| {
        let a = split.apply_inner(x);
        Ok(a.iter().zip(&tail).map(|(v, t)| f(ctx.beta * (v + t))).collect())
    })?;
    Ok((u.with_values(next), stats))
}

/// `sup |-u + f(beta A u)|` over grid nodes with `r <= radius`.
pub fn residual_f0_within(u: &Profile, op: &RadialOperator, ctx: &ThermoContext, radius: f64) -> Result<f64> {
    let a = u.field(op)?;
    Ok(u
        .grid
        .nodes
        .iter()
        .zip(u.values.iter().zip(&a))
        .filter(|(r, _)| **r <= radius)
        .map(|(_, (v, x))| (f(ctx.beta * x) - v).abs())
        .fold(0.0, f64::max))
}

pub fn residual_f0(u: &Profile, op: &RadialOperator, ctx: &ThermoContext) -> Result<f64> {
    residual_f0_within(u, op, ctx, f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualF1 {
    pub value: f64,
    /// nodes where `u = 0` and the entropy derivative is not evaluated
    pub skipped: Vec<usize>,
}

/// `sup |-A u + I'(u)/beta|` over nodes with `u > 0` and `r <= radius`.
pub fn residual_f1_within(
    u: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    radius: f64,
) -> Result<ResidualF1> {
    let a = u.field(op)?;
    let mut value: f64 = 0.0;
    let mut skipped = Vec::new();
    for (i, (&r, (&v, &x))) in u.grid.nodes.iter().zip(u.values.iter().zip(&a)).enumerate() {
        if r > radius {
            continue;
        }
        if v == 0.0 {
            skipped.push(i);
            continue;
        }
        let e = entropy(v)?;
        value = value.max((e.t_star / ctx.beta - x).abs());
    }
    Ok(ResidualF1 { value, skipped })
}

pub fn residual_f1(u: &Profile, op: &RadialOperator, ctx: &ThermoContext) -> Result<ResidualF1> {
    residual_f1_within(u, op, ctx, f64::INFINITY)
}

/// Runs the whole-box dynamics until `sup |du/dt|` on the compact drops
/// below the tolerance or the horizon is reached.
pub fn relax_to_equilibrium(
    u0: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    cfg: &FlowConfig,
) -> Result<(Profile, FlowTrace)> {
    cfg.validate(ctx.beta)?;
    let w = CollocationWeights::new(cfg.dt)?;
    let tail = u0.tail_field(op)?;
    let compact = u0.grid.count_at_or_below(cfg.compact_radius);
    let mut trace = FlowTrace::default();
    let mut u = u0.clone();

    let record = |trace: &mut FlowTrace, t: f64, u: &Profile, change: f64, step: usize| -> Result<()> {
        trace.times.push(t);
        trace.sup_change.push(change);
        trace.residual.push(residual_f0_within(u, op, ctx, cfg.compact_radius)?);
        if let Some(rc) = &cfg.track_energy {
            trace.energy.push(renormalized_energy(u, op, ctx, rc)?.total);
            let rate = dissipation_rate(u, u.grid.radius, op, ctx)?;
            let cum = match (trace.dissipation.last(), trace.dissipation_rate.last(), trace.times.len()) {
                (Some(c), Some(r0), n) if n >= 2 => c + 0.5 * (r0 + rate) * (t - trace.times[n - 2]),
                _ => 0.0,
            };
            trace.dissipation_rate.push(rate);
            trace.dissipation.push(cum);
        }
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            trace.snapshots.push((t, u.values.clone()));
        }
        Ok(())
    };

    let r0 = residual_f0_within(&u, op, ctx, cfg.compact_radius)?;
    record(&mut trace, 0.0, &u, r0, 0)?;
    if r0 < cfg.convergence_tol {
        trace.converged = true;
        return Ok((u, trace));
    }
    let steps = (cfg.t_total / cfg.dt).round() as usize;
    for step in 1..=steps {
        let (next, _) = collocation_step(&u.values, u.values.len(), &w, cfg.picard_tol, cfg.picard_max, |x| {
            source(op, &tail, ctx.beta, x)
        })?;
        let rate = next[..compact]
            .iter()
            .zip(&u.values[..compact])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / cfg.dt;
        u.values = next;
        trace.steps = step;
        record(&mut trace, step as f64 * cfg.dt, &u, rate, step)?;
        if rate < cfg.convergence_tol {
            let res = *trace.residual.last().unwrap();
            trace.converged = res < 10.0 * cfg.convergence_tol;
            break;
        }
    }
    Ok((u, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub holds: bool,
    /// first offending (snapshot time, radius)
    pub first_violation: Option<(f64, f64)>,
}

/// Every snapshot satisfies `|u| <= mu + tol`.
pub fn check_maximum_principle(snapshots: &[(f64, Vec<f64>)], nodes: &[f64], mu: f64, tol: f64) -> CheckReport {
    for (t, u) in snapshots {
        if let Some(i) = u.iter().position(|v| v.abs() > mu + tol) {
            return CheckReport { holds: false, first_violation: Some((*t, nodes[i])) };
        }
    }
    CheckReport { holds: true, first_violation: None }
}

/// Every snapshot is nondecreasing in `r` up to `tol` per adjacent pair.
pub fn check_monotonicity(snapshots: &[(f64, Vec<f64>)], nodes: &[f64], tol: f64) -> CheckReport {
    for (t, u) in snapshots {
        if let Some(i) = u.windows(2).position(|w| w[1] < w[0] - tol) {
            return CheckReport { holds: false, first_violation: Some((*t, nodes[i + 1])) };
        }
    }
    CheckReport { holds: true, first_violation: None }
}

#[cfg(test)]
mod tests;
