//! Free-energy functionals in a single angular sector: interaction,
//! logarithmic counterterm, mean-field term, dissipation and degree.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Profile;
use crate::grid::GridSummary;
use crate::kernel::KernelSpec;
use crate::meanfield::{entropy, f, free_energy_density, ThermoContext};
use crate::norms::central_derivative;
use crate::operator::RadialOperator;
use crate::quad;

/// Minimum number of circle samples accepted by [`degree`].
pub const MIN_DEGREE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormConfig {
    /// inner cutoff of the counterterm
    pub r0: f64,
    /// cone ratio: the counterterm integrates `rho <= r / cone`
    pub cone: f64,
    pub quad_tol: f64,
}

impl Default for RenormConfig {
    fn default() -> Self {
        Self { r0: 1.0, cone: 4.0, quad_tol: 1e-10 }
    }
}

impl RenormConfig {
    pub fn validate(&self, radius: f64) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(Error::Config(format!("r0 = {} must be positive", self.r0)));
        }
        if !(self.cone >= 2.0) {
            return Err(Error::Config(format!("cone ratio {} must be >= 2", self.cone)));
        }
        if !(radius > 4.0 * self.r0) {
            return Err(Error::Config(format!("radius {radius} must exceed 4 r0 = {}", 4.0 * self.r0)));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::Config("quad_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub interaction: f64,
    pub counterterm: f64,
    pub meanfield: f64,
    pub total: f64,
    /// bound on the part of the interaction carried by kernel mass beyond `R_ext`
    pub truncation_estimate: f64,
    /// `int_0^1 u^2 dr / r`; borderline when `u` does not vanish on the axis
    pub axis_weight: f64,
    /// `int |r^{1/2} v'|^2 r dr` with `v = u - m_beta`
    pub derivative_weight: f64,
    pub flags: Vec<String>,
    pub mode: u32,
    pub config: RenormConfig,
    pub grid: GridSummary,
    pub kernel: KernelSpec,
}

/// `pi sum w u (u - A u)` plus a correction for the frozen far-field nodes.
///
/// The correction `-pi sum w (u - c) (T u_tail)` is constant for `u = c` and
/// makes the gradient of the discrete functional equal `2 pi w (u - A u)`,
/// so the flow dissipates it exactly.
pub fn interaction_radial(u: &Profile, op: &RadialOperator) -> Result<f64> {
    let tail = u.tail_field(op)?;
    let a = u.field(op)?;
    let c = u.far_field;
    Ok(PI * u
        .grid
        .weights
        .iter()
        .zip(u.values.iter().zip(a.iter().zip(&tail)))
        .map(|(w, (v, (x, t)))| w * (v * (v - x) - (v - c) * t))
        .sum::<f64>())
}

/// Logarithmic counterterm `(pi^2/2) (n m)^2 int_{r0}^{R} dr/r int_0^{r/C} s^3 J(s) ds`.
pub fn counterterm(cfg: &RenormConfig, spec: &KernelSpec, n: u32, m_beta: f64, radius: f64) -> Result<f64> {
    cfg.validate(radius)?;
    spec.cubic_moment(1.0)?;
    if n == 0 || m_beta == 0.0 {
        return Ok(0.0);
    }
    let scale = 0.5 * (PI * n as f64 * m_beta).powi(2);
    let inner = |x: f64| spec.cubic_moment(x.exp() / cfg.cone).unwrap_or(f64::NAN);
    let v = quad::integrate(inner, cfg.r0.ln(), radius.ln(), cfg.quad_tol * 1e-3, cfg.quad_tol * 1e-3)?;
    if !v.is_finite() {
        return Err(Error::Numerical("counterterm integrand".into()));
    }
    Ok(scale * v)
}

/// `2 pi sum w (f_beta(u) - f_beta(m_beta))` over the grid.
pub fn meanfield_term(u: &Profile, ctx: &ThermoContext) -> Result<f64> {
    let base = free_energy_density(ctx.m_beta, ctx)?;
    let mut total = 0.0;
    for (w, v) in u.grid.weights.iter().zip(&u.values) {
        total += w * (free_energy_density(*v, ctx)? - base);
    }
    Ok(2.0 * PI * total)
}

pub fn renormalized_energy(
    u: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    cfg: &RenormConfig,
) -> Result<EnergyReport> {
    let g = &u.grid;
    cfg.validate(g.radius)?;
    let mut flags = Vec::new();
    let axis_weight: f64 = g
        .nodes
        .iter()
        .zip(g.weights.iter().zip(&u.values))
        .filter(|(r, _)| **r <= 1.0)
        .map(|(r, (w, v))| w * v * v / (r * r))
        .sum();
    if u.mode >= 1 && u.values[0] > 0.1 * ctx.m_beta.max(1e-12) {
        flags.push(format!(
            "profile does not vanish on the axis (u = {:.3e} at r = {:.3e}); axis weight {:.3e} grows like log(1/r_min)",
            u.values[0], g.nodes[0], axis_weight
        ));
    }
    let v: Vec<f64> = u.values.iter().map(|x| x - ctx.m_beta).collect();
    let dv = central_derivative(&g.nodes, &v);
    let derivative_weight: f64 = g.nodes.iter().zip(g.weights.iter().zip(&dv)).map(|(r, (w, d))| w * r * d * d).sum();
    if !axis_weight.is_finite() || !derivative_weight.is_finite() {
        return Err(Error::Inadmissible(format!(
            "axis weight {axis_weight}, derivative weight {derivative_weight}"
        )));
    }
    let interaction = interaction_radial(u, op)?;
    let counter = counterterm(cfg, &op.kernel, u.mode, ctx.m_beta, g.radius)?;
    let meanfield = meanfield_term(u, ctx)?;
    let truncation_estimate = op
        .beyond_bound
        .map(|b| PI * b * g.weights.iter().zip(&u.values).map(|(w, x)| w * x).sum::<f64>())
        .unwrap_or(f64::NAN);
    Ok(EnergyReport {
        interaction,
        counterterm: counter,
        meanfield,
        total: interaction - counter + meanfield,
        truncation_estimate,
        axis_weight,
        derivative_weight,
        flags,
        mode: u.mode,
        config: *cfg,
        grid: g.summary(),
        kernel: op.kernel.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteVolumeEnergy {
    pub total: f64,
    /// everything depending on the values inside the disc
    pub interior_part: f64,
    /// `pi int_disc A^0 (u_ext^2)`, fixed by the exterior alone
    pub exterior_constant: f64,
    pub meanfield: f64,
}

/// Free energy of the disc `r <= lambda` with the rest of the profile as
/// boundary condition. `op0` is the mode-0 operator on the same grid.
pub fn finite_volume_energy(
    u: &Profile,
    lambda: f64,
    op: &RadialOperator,
    op0: &RadialOperator,
    ctx: &ThermoContext,
) -> Result<FiniteVolumeEnergy> {
    if op0.mode != 0 {
        return Err(Error::Config("finite-volume energy needs a mode-0 operator".into()));
    }
    let g = &u.grid;
    let split = op.split_partial(lambda)?;
    let split0 = op0.split_partial(lambda)?;
    let cut = split.cut;
    let interior: Vec<f64> = (0..g.len()).map(|i| if i < cut { u.values[i] } else { 0.0 }).collect();
    let exterior: Vec<f64> = (0..g.len()).map(|i| if i < cut { 0.0 } else { u.values[i] }).collect();
    let ext_sq: Vec<f64> = exterior.iter().map(|x| x * x).collect();
    let (tail, tail_sq): (Vec<f64>, Vec<f64>) = match &u.tail {
        Some(t) => (t.clone(), t.iter().map(|x| x * x).collect()),
        None => {
            let c = u.far_field;
            (vec![c; g.tail_nodes.len()], vec![c * c; g.tail_nodes.len()])
        }
    };
    let inner_field = split.apply_inner(&interior);
    let cross = op.apply_with_tail(&exterior, &tail)?;
    let zero = vec![0.0; g.len()];
    let ones = vec![1.0; g.tail_nodes.len()];
    let mass0 = op0.apply_with_tail(&vec![1.0; g.len()], &ones)?;
    let mut ext0 = op0.apply_with_tail(&zero, &tail_sq)?;
    let outer0 = split0.apply_outer(&ext_sq);
    ext0.iter_mut().zip(&outer0).for_each(|(a, b)| *a += b);

    let base = free_energy_density(ctx.m_beta, ctx)?;
    let (mut bil, mut constant, mut mf) = (0.0, 0.0, 0.0);
    for i in 0..cut {
        let (w, v) = (g.weights[i], u.values[i]);
        bil += w * (v * v * mass0[i] - v * inner_field[i] - 2.0 * v * cross[i]);
        constant += w * ext0[i];
        mf += w * (free_energy_density(v, ctx)? - base);
    }
    let interior_part = PI * bil + 2.0 * PI * mf;
    let exterior_constant = PI * constant;
    Ok(FiniteVolumeEnergy {
        total: interior_part + exterior_constant,
        interior_part,
        exterior_constant,
        meanfield: 2.0 * PI * mf,
    })
}

/// Per-node factors `(I'(u) - beta A u, u - f(beta A u))` inside the disc.
pub fn dissipation_factors(
    u: &Profile,
    lambda: f64,
    op: &RadialOperator,
    ctx: &ThermoContext,
) -> Result<Vec<(f64, f64)>> {
    let a = u.field(op)?;
    let cut = u.grid.count_at_or_below(lambda);
    (0..cut)
        .map(|i| {
            let v = u.values[i];
            let e = entropy(v).map_err(|_| {
                Error::Domain(format!("entropy diverges at node {i} where u = {v}"))
            })?;
            let z = ctx.beta * a[i];
            Ok((e.t_star - z, v - f(z)))
        })
        .collect()
}

/// `(2 pi / beta) sum_{r_i <= lambda} w_i (I'(u) - beta A u)(u - f(beta A u))`,
/// the rate at which the flow lowers the free energy.
pub fn dissipation_rate(u: &Profile, lambda: f64, op: &RadialOperator, ctx: &ThermoContext) -> Result<f64> {
    let factors = dissipation_factors(u, lambda, op, ctx)?;
    Ok(2.0 * PI / ctx.beta
        * factors.iter().zip(&u.grid.weights).map(|((a, b), w)| w * a * b).sum::<f64>())
}

/// Winding number of closed-curve samples, from principal-branch phase steps.
pub fn degree(samples: &[Complex64], floor: f64) -> Result<i64> {
    if samples.len() < MIN_DEGREE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} circle samples, need at least {MIN_DEGREE_SAMPLES}",
            samples.len()
        )));
    }
    winding(samples, floor)
}

/// Winding number without the sample-count floor (coarse lattice circles).
pub fn winding(samples: &[Complex64], floor: f64) -> Result<i64> {
    let min_modulus = samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min_modulus > floor) {
        return Err(Error::IllDefinedDegree { min_modulus, floor });
    }
    let total: f64 = (0..samples.len())
        .map(|k| (samples[(k + 1) % samples.len()] / samples[k]).arg())
        .sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Samples `u(R_deg) e^{i n theta}` at `count` uniform angles, with the
/// modulus interpolated off the grid.
pub fn circle_samples(
    u: &Profile,
    op: &RadialOperator,
    ctx: &ThermoContext,
    radius: f64,
    count: usize,
) -> Result<Vec<Complex64>> {
    let modulus = u.interpolate(radius, op, ctx)?;
    Ok((0..count)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / count as f64;
            Complex64::from_polar(modulus, u.mode as f64 * theta)
        })
        .collect())
}
