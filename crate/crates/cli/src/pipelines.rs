//! One function per subcommand. Each writes its artifacts through
//! [`Outputs`] and returns a short JSON summary for the terminal.

use std::sync::Arc;

use anyhow::Result;
use kacvortex::energy::{circle_samples, degree, dissipation_rate, renormalized_energy, RenormConfig};
use kacvortex::flow::{
    barrier_compare, check_maximum_principle, check_monotonicity, relax_to_equilibrium, residual_f0_within,
    residual_f1_within, DecayClass, FlowConfig, FlowTrace, Profile,
};
use kacvortex::grid::{build_grid, RadialGrid};
use kacvortex::lattice::{
    block_spin, build_couplings, hamiltonian, hamiltonian_blocked, lattice_vortex_degree, run_chain, BlockField,
    SpinField,
};
use kacvortex::meanfield::{entropy, ThermoContext};
use kacvortex::operator::{assemble_operator, commutator_c, RadialOperator};
use kacvortex::spectral::{
    assemble_block, eigen_spectrum, mourre_check, potentials_from_profile, shifted_operator, spectrum_rows,
    zero_modes,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Config, KernelKind};
use crate::output::Outputs;

pub fn meanfield(cfg: &Config, out: &mut Outputs) -> Result<Value> {
    let mut rows = Vec::new();
    for &beta in &cfg.meanfield.betas {
        let ctx = ThermoContext::new(beta)?;
        rows.push((beta, ctx.m_beta, ctx.free_energy_density(ctx.m_beta)?));
    }
    out.write_csv("meanfield.csv", &["beta", "m_beta", "free_energy_density"], &rows)?;
    let mf = &cfg.meanfield;
    let mut table = Vec::with_capacity(mf.entropy_points);
    for i in 0..mf.entropy_points {
        let rho = mf.rho_max * i as f64 / (mf.entropy_points - 1) as f64;
        let e = entropy(rho)?;
        table.push((rho, e.value, e.t_star, e.second));
    }
    out.write_csv("entropy.csv", &["rho", "entropy", "derivative", "second_derivative"], &table)?;
    let summary = json!({
        "rows": rows.iter().map(|(b, m, f)| json!({"beta": b, "m_beta": m, "free_energy_density": f})).collect::<Vec<_>>(),
    });
    out.write_json("meanfield.json", &summary)?;
    Ok(summary)
}

struct Setup {
    ctx: ThermoContext,
    grid: Arc<RadialGrid>,
    op: RadialOperator,
}

fn setup(cfg: &Config, mode: u32) -> Result<Setup> {
    let ctx = ThermoContext::new(cfg.model.beta)?;
    let g = &cfg.grid;
    let grid = Arc::new(build_grid(g.nodes, g.radius, g.ext_factor * g.radius, g.scheme)?);
    let op = assemble_operator(mode, &cfg.kernel(), &grid)?;
    Ok(Setup { ctx, grid, op })
}

/// `m_beta (r / sqrt(1 + r^2))^n`
fn initial_profile(s: &Setup, mode: u32) -> Result<Profile> {
    let m = s.ctx.m_beta;
    Ok(Profile::from_fn(mode, s.grid.clone(), m, DecayClass::Y02, |r| {
        m * (r / (1.0 + r * r).sqrt()).powi(mode as i32)
    })?)
}

fn renorm(cfg: &Config) -> RenormConfig {
    RenormConfig { r0: cfg.renorm.r0, cone: cfg.renorm.cone, quad_tol: cfg.renorm.quad_tol }
}

fn flow_config(cfg: &Config) -> FlowConfig {
    let f = &cfg.flow;
    let mut fc = FlowConfig::new(f.dt, f.t_total, f.compact_fraction * cfg.grid.radius);
    fc.picard_tol = f.picard_tol;
    fc.picard_max = f.picard_max;
    fc.convergence_tol = f.convergence_tol;
    fc.snapshot_every = f.snapshot_every;
    if f.track_energy {
        fc.track_energy = Some(renorm(cfg));
    }
    fc
}

fn relax_profile(cfg: &Config, s: &Setup) -> Result<(Profile, FlowTrace)> {
    let u0 = initial_profile(s, cfg.model.mode)?;
    Ok(relax_to_equilibrium(&u0, &s.op, &s.ctx, &flow_config(cfg))?)
}

fn profile_csv(out: &mut Outputs, name: &str, u: &Profile) -> Result<()> {
    let g = &u.grid;
    let rows = (0..g.len()).map(|i| (g.nodes[i], g.weights[i], u.values[i]));
    out.write_csv(name, &["r", "weight", "u"], rows)
}

pub fn relax(cfg: &Config, out: &mut Outputs) -> Result<Value> {
    let s = setup(cfg, cfg.model.mode)?;
    let (u, trace) = relax_profile(cfg, &s)?;
    profile_csv(out, "profile.csv", &u)?;
    let opt = |v: &[f64], k: usize| v.get(k).copied();
    let rows = (0..trace.times.len()).map(|k| {
        (
            trace.times[k],
            trace.sup_change[k],
            trace.residual[k],
            opt(&trace.energy, k),
            opt(&trace.dissipation, k),
            opt(&trace.dissipation_rate, k),
        )
    });
    out.write_csv("trace.csv", &["t", "sup_change", "residual", "energy", "dissipated", "dissipation_rate"], rows)?;
    if !trace.snapshots.is_empty() {
        let rows = trace
            .snapshots
            .iter()
            .flat_map(|(t, v)| s.grid.nodes.iter().zip(v).map(move |(r, x)| (*t, *r, *x)));
        out.write_csv("snapshots.csv", &["t", "r", "u"], rows)?;
    }
    let compact = cfg.flow.compact_fraction * cfg.grid.radius;
    let mut snaps = trace.snapshots.clone();
    snaps.push((*trace.times.last().unwrap_or(&0.0), u.values.clone()));
    let f1 = residual_f1_within(&u, &s.op, &s.ctx, compact)?;
    let summary = json!({
        "converged": trace.converged,
        "steps": trace.steps,
        "final_time": trace.times.last(),
        "m_beta": s.ctx.m_beta,
        "residual_f0": residual_f0_within(&u, &s.op, &s.ctx, compact)?,
        "residual_f1": f1.value,
        "residual_f1_skipped_nodes": f1.skipped.len(),
        "compact_radius": compact,
        "axis_value": u.interpolate(0.0, &s.op, &s.ctx)?,
        "maximum_principle": check_maximum_principle(&snaps, &s.grid.nodes, s.ctx.m_beta, 1e-12),
        "monotone": check_monotonicity(&snaps, &s.grid.nodes, 1e-12),
    });
    out.write_json("relax.json", &summary)?;
    Ok(summary)
}

pub fn energy(cfg: &Config, out: &mut Outputs) -> Result<Value> {
    let s = setup(cfg, cfg.model.mode)?;
    let u = if cfg.energy.relax { relax_profile(cfg, &s)?.0 } else { initial_profile(&s, cfg.model.mode)? };
    profile_csv(out, "profile.csv", &u)?;
    let report = renormalized_energy(&u, &s.op, &s.ctx, &renorm(cfg))?;
    let samples = circle_samples(&u, &s.op, &s.ctx, cfg.energy.degree_radius, cfg.energy.degree_samples)?;
    let deg = degree(&samples, 0.1 * s.ctx.m_beta);
    let summary = json!({
        "relaxed": cfg.energy.relax,
        "report": report,
        "dissipation_rate": dissipation_rate(&u, cfg.grid.radius, &s.op, &s.ctx)?,
        "degree": deg.as_ref().ok(),
        "degree_error": deg.as_ref().err().map(|e| e.to_string()),
    });
    out.write_json("energy.json", &summary)?;
    Ok(json!({"total": report.total, "interaction": report.interaction, "counterterm": report.counterterm, "degree": deg.ok()}))
}

pub fn spectrum(cfg: &Config, out: &mut Outputs, seed: u64) -> Result<Value> {
    let n = cfg.model.mode;
    let s = setup(cfg, n)?;
    let (u, _) = relax_profile(cfg, &s)?;
    let spec = cfg.kernel();
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for k in cfg.blocks() {
        let partner = (2 * n as i64 - k as i64).unsigned_abs() as u32;
        let op_k = assemble_operator(k, &spec, &s.grid)?;
        let op_p = assemble_operator(partner, &spec, &s.grid)?;
        let block = assemble_block(k, &u, &op_k, &op_p, &s.ctx)?;
        let rep = eigen_spectrum(&block.matrix, cfg.grid.radius)?;
        blocks.push(json!({
            "k": k,
            "partner": partner,
            "min": rep.eigenvalues.first(),
            "max": rep.eigenvalues.last(),
            "negative": rep.eigenvalues.iter().filter(|e| **e < 0.0).count(),
            "bulk": rep.bulk,
            "bulk_mean_spacing": rep.bulk_mean_spacing,
            "isolated": rep.isolated(5.0),
        }));
        rows.extend(spectrum_rows(k, &rep));
    }
    out.write_csv("spectrum.csv", &["k", "index", "eigenvalue", "participation", "size"], &rows)?;
    let mut summary = json!({ "blocks": blocks });
    if cfg.spectrum.shifted_operator {
        let pot = potentials_from_profile(&u, &s.ctx)?;
        let rep = eigen_spectrum(&shifted_operator(&s.op, &pot.v), cfg.grid.radius)?;
        out.write_csv("shifted.csv", &["k", "index", "eigenvalue", "participation", "size"], spectrum_rows(n, &rep))?;
        summary["shifted"] = json!({
            "bulk": rep.bulk,
            "isolated": rep.isolated(5.0),
            "min_bulk_participation_fraction": rep.min_bulk_participation() / rep.len as f64,
        });
    }
    if cfg.spectrum.zero_modes && n >= 1 {
        summary["zero_modes"] = serde_json::to_value(zero_modes(&u, &s.op, &s.ctx)?)?;
    }
    if cfg.spectrum.mourre && cfg.model.kernel == KernelKind::Gaussian {
        let c = commutator_c(n, &spec, &s.grid)?;
        let sp = &cfg.spectrum;
        let rep = mourre_check(&u, &s.op, &c, &s.ctx, sp.mourre_samples, sp.mourre_margin, seed)?;
        summary["mourre"] = serde_json::to_value(rep)?;
    }
    out.write_json("spectrum.json", &summary)?;
    Ok(summary)
}

pub fn barrier(cfg: &Config, out: &mut Outputs) -> Result<Value> {
    let s = setup(cfg, cfg.model.mode)?;
    let u0 = initial_profile(&s, cfg.model.mode)?;
    let b = &cfg.barrier;
    let table = barrier_compare(&u0, &s.op, &s.ctx, &b.lambdas, b.horizon, b.dt)?;
    out.write_csv("barrier.csv", &["lambda", "d", "d_prime"], table.rows.iter().map(|r| (r.lambda, r.d, r.d_prime)))?;
    out.write_json("barrier.json", &table)?;
    Ok(json!({"exponent": table.exponent, "derivative_exponent": table.derivative_exponent, "warnings": table.warnings}))
}

pub fn lattice(cfg: &Config, out: &mut Outputs, seed: u64) -> Result<Value> {
    let lc = cfg.lattice_config(seed);
    let couplings = build_couplings(&lc, &lc.kernel)?;
    let mut field = SpinField::new(&lc, &couplings);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = lc.block_side();
    let nb = lc.side / bs;
    let every = cfg.lattice.sample_every;
    let mut sum = vec![[0.0; 2]; nb * nb];
    let mut count = 0usize;
    let mut trace = Vec::new();
    let mut failure = None;
    let run = run_chain(&mut field, &couplings, &lc, &mut rng, |k, fld| {
        let blocks = match block_spin(fld, bs) {
            Ok(b) => b,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        sum.iter_mut().zip(&blocks.m).for_each(|(s, m)| {
            s[0] += m[0];
            s[1] += m[1];
        });
        count += 1;
        if (k + 1) % every == 0 {
            let h = hamiltonian(fld, &couplings);
            match hamiltonian_blocked(fld, &blocks, &couplings) {
                Ok(hb) => {
                    let (mx, my) = fld.angles.iter().fold((0.0, 0.0), |a, t| (a.0 + t.cos(), a.1 + t.sin()));
                    let mag = (mx * mx + my * my).sqrt() / fld.angles.len() as f64;
                    trace.push((k + 1, h, hb, (hb - h).abs(), mag));
                }
                Err(e) => failure = Some(e),
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    let scale = count.max(1) as f64;
    let mean = BlockField {
        blocks_per_side: nb,
        block_side: bs,
        m: sum.iter().map(|s| [s[0] / scale, s[1] / scale]).collect(),
    };
    out.write_csv("lattice_trace.csv", &["sweep", "h_sites", "h_blocks", "abs_difference", "magnetization"], &trace)?;
    let block_rows = (0..nb * nb).map(|i| (i % nb, i / nb, mean.m[i][0], mean.m[i][1]));
    out.write_csv("blocks.csv", &["bx", "by", "mx", "my"], block_rows)?;
    let radius = if cfg.lattice.degree_radius > 0.0 { cfg.lattice.degree_radius } else { 0.375 * nb as f64 };
    let deg = lattice_vortex_degree(&mean, radius);
    let mean_gap = trace.iter().map(|t| t.3).sum::<f64>() / trace.len().max(1) as f64;
    let summary = json!({
        "config": lc,
        "block_side": bs,
        "coupling_offsets": couplings.offsets.len(),
        "coupling_cutoff": couplings.cutoff,
        "coupling_row_sum": couplings.row_sum,
        "run": run,
        "mean_replacement_gap": mean_gap,
        "scaled_replacement_gap": mean_gap * lc.gamma().powf(-lc.delta) / (lc.side * lc.side) as f64,
        "degree_radius_blocks": radius,
        "degree": deg.as_ref().ok(),
        "degree_error": deg.as_ref().err().map(|e| e.to_string()),
    });
    out.write_json("lattice.json", &summary)?;
    Ok(json!({"acceptance": run.acceptance, "degree": deg.ok(), "mean_replacement_gap": mean_gap}))
}
