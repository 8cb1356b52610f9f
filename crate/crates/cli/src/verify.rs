//! Fast invariant battery behind `kacvortex verify`. Each check is small
//! enough that the whole battery runs in seconds.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use anyhow::Result;
use kacvortex::energy::{circle_samples, counterterm, degree, RenormConfig};
use kacvortex::flow::{relax_to_equilibrium, residual_f0_within, DecayClass, FlowConfig, Profile};
use kacvortex::grid::{build_grid, GridScheme, RadialGrid};
use kacvortex::kernel::{hankel_quadrature, weber_kernel, KernelSpec};
use kacvortex::lattice::{
    block_spin, build_couplings, metropolis_sweep, nu_density, Boundary, LatticeConfig, SpinField,
};
use kacvortex::meanfield::{entropy, f, invert_f, solve_m_beta, ThermoContext};
use kacvortex::operator::assemble_operator;
use kacvortex::spectral::zero_modes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::Outputs;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> kacvortex::Result<(bool, String)>;

fn grid(nodes: usize, radius: f64) -> kacvortex::Result<Arc<RadialGrid>> {
    Ok(Arc::new(build_grid(nodes, radius, 2.0 * radius, GridScheme::UniformMidpoint)?))
}

fn magnetization_oracle() -> kacvortex::Result<(bool, String)> {
    // 30-digit reference value
    let m = solve_m_beta(4.0, 1e-14)?;
    let err = (m - 0.831462024754256970762254570707).abs();
    Ok((err < 1e-12 && solve_m_beta(2.0, 1e-14)? == 0.0, format!("m_beta(4) error {err:.1e}")))
}

fn inversion() -> kacvortex::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 1..2000 {
        let rho = i as f64 / 2000.0 * 0.999;
        worst = worst.max((f(invert_f(rho, 1e-12, 200)?) - rho).abs());
    }
    let second = entropy(0.0)?.second;
    Ok((worst <= 1e-10 && (second - 2.0).abs() < 1e-6, format!("|f(f^-1(rho)) - rho| <= {worst:.1e}, I''(0) = {second:.8}")))
}

fn weber() -> kacvortex::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [0u32, 1, 3] {
        for (r, s) in [(0.5, 1.5), (2.0, 3.0), (7.0, 6.2), (12.0, 12.5)] {
            let q = hankel_quadrature(|rho| (-PI * rho * rho).exp(), n, n, r, s, 1, 7.0);
            worst = worst.max((weber_kernel(n, PI, r, s) - q).abs());
        }
    }
    Ok((worst <= 1e-8, format!("closed-form kernel vs quadrature {worst:.1e}")))
}

fn containment() -> kacvortex::Result<(bool, String)> {
    let g = grid(128, 20.0)?;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for n in [0u32, 1, 3] {
        let e = assemble_operator(n, &KernelSpec::gaussian(PI)?, &g)?.eigenvalues();
        range = (range.0.min(e[0]), range.1.max(e[e.len() - 1]));
    }
    Ok((range.0 >= -1e-8 && range.1 <= 1.0 + 1e-6, format!("spectrum in [{:.1e}, {:.6}]", range.0, range.1)))
}

fn counterterm_slope() -> kacvortex::Result<(bool, String)> {
    let spec = KernelSpec::gaussian(PI)?;
    let cfg = RenormConfig::default();
    let m = 0.8;
    let d = counterterm(&cfg, &spec, 1, m, 160.0)? - counterterm(&cfg, &spec, 1, m, 80.0)?;
    let expected = PI * PI * m * m * LN_2;
    Ok(((d - expected).abs() < 1e-8 * expected, format!("increment per doubling {d:.10} vs {expected:.10}")))
}

fn relaxation() -> kacvortex::Result<(bool, String)> {
    let ctx = ThermoContext::new(4.0)?;
    let g = grid(128, 20.0)?;
    let op = assemble_operator(1, &KernelSpec::gaussian(PI)?, &g)?;
    let m = ctx.m_beta;
    let u0 = Profile::from_fn(1, g.clone(), m, DecayClass::Y02, |r| m * r / (1.0 + r * r).sqrt())?;
    let mut cfg = FlowConfig::new(0.05, 100.0, 10.0);
    cfg.convergence_tol = 1e-10;
    let (u, trace) = relax_to_equilibrium(&u0, &op, &ctx, &cfg)?;
    let res = residual_f0_within(&u, &op, &ctx, 10.0)?;
    let monotone = u.values.windows(2).all(|w| w[1] >= w[0]);
    let bounded = u.values.iter().all(|v| *v >= 0.0 && *v <= m);
    let deg = degree(&circle_samples(&u, &op, &ctx, 5.0, 512)?, 0.1 * m)?;
    let z = zero_modes(&u, &op, &ctx)?;
    let ok = trace.converged && res < 1e-6 && monotone && bounded && deg == 1 && z.gauge < 1e-5 && z.translation < 1e-3;
    Ok((ok, format!(
        "residual {res:.1e}, monotone {monotone}, bounded {bounded}, degree {deg}, zero modes {:.1e}/{:.1e}",
        z.gauge, z.translation
    )))
}

fn energy_decreases() -> kacvortex::Result<(bool, String)> {
    let ctx = ThermoContext::new(4.0)?;
    let g = grid(96, 24.0)?;
    let op = assemble_operator(1, &KernelSpec::gaussian(PI)?, &g)?;
    let m = ctx.m_beta;
    let u0 = Profile::from_fn(1, g.clone(), m, DecayClass::Y02, |r| m * r / (1.0 + r * r).sqrt())?;
    let mut cfg = FlowConfig::new(0.02, 1.0, 12.0);
    cfg.convergence_tol = 0.0;
    cfg.track_energy = Some(RenormConfig::default());
    let (_, trace) = relax_to_equilibrium(&u0, &op, &ctx, &cfg)?;
    let rise = trace.energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let drop = trace.energy[0] - trace.energy.last().copied().unwrap_or(trace.energy[0]);
    let spent = trace.dissipation.last().copied().unwrap_or(0.0);
    let rel = (drop - spent).abs() / drop.abs().max(1e-300);
    Ok((rise <= 1e-6 && rel < 5e-3, format!("max step change {rise:.1e}, dissipation balance {rel:.1e}")))
}

fn couplings() -> kacvortex::Result<(bool, String)> {
    let cfg = LatticeConfig::new(32, 3, 4.0, Boundary::Free, 1);
    let c = build_couplings(&cfg, &cfg.kernel)?;
    let symmetric = c.offsets.iter().all(|&(dx, dy, w)| c.weight(-dx, -dy) == w && c.weight(dy, dx) == w);
    let aligned = block_spin(&SpinField::aligned(32, 1.0), 4)?;
    let unit = aligned.m.iter().all(|b| ((b[0] * b[0] + b[1] * b[1]).sqrt() - 1.0).abs() < 1e-12);
    let mut field = SpinField::new(&cfg, &c);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = metropolis_sweep(&mut field, &c, 0.0, 1.0, false, &mut rng);
    let ok = symmetric && unit && (c.row_sum - 1.0).abs() < 1e-6 && s.accepted == s.proposed;
    Ok((ok, format!("symmetric {symmetric}, row sum {:.8}, aligned blocks unit {unit}, beta = 0 acceptance {}", c.row_sum, s.acceptance())))
}

fn density() -> kacvortex::Result<(bool, String)> {
    let v = nu_density(16, 0.3)?;
    let err = (v - 1.23941751621822368901657232818).abs() / v;
    let (x, w) = kacvortex::quad::gauss_legendre(24);
    let mut total = 0.0;
    for k in 0..20 {
        let (a, b) = (k as f64 / 20.0, (k + 1) as f64 / 20.0);
        for (xi, wi) in x.iter().zip(&w) {
            let m = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            total += 0.5 * (b - a) * wi * 2.0 * PI * m * nu_density(8, m)?;
        }
    }
    Ok((err < 1e-10 && (total - 1.0).abs() < 1e-6, format!("nu_16(0.3) relative error {err:.1e}, N = 8 mass {total:.10}")))
}

fn determinism() -> kacvortex::Result<(bool, String)> {
    let mut cfg = LatticeConfig::new(32, 3, 4.0, Boundary::FixedVortex(1), 9);
    cfg.burn_in = 3;
    cfg.sweeps = 3;
    let c = build_couplings(&cfg, &cfg.kernel)?;
    let run = || {
        let mut field = SpinField::new(&cfg, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        kacvortex::lattice::run_chain(&mut field, &c, &cfg, &mut rng, |_, _| {});
        field.angles
    };
    let same = run() == run();
    Ok((same, format!("identical chains for identical seeds: {same}")))
}

const CHECKS: [(&str, Check); 10] = [
    ("magnetization oracle", magnetization_oracle),
    ("entropy inversion", inversion),
    ("Weber kernel", weber),
    ("operator containment", containment),
    ("counterterm slope", counterterm_slope),
    ("relaxation, degree and zero modes", relaxation),
    ("energy decrease", energy_decreases),
    ("lattice couplings and sampler", couplings),
    ("block density", density),
    ("seeded determinism", determinism),
];

/// Runs the battery; returns the rows and whether all passed.
pub fn verify(out: &mut Outputs) -> Result<(Vec<CheckRow>, bool)> {
    let rows: Vec<CheckRow> = CHECKS
        .iter()
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckRow { name, passed, detail },
            Err(e) => CheckRow { name, passed: false, detail: format!("error: {e}") },
        })
        .collect();
    out.write_csv("verify.csv", &["check", "passed", "detail"], rows.iter().map(|r| (r.name, r.passed, &r.detail)))?;
    out.write_json("verify.json", &rows)?;
    let ok = rows.iter().all(|r| r.passed);
    Ok((rows, ok))
}
