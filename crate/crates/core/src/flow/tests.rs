use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::grid::{build_grid, GridScheme};
use crate::kernel::KernelSpec;
use crate::operator::assemble_operator;

fn setup(n: u32, nodes: usize, radius: f64) -> (Arc<RadialGrid>, RadialOperator, ThermoContext) {
    let grid = Arc::new(build_grid(nodes, radius, 2.0 * radius, GridScheme::UniformMidpoint).unwrap());
    let op = assemble_operator(n, &KernelSpec::gaussian(PI).unwrap(), &grid).unwrap();
    (grid, op, ThermoContext::new(4.0).unwrap())
}

fn hedgehog(grid: &Arc<RadialGrid>, m: f64, n: u32) -> Profile {
    Profile::from_fn(n, grid.clone(), m, DecayClass::Y02, |r| m * (r / (1.0 + r * r).sqrt()).powi(n as i32)).unwrap()
}

#[test]
fn profile_validation() {
    let (grid, _, _) = setup(1, 64, 20.0);
    assert!(matches!(
        Profile::new(1, vec![0.5; 63], 0.5, grid.clone(), DecayClass::Bounded),
        Err(Error::Shape { .. })
    ));
    assert!(matches!(
        Profile::new(1, vec![1.5; 64], 0.5, grid.clone(), DecayClass::Bounded),
        Err(Error::Domain(_))
    ));
    assert!(Profile::new(1, vec![0.5; 64], 1.0, grid, DecayClass::Bounded).is_err());
}

#[test]
fn step_size_guard() {
    assert!(check_step(4.0, 0.05).is_ok());
    // 16 * 1 * (1 - e^-2) > 8
    assert!(matches!(check_step(4.0, 1.0), Err(Error::Config(_))));
    assert!(FlowConfig::new(-0.1, 1.0, 5.0).validate(4.0).is_err());
}

#[test]
fn uniform_state_is_stationary() {
    // h = 0.08 resolves the kernel; the drift is the quadrature error of A 1 = 1
    let (grid, op, ctx) = setup(0, 256, 20.0);
    let u = Profile::from_fn(0, grid, ctx.m_beta, DecayClass::Bounded, |_| ctx.m_beta).unwrap();
    let (next, stats) = step_full(&u, &op, &ctx, 0.05, 1e-13, 100).unwrap();
    let drift = next.values.iter().map(|v| (v - ctx.m_beta).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "drift {drift:e}");
    assert!(stats.iterations <= 100);
}

#[test]
fn relaxation_reaches_an_equilibrium() {
    let (grid, op, ctx) = setup(1, 128, 30.0);
    let u0 = hedgehog(&grid, ctx.m_beta, 1);
    let mut cfg = FlowConfig::new(0.05, 100.0, 15.0);
    cfg.snapshot_every = 20;
    let (u, trace) = relax_to_equilibrium(&u0, &op, &ctx, &cfg).unwrap();
    assert!(trace.converged);
    assert!(residual_f0_within(&u, &op, &ctx, 15.0).unwrap() < 1e-6);
    let f1 = residual_f1_within(&u, &op, &ctx, 15.0).unwrap();
    assert!(f1.skipped.is_empty() && f1.value < 1e-4);
    assert!(check_maximum_principle(&trace.snapshots, &grid.nodes, ctx.m_beta, 1e-12).holds);
    assert!(check_monotonicity(&trace.snapshots, &grid.nodes, 1e-12).holds);
    assert_eq!(u.interpolate(0.0, &op, &ctx).unwrap(), 0.0);
}

#[test]
fn converged_start_returns_at_once() {
    let (grid, op, ctx) = setup(0, 256, 20.0);
    let u = Profile::from_fn(0, grid, ctx.m_beta, DecayClass::Bounded, |_| ctx.m_beta).unwrap();
    let mut cfg = FlowConfig::new(0.05, 10.0, 5.0);
    cfg.convergence_tol = 1e-4;
    let (_, trace) = relax_to_equilibrium(&u, &op, &ctx, &cfg).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.steps, 0);
}

#[test]
fn energy_tracking_dissipates() {
    let (grid, op, ctx) = setup(1, 96, 24.0);
    let u0 = hedgehog(&grid, ctx.m_beta, 1);
    let mut cfg = FlowConfig::new(0.02, 1.0, 12.0);
    cfg.convergence_tol = 0.0;
    cfg.track_energy = Some(RenormConfig::default());
    let (_, trace) = relax_to_equilibrium(&u0, &op, &ctx, &cfg).unwrap();
    assert!(trace.energy.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    let drop = trace.energy[0] - trace.energy.last().unwrap();
    let spent = trace.dissipation.last().unwrap();
    assert!((drop - spent).abs() < 1e-3 * drop, "drop {drop} spent {spent}");
}

#[test]
fn whole_disc_partial_step_equals_full_step() {
    let (grid, op, ctx) = setup(1, 64, 20.0);
    let u = hedgehog(&grid, ctx.m_beta, 1);
    let split = op.split_partial(20.0).unwrap();
    let (a, _) = step_full(&u, &op, &ctx, 0.05, 1e-13, 100).unwrap();
    let (b, _) = step_partial(&u, &op, &split, &ctx, 0.05, 1e-13, 100).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn partial_step_freezes_the_exterior() {
    let (grid, op, ctx) = setup(1, 64, 20.0);
    let u = hedgehog(&grid, 0.5 * ctx.m_beta, 1);
    let split = op.split_partial(8.0).unwrap();
    let (next, _) = step_partial(&u, &op, &split, &ctx, 0.05, 1e-13, 100).unwrap();
    assert_eq!(&next.values[split.cut..], &u.values[split.cut..]);
    assert!(next.values[..split.cut].iter().zip(&u.values).any(|(a, b)| a != b));
}

#[test]
fn barrier_decays_with_box_size() {
    let (grid, op, ctx) = setup(1, 192, 48.0);
    let u0 = hedgehog(&grid, ctx.m_beta, 1);
    let table = barrier_compare(&u0, &op, &ctx, &[6.0, 12.0, 24.0], 2.0, 0.05).unwrap();
    assert!(table.rows.windows(2).all(|w| w[1].d < w[0].d));
    assert!(table.exponent < 0.0);
    assert!(table.warnings.len() == 1);
    assert!(barrier_compare(&u0, &op, &ctx, &[60.0], 1.0, 0.05).is_err());
}

#[test]
fn log_slope_of_power_law() {
    let s = barrier::log_slope([(1.0, 3.0), (2.0, 0.75), (4.0, 0.1875)].into_iter());
    assert!((s + 2.0).abs() < 1e-12);
    assert!(barrier::log_slope([(1.0, 0.0)].into_iter()).is_nan());
}

#[test]
fn checks_report_first_violation() {
    let nodes = [1.0, 2.0, 3.0];
    let snaps = vec![(0.0, vec![0.1, 0.2, 0.3]), (1.0, vec![0.1, 0.05, 0.9])];
    let mono = check_monotonicity(&snaps, &nodes, 0.0);
    assert_eq!(mono.first_violation, Some((1.0, 2.0)));
    let max = check_maximum_principle(&snaps, &nodes, 0.8, 0.0);
    assert_eq!(max.first_violation, Some((1.0, 3.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_keeps_profiles_ordered_and_bounded(scale in 0.05f64..1.0, width in 0.3f64..5.0, dt in 0.01f64..0.2) {
        let (grid, op, ctx) = setup(1, 64, 20.0);
        let m = ctx.m_beta;
        let u0 = Profile::from_fn(1, grid.clone(), m, DecayClass::Bounded, |r| scale * m * (1.0 - (-r / width).exp())).unwrap();
        let mut u = u0.clone();
        for _ in 0..10 {
            u = step_full(&u, &op, &ctx, dt, 1e-12, 200).unwrap().0;
        }
        prop_assert!(u.values.iter().all(|v| *v >= 0.0 && *v <= m + 1e-12));
        prop_assert!(u.values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
