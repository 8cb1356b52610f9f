//! Lattice rotor model with a long-range coupling, Metropolis sampling,
//! block averaging and the block-mean density.

mod density;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use density::{
    entropy_check, nu_density, nu_density_radial, nu_density_tilted, EntropyCheck, EntropyPoint, DensityRoute,
};

use crate::energy::winding;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Kernel used for the lattice coupling unless configured otherwise: narrow
/// enough that the coupling cutoff fits boxes of a few interaction ranges.
pub const DEFAULT_LATTICE_KERNEL_WIDTH: f64 = 1.0 / 64.0;

/// Tail mass of the coupling discarded beyond the cutoff.
pub const COUPLING_TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "winding")]
pub enum Boundary {
    Free,
    /// outer annulus frozen at angle `n * atan2(y, x)`
    FixedVortex(u32),
    /// outer annulus frozen at angle 0
    FixedUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub side: usize,
    /// `gamma = 2^{-gamma_log2}`
    pub gamma_log2: u32,
    pub delta: f64,
    pub beta: f64,
    pub boundary: Boundary,
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub kernel: KernelSpec,
}

impl LatticeConfig {
    pub fn new(side: usize, gamma_log2: u32, beta: f64, boundary: Boundary, seed: u64) -> Self {
        Self {
            side,
            gamma_log2,
            delta: 0.5,
            beta,
            boundary,
            seed,
            sweeps: 200,
            burn_in: 100,
            kernel: KernelSpec::Gaussian { p: DEFAULT_LATTICE_KERNEL_WIDTH },
        }
    }

    pub fn gamma(&self) -> f64 {
        0.5f64.powi(self.gamma_log2 as i32)
    }

    /// Block side `2^{round(delta k)}`, the power of two nearest `gamma^{-delta}`.
    pub fn block_side(&self) -> usize {
        1usize << (self.delta * self.gamma_log2 as f64).round() as u32
    }

    pub fn validate(&self) -> Result<()> {
        if !self.side.is_power_of_two() || self.side < 4 {
            return Err(Error::Config(format!("lattice side {} must be a power of two >= 4", self.side)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta {} must lie in (0, 1)", self.delta)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if self.side % self.block_side() != 0 {
            return Err(Error::Config(format!(
                "block side {} does not divide lattice side {}",
                self.block_side(),
                self.side
            )));
        }
        if (self.gamma() * self.side as f64) < 4.0 {
            return Err(Error::Config(format!(
                "box of {} sites holds fewer than 4 interaction ranges at gamma = {}",
                self.side,
                self.gamma()
            )));
        }
        Ok(())
    }
}

/// Truncated coupling `gamma^2 J(gamma |i - j|)` as a list of offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub gamma: f64,
    /// cutoff radius in lattice units
    pub cutoff: f64,
    /// `(dx, dy, weight)` including the zero offset
    pub offsets: Vec<(i32, i32, f64)>,
    pub self_coupling: f64,
    /// sum over all offsets of the weights
    pub row_sum: f64,
}

impl Couplings {
    pub fn weight(&self, dx: i32, dy: i32) -> f64 {
        self.offsets.iter().find(|(a, b, _)| *a == dx && *b == dy).map(|o| o.2).unwrap_or(0.0)
    }
}

/// Radius (in units of the interaction range) beyond which the kernel's
/// plane mass is below [`COUPLING_TAIL_MASS`].
pub fn coupling_range(spec: &KernelSpec) -> Result<f64> {
    match spec {
        KernelSpec::Gaussian { p } => Ok((4.0 * p * (1.0 / COUPLING_TAIL_MASS).ln()).sqrt()),
        // mass beyond x is p^3 (p^2 + x^2)^{-3/2}
        KernelSpec::Exponential { p } => Ok(p * ((1.0 / COUPLING_TAIL_MASS).powf(2.0 / 3.0) - 1.0).sqrt()),
        KernelSpec::Tabulated { .. } => Err(Error::UnsupportedKernel("lattice couplings need a spatial profile".into())),
    }
}

fn build_with(cfg: &LatticeConfig, spec: &KernelSpec, weight: impl Fn(i32, i32) -> f64) -> Result<Couplings> {
    cfg.validate()?;
    let gamma = cfg.gamma();
    let cutoff = coupling_range(spec)? / gamma;
    if cutoff > 0.5 * cfg.side as f64 {
        return Err(Error::Config(format!(
            "coupling cutoff {cutoff:.1} exceeds half the box ({} sites)",
            cfg.side / 2
        )));
    }
    let reach = cutoff.floor() as i32;
    let mut offsets = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 <= cutoff * cutoff {
                offsets.push((dx, dy, weight(dx, dy)));
            }
        }
    }
    let self_coupling = weight(0, 0);
    let row_sum = offsets.iter().map(|o| o.2).sum();
    Ok(Couplings { gamma, cutoff, offsets, self_coupling, row_sum })
}

/// Point-sampled coupling `gamma^d J(gamma |i - j|)`.
pub fn build_couplings(cfg: &LatticeConfig, spec: &KernelSpec) -> Result<Couplings> {
    let g = cfg.gamma();
    build_with(cfg, spec, |dx, dy| g * g * spec.spatial(g * ((dx * dx + dy * dy) as f64).sqrt()))
}

/// Coupling from the average of `J` over the unit cell around each offset,
/// by a `2 x 2` midpoint rule.
pub fn build_couplings_exact(cfg: &LatticeConfig, spec: &KernelSpec) -> Result<Couplings> {
    let g = cfg.gamma();
    build_with(cfg, spec, |dx, dy| {
        let mut s = 0.0;
        for a in [-0.25, 0.25] {
            for b in [-0.25, 0.25] {
                let x = dx as f64 + a;
                let y = dy as f64 + b;
                s += spec.spatial(g * (x * x + y * y).sqrt());
            }
        }
        g * g * s / 4.0
    })
}

/// Angles on a square box, with a frozen mask for fixed boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinField {
    pub side: usize,
    pub angles: Vec<f64>,
    pub frozen: Vec<bool>,
}

impl SpinField {
    /// Starts from the boundary pattern everywhere (angle 0 for free boxes);
    /// for fixed boundaries the sites outside the disc of radius
    /// `side/2 - cutoff` are frozen.
    pub fn new(cfg: &LatticeConfig, couplings: &Couplings) -> Self {
        let side = cfg.side;
        let centre = 0.5 * (side as f64 - 1.0);
        let inner = 0.5 * side as f64 - couplings.cutoff;
        let mut angles = vec![0.0; side * side];
        let mut frozen = vec![false; side * side];
        for y in 0..side {
            for x in 0..side {
                let (dx, dy) = (x as f64 - centre, y as f64 - centre);
                let i = y * side + x;
                let winding = match cfg.boundary {
                    Boundary::FixedVortex(n) => n as f64,
                    _ => 0.0,
                };
                angles[i] = (winding * dy.atan2(dx)).rem_euclid(2.0 * PI);
                if cfg.boundary != Boundary::Free && (dx * dx + dy * dy).sqrt() > inner {
                    frozen[i] = true;
                }
            }
        }
        Self { side, angles, frozen }
    }

    pub fn aligned(side: usize, angle: f64) -> Self {
        Self { side, angles: vec![angle.rem_euclid(2.0 * PI); side * side], frozen: vec![false; side * side] }
    }

    fn unit_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        (self.angles.iter().map(|a| a.cos()).collect(), self.angles.iter().map(|a| a.sin()).collect())
    }
}

/// Local field `sum_{j != i} J(i, j) sigma_j` at site `(x, y)`.
fn local_field(cos: &[f64], sin: &[f64], side: usize, couplings: &Couplings, x: usize, y: usize) -> (f64, f64) {
    let (mut hx, mut hy) = (0.0, 0.0);
    let s = side as i32;
    for &(dx, dy, w) in &couplings.offsets {
        if dx == 0 && dy == 0 {
            continue;
        }
        let (xx, yy) = (x as i32 + dx, y as i32 + dy);
        if xx < 0 || yy < 0 || xx >= s || yy >= s {
            continue;
        }
        let j = (yy * s + xx) as usize;
        hx += w * cos[j];
        hy += w * sin[j];
    }
    (hx, hy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub proposed: usize,
    pub accepted: usize,
    /// proposal half-width in radians after the sweep
    pub width: f64,
}

impl SweepStats {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

/// One pass of single-site Metropolis updates in lexicographic order for
/// the weight `exp(-beta H)`. When `adapt` is set the proposal width is
/// nudged toward 40-60% acceptance after the pass.
pub fn metropolis_sweep(
    field: &mut SpinField,
    couplings: &Couplings,
    beta: f64,
    width: f64,
    adapt: bool,
    rng: &mut ChaCha8Rng,
) -> SweepStats {
    let side = field.side;
    let (mut cos, mut sin) = field.unit_vectors();
    let mut stats = SweepStats { proposed: 0, accepted: 0, width };
    for y in 0..side {
        for x in 0..side {
            let i = y * side + x;
            if field.frozen[i] {
                continue;
            }
            stats.proposed += 1;
            let proposal = (field.angles[i] + width * rng.random_range(-1.0..1.0)).rem_euclid(2.0 * PI);
            let (hx, hy) = local_field(&cos, &sin, side, couplings, x, y);
            let (c1, s1) = (proposal.cos(), proposal.sin());
            let d_energy = -((c1 - cos[i]) * hx + (s1 - sin[i]) * hy);
            if d_energy <= 0.0 || rng.random::<f64>() < (-beta * d_energy).exp() {
                field.angles[i] = proposal;
                cos[i] = c1;
                sin[i] = s1;
                stats.accepted += 1;
            }
        }
    }
    if adapt && stats.proposed > 0 {
        let rate = stats.acceptance();
        if rate < 0.4 {
            stats.width = (width * 0.8).max(1e-3);
        } else if rate > 0.6 {
            stats.width = (width * 1.25).min(PI);
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub width: f64,
    pub acceptance: f64,
    pub sweeps: usize,
    pub burn_in: usize,
}

/// Burn-in with width adaptation, then `cfg.sweeps` sweeps at fixed width,
/// calling `observe` after each production sweep.
pub fn run_chain(
    field: &mut SpinField,
    couplings: &Couplings,
    cfg: &LatticeConfig,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(usize, &SpinField),
) -> RunSummary {
    let mut width = PI;
    for _ in 0..cfg.burn_in {
        width = metropolis_sweep(field, couplings, cfg.beta, width, true, rng).width;
    }
    let (mut acc, mut prop) = (0usize, 0usize);
    for k in 0..cfg.sweeps {
        let s = metropolis_sweep(field, couplings, cfg.beta, width, false, rng);
        acc += s.accepted;
        prop += s.proposed;
        observe(k, field);
    }
    RunSummary {
        width,
        acceptance: if prop > 0 { acc as f64 / prop as f64 } else { 0.0 },
        sweeps: cfg.sweeps,
        burn_in: cfg.burn_in,
    }
}

/// Block averages of the unit spin vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockField {
    pub blocks_per_side: usize,
    pub block_side: usize,
    /// `(m_x, m_y)` per block in row-major order
    pub m: Vec<[f64; 2]>,
}

impl BlockField {
    pub fn sites_per_block(&self) -> usize {
        self.block_side * self.block_side
    }

    pub fn get(&self, bx: usize, by: usize) -> [f64; 2] {
        self.m[by * self.blocks_per_side + bx]
    }
}

pub fn block_spin(field: &SpinField, block_side: usize) -> Result<BlockField> {
    if block_side == 0 || field.side % block_side != 0 {
        return Err(Error::Config(format!("block side {block_side} does not divide {}", field.side)));
    }
    let nb = field.side / block_side;
    let mut m = vec![[0.0; 2]; nb * nb];
    for y in 0..field.side {
        for x in 0..field.side {
            let a = field.angles[y * field.side + x];
            let b = &mut m[(y / block_side) * nb + x / block_side];
            b[0] += a.cos();
            b[1] += a.sin();
        }
    }
    let norm = (block_side * block_side) as f64;
    for b in &mut m {
        b[0] /= norm;
        b[1] /= norm;
    }
    Ok(BlockField { blocks_per_side: nb, block_side, m })
}

/// `-1/2 sum_{i != j} J(i, j) s_i . s_j` over pairs not both frozen, for
/// site vectors `s`.
fn pair_energy(side: usize, frozen: &[bool], sx: &[f64], sy: &[f64], couplings: &Couplings) -> f64 {
    let mut total = 0.0;
    for y in 0..side {
        for x in 0..side {
            let i = y * side + x;
            let (hx, hy) = if frozen[i] {
                // skip frozen partners
                let s = side as i32;
                let (mut hx, mut hy) = (0.0, 0.0);
                for &(dx, dy, w) in &couplings.offsets {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (xx, yy) = (x as i32 + dx, y as i32 + dy);
                    if xx < 0 || yy < 0 || xx >= s || yy >= s {
                        continue;
                    }
                    let j = (yy * s + xx) as usize;
                    if !frozen[j] {
                        hx += w * sx[j];
                        hy += w * sy[j];
                    }
                }
                (hx, hy)
            } else {
                local_field(sx, sy, side, couplings, x, y)
            };
            total += sx[i] * hx + sy[i] * hy;
        }
    }
    -0.5 * total
}

/// Site energy of the configuration.
pub fn hamiltonian(field: &SpinField, couplings: &Couplings) -> f64 {
    let (c, s) = field.unit_vectors();
    pair_energy(field.side, &field.frozen, &c, &s, couplings)
}

/// Same energy with every spin replaced by the mean of its block.
pub fn hamiltonian_blocked(field: &SpinField, blocks: &BlockField, couplings: &Couplings) -> Result<f64> {
    if blocks.blocks_per_side * blocks.block_side != field.side {
        return Err(Error::Shape { expected: field.side, got: blocks.blocks_per_side * blocks.block_side });
    }
    let side = field.side;
    let mut sx = vec![0.0; side * side];
    let mut sy = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            let b = blocks.get(x / blocks.block_side, y / blocks.block_side);
            sx[y * side + x] = b[0];
            sy[y * side + x] = b[1];
        }
    }
    Ok(pair_energy(side, &field.frozen, &sx, &sy, couplings))
}

/// Winding of the block field along the circle of the given radius (in
/// blocks) around the centre of the box.
pub fn lattice_vortex_degree(blocks: &BlockField, radius_blocks: f64) -> Result<i64> {
    let nb = blocks.blocks_per_side;
    let centre = 0.5 * nb as f64;
    if !(radius_blocks > 0.0 && radius_blocks < centre) {
        return Err(Error::Domain(format!("circle radius {radius_blocks} does not fit {nb} blocks")));
    }
    let count = ((16.0 * radius_blocks).ceil() as usize).max(64);
    let mut samples: Vec<Complex64> = Vec::with_capacity(count);
    let mut last: Option<(usize, usize)> = None;
    for k in 0..count {
        let theta = 2.0 * PI * k as f64 / count as f64;
        let bx = ((centre + radius_blocks * theta.cos()).floor() as usize).min(nb - 1);
        let by = ((centre + radius_blocks * theta.sin()).floor() as usize).min(nb - 1);
        if last == Some((bx, by)) {
            continue;
        }
        last = Some((bx, by));
        let m = blocks.get(bx, by);
        samples.push(Complex64::new(m[0], m[1]));
    }
    if samples.len() > 1 && samples.first() == samples.last() {
        samples.pop();
    }
    winding(&samples, 0.1)
}
