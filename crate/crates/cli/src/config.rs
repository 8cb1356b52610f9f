//! Sectioned run configuration. Every key has a default; unknown keys are
//! rejected so typos surface as schema errors.

use std::f64::consts::PI;
use std::path::Path;

use kacvortex::grid::GridScheme;
use kacvortex::kernel::KernelSpec;
use kacvortex::lattice::{Boundary, DEFAULT_LATTICE_KERNEL_WIDTH};
use serde::{Deserialize, Serialize};

/// Schema violation tied to a configuration key.
#[derive(Debug)]
pub struct SchemaError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration key '{}': {}", self.key, self.message)
    }
}

impl std::error::Error for SchemaError {}

fn schema(key: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub grid: GridSection,
    pub flow: FlowSection,
    pub renorm: RenormSection,
    pub meanfield: MeanfieldSection,
    pub energy: EnergySection,
    pub spectrum: SpectrumSection,
    pub barrier: BarrierSection,
    pub lattice: LatticeSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// inverse temperature
    pub beta: f64,
    /// vortex winding `n`
    pub mode: u32,
    pub kernel: KernelKind,
    /// kernel width parameter
    pub p: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { beta: 4.0, mode: 1, kernel: KernelKind::Gaussian, p: PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nodes: usize,
    pub radius: f64,
    /// far-field radius as a multiple of `radius`
    pub ext_factor: f64,
    pub scheme: GridScheme,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nodes: 256, radius: 40.0, ext_factor: 2.0, scheme: GridScheme::UniformMidpoint }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub dt: f64,
    pub t_total: f64,
    /// residual region `r <= compact_fraction * radius`
    pub compact_fraction: f64,
    pub convergence_tol: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub track_energy: bool,
    pub snapshot_every: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_total: 200.0,
            compact_fraction: 0.5,
            convergence_tol: 1e-7,
            picard_tol: 1e-13,
            picard_max: 200,
            track_energy: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormSection {
    pub r0: f64,
    pub cone: f64,
    pub quad_tol: f64,
}

impl Default for RenormSection {
    fn default() -> Self {
        Self { r0: 1.0, cone: 4.0, quad_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldSection {
    pub betas: Vec<f64>,
    /// points of the entropy table on `[0, rho_max]`
    pub entropy_points: usize,
    pub rho_max: f64,
}

impl Default for MeanfieldSection {
    fn default() -> Self {
        Self { betas: vec![2.0, 2.5, 3.0, 4.0], entropy_points: 100, rho_max: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    /// relax before evaluating, or evaluate the initial profile
    pub relax: bool,
    /// radius of the circle used for the degree
    pub degree_radius: f64,
    pub degree_samples: usize,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { relax: true, degree_radius: 10.0, degree_samples: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Hessian blocks `k >= n`; empty means `[n, n + 1]`
    pub blocks: Vec<u32>,
    pub zero_modes: bool,
    pub mourre: bool,
    pub mourre_samples: usize,
    pub mourre_margin: usize,
    /// drop `A - V` eigenvalues of the `n` block too
    pub shifted_operator: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            blocks: Vec::new(),
            zero_modes: true,
            mourre: true,
            mourre_samples: 200,
            mourre_margin: 2,
            shifted_operator: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    pub lambdas: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for BarrierSection {
    fn default() -> Self {
        Self { lambdas: vec![5.0, 10.0, 20.0], horizon: 5.0, dt: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Free,
    FixedVortex,
    FixedUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub side: usize,
    /// `gamma = 2^-gamma_log2`
    pub gamma_log2: u32,
    pub delta: f64,
    pub boundary: BoundaryKind,
    /// winding of the fixed-vortex boundary
    pub winding: u32,
    pub sweeps: usize,
    pub burn_in: usize,
    /// record energies every this many production sweeps
    pub sample_every: usize,
    /// lattice kernel width parameter (Gaussian)
    pub kernel_p: f64,
    /// circle radius for the coarse degree, in blocks; 0 picks 3/8 of the box
    pub degree_radius: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            side: 64,
            gamma_log2: 3,
            delta: 0.5,
            boundary: BoundaryKind::FixedVortex,
            winding: 1,
            sweeps: 200,
            burn_in: 100,
            sample_every: 10,
            kernel_p: DEFAULT_LATTICE_KERNEL_WIDTH,
            degree_radius: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// worker threads; 0 lets the pool decide
    pub threads: usize,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|e| schema("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // toml reports unknown keys as "unknown field `x`"
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<syntax>".into());
            schema(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let m = &self.model;
        if !(m.beta >= 0.0 && m.beta.is_finite()) {
            return Err(schema("model.beta", "must be finite and >= 0"));
        }
        if !(m.p > 0.0 && m.p.is_finite()) {
            return Err(schema("model.p", "must be positive"));
        }
        let g = &self.grid;
        if g.nodes < 16 {
            return Err(schema("grid.nodes", "must be at least 16"));
        }
        if !(g.radius > 0.0) {
            return Err(schema("grid.radius", "must be positive"));
        }
        if !(g.ext_factor > 1.0) {
            return Err(schema("grid.ext_factor", "must exceed 1"));
        }
        let f = &self.flow;
        if !(f.dt > 0.0) {
            return Err(schema("flow.dt", "must be positive"));
        }
        if kacvortex::flow::check_step(m.beta, f.dt).is_err() {
            return Err(schema("flow.dt", "too large for the collocation iteration at this beta"));
        }
        if !(f.t_total > 0.0) {
            return Err(schema("flow.t_total", "must be positive"));
        }
        if !(f.compact_fraction > 0.0 && f.compact_fraction <= 1.0) {
            return Err(schema("flow.compact_fraction", "must lie in (0, 1]"));
        }
        if !(f.convergence_tol >= 0.0) {
            return Err(schema("flow.convergence_tol", "must be >= 0"));
        }
        let r = &self.renorm;
        if !(r.r0 > 0.0) {
            return Err(schema("renorm.r0", "must be positive"));
        }
        if !(r.cone >= 2.0) {
            return Err(schema("renorm.cone", "must be >= 2"));
        }
        if !(g.radius > 4.0 * r.r0) {
            return Err(schema("grid.radius", "must exceed 4 * renorm.r0"));
        }
        if !(r.quad_tol > 0.0) {
            return Err(schema("renorm.quad_tol", "must be positive"));
        }
        if self.meanfield.betas.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(schema("meanfield.betas", "entries must be finite and >= 0"));
        }
        if !(self.meanfield.rho_max > 0.0 && self.meanfield.rho_max < 1.0) {
            return Err(schema("meanfield.rho_max", "must lie in (0, 1)"));
        }
        if self.meanfield.entropy_points < 2 {
            return Err(schema("meanfield.entropy_points", "must be at least 2"));
        }
        if !(self.energy.degree_radius > 0.0) {
            return Err(schema("energy.degree_radius", "must be positive"));
        }
        if self.spectrum.blocks.iter().any(|k| *k < m.mode) {
            return Err(schema("spectrum.blocks", "block indices must be >= model.mode"));
        }
        let b = &self.barrier;
        if b.lambdas.is_empty() || b.lambdas.iter().any(|l| !(*l > 0.0 && *l <= g.radius)) {
            return Err(schema("barrier.lambdas", "need one or more box radii, each in (0, grid.radius]"));
        }
        if !(b.horizon > 0.0) {
            return Err(schema("barrier.horizon", "must be positive"));
        }
        if !(b.dt > 0.0) || kacvortex::flow::check_step(m.beta, b.dt).is_err() {
            return Err(schema("barrier.dt", "must be positive and small enough for the collocation iteration"));
        }
        let l = &self.lattice;
        if l.sample_every == 0 {
            return Err(schema("lattice.sample_every", "must be at least 1"));
        }
        if !(l.kernel_p > 0.0) {
            return Err(schema("lattice.kernel_p", "must be positive"));
        }
        if let Err(e) = self.lattice_config(self.run.seed).validate() {
            return Err(schema("lattice", e.to_string()));
        }
        Ok(())
    }

    pub fn kernel(&self) -> KernelSpec {
        match self.model.kernel {
            KernelKind::Gaussian => KernelSpec::Gaussian { p: self.model.p },
            KernelKind::Exponential => KernelSpec::Exponential { p: self.model.p },
        }
    }

    pub fn blocks(&self) -> Vec<u32> {
        if self.spectrum.blocks.is_empty() {
            vec![self.model.mode, self.model.mode + 1]
        } else {
            self.spectrum.blocks.clone()
        }
    }

    pub fn lattice_config(&self, seed: u64) -> kacvortex::lattice::LatticeConfig {
        let l = &self.lattice;
        let boundary = match l.boundary {
            BoundaryKind::Free => Boundary::Free,
            BoundaryKind::FixedVortex => Boundary::FixedVortex(l.winding),
            BoundaryKind::FixedUniform => Boundary::FixedUniform,
        };
        let mut cfg = kacvortex::lattice::LatticeConfig::new(l.side, l.gamma_log2, self.model.beta, boundary, seed);
        cfg.delta = l.delta;
        cfg.sweeps = l.sweeps;
        cfg.burn_in = l.burn_in;
        cfg.kernel = KernelSpec::Gaussian { p: l.kernel_p };
        cfg
    }
}
