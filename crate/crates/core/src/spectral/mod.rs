//! Second variation of the free energy around a radial equilibrium:
//! Fourier blocks, zero modes, spectra and dilation commutators.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Profile;
use crate::grid::RadialGrid;
use crate::kernel::KernelSpec;
use crate::meanfield::{entropy, f, f_prime, ThermoContext};
use crate::norms::central_derivative;
use crate::operator::{assemble_operator, symmetrize_in_place, RadialOperator};

/// Pointwise coefficients of the Hessian, sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potentials {
    /// `I'(u) / (beta u)`
    pub v: Vec<f64>,
    /// `I''(u) / beta`
    pub w: Vec<f64>,
    /// `f'(z) f(z) / z` at `z = I'(u)`
    pub a: Vec<f64>,
    /// `1 - f(z)^2 - 2 f(z)/z`
    pub b: Vec<f64>,
    pub one_minus_u2: Vec<f64>,
    /// `I'(u)`, equal to `beta A u` at an equilibrium
    pub field: Vec<f64>,
    /// linear extrapolation of `v` and `w` to the axis
    pub axis_v: f64,
    pub axis_w: f64,
}

impl Potentials {
    /// Diagonal coupling `(1 - u^2) / (2 beta a)`.
    pub fn diagonal(&self, beta: f64) -> Vec<f64> {
        self.one_minus_u2.iter().zip(&self.a).map(|(o, a)| o / (2.0 * beta * a)).collect()
    }

    /// Off-diagonal coupling `b / (2 beta a)`.
    pub fn coupling(&self, beta: f64) -> Vec<f64> {
        self.b.iter().zip(&self.a).map(|(b, a)| b / (2.0 * beta * a)).collect()
    }
}

pub fn potentials_from_profile(u: &Profile, ctx: &ThermoContext) -> Result<Potentials> {
    let beta = ctx.beta;
    let n = u.values.len();
    let mut pot = Potentials {
        v: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        one_minus_u2: Vec::with_capacity(n),
        field: Vec::with_capacity(n),
        axis_v: 0.0,
        axis_w: 0.0,
    };
    for (i, &x) in u.values.iter().enumerate() {
        if x <= 0.0 {
            return Err(Error::Singular(format!("profile vanishes at node {i} (r = {})", u.grid.nodes[i])));
        }
        let e = entropy(x)?;
        let z = e.t_star;
        let fz = f(z);
        let fp = f_prime(z);
        pot.v.push(z / (beta * x));
        pot.w.push(e.second / beta);
        pot.a.push(fp * fz / z);
        pot.b.push(1.0 - fz * fz - 2.0 * fz / z);
        pot.one_minus_u2.push(1.0 - x * x);
        pot.field.push(z);
    }
    let r = &u.grid.nodes;
    if n >= 2 {
        let lin = |y: &[f64]| y[0] - r[0] * (y[1] - y[0]) / (r[1] - r[0]);
        pot.axis_v = lin(&pot.v);
        pot.axis_w = lin(&pot.w);
    }
    Ok(pot)
}

/// Symmetrized (by `sqrt(w)` similarity) matrix of one Fourier block.
#[derive(Debug, Clone)]
pub struct HessianBlock {
    pub k: u32,
    pub mode: u32,
    pub matrix: DMatrix<f64>,
    pub potentials: Potentials,
}

fn same_grid(a: &RadialGrid, b: &RadialGrid) -> bool {
    a.len() == b.len() && a.radius == b.radius && a.scheme == b.scheme && a.ext_radius == b.ext_radius
}

/// Block `[[A_k - P, Q], [Q, A_{|2n-k|} - P]]` with `P` the diagonal and
/// `Q` the off-diagonal coupling.
pub fn assemble_block(
    k: u32,
    u: &Profile,
    op_k: &RadialOperator,
    op_partner: &RadialOperator,
    ctx: &ThermoContext,
) -> Result<HessianBlock> {
    let n = u.mode;
    if k < n {
        return Err(Error::Domain(format!("block index {k} below the mode {n}")));
    }
    if op_k.mode != k || op_partner.mode != (2 * n as i64 - k as i64).unsigned_abs() as u32 {
        return Err(Error::Config(format!(
            "block {k} needs modes ({k}, {}), got ({}, {})",
            (2 * n as i64 - k as i64).abs(),
            op_k.mode,
            op_partner.mode
        )));
    }
    if !same_grid(&op_k.grid, &u.grid) || !same_grid(&op_partner.grid, &u.grid) {
        return Err(Error::Shape { expected: u.grid.len(), got: op_k.len() });
    }
    let pot = potentials_from_profile(u, ctx)?;
    let diag = pot.diagonal(ctx.beta);
    let coup = pot.coupling(ctx.beta);
    let len = u.values.len();
    let s1 = op_k.symmetrized();
    let s2 = op_partner.symmetrized();
    let mut m = DMatrix::<f64>::zeros(2 * len, 2 * len);
    m.view_mut((0, 0), (len, len)).copy_from(&s1);
    m.view_mut((len, len), (len, len)).copy_from(&s2);
    for i in 0..len {
        m[(i, i)] -= diag[i];
        m[(len + i, len + i)] -= diag[i];
        m[(i, len + i)] = coup[i];
        m[(len + i, i)] = coup[i];
    }
    Ok(HessianBlock { k, mode: n, matrix: m, potentials: pot })
}

impl HessianBlock {
    pub fn half(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Conjugation by `(1/sqrt 2) [[-1, 1], [1, 1]]`.
    pub fn rotated(&self) -> DMatrix<f64> {
        let h = self.half();
        let m = &self.matrix;
        let mut out = DMatrix::<f64>::zeros(2 * h, 2 * h);
        let a = m.view((0, 0), (h, h));
        let b = m.view((0, h), (h, h));
        let c = m.view((h, 0), (h, h));
        let d = m.view((h, h), (h, h));
        out.view_mut((0, 0), (h, h)).copy_from(&((a - b - c + d) * 0.5));
        out.view_mut((0, h), (h, h)).copy_from(&((-a - b + c + d) * 0.5));
        out.view_mut((h, 0), (h, h)).copy_from(&((-a + b - c + d) * 0.5));
        out.view_mut((h, h), (h, h)).copy_from(&((a + b + c + d) * 0.5));
        out
    }

    /// `|| M - M^T ||_max`.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// Zero-mode residuals are measured on `r <= ZERO_MODE_COMPACT * R`; the
/// frozen exterior breaks translation invariance near `R`.
pub const ZERO_MODE_COMPACT: f64 = 0.5;

/// Relative half-width of the symmetric difference used for `u'`.
const DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeReport {
    /// relative residual of `(u, 0)` for the rotated mode-n block
    pub gauge: f64,
    /// relative residual of `(n u / r, u')` for the rotated (n+1) block
    pub translation: f64,
    /// same quantities with the operators of the solution's own grid
    pub gauge_same_grid: f64,
    pub translation_same_grid: f64,
    pub reference_len: usize,
}

/// Plain-frame action of the block `k` on `(x1, x2)`, with far-field values
/// `(t1, t2)` included so that the truncation at `R` does not show up.
fn apply_block_with_tail(
    ops: (&RadialOperator, &RadialOperator),
    diag: &[f64],
    coup: &[f64],
    x: (&[f64], &[f64]),
    t: (&[f64], &[f64]),
) -> Result<Vec<f64>> {
    let a1 = ops.0.apply_with_tail(x.0, t.0)?;
    let a2 = ops.1.apply_with_tail(x.1, t.1)?;
    let mut out = Vec::with_capacity(2 * diag.len());
    out.extend((0..diag.len()).map(|i| a1[i] - diag[i] * x.0[i] + coup[i] * x.1[i]));
    out.extend((0..diag.len()).map(|i| a2[i] - diag[i] * x.1[i] + coup[i] * x.0[i]));
    Ok(out)
}

/// Undoes the rotation: `(a, b) -> ((b - a), (a + b)) / sqrt 2`.
fn unrotate(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (
        a.iter().zip(b).map(|(a, b)| s * (b - a)).collect(),
        a.iter().zip(b).map(|(a, b)| s * (a + b)).collect(),
    )
}

fn mode_residuals(u: &Profile, ctx: &ThermoContext, spec: &KernelSpec) -> Result<(f64, f64)> {
    let n = u.mode;
    let g = &u.grid;
    let op_n = assemble_operator(n, spec, g)?;
    let op_up = assemble_operator(n + 1, spec, g)?;
    let op_down = assemble_operator(n.abs_diff(1), spec, g)?;
    let pot = potentials_from_profile(u, ctx)?;
    let diag = pot.diagonal(ctx.beta);
    let coup = pot.coupling(ctx.beta);
    let len = g.len();
    let tail_u: Vec<f64> = match &u.tail {
        Some(t) => t.clone(),
        None => vec![u.far_field; g.tail_nodes.len()],
    };
    let zeros = vec![0.0; len];
    let tail_zeros = vec![0.0; tail_u.len()];

    let (g1, g2) = unrotate(&u.values, &zeros);
    let (gt1, gt2) = unrotate(&tail_u, &tail_zeros);
    let rg = apply_block_with_tail((&op_n, &op_n), &diag, &coup, (&g1, &g2), (&gt1, &gt2))?;
    let mut gauge = g1;
    gauge.extend(g2);

    let radial: Vec<f64> = g.nodes.iter().zip(&u.values).map(|(r, v)| n as f64 * v / r).collect();
    let du = g
        .nodes
        .iter()
        .map(|&r| {
            let e = DERIVATIVE_STEP * r.max(1.0);
            Ok((u.interpolate(r + e, &op_n, ctx)? - u.interpolate(r - e, &op_n, ctx)?) / (2.0 * e))
        })
        .collect::<Result<Vec<f64>>>()?;
    let tail_radial: Vec<f64> = g.tail_nodes.iter().zip(&tail_u).map(|(s, v)| n as f64 * v / s).collect();
    let tail_du = if tail_u.len() >= 2 { central_derivative(&g.tail_nodes, &tail_u) } else { tail_zeros.clone() };
    let (t1, t2) = unrotate(&radial, &du);
    let (tt1, tt2) = unrotate(&tail_radial, &tail_du);
    let rt = apply_block_with_tail((&op_up, &op_down), &diag, &coup, (&t1, &t2), (&tt1, &tt2))?;
    let mut trans = t1;
    trans.extend(t2);
    let compact = g.count_at_or_below(ZERO_MODE_COMPACT * g.radius);
    let ratio = |res: &[f64], mode: &[f64]| {
        let norm = |x: &[f64]| {
            (0..compact)
                .map(|i| g.weights[i] * (x[i] * x[i] + x[len + i] * x[len + i]))
                .sum::<f64>()
                .sqrt()
        };
        norm(res) / norm(mode)
    };
    Ok((ratio(&rg, &gauge), ratio(&rt, &trans)))
}

/// Zero-mode residuals. The solution is carried to a grid with twice the
/// nodes through `u = f(beta A u)`, so the residual measures discretization
/// error rather than the solver tolerance.
pub fn zero_modes(u: &Profile, op: &RadialOperator, ctx: &ThermoContext) -> Result<ZeroModeReport> {
    if u.mode == 0 {
        return Err(Error::Config("zero modes are defined for vortex modes n >= 1".into()));
    }
    let (gauge_same_grid, translation_same_grid) = mode_residuals(u, ctx, &op.kernel)?;
    let fine = refine_profile(u, op, ctx)?;
    let (gauge, translation) = mode_residuals(&fine, ctx, &op.kernel)?;
    Ok(ZeroModeReport { gauge, translation, gauge_same_grid, translation_same_grid, reference_len: fine.values.len() })
}

/// The profile carried to the refined grid by the fixed-point relation.
pub fn refine_profile(u: &Profile, op: &RadialOperator, ctx: &ThermoContext) -> Result<Profile> {
    let grid = Arc::new(u.grid.refined()?);
    let values = grid.nodes.iter().map(|&r| u.interpolate(r, op, ctx)).collect::<Result<Vec<_>>>()?;
    let mut out = Profile::new(u.mode, values, u.far_field, grid.clone(), u.decay_class)?;
    if let Some(t) = &u.tail {
        let old = &u.grid.tail_nodes;
        out.tail = Some(grid.tail_nodes.iter().map(|&s| linear_interp(old, t, s)).collect());
    }
    Ok(out)
}

fn linear_interp(x: &[f64], y: &[f64], at: f64) -> f64 {
    let i = x.partition_point(|&v| v <= at);
    if i == 0 {
        return y[0];
    }
    if i >= x.len() {
        return *y.last().unwrap();
    }
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + t * (y[i] - y[i - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// `(sum x^2)^2 / sum x^4` for each eigenvector, in eigenvalue order
    pub participation: Vec<f64>,
    pub len: usize,
    pub radius: f64,
    /// mean nearest-neighbour gap in the bulk (middle half of the range)
    pub bulk_mean_spacing: f64,
    pub bulk: (f64, f64),
}

/// Full symmetric eigendecomposition of a symmetrized matrix.
pub fn eigen_spectrum(matrix: &DMatrix<f64>, radius: f64) -> Result<SpectrumReport> {
    let mut m = matrix.clone();
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entries".into()));
    }
    symmetrize_in_place(&mut m);
    let len = m.nrows();
    let eig = SymmetricEigen::try_new(m, 1e-14, 10_000)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge on a {len}x{len} matrix")))?;
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let participation = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            let s2: f64 = col.iter().map(|x| x * x).sum();
            let s4: f64 = col.iter().map(|x| x.powi(4)).sum();
            s2 * s2 / s4
        })
        .collect();
    let (lo, hi) = (eigenvalues[0], eigenvalues[len - 1]);
    let bulk = (lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
    let inside: Vec<f64> = eigenvalues.iter().copied().filter(|e| *e >= bulk.0 && *e <= bulk.1).collect();
    let bulk_mean_spacing = if inside.len() >= 2 {
        (inside[inside.len() - 1] - inside[0]) / (inside.len() - 1) as f64
    } else {
        f64::NAN
    };
    Ok(SpectrumReport { eigenvalues, participation, len, radius, bulk_mean_spacing, bulk })
}

impl SpectrumReport {
    /// Bulk eigenvalues separated from both neighbours by more than
    /// `factor` mean spacings.
    pub fn isolated(&self, factor: f64) -> Vec<f64> {
        let e = &self.eigenvalues;
        let gap = factor * self.bulk_mean_spacing;
        (0..e.len())
            .filter(|&i| e[i] >= self.bulk.0 && e[i] <= self.bulk.1)
            .filter(|&i| {
                let left = if i > 0 { e[i] - e[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < e.len() { e[i + 1] - e[i] } else { f64::INFINITY };
                left > gap && right > gap
            })
            .map(|i| e[i])
            .collect()
    }

    pub fn nearest(&self, target: f64) -> f64 {
        *self
            .eigenvalues
            .iter()
            .min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs()))
            .expect("non-empty spectrum")
    }

    /// Smallest participation ratio among bulk eigenvectors.
    pub fn min_bulk_participation(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.participation)
            .filter(|(e, _)| **e >= self.bulk.0 && **e <= self.bulk.1)
            .map(|(_, p)| *p)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `A - diag(v)` in the symmetrized frame.
pub fn shifted_operator(op: &RadialOperator, potential: &[f64]) -> DMatrix<f64> {
    let mut s = op.symmetrized();
    for (i, v) in potential.iter().enumerate() {
        s[(i, i)] -= v;
    }
    s
}

/// Dilation generator `2 r d/dr + 2`, antisymmetrized in the `r dr`
/// inner product. Acts on plain grid values. Interior rows use central
/// differences and the two end rows two-point one-sided ones, so that only
/// the outermost row and column differ from the interior stencil.
pub fn dilation_generator(grid: &RadialGrid) -> DMatrix<f64> {
    let r = &grid.nodes;
    let n = r.len();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let inv = 1.0 / (r[hi] - r[lo]);
        d[(i, hi)] += 2.0 * r[i] * inv;
        d[(i, lo)] -= 2.0 * r[i] * inv;
        d[(i, i)] += 2.0;
    }
    let w = &grid.weights;
    // adjoint in <x, y> = sum w x y is W^{-1} D^T W
    DMatrix::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] - d[(j, i)] * w[j] / w[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MourreReport {
    pub samples: usize,
    /// `min <[A - V~, D] psi, psi>` over the samples
    pub min_total: f64,
    /// `min <[A, D] psi, psi>`
    pub min_commutator_part: f64,
    /// `min <2 r V~' psi, psi>`, computed as `<[-V~, D] psi, psi>`
    pub min_potential_part: f64,
    /// `min <C psi, psi>` with the closed-form dilation kernel
    pub min_dilation_part: f64,
    /// `|| [A, D] - C ||_F / || C ||_F` with boundary rows and columns removed
    pub identity_error: f64,
    /// `|| [D, A] - C ||_F / || C ||_F`, same margin
    pub reversed_identity_error: f64,
}

/// Commutator positivity test on random smooth interior vectors.
pub fn mourre_check(
    u: &Profile,
    op: &RadialOperator,
    dilation: &RadialOperator,
    ctx: &ThermoContext,
    samples: usize,
    margin: usize,
    seed: u64,
) -> Result<MourreReport> {
    if !same_grid(&op.grid, &u.grid) || !same_grid(&dilation.grid, &u.grid) {
        return Err(Error::Shape { expected: u.grid.len(), got: op.len() });
    }
    let g = &u.grid;
    let n = g.len();
    if 2 * margin + 4 > n {
        return Err(Error::Config(format!("margin {margin} leaves no interior on {n} nodes")));
    }
    let pot = potentials_from_profile(u, ctx)?;
    let shifted: Vec<f64> = pot.v.iter().map(|v| v - 1.0).collect();
    let d = dilation_generator(g);
    let a = &op.matrix;
    let comm_a = a * &d - &d * a;
    let comm_v = DMatrix::from_fn(n, n, |i, j| -shifted[i] * d[(i, j)] + d[(i, j)] * shifted[j]);
    let c = &dilation.matrix;

    let sub = |m: &DMatrix<f64>| m.view((margin, margin), (n - 2 * margin, n - 2 * margin)).clone_owned();
    let c_norm = sub(c).norm();
    let identity_error = (sub(&comm_a) - sub(c)).norm() / c_norm;
    let reversed_identity_error = (sub(&(-&comm_a)) - sub(c)).norm() / c_norm;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = g.nodes[margin] + 2.0;
    let hi = g.nodes[n - 1 - margin] - 2.0;
    let quad = |m: &DMatrix<f64>, psi: &[f64]| -> f64 {
        let x = DVector::from_column_slice(psi);
        let y = m * &x;
        (0..n).map(|i| g.weights[i] * y[i] * psi[i]).sum()
    };
    let mut report = MourreReport {
        samples,
        min_total: f64::INFINITY,
        min_commutator_part: f64::INFINITY,
        min_potential_part: f64::INFINITY,
        min_dilation_part: f64::INFINITY,
        identity_error,
        reversed_identity_error,
    };
    for _ in 0..samples {
        let bumps = rng.random_range(1..=4);
        let params: Vec<(f64, f64, f64)> = (0..bumps)
            .map(|_| {
                let width: f64 = rng.random_range(0.5..3.0);
                let (a, b) = (lo + 2.0 * width, hi - 2.0 * width);
                let centre = if a < b { rng.random_range(a..b) } else { 0.5 * (lo + hi) };
                (rng.random_range(-1.0..1.0), centre, width)
            })
            .collect();
        let mut psi: Vec<f64> = g
            .nodes
            .iter()
            .map(|&r| params.iter().map(|(amp, c0, s)| amp * (-(r - c0).powi(2) / (2.0 * s * s)).exp()).sum())
            .collect();
        for (i, p) in psi.iter_mut().enumerate() {
            if i < margin || i >= n - margin {
                *p = 0.0;
            }
        }
        let norm = g.l2_norm(&psi);
        if norm == 0.0 {
            continue;
        }
        psi.iter_mut().for_each(|p| *p /= norm);
        let ca = quad(&comm_a, &psi);
        let cv = quad(&comm_v, &psi);
        report.min_commutator_part = report.min_commutator_part.min(ca);
        report.min_potential_part = report.min_potential_part.min(cv);
        report.min_total = report.min_total.min(ca + cv);
        report.min_dilation_part = report.min_dilation_part.min(quad(c, &psi));
    }
    Ok(report)
}

/// `sup |r u' - beta f'(beta A_n u) r (A_n u)'|` over inner nodes, with
/// `r (A_n u)' = (r A_{n-1}(s u) - r^2 A_n u - 2 p n A_n u) / (2 p)` for the
/// Gaussian kernel `exp(-p rho^2)` and `u'` from central differences.
pub fn ru_prime_identity(
    u: &Profile,
    op: &RadialOperator,
    op_lower: &RadialOperator,
    ctx: &ThermoContext,
) -> Result<f64> {
    let p = match op.kernel {
        KernelSpec::Gaussian { p } => p,
        _ => return Err(Error::UnsupportedKernel("derivative identity needs the Gaussian kernel".into())),
    };
    let n = u.mode;
    if op.mode != n || op_lower.mode != n.abs_diff(1) {
        return Err(Error::Config(format!("need operators of modes {n} and {}", n.abs_diff(1))));
    }
    let g = &u.grid;
    let a = u.field(op)?;
    let su: Vec<f64> = g.nodes.iter().zip(&u.values).map(|(r, v)| r * v).collect();
    let stail: Vec<f64> = match &u.tail {
        Some(t) => g.tail_nodes.iter().zip(t).map(|(s, v)| s * v).collect(),
        None => g.tail_nodes.iter().map(|s| s * u.far_field).collect(),
    };
    let lower = op_lower.apply_with_tail(&su, &stail)?;
    let du = central_derivative(&g.nodes, &u.values);
    let len = g.len();
    let mut sup: f64 = 0.0;
    for i in 1..len - 1 {
        let r = g.nodes[i];
        let r_da = (r * lower[i] - r * r * a[i] - 2.0 * p * n as f64 * a[i]) / (2.0 * p);
        let rhs = ctx.beta * f_prime(ctx.beta * a[i]) * r_da;
        sup = sup.max((r * du[i] - rhs).abs());
    }
    Ok(sup)
}

/// Eigenvalue table rows `(k, index, eigenvalue, participation, grid size)`.
pub fn spectrum_rows(k: u32, report: &SpectrumReport) -> Vec<(u32, usize, f64, f64, usize)> {
    report
        .eigenvalues
        .iter()
        .zip(&report.participation)
        .enumerate()
        .map(|(i, (e, p))| (k, i, *e, *p, report.len))
        .collect()
}
