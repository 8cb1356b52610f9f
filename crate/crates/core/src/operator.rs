//! Dense discretization of the mode-n convolution operator on a radial grid.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::kernel::{
    dilation_kernel, hankel_quadrature, weber_derivative_kernel, KernelSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// the averaging operator itself
    Convolution,
    /// `(d/dr + n/r)` applied to the averaging operator
    Derivative,
    /// commutator with the dilation generator
    Dilation,
}

/// Matrix `M_ij = K(r_i, r_j) w_j` on the grid, plus the block coupling grid
/// nodes to the far-field nodes on `(R, R_ext)`.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub mode: u32,
    pub kind: OperatorKind,
    pub kernel: KernelSpec,
    pub grid: Arc<RadialGrid>,
    pub matrix: DMatrix<f64>,
    pub tail: DMatrix<f64>,
    /// the operator applied to the constant 1 on `(0, R_ext)`
    pub farfield: Vec<f64>,
    /// contribution of `(R, R_ext)` to `farfield`
    pub tail_sums: Vec<f64>,
    /// bound on the kernel mass beyond `R_ext` for rows inside the grid
    pub beyond_bound: Option<f64>,
}

pub fn assemble_operator(n: u32, spec: &KernelSpec, grid: &RadialGrid) -> Result<RadialOperator> {
    spec.validate()?;
    let kernel = spec.clone();
    let k = |r: f64, s: f64| kernel.radial(n, r, s);
    let mut op = assemble_with(n, OperatorKind::Convolution, spec, grid, k, true)?;
    op.beyond_bound = beyond_bound(spec, grid);
    Ok(op)
}

/// Operator whose kernel is `(d/dr + n/r) K_n(r, s)`.
pub fn derived_operator_b(n: u32, spec: &KernelSpec, grid: &RadialGrid) -> Result<RadialOperator> {
    spec.validate()?;
    match spec {
        KernelSpec::Gaussian { p } => {
            let p = *p;
            assemble_with(
                n,
                OperatorKind::Derivative,
                spec,
                grid,
                move |r, s| Ok(weber_derivative_kernel(n, p, r, s)),
                false,
            )
        }
        KernelSpec::Exponential { .. } => {
            let kernel = spec.clone();
            let cutoff = spec.fourier_cutoff();
            assemble_with(
                n,
                OperatorKind::Derivative,
                spec,
                grid,
                move |r, s| {
                    let v = hankel_quadrature(
                        |rho| kernel.fourier(rho),
                        n.abs_diff(1),
                        n,
                        r,
                        s,
                        2,
                        cutoff,
                    );
                    // J_{-1} = -J_1
                    Ok(if n == 0 { -v } else { v })
                },
                false,
            )
        }
        KernelSpec::Tabulated { .. } => Err(Error::UnsupportedKernel(
            "derivative operator needs a Gaussian or exponential kernel".into(),
        )),
    }
}

/// Commutator of the averaging operator with the dilation generator
/// `r d/dr + d/dr r`, for the Gaussian kernel.
pub fn commutator_c(n: u32, spec: &KernelSpec, grid: &RadialGrid) -> Result<RadialOperator> {
    match spec {
        KernelSpec::Gaussian { p } => {
            let p = *p;
            assemble_with(
                n,
                OperatorKind::Dilation,
                spec,
                grid,
                move |r, s| Ok(dilation_kernel(n, p, r, s)),
                true,
            )
        }
        other => Err(Error::UnsupportedKernel(format!(
            "dilation commutator has a closed form only for the Gaussian kernel, got {}",
            other.name()
        ))),
    }
}

fn assemble_with(
    n: u32,
    kind: OperatorKind,
    spec: &KernelSpec,
    grid: &RadialGrid,
    kernel: impl Fn(f64, f64) -> Result<f64> + Sync,
    symmetric: bool,
) -> Result<RadialOperator> {
    let size = grid.len();
    let tail_len = grid.tail_nodes.len();
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..size)
        .into_par_iter()
        .map(|i| {
            let r = grid.nodes[i];
            let start = if symmetric { i } else { 0 };
            let mut inner = vec![0.0; size];
            for j in start..size {
                inner[j] = kernel(r, grid.nodes[j])?;
            }
            let mut outer = vec![0.0; tail_len];
            for (j, &s) in grid.tail_nodes.iter().enumerate() {
                outer[j] = kernel(r, s)? * grid.tail_weights[j];
            }
            Ok((inner, outer))
        })
        .collect();
    let mut kmat = DMatrix::<f64>::zeros(size, size);
    let mut tail = DMatrix::<f64>::zeros(size, tail_len);
    for (i, row) in rows.into_iter().enumerate() {
        let (inner, outer) = row?;
        let start = if symmetric { i } else { 0 };
        for j in start..size {
            kmat[(i, j)] = inner[j];
            if symmetric {
                kmat[(j, i)] = inner[j];
            }
        }
        for (j, v) in outer.into_iter().enumerate() {
            tail[(i, j)] = v;
        }
    }
    let mut matrix = kmat;
    for j in 0..size {
        let w = grid.weights[j];
        matrix.column_mut(j).scale_mut(w);
    }
    let tail_sums: Vec<f64> = (0..size).map(|i| tail.row(i).sum()).collect();
    let farfield = (0..size).map(|i| matrix.row(i).sum() + tail_sums[i]).collect();
    Ok(RadialOperator {
        mode: n,
        kind,
        kernel: spec.clone(),
        grid: Arc::new(grid.clone()),
        matrix,
        tail,
        farfield,
        tail_sums,
        beyond_bound: None,
    })
}

fn beyond_bound(spec: &KernelSpec, grid: &RadialGrid) -> Option<f64> {
    let d = grid.ext_radius - grid.radius;
    match spec {
        KernelSpec::Gaussian { p } => {
            Some((-d * d / (4.0 * p)).exp() * (1.0 + grid.radius * (std::f64::consts::PI / (4.0 * p)).sqrt()))
        }
        KernelSpec::Exponential { p } => Some(p.powi(3) / (p * p + d * d).powf(1.5)),
        KernelSpec::Tabulated { .. } => None,
    }
}

impl RadialOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape { expected: self.len(), got: len });
        }
        Ok(())
    }

    /// `M v`, the grid part only.
    pub fn apply_interior(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let out = &self.matrix * DVector::from_column_slice(v);
        Ok(out.as_slice().to_vec())
    }

    /// Operator applied to `v + c`, where `v` is given on the grid and
    /// vanishes beyond `R` while `c` is a constant extending to `R_ext`.
    pub fn apply(&self, v: &[f64], c: f64) -> Result<Vec<f64>> {
        let mut out = self.apply_interior(v)?;
        if c != 0.0 {
            for (o, a) in out.iter_mut().zip(&self.farfield) {
                *o += c * a;
            }
        }
        Ok(out)
    }

    /// Operator applied to a profile that equals `u` on the grid and the
    /// constant `c` on `(R, R_ext)`.
    pub fn apply_profile(&self, u: &[f64], c: f64) -> Result<Vec<f64>> {
        let mut out = self.apply_interior(u)?;
        if c != 0.0 {
            for (o, t) in out.iter_mut().zip(&self.tail_sums) {
                *o += c * t;
            }
        }
        Ok(out)
    }

    /// Operator applied to a profile given explicitly on both node sets.
    pub fn apply_with_tail(&self, u: &[f64], tail_values: &[f64]) -> Result<Vec<f64>> {
        if tail_values.len() != self.grid.tail_nodes.len() {
            return Err(Error::Shape { expected: self.grid.tail_nodes.len(), got: tail_values.len() });
        }
        let mut out = self.apply_interior(u)?;
        let t = &self.tail * DVector::from_column_slice(tail_values);
        for (o, x) in out.iter_mut().zip(t.iter()) {
            *o += x;
        }
        Ok(out)
    }

    /// Kernel row `K(r, r_j) w_j` at an arbitrary radius, for both node sets.
    pub fn row_at(&self, r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = &self.grid;
        let kfun = |s: f64| -> Result<f64> {
            match (self.kind, &self.kernel) {
                (OperatorKind::Convolution, k) => k.radial(self.mode, r, s),
                (OperatorKind::Derivative, KernelSpec::Gaussian { p }) => {
                    Ok(weber_derivative_kernel(self.mode, *p, r, s))
                }
                (OperatorKind::Dilation, KernelSpec::Gaussian { p }) => {
                    Ok(dilation_kernel(self.mode, *p, r, s))
                }
                _ => Err(Error::UnsupportedKernel("off-grid row for this operator".into())),
            }
        };
        let inner = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(&s, &w)| kfun(s).map(|k| k * w))
            .collect::<Result<Vec<_>>>()?;
        let outer = g
            .tail_nodes
            .iter()
            .zip(&g.tail_weights)
            .map(|(&s, &w)| kfun(s).map(|k| k * w))
            .collect::<Result<Vec<_>>>()?;
        Ok((inner, outer))
    }

    /// Operator applied to (`u` on the grid, `c` beyond) evaluated at any `r`.
    pub fn evaluate_at(&self, r: f64, u: &[f64], c: f64) -> Result<f64> {
        self.check_len(u.len())?;
        let (inner, outer) = self.row_at(r)?;
        let a: f64 = inner.iter().zip(u).map(|(k, v)| k * v).sum();
        Ok(a + c * outer.iter().sum::<f64>())
    }

    /// `W^{1/2} K W^{1/2}`, symmetric when the kernel is.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let sq: Vec<f64> = self.grid.weights.iter().map(|w| w.sqrt()).collect();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.matrix[(i, j)] * sq[i] / sq[j])
    }

    /// Eigenvalues of the symmetrized matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut s = self.symmetrized();
        symmetrize_in_place(&mut s);
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Norm on the discrete `L^2(r dr)` space.
    pub fn operator_norm(&self) -> f64 {
        let s = self.symmetrized();
        if self.kind == OperatorKind::Derivative {
            // not symmetric: largest singular value
            return s.singular_values().max();
        }
        let ev = self.eigenvalues();
        ev.first().unwrap().abs().max(ev.last().unwrap().abs())
    }

    /// Column split at the largest node not exceeding `lambda`.
    pub fn split_partial(&self, lambda: f64) -> Result<PartialSplit> {
        let g = &self.grid;
        if !(lambda > 0.0 && lambda <= g.radius) {
            return Err(Error::Domain(format!(
                "split radius {lambda} outside (0, {}]",
                g.radius
            )));
        }
        let cut = g.count_at_or_below(lambda);
        let n = self.len();
        let inner = DMatrix::from_fn(n, n, |i, j| if j < cut { self.matrix[(i, j)] } else { 0.0 });
        let outer = DMatrix::from_fn(n, n, |i, j| if j >= cut { self.matrix[(i, j)] } else { 0.0 });
        Ok(PartialSplit { lambda, cut, inner, outer })
    }

    /// Row-major CSV dump with a one-line header `N,R,n,kernel`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "N,R,n,kernel")?;
        writeln!(out, "{},{},{},{}", self.len(), self.grid.radius, self.mode, self.kernel.name())?;
        for i in 0..self.len() {
            let row: Vec<String> = (0..self.len()).map(|j| format!("{:e}", self.matrix[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Binary dump: magic, `N` (u64), `R` (f64), `n` (u32), kernel name
    /// (u32 length + UTF-8), then `N*N` little-endian f64 in row-major order.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(b"KVOP")?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        out.write_all(&self.grid.radius.to_le_bytes())?;
        out.write_all(&self.mode.to_le_bytes())?;
        let name = self.kernel.name().as_bytes();
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name)?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                out.write_all(&self.matrix[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// Columns of the operator restricted to nodes inside and outside a disc.
#[derive(Debug, Clone)]
pub struct PartialSplit {
    pub lambda: f64,
    /// number of grid nodes with `r <= lambda`
    pub cut: usize,
    pub inner: DMatrix<f64>,
    pub outer: DMatrix<f64>,
}

impl PartialSplit {
    pub fn apply_inner(&self, u: &[f64]) -> Vec<f64> {
        (&self.inner * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    pub fn apply_outer(&self, u: &[f64]) -> Vec<f64> {
        (&self.outer * DVector::from_column_slice(u)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridScheme};
    use std::f64::consts::PI;

    fn small() -> RadialOperator {
        let g = build_grid(64, 10.0, 20.0, GridScheme::GaussLegendreComposite).unwrap();
        assemble_operator(1, &KernelSpec::Gaussian { p: PI }, &g).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let op = small();
        assert!(op.apply(&vec![0.0; 64], 0.0).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_part_is_farfield() {
        let op = small();
        let out = op.apply(&vec![0.0; 64], 0.7).unwrap();
        for (o, a) in out.iter().zip(&op.farfield) {
            assert_eq!(*o, 0.7 * a);
        }
    }

    #[test]
    fn shape_errors() {
        let op = small();
        assert!(matches!(op.apply(&[1.0; 3], 0.0), Err(Error::Shape { .. })));
        assert!(op.apply_with_tail(&[0.0; 64], &[0.0; 3]).is_err());
    }

    #[test]
    fn split_edges() {
        let op = small();
        let full = op.split_partial(10.0).unwrap();
        assert_eq!(full.cut, 64);
        assert_eq!(full.outer.iter().filter(|&&x| x != 0.0).count(), 0);
        assert!(op.split_partial(0.0).is_err());
        assert!(op.split_partial(10.5).is_err());
        let half = op.split_partial(4.0).unwrap();
        assert_eq!(&half.inner + &half.outer, op.matrix);
    }

    #[test]
    fn dilation_needs_gaussian() {
        let g = build_grid(16, 4.0, 8.0, GridScheme::UniformMidpoint).unwrap();
        assert!(matches!(
            commutator_c(1, &KernelSpec::Exponential { p: 1.0 }, &g),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn csv_dump_header() {
        let g = build_grid(16, 4.0, 8.0, GridScheme::UniformMidpoint).unwrap();
        let op = assemble_operator(2, &KernelSpec::Gaussian { p: PI }, &g).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("N,R,n,kernel"));
        assert_eq!(lines.next(), Some("16,4,2,gaussian"));
        assert_eq!(text.lines().count(), 18);
        let mut bin = Vec::new();
        op.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 4 + 8 + 8 + 4 + 4 + 8 + 16 * 16 * 8);
    }
}
