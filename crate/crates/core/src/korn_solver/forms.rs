//! Matrix-free quadratic forms on the DOF space `[u_t, u_theta, u_z]`.
//!
//! * `G(x) = |grad u|^2`
//! * `M(x) = |u|^2`
//! * `E(x) = |e(u)|^2`
//! * `N_t(x) = |u_t|^2`
//!
//! All four are applied through the shell operator and its transpose, so a
//! linear combination costs a single gradient pass.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{KornError, Result};
use crate::grid_field::ShellGrid;
use crate::shell_ops::{symmetrize, GradientKind, ShellOperator, StrainSource};
use crate::surface::SurfacePatch;

/// Symmetric positive-semidefinite operator on DOF vectors.
pub trait QuadraticForm: Sync {
    fn dim(&self) -> usize;

    /// `y = Q x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn label(&self) -> String;

    /// `<x, Q x>`
    fn energy(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        dot(x, &y)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients of `g G + m M + e E + n N_t`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FormWeights {
    pub g: f64,
    pub m: f64,
    pub e: f64,
    pub n: f64,
}

impl FormWeights {
    pub const G: Self = Self { g: 1.0, m: 0.0, e: 0.0, n: 0.0 };
    pub const M: Self = Self { g: 0.0, m: 1.0, e: 0.0, n: 0.0 };
    pub const E: Self = Self { g: 0.0, m: 0.0, e: 1.0, n: 0.0 };
    pub const N: Self = Self { g: 0.0, m: 0.0, e: 0.0, n: 1.0 };
    /// `M + E`, the second-inequality denominator (times `h`).
    pub const M_PLUS_E: Self = Self { g: 0.0, m: 1.0, e: 1.0, n: 0.0 };
}

/// Shared operators for every form on one `(patch, grid)` pair.
#[derive(Debug)]
pub struct ShellForms {
    grid: ShellGrid,
    full: ShellOperator,
    strain_op: Option<ShellOperator>,
    strain_blocks: OnceLock<Vec<DMatrix<f64>>>,
}

impl ShellForms {
    pub fn new(patch: &SurfacePatch, grid: &ShellGrid, source: StrainSource) -> Result<Arc<Self>> {
        let full = ShellOperator::new(patch, grid, GradientKind::Full)?;
        let strain_op = match source {
            StrainSource::Full => None,
            StrainSource::Simplified => Some(ShellOperator::new(patch, grid, GradientKind::Simplified)?),
        };
        Ok(Arc::new(Self { grid: grid.clone(), full, strain_op, strain_blocks: OnceLock::new() }))
    }

    pub fn grid(&self) -> &ShellGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        3 * self.grid.len()
    }

    pub fn weights(&self) -> &[f64] {
        self.full.weights()
    }

    fn strain_operator(&self) -> &ShellOperator {
        self.strain_op.as_ref().unwrap_or(&self.full)
    }

    /// `y = (g G + m M + e E + n N_t) x`.
    pub fn apply(&self, c: FormWeights, x: &[f64], y: &mut [f64]) {
        let n = self.grid.len();
        let w = self.full.weights();
        y.iter_mut().for_each(|v| *v = 0.0);
        let separate = self.strain_op.is_some();
        if c.g != 0.0 || (c.e != 0.0 && !separate) {
            let mut bx = vec![0.0; 9 * n];
            self.full.apply(x, &mut bx);
            let mut acc = vec![0.0; 9 * n];
            if c.g != 0.0 {
                for (a, b) in acc.iter_mut().zip(&bx) {
                    *a = c.g * b;
                }
            }
            if c.e != 0.0 && !separate {
                symmetrize(&mut bx, n);
                for (a, b) in acc.iter_mut().zip(&bx) {
                    *a += c.e * b;
                }
            }
            for chunk in acc.chunks_mut(n) {
                for (a, wi) in chunk.iter_mut().zip(w) {
                    *a *= wi;
                }
            }
            self.full.apply_transpose_add(&acc, y);
        }
        if c.e != 0.0 && separate {
            let op = self.strain_operator();
            let mut sx = vec![0.0; 9 * n];
            op.apply(x, &mut sx);
            symmetrize(&mut sx, n);
            for chunk in sx.chunks_mut(n) {
                for (a, wi) in chunk.iter_mut().zip(w) {
                    *a *= c.e * wi;
                }
            }
            op.apply_transpose_add(&sx, y);
        }
        if c.m != 0.0 || c.n != 0.0 {
            for comp in 0..3 {
                let coef = if comp == 0 { c.m + c.n } else { c.m };
                if coef == 0.0 {
                    continue;
                }
                let (xs, ys) = (&x[comp * n..(comp + 1) * n], &mut y[comp * n..(comp + 1) * n]);
                for ((yv, xv), wi) in ys.iter_mut().zip(xs).zip(w) {
                    *yv += coef * wi * xv;
                }
            }
        }
    }

    /// Diagonal blocks of `E` on each `(theta, z)` column of `3 n_t` DOFs.
    ///
    /// Probed with colored unit vectors: the stencils couple columns at most
    /// two nodes apart, so columns congruent mod 3 in both directions never
    /// interact.
    fn strain_column_blocks(&self) -> &[DMatrix<f64>] {
        self.strain_blocks.get_or_init(|| self.probe_column_blocks(FormWeights::E))
    }

    fn probe_column_blocks(&self, c: FormWeights) -> Vec<DMatrix<f64>> {
        let g = &self.grid;
        let n = g.len();
        let nt = g.n_t;
        let cols = g.n_theta * g.n_z;
        let mut blocks = vec![DMatrix::zeros(3 * nt, 3 * nt); cols];
        let mut p = vec![0.0; 3 * n];
        let mut y = vec![0.0; 3 * n];
        for ctheta in 0..3 {
            for cz in 0..3 {
                let members: Vec<(usize, usize)> = (0..g.n_z)
                    .filter(|iz| iz % 3 == cz)
                    .flat_map(|iz| (0..g.n_theta).filter(|ith| ith % 3 == ctheta).map(move |ith| (ith, iz)))
                    .collect();
                if members.is_empty() {
                    continue;
                }
                for comp in 0..3 {
                    for it in 0..nt {
                        for &(ith, iz) in &members {
                            p[comp * n + g.index(it, ith, iz)] = 1.0;
                        }
                        self.apply(c, &p, &mut y);
                        for &(ith, iz) in &members {
                            p[comp * n + g.index(it, ith, iz)] = 0.0;
                            let block = &mut blocks[ith + g.n_theta * iz];
                            for c2 in 0..3 {
                                for it2 in 0..nt {
                                    block[(c2 * nt + it2, comp * nt + it)] = y[c2 * n + g.index(it2, ith, iz)];
                                }
                            }
                        }
                    }
                }
            }
        }
        blocks
    }

    /// Column-block Jacobi preconditioner for `c` (which must not involve `G`).
    pub fn block_jacobi(&self, c: FormWeights) -> Result<BlockJacobi> {
        if c.g != 0.0 {
            return Err(KornError::InvalidParameter("block Jacobi is built for denominator forms only".into()));
        }
        let g = &self.grid;
        let n = g.len();
        let nt = g.n_t;
        let w = self.full.weights();
        let e_blocks: &[DMatrix<f64>] = if c.e != 0.0 { self.strain_column_blocks() } else { &[] };
        let mut factors = Vec::with_capacity(g.n_theta * g.n_z);
        for iz in 0..g.n_z {
            for ith in 0..g.n_theta {
                let col = ith + g.n_theta * iz;
                let mut b = if c.e != 0.0 { &e_blocks[col] * c.e } else { DMatrix::zeros(3 * nt, 3 * nt) };
                for comp in 0..3 {
                    let coef = if comp == 0 { c.m + c.n } else { c.m };
                    for it in 0..nt {
                        b[(comp * nt + it, comp * nt + it)] += coef * w[g.index(it, ith, iz)];
                    }
                }
                let chol = b
                    .cholesky()
                    .ok_or_else(|| KornError::Breakdown(format!("column block ({ith}, {iz}) is not positive definite")))?;
                factors.push(chol);
            }
        }
        Ok(BlockJacobi { grid: g.clone(), n, factors })
    }

    /// The four labelled forms `(G, M, E, N_t)`.
    pub fn assemble(self: &Arc<Self>) -> (ShellForm, ShellForm, ShellForm, ShellForm) {
        (
            ShellForm::new(self.clone(), FormWeights::G, "G"),
            ShellForm::new(self.clone(), FormWeights::M, "M"),
            ShellForm::new(self.clone(), FormWeights::E, "E"),
            ShellForm::new(self.clone(), FormWeights::N, "N_t"),
        )
    }
}

/// One linear combination of the shell forms.
#[derive(Clone, Debug)]
pub struct ShellForm {
    forms: Arc<ShellForms>,
    weights: FormWeights,
    label: String,
}

impl ShellForm {
    pub fn new(forms: Arc<ShellForms>, weights: FormWeights, label: &str) -> Self {
        Self { forms, weights, label: label.to_string() }
    }

    pub fn weights(&self) -> FormWeights {
        self.weights
    }

    pub fn forms(&self) -> &Arc<ShellForms> {
        &self.forms
    }
}

impl QuadraticForm for ShellForm {
    fn dim(&self) -> usize {
        self.forms.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.forms.apply(self.weights, x, y)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Builds `(G, M, E, N_t)` for a patch and grid with the full strain.
pub fn assemble_forms(patch: &SurfacePatch, grid: &ShellGrid) -> Result<(ShellForm, ShellForm, ShellForm, ShellForm)> {
    Ok(ShellForms::new(patch, grid, StrainSource::Full)?.assemble())
}

/// Approximate inverse applied to residuals.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// `z = r`
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Exact inverse of the `(theta, z)`-column diagonal blocks.
pub struct BlockJacobi {
    grid: ShellGrid,
    n: usize,
    factors: Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl Preconditioner for BlockJacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let g = &self.grid;
        let nt = g.n_t;
        let mut local = nalgebra::DVector::zeros(3 * nt);
        for iz in 0..g.n_z {
            for ith in 0..g.n_theta {
                let chol = &self.factors[ith + g.n_theta * iz];
                for comp in 0..3 {
                    for it in 0..nt {
                        local[comp * nt + it] = r[comp * self.n + g.index(it, ith, iz)];
                    }
                }
                chol.solve_mut(&mut local);
                for comp in 0..3 {
                    for it in 0..nt {
                        z[comp * self.n + g.index(it, ith, iz)] = local[comp * nt + it];
                    }
                }
            }
        }
    }
}

/// Dense matrix of a form, materialized column by column with unit vectors.
pub fn materialize(form: &dyn QuadraticForm) -> Vec<Vec<f64>> {
    let n = form.dim();
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for i in 0..n {
        e[i] = 1.0;
        let mut y = vec![0.0; n];
        form.apply(&e, &mut y);
        e[i] = 0.0;
        cols.push(y);
    }
    cols
}
