//! Tensor-product grids over the shell, nodal fields, finite differences and
//! the weighted L² inner product.
//!
//! Storage is `t`-fastest: node `(it, ith, iz)` lives at
//! `it + n_t * (ith + n_theta * iz)`.

mod io;

pub use io::{read_blob, write_blob, write_csv};

use serde::Serialize;

use crate::error::{KornError, Result};
use crate::surface::SurfacePatch;

/// Coordinate direction of the shell grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    T,
    Theta,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::T, Axis::Theta, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "t",
            Axis::Theta => "theta",
            Axis::Z => "z",
        }
    }
}

/// Uniform grid on `[-h/2, h/2] x [0, omega] x [z_lo, z_hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellGrid {
    pub h: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub n_z: usize,
    pub omega: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub patch: String,
}

impl ShellGrid {
    pub fn new(patch: &SurfacePatch, h: f64, n_t: usize, n_theta: usize, n_z: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(KornError::InvalidParameter(format!("thickness h must be positive, got {h}")));
        }
        for (axis, n) in [("t", n_t), ("theta", n_theta), ("z", n_z)] {
            if n < 3 {
                return Err(KornError::TooFewNodes { axis, nodes: n });
            }
        }
        Ok(Self {
            h,
            n_t,
            n_theta,
            n_z,
            omega: patch.omega(),
            z_lo: patch.z_lo(),
            z_hi: patch.z_hi(),
            patch: patch.name().to_string(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n_t, self.n_theta, self.n_z]
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_theta * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => self.n_t,
            Axis::Theta => self.n_theta,
            Axis::Z => self.n_z,
        }
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::T => self.h / (self.n_t - 1) as f64,
            Axis::Theta => self.omega / (self.n_theta - 1) as f64,
            Axis::Z => (self.z_hi - self.z_lo) / (self.n_z - 1) as f64,
        }
    }

    pub fn max_spacing(&self) -> f64 {
        Axis::ALL.iter().map(|&a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn t(&self, it: usize) -> f64 {
        if it + 1 == self.n_t {
            0.5 * self.h
        } else {
            -0.5 * self.h + it as f64 * self.spacing(Axis::T)
        }
    }

    pub fn theta(&self, ith: usize) -> f64 {
        if ith + 1 == self.n_theta {
            self.omega
        } else {
            ith as f64 * self.spacing(Axis::Theta)
        }
    }

    pub fn z(&self, iz: usize) -> f64 {
        if iz + 1 == self.n_z {
            self.z_hi
        } else {
            self.z_lo + iz as f64 * self.spacing(Axis::Z)
        }
    }

    #[inline]
    pub fn index(&self, it: usize, ith: usize, iz: usize) -> usize {
        it + self.n_t * (ith + self.n_theta * iz)
    }

    /// Inverse of [`ShellGrid::index`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let it = idx % self.n_t;
        let rest = idx / self.n_t;
        (it, rest % self.n_theta, rest / self.n_theta)
    }

    pub fn coords(&self, idx: usize) -> (f64, f64, f64) {
        let (it, ith, iz) = self.unravel(idx);
        (self.t(it), self.theta(ith), self.z(iz))
    }

    fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => 1,
            Axis::Theta => self.n_t,
            Axis::Z => self.n_t * self.n_theta,
        }
    }

    /// Trapezoidal weights times `A_z A_theta`, one per node.
    pub fn quadrature_weights(&self, patch: &SurfacePatch) -> Vec<f64> {
        let wt = trapezoid_weights(self.n_t, self.spacing(Axis::T));
        let wth = trapezoid_weights(self.n_theta, self.spacing(Axis::Theta));
        let wz = trapezoid_weights(self.n_z, self.spacing(Axis::Z));
        let mut w = Vec::with_capacity(self.len());
        for iz in 0..self.n_z {
            for ith in 0..self.n_theta {
                let (th, z) = (self.theta(ith), self.z(iz));
                let lame = patch.a_z(th, z) * patch.a_theta(th, z);
                for &a in &wt {
                    w.push(a * wth[ith] * wz[iz] * lame);
                }
            }
        }
        w
    }
}

pub(crate) fn trapezoid_weights(n: usize, d: f64) -> Vec<f64> {
    let mut w = vec![d; n];
    w[0] = 0.5 * d;
    w[n - 1] = 0.5 * d;
    w
}

/// Real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: ShellGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &ShellGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: &ShellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KornError::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KornError::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub(crate) fn from_values_unchecked(grid: &ShellGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &ShellGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Samples `f(t, theta, z)` at every node.
pub fn sample<F: Fn(f64, f64, f64) -> f64>(f: F, grid: &ShellGrid) -> ScalarField {
    let mut values = Vec::with_capacity(grid.len());
    for iz in 0..grid.n_z {
        let z = grid.z(iz);
        for ith in 0..grid.n_theta {
            let th = grid.theta(ith);
            for it in 0..grid.n_t {
                values.push(f(grid.t(it), th, z));
            }
        }
    }
    ScalarField::from_values_unchecked(grid, values)
}

/// Displacement `(u_t, u_theta, u_z)` in the local frame `(n, e_theta, e_z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VecField3 {
    pub t: ScalarField,
    pub theta: ScalarField,
    pub z: ScalarField,
}

impl VecField3 {
    pub fn new(t: ScalarField, theta: ScalarField, z: ScalarField) -> Result<Self> {
        if t.grid != theta.grid || t.grid != z.grid {
            return Err(KornError::GridMismatch);
        }
        Ok(Self { t, theta, z })
    }

    pub fn zeros(grid: &ShellGrid) -> Self {
        Self { t: ScalarField::zeros(grid), theta: ScalarField::zeros(grid), z: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &ShellGrid {
        &self.t.grid
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.t, &self.theta, &self.z]
    }

    /// Flat DOF vector `[u_t..., u_theta..., u_z...]`.
    pub fn to_dofs(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * self.grid().len());
        for c in self.components() {
            x.extend_from_slice(&c.values);
        }
        x
    }

    pub fn from_dofs(grid: &ShellGrid, x: &[f64]) -> Result<Self> {
        let n = grid.len();
        if x.len() != 3 * n {
            return Err(KornError::GridMismatch);
        }
        Ok(Self {
            t: ScalarField::from_values(grid, x[..n].to_vec())?,
            theta: ScalarField::from_values(grid, x[n..2 * n].to_vec())?,
            z: ScalarField::from_values(grid, x[2 * n..].to_vec())?,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { t: self.t.scaled(c), theta: self.theta.scaled(c), z: self.z.scaled(c) }
    }
}

#[inline]
fn stencil_row(f: impl Fn(usize) -> f64, i: usize, n: usize, inv2d: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) * inv2d
    } else if i + 1 == n {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) * inv2d
    } else {
        (f(i + 1) - f(i - 1)) * inv2d
    }
}

/// Applies the second-order difference operator along `axis` to the raw
/// nodal array `input`, writing into `out`.
pub(crate) fn diff_into(grid: &ShellGrid, axis: Axis, input: &[f64], out: &mut [f64]) {
    let n = grid.nodes(axis);
    let s = grid.stride(axis);
    let inv2d = 0.5 / grid.spacing(axis);
    let len = grid.len();
    let block = s * n;
    for base in (0..len).step_by(block) {
        for off in 0..s {
            let start = base + off;
            for i in 0..n {
                out[start + i * s] = stencil_row(|k| input[start + k * s], i, n, inv2d);
            }
        }
    }
}

/// Accumulates the transpose of the difference operator: `out += D^T input`.
pub(crate) fn diff_transpose_add(grid: &ShellGrid, axis: Axis, input: &[f64], out: &mut [f64]) {
    let n = grid.nodes(axis);
    let s = grid.stride(axis);
    let inv2d = 0.5 / grid.spacing(axis);
    let len = grid.len();
    let block = s * n;
    for base in (0..len).step_by(block) {
        for off in 0..s {
            let start = base + off;
            let at = |k: usize| start + k * s;
            let y0 = input[at(0)] * inv2d;
            out[at(0)] -= 3.0 * y0;
            out[at(1)] += 4.0 * y0;
            out[at(2)] -= y0;
            for i in 1..n - 1 {
                let y = input[at(i)] * inv2d;
                out[at(i + 1)] += y;
                out[at(i - 1)] -= y;
            }
            let yl = input[at(n - 1)] * inv2d;
            out[at(n - 1)] += 3.0 * yl;
            out[at(n - 2)] -= 4.0 * yl;
            out[at(n - 3)] += yl;
        }
    }
}

/// Second-order finite difference along `axis`: central in the interior,
/// one-sided three-point stencils on the boundary nodes.
pub fn diff(field: &ScalarField, axis: Axis) -> Result<ScalarField> {
    let n = field.grid.nodes(axis);
    if n < 3 {
        return Err(KornError::TooFewNodes { axis: axis.name(), nodes: n });
    }
    let mut out = vec![0.0; field.values.len()];
    diff_into(&field.grid, axis, &field.values, &mut out);
    Ok(ScalarField::from_values_unchecked(&field.grid, out))
}

/// Weighted inner product `sum w_i f_i g_i` with trapezoidal weights times
/// `A_z A_theta`. There is no `(1 + t kappa)` Jacobian in the weight.
pub fn inner_product(f: &ScalarField, g: &ScalarField, patch: &SurfacePatch) -> Result<f64> {
    if f.grid != g.grid || f.grid.patch != patch.name() {
        return Err(KornError::GridMismatch);
    }
    let w = f.grid.quadrature_weights(patch);
    Ok(weighted_dot(&w, &f.values, &g.values))
}

#[inline]
pub(crate) fn weighted_dot(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    w.iter().zip(f).zip(g).map(|((w, a), b)| w * (a * b)).sum()
}

/// Objects with a weighted L² norm: scalar, vector and matrix fields.
pub trait FieldNorm {
    fn channels(&self) -> Vec<&ScalarField>;
}

impl FieldNorm for ScalarField {
    fn channels(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl FieldNorm for VecField3 {
    fn channels(&self) -> Vec<&ScalarField> {
        self.components().to_vec()
    }
}

/// `sqrt` of the summed channel-wise inner products.
pub fn norm<F: FieldNorm + ?Sized>(field: &F, patch: &SurfacePatch) -> Result<f64> {
    let ch = field.channels();
    let grid = ch[0].grid();
    if ch.iter().any(|c| c.grid() != grid) || grid.patch != patch.name() {
        return Err(KornError::GridMismatch);
    }
    let w = grid.quadrature_weights(patch);
    Ok(ch.iter().map(|c| weighted_dot(&w, &c.values, &c.values)).sum::<f64>().sqrt())
}
