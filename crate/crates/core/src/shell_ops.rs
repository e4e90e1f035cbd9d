//! Shell gradient in the local frame `(n, e_theta, e_z)`, its `t = 0`
//! simplification, the strain and the two Korn quotients.
//!
//! Matrix entries are indexed `(row, column) = (component, direction)` with
//! `0, 1, 2 <-> t, theta, z`. Entry `(0, 1)` for instance is
//! `(u_{t,theta} - A_theta kappa_theta u_theta) / (A_theta (1 + t kappa_theta))`.

use crate::error::{KornError, Result};
use crate::grid_field::{diff_into, diff_transpose_add, weighted_dot, Axis, FieldNorm, ScalarField, ShellGrid, VecField3};
use crate::surface::{dot, SurfacePatch, Vec3};

/// Which gradient the operator assembles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientKind {
    /// Full shell gradient with the `1 / (1 + t kappa)` factors.
    Full,
    /// The factors replaced by one (the gradient on the mid-surface, `F`).
    Simplified,
}

/// Which strain enters the Korn quotients: `e(grad u)` or `e(F)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StrainSource {
    #[default]
    Full,
    Simplified,
}

/// 3x3 matrix per node, entries ordered `(t, theta, z)` in rows and columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrixField {
    entries: Vec<ScalarField>,
}

impl FrameMatrixField {
    pub fn from_entries(entries: Vec<ScalarField>) -> Result<Self> {
        if entries.len() != 9 || entries.iter().any(|e| e.grid() != entries[0].grid()) {
            return Err(KornError::GridMismatch);
        }
        Ok(Self { entries })
    }

    pub fn zeros(grid: &ShellGrid) -> Self {
        Self { entries: (0..9).map(|_| ScalarField::zeros(grid)).collect() }
    }

    pub fn grid(&self) -> &ShellGrid {
        self.entries[0].grid()
    }

    pub fn get(&self, row: usize, col: usize) -> &ScalarField {
        &self.entries[3 * row + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut ScalarField {
        &mut self.entries[3 * row + col]
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    /// Nodewise matrix at flat node index `idx`.
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j).values()[idx];
            }
        }
        m
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid() != other.grid() {
            return Err(KornError::GridMismatch);
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| {
                let v = a.values().iter().zip(b.values()).map(|(x, y)| f(*x, *y)).collect();
                ScalarField::from_values_unchecked(a.grid(), v)
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }
}

impl FieldNorm for FrameMatrixField {
    fn channels(&self) -> Vec<&ScalarField> {
        self.entries.iter().collect()
    }
}

/// One summand `coef * (D_axis u_comp)` or `coef * u_comp` of a matrix entry.
#[derive(Clone, Debug)]
struct Term {
    comp: usize,
    deriv: Option<Axis>,
    coef: Vec<f64>,
}

/// Precomputed linear map `u -> grad u` (or `u -> F`) on a fixed grid.
///
/// DOF vectors are `[u_t, u_theta, u_z]` (3N values); matrix outputs are nine
/// consecutive nodal arrays in row-major entry order (9N values).
#[derive(Clone, Debug)]
pub struct ShellOperator {
    grid: ShellGrid,
    kind: GradientKind,
    entries: Vec<Vec<Term>>,
    weights: Vec<f64>,
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::T => 0,
        Axis::Theta => 1,
        Axis::Z => 2,
    }
}

impl ShellOperator {
    pub fn new(patch: &SurfacePatch, grid: &ShellGrid, kind: GradientKind) -> Result<Self> {
        if grid.patch != patch.name() || grid.omega != patch.omega() || grid.z_lo != patch.z_lo() || grid.z_hi != patch.z_hi() {
            return Err(KornError::GridMismatch);
        }
        let n = grid.len();
        // per-node coefficient arrays, named after the entry they feed
        let mut c = vec![vec![0.0; n]; 17];
        let mut min_factor = f64::INFINITY;
        for iz in 0..grid.n_z {
            for ith in 0..grid.n_theta {
                let (th, z) = (grid.theta(ith), grid.z(iz));
                let at = patch.a_theta(th, z);
                let az = patch.a_z(th, z);
                let kt = patch.kappa_theta(th, z);
                let kz = patch.kappa_z(th, z);
                let at_z = patch.da_theta_dz(th, z);
                let az_t = patch.da_z_dtheta(th, z);
                for it in 0..grid.n_t {
                    let t = grid.t(it);
                    let (ft, fz) = (1.0 + t * kt, 1.0 + t * kz);
                    min_factor = min_factor.min(ft).min(fz);
                    let (ft, fz) = match kind {
                        GradientKind::Full => (ft, fz),
                        GradientKind::Simplified => (1.0, 1.0),
                    };
                    let idx = grid.index(it, ith, iz);
                    let den_t = az * at * ft;
                    let den_z = az * at * fz;
                    // (0,1)
                    c[0][idx] = 1.0 / (at * ft);
                    c[1][idx] = -(at * kt) / (at * ft);
                    // (0,2)
                    c[2][idx] = 1.0 / (az * fz);
                    c[3][idx] = -(az * kz) / (az * fz);
                    // (1,1)
                    c[4][idx] = az / den_t;
                    c[5][idx] = az * at * kt / den_t;
                    c[6][idx] = at_z / den_t;
                    // (1,2)
                    c[7][idx] = at / den_z;
                    c[8][idx] = -az_t / den_z;
                    // (2,1)
                    c[9][idx] = az / den_t;
                    c[10][idx] = -at_z / den_t;
                    // (2,2)
                    c[11][idx] = at / den_z;
                    c[12][idx] = az * at * kz / den_z;
                    c[13][idx] = az_t / den_z;
                    // t-derivatives carry unit coefficients
                    c[14][idx] = 1.0;
                    c[15][idx] = 1.0;
                    c[16][idx] = 1.0;
                }
            }
        }
        if min_factor < 0.5 {
            return Err(KornError::ShellTooThick { min_factor });
        }
        let mut c = c.into_iter().map(Some).collect::<Vec<_>>();
        let mut take = |i: usize| c[i].take().expect("coefficient used once");
        let term = |comp: usize, deriv: Option<Axis>, coef: Vec<f64>| Term { comp, deriv, coef };
        let (t, th, z) = (0, 1, 2);
        let raw = vec![
            vec![term(t, Some(Axis::T), take(14))],
            vec![term(t, Some(Axis::Theta), take(0)), term(th, None, take(1))],
            vec![term(t, Some(Axis::Z), take(2)), term(z, None, take(3))],
            vec![term(th, Some(Axis::T), take(15))],
            vec![term(th, Some(Axis::Theta), take(4)), term(t, None, take(5)), term(z, None, take(6))],
            vec![term(th, Some(Axis::Z), take(7)), term(z, None, take(8))],
            vec![term(z, Some(Axis::T), take(16))],
            vec![term(z, Some(Axis::Theta), take(9)), term(th, None, take(10))],
            vec![term(z, Some(Axis::Z), take(11)), term(t, None, take(12)), term(th, None, take(13))],
        ];
        // zero pointwise terms contribute nothing; dropping them keeps the
        // flat-plate operator identical to the bare difference stencils
        let entries = raw
            .into_iter()
            .map(|terms| terms.into_iter().filter(|tm| tm.deriv.is_some() || tm.coef.iter().any(|&v| v != 0.0)).collect())
            .collect();
        Ok(Self { grid: grid.clone(), kind, entries, weights: grid.quadrature_weights(patch) })
    }

    pub fn grid(&self) -> &ShellGrid {
        &self.grid
    }

    pub fn kind(&self) -> GradientKind {
        self.kind
    }

    /// Quadrature weights (trapezoid times `A_z A_theta`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `out = B x` with `x` of length 3N and `out` of length 9N.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        let mut derivs = vec![0.0; 9 * n];
        for comp in 0..3 {
            for axis in Axis::ALL {
                let k = 3 * comp + axis_index(axis);
                diff_into(&self.grid, axis, &x[comp * n..(comp + 1) * n], &mut derivs[k * n..(k + 1) * n]);
            }
        }
        for (e, terms) in self.entries.iter().enumerate() {
            let o = &mut out[e * n..(e + 1) * n];
            o.iter_mut().for_each(|v| *v = 0.0);
            for tm in terms {
                let src = match tm.deriv {
                    Some(a) => {
                        let k = 3 * tm.comp + axis_index(a);
                        &derivs[k * n..(k + 1) * n]
                    }
                    None => &x[tm.comp * n..(tm.comp + 1) * n],
                };
                for ((o, c), s) in o.iter_mut().zip(&tm.coef).zip(src) {
                    *o += c * s;
                }
            }
        }
    }

    /// `out += B^T y` with `y` of length 9N and `out` of length 3N.
    pub fn apply_transpose_add(&self, y: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        let mut dscratch = vec![0.0; 9 * n];
        for (e, terms) in self.entries.iter().enumerate() {
            let ye = &y[e * n..(e + 1) * n];
            for tm in terms {
                let dst = match tm.deriv {
                    Some(a) => {
                        let k = 3 * tm.comp + axis_index(a);
                        &mut dscratch[k * n..(k + 1) * n]
                    }
                    None => &mut out[tm.comp * n..(tm.comp + 1) * n],
                };
                for ((d, c), v) in dst.iter_mut().zip(&tm.coef).zip(ye) {
                    *d += c * v;
                }
            }
        }
        for comp in 0..3 {
            for axis in Axis::ALL {
                let k = 3 * comp + axis_index(axis);
                diff_transpose_add(&self.grid, axis, &dscratch[k * n..(k + 1) * n], &mut out[comp * n..(comp + 1) * n]);
            }
        }
    }

    /// Matrix field of `B u`.
    pub fn field(&self, u: &VecField3) -> Result<FrameMatrixField> {
        if u.grid() != &self.grid {
            return Err(KornError::GridMismatch);
        }
        let n = self.grid.len();
        let mut out = vec![0.0; 9 * n];
        self.apply(&u.to_dofs(), &mut out);
        let entries = out.chunks(n).map(|c| ScalarField::from_values_unchecked(&self.grid, c.to_vec())).collect();
        Ok(FrameMatrixField { entries })
    }
}

/// In-place symmetrization of a 9N entry array.
pub(crate) fn symmetrize(m: &mut [f64], n: usize) {
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = (3 * i + j, 3 * j + i);
        for k in 0..n {
            let s = 0.5 * (m[a * n + k] + m[b * n + k]);
            m[a * n + k] = s;
            m[b * n + k] = s;
        }
    }
}

/// Shell gradient `grad u` of a frame-component field.
pub fn gradient(u: &VecField3, patch: &SurfacePatch) -> Result<FrameMatrixField> {
    ShellOperator::new(patch, u.grid(), GradientKind::Full)?.field(u)
}

/// Gradient with every `(1 + t kappa)` factor set to one.
pub fn simplified_gradient(u: &VecField3, patch: &SurfacePatch) -> Result<FrameMatrixField> {
    ShellOperator::new(patch, u.grid(), GradientKind::Simplified)?.field(u)
}

/// Symmetric part `(M + M^T) / 2`.
pub fn strain(m: &FrameMatrixField) -> FrameMatrixField {
    let mut out = m.clone();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let v = m
                    .get(i, j)
                    .values()
                    .iter()
                    .zip(m.get(j, i).values())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                *out.get_mut(i, j) = ScalarField::from_values_unchecked(m.grid(), v);
            }
        }
    }
    out
}

/// Antisymmetric part `(M - M^T) / 2`.
pub fn skew_part(m: &FrameMatrixField) -> FrameMatrixField {
    let mut out = FrameMatrixField::zeros(m.grid());
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let v = m
                    .get(i, j)
                    .values()
                    .iter()
                    .zip(m.get(j, i).values())
                    .map(|(a, b)| 0.5 * (a - b))
                    .collect();
                *out.get_mut(i, j) = ScalarField::from_values_unchecked(m.grid(), v);
            }
        }
    }
    out
}

/// `u . n`, which in the local frame is just `u_t`.
pub fn normal_component(u: &VecField3) -> ScalarField {
    u.t.clone()
}

/// Infinitesimal rigid motion `v(X) = a + B X` sampled at `X = r + t n` and
/// expressed in the local frame.
pub fn rigid_motion_field(a: Vec3, b: [[f64; 3]; 3], patch: &SurfacePatch, grid: &ShellGrid) -> Result<VecField3> {
    let mut asym: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            asym = asym.max((b[i][j] + b[j][i]).abs());
            scale = scale.max(b[i][j].abs());
        }
    }
    if asym > 1e-12 * scale.max(1.0) {
        return Err(KornError::NotSkew(asym));
    }
    if !patch.has_embedding() {
        return Err(KornError::NoEmbedding(patch.name().to_string()));
    }
    let n = grid.len();
    let (mut ut, mut uth, mut uz) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for iz in 0..grid.n_z {
        for ith in 0..grid.n_theta {
            let (th, z) = (grid.theta(ith), grid.z(iz));
            let r = patch.embedding(th, z).ok_or_else(|| KornError::NoEmbedding(patch.name().to_string()))?;
            let f = patch.frame(th, z)?;
            for it in 0..grid.n_t {
                let t = grid.t(it);
                let x = [r[0] + t * f.n[0], r[1] + t * f.n[1], r[2] + t * f.n[2]];
                let v = [
                    a[0] + dot(b[0], x),
                    a[1] + dot(b[1], x),
                    a[2] + dot(b[2], x),
                ];
                let idx = grid.index(it, ith, iz);
                ut[idx] = dot(v, f.n);
                uth[idx] = dot(v, f.e_theta);
                uz[idx] = dot(v, f.e_z);
            }
        }
    }
    VecField3::new(
        ScalarField::from_values_unchecked(grid, ut),
        ScalarField::from_values_unchecked(grid, uth),
        ScalarField::from_values_unchecked(grid, uz),
    )
}

/// The four norms entering the Korn inequalities.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct KornTerms {
    /// `|grad u|^2`
    pub grad_sq: f64,
    /// `|u|^2`
    pub disp_sq: f64,
    /// `|u . n|`
    pub normal: f64,
    /// `|e(u)|`
    pub strain: f64,
    pub h: f64,
}

impl KornTerms {
    /// Denominator of the interpolation quotient.
    pub fn interp_denominator(&self) -> f64 {
        self.normal * self.strain / self.h + self.disp_sq + self.strain * self.strain
    }

    /// Denominator of the second-inequality quotient.
    pub fn second_denominator(&self) -> f64 {
        (self.disp_sq + self.strain * self.strain) / self.h
    }

    pub fn interp_quotient(&self) -> f64 {
        self.grad_sq / self.interp_denominator()
    }

    pub fn second_quotient(&self) -> f64 {
        self.grad_sq / self.second_denominator()
    }
}

/// Evaluates `|grad u|^2`, `|u|^2`, `|u_t|`, `|e|` in the weighted norm.
pub fn korn_terms(u: &VecField3, patch: &SurfacePatch, source: StrainSource) -> Result<KornTerms> {
    let grid = u.grid();
    let full = ShellOperator::new(patch, grid, GradientKind::Full)?;
    let n = grid.len();
    let x = u.to_dofs();
    let w = full.weights();
    let mut g = vec![0.0; 9 * n];
    full.apply(&x, &mut g);
    let grad_sq: f64 = g.chunks(n).map(|c| weighted_dot(w, c, c)).sum();
    let mut e = match source {
        StrainSource::Full => g,
        StrainSource::Simplified => {
            let mut f = vec![0.0; 9 * n];
            ShellOperator::new(patch, grid, GradientKind::Simplified)?.apply(&x, &mut f);
            f
        }
    };
    symmetrize(&mut e, n);
    let strain: f64 = e.chunks(n).map(|c| weighted_dot(w, c, c)).sum::<f64>().sqrt();
    let disp_sq: f64 = x.chunks(n).map(|c| weighted_dot(w, c, c)).sum();
    let normal = weighted_dot(w, &x[..n], &x[..n]).sqrt();
    if disp_sq == 0.0 {
        return Err(KornError::Degenerate("displacement field is identically zero".into()));
    }
    Ok(KornTerms { grad_sq, disp_sq, normal, strain, h: grid.h })
}

/// `|grad u|^2 / (|u_t| |e(u)| / h + |u|^2 + |e(u)|^2)`.
pub fn interp_quotient(u: &VecField3, patch: &SurfacePatch, source: StrainSource) -> Result<f64> {
    Ok(korn_terms(u, patch, source)?.interp_quotient())
}

/// `|grad u|^2 / ((|u|^2 + |e(u)|^2) / h)`.
pub fn second_quotient(u: &VecField3, patch: &SurfacePatch, source: StrainSource) -> Result<f64> {
    Ok(korn_terms(u, patch, source)?.second_quotient())
}

/// Relative strain residual of a rigid field at one resolution.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RigidLevel {
    pub nodes: usize,
    pub spacing: f64,
    /// `|e(grad u)| / |grad u|`
    pub residual: f64,
}

/// Rigid-motion residuals under refinement and the observed order.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RigidStudy {
    pub levels: Vec<RigidLevel>,
    /// Least-squares slope of `log residual` against `log spacing`; `None`
    /// when every residual is at rounding level (affine-exact patches).
    pub order: Option<f64>,
}

impl RigidStudy {
    /// Residuals at rounding level count as exact.
    pub const EXACT: f64 = 1e-12;

    pub fn passes(&self, min_order: f64) -> bool {
        match self.order {
            Some(o) => o >= min_order,
            None => self.levels.iter().all(|l| l.residual <= Self::EXACT),
        }
    }
}

/// Samples the rigid motion `a + B X` on cubic grids with `nodes` points per
/// axis for each entry of `nodes`, and measures the strain residual.
pub fn rigid_refinement(
    a: Vec3,
    b: [[f64; 3]; 3],
    patch: &SurfacePatch,
    h: f64,
    nodes: &[usize],
) -> Result<RigidStudy> {
    let mut levels = Vec::with_capacity(nodes.len());
    for &n in nodes {
        let grid = ShellGrid::new(patch, h, n, n, n)?;
        let u = rigid_motion_field(a, b, patch, &grid)?;
        let g = gradient(&u, patch)?;
        let gn = crate::grid_field::norm(&g, patch)?;
        if gn == 0.0 {
            return Err(KornError::Degenerate("rigid field has zero gradient (pure translation on a plate)".into()));
        }
        let residual = crate::grid_field::norm(&strain(&g), patch)? / gn;
        levels.push(RigidLevel { nodes: n, spacing: grid.max_spacing(), residual });
    }
    let order = if levels.iter().all(|l| l.residual <= RigidStudy::EXACT) || levels.len() < 2 {
        None
    } else {
        let n = levels.len() as f64;
        let xs: Vec<f64> = levels.iter().map(|l| l.spacing.ln()).collect();
        let ys: Vec<f64> = levels.iter().map(|l| l.residual.max(f64::MIN_POSITIVE).ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / sxx)
    };
    Ok(RigidStudy { levels, order })
}

/// `count` random rigid motions `(a, B)` with entries in `[-1, 1]`.
pub fn random_rigid_motions(seed: u64, count: usize) -> Vec<(Vec3, [[f64; 3]; 3])> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (p, q, r) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (a, [[0.0, -r, q], [r, 0.0, -p], [-q, p, 0.0]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{diff, norm, sample};
    use std::f64::consts::PI;

    fn cyl_grid(h: f64, n: usize) -> (SurfacePatch, ShellGrid) {
        let p = SurfacePatch::cylinder(1.0, PI, 1.0).unwrap();
        let g = ShellGrid::new(&p, h, 5, n, n).unwrap();
        (p, g)
    }

    fn const_field(g: &ShellGrid, c: [f64; 3]) -> VecField3 {
        VecField3::new(sample(|_, _, _| c[0], g), sample(|_, _, _| c[1], g), sample(|_, _, _| c[2], g)).unwrap()
    }

    #[test]
    fn radial_constant_on_unit_cylinder() {
        let (p, g) = cyl_grid(0.1, 7);
        let u = const_field(&g, [1.0, 0.0, 0.0]);
        let m = gradient(&u, &p).unwrap();
        let f = simplified_gradient(&u, &p).unwrap();
        for idx in 0..g.len() {
            let (t, _, _) = g.coords(idx);
            let a = m.at(idx);
            let b = f.at(idx);
            for i in 0..3 {
                for j in 0..3 {
                    if (i, j) == (1, 1) {
                        assert!((a[i][j] - 1.0 / (1.0 + t)).abs() < 1e-14);
                        assert!((b[i][j] - 1.0).abs() < 1e-14);
                    } else {
                        assert_eq!(a[i][j], 0.0);
                        assert_eq!(b[i][j], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn axial_translation_has_zero_gradient() {
        let (p, g) = cyl_grid(0.1, 6);
        let u = const_field(&g, [0.0, 0.0, 1.0]);
        let m = gradient(&u, &p).unwrap();
        assert!(m.entries().iter().all(|e| e.max_abs() < 1e-14));
    }

    #[test]
    fn plate_gradient_is_the_fd_jacobian() {
        let p = SurfacePatch::plate(1.3, 0.7).unwrap();
        let g = ShellGrid::new(&p, 0.2, 4, 6, 5).unwrap();
        let u = VecField3::new(
            sample(|t, th, z| (t * th).sin() + z * z, &g),
            sample(|t, th, z| t.exp() * th - z, &g),
            sample(|t, th, z| (th + z).cos() * t, &g),
        )
        .unwrap();
        let m = gradient(&u, &p).unwrap();
        assert_eq!(m, simplified_gradient(&u, &p).unwrap());
        for (i, c) in u.components().iter().enumerate() {
            for (j, a) in Axis::ALL.iter().enumerate() {
                assert_eq!(m.get(i, j), &diff(c, *a).unwrap());
            }
        }
    }

    #[test]
    fn too_thick_shell_is_rejected() {
        let p = SurfacePatch::cylinder(0.1, PI, 1.0).unwrap();
        let g = ShellGrid::new(&p, 0.15, 3, 4, 4).unwrap();
        assert!(matches!(gradient(&VecField3::zeros(&g), &p), Err(KornError::ShellTooThick { .. })));
    }

    #[test]
    fn strain_and_skew_decompose() {
        let (p, g) = cyl_grid(0.05, 5);
        let u = VecField3::new(
            sample(|t, th, z| th.sin() * z + t, &g),
            sample(|t, th, _| t * th, &g),
            sample(|_, th, z| z * th * th, &g),
        )
        .unwrap();
        let m = gradient(&u, &p).unwrap();
        let e = strain(&m);
        let w = skew_part(&m);
        let sum = e.add(&w).unwrap();
        for (a, b) in sum.entries().iter().zip(m.entries()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
            }
        }
        assert!(strain(&w).entries().iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(strain(&e), e);
        assert!(norm(&e, &p).unwrap() <= norm(&m, &p).unwrap());
    }

    #[test]
    fn rotation_about_the_cylinder_axis() {
        let (p, g) = cyl_grid(0.1, 5);
        let b = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let u = rigid_motion_field([0.0; 3], b, &p, &g).unwrap();
        for idx in 0..g.len() {
            let (t, _, _) = g.coords(idx);
            assert!((u.theta.values()[idx] - (1.0 + t)).abs() < 1e-14);
            assert!(u.t.values()[idx].abs() < 1e-14);
            assert!(u.z.values()[idx].abs() < 1e-14);
        }
        let bad = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(rigid_motion_field([0.0; 3], bad, &p, &g), Err(KornError::NotSkew(_))));
    }

    #[test]
    fn translation_on_plate_is_constant() {
        let p = SurfacePatch::plate(1.0, 1.0).unwrap();
        let g = ShellGrid::new(&p, 0.1, 3, 4, 4).unwrap();
        let u = rigid_motion_field([1.0, 2.0, 3.0], [[0.0; 3]; 3], &p, &g).unwrap();
        assert!(u.theta.values().iter().all(|&v| v == 1.0));
        assert!(u.z.values().iter().all(|&v| v == 2.0));
        assert!(u.t.values().iter().all(|&v| v == 3.0));
        assert_eq!(interp_quotient(&u, &p, StrainSource::Full).unwrap(), 0.0);
        assert_eq!(second_quotient(&u, &p, StrainSource::Full).unwrap(), 0.0);
    }

    #[test]
    fn zero_field_is_rejected() {
        let (p, g) = cyl_grid(0.1, 4);
        assert!(matches!(interp_quotient(&VecField3::zeros(&g), &p, StrainSource::Full), Err(KornError::Degenerate(_))));
    }

    #[test]
    fn transpose_is_the_adjoint() {
        let p = SurfacePatch::torus(2.0, 1.0, 1.0, 0.2, 1.0).unwrap();
        let g = ShellGrid::new(&p, 0.1, 3, 5, 4).unwrap();
        let op = ShellOperator::new(&p, &g, GradientKind::Full).unwrap();
        let n = g.len();
        let x: Vec<f64> = (0..3 * n).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let y: Vec<f64> = (0..9 * n).map(|i| ((i * 53 % 97) as f64 / 48.0) - 1.0).collect();
        let mut bx = vec![0.0; 9 * n];
        op.apply(&x, &mut bx);
        let mut bty = vec![0.0; 3 * n];
        op.apply_transpose_add(&y, &mut bty);
        let lhs: f64 = bx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&bty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
