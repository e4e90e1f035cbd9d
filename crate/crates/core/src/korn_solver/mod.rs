//! Discrete optimal Korn constants as generalized Rayleigh maxima.
//!
//! The discrete constant of an inequality `|grad u|^2 <= C D(u)` is the
//! largest `lambda` with `G x = lambda D x` over the finite-difference field
//! space. It bounds the continuum constant from below up to discretization.

mod eigen;
mod forms;
mod scaling;

pub use eigen::{max_rayleigh, pcg, EigResult, EigenOptions};
pub use forms::{
    assemble_forms, materialize, BlockJacobi, FormWeights, Identity, Preconditioner, QuadraticForm, ShellForm,
    ShellForms,
};
pub use scaling::{
    fit_scaling, parallel_map, sweep_constant, worker_count, ConstantKind, RunMetadata, ScalingFit, SweepPoint,
    SweepReport,
};

use serde::Serialize;

use crate::error::{KornError, Result};
use crate::grid_field::{ShellGrid, VecField3};
use crate::shell_ops::StrainSource;
use crate::surface::SurfacePatch;

/// Node counts used for every thickness of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridPolicy {
    pub n_t: usize,
    pub n_theta: usize,
    pub n_z: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { n_t: 8, n_theta: 48, n_z: 48 }
    }
}

impl GridPolicy {
    pub fn new(n_t: usize, n_theta: usize, n_z: usize) -> Self {
        Self { n_t, n_theta, n_z }
    }

    pub fn grid(&self, patch: &SurfacePatch, h: f64) -> Result<ShellGrid> {
        ShellGrid::new(patch, h, self.n_t, self.n_theta, self.n_z)
    }
}

/// A computed discrete constant with the data needed to audit it.
#[derive(Clone, Debug)]
pub struct ConstantEstimate {
    pub h: f64,
    /// The optimal constant of the inequality.
    pub constant: f64,
    /// Largest generalized eigenvalue behind it.
    pub lambda: f64,
    pub grid: ShellGrid,
    pub iterations: usize,
    pub residual: f64,
    /// Maximizing field, normalized in the denominator form.
    pub maximizer: VecField3,
    /// AM-GM splitting parameter at the optimum (interpolation constant only).
    pub s_opt: Option<f64>,
    /// Set when the scan over `s` found no interior peak.
    pub flat: bool,
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(KornError::InvalidParameter(format!("thickness h must be positive, got {h}")));
    }
    Ok(())
}

/// `C_2(h) = h * lambda_max(G, M + E)`.
pub fn korn_second_constant(
    patch: &SurfacePatch,
    h: f64,
    policy: &GridPolicy,
    opts: &EigenOptions,
) -> Result<ConstantEstimate> {
    check_h(h)?;
    let grid = policy.grid(patch, h)?;
    let forms = ShellForms::new(patch, &grid, StrainSource::Full)?;
    let g = ShellForm::new(forms.clone(), FormWeights::G, "G");
    let d = ShellForm::new(forms.clone(), FormWeights::M_PLUS_E, "M+E");
    let pre = forms.block_jacobi(FormWeights::M_PLUS_E)?;
    let r = max_rayleigh(&g, &d, &pre, opts, None)?;
    Ok(ConstantEstimate {
        h,
        constant: h * r.lambda,
        lambda: r.lambda,
        maximizer: VecField3::from_dofs(&grid, &r.vector)?,
        grid,
        iterations: r.iterations,
        residual: r.residual,
        s_opt: None,
        flat: false,
    })
}

/// Weights of `D_s = s/(2h) N_t + 1/(2 s h) E + M + E`.
pub fn split_weights(s: f64, h: f64) -> FormWeights {
    FormWeights { g: 0.0, m: 1.0, e: 1.0 + 1.0 / (2.0 * s * h), n: s / (2.0 * h) }
}

const LOG_S_RANGE: (f64, f64) = (-20.0, 20.0);
const SCAN_POINTS: usize = 9;
const GOLDEN_WIDTH: f64 = 1e-2;

/// Optimal constant of `|grad u|^2 <= C (|u_t| |e| / h + |u|^2 + |e|^2)`.
///
/// Since `|u_t||e|/h = min_s (s |u_t|^2 + |e|^2 / s) / (2h)`, the constant is
/// `sup_s lambda_max(G, D_s)`. The supremum over `log s` is bracketed by a
/// coarse scan and refined by golden-section search, each evaluation warm
/// started from the previous Ritz block.
pub fn korn_interp_constant(
    patch: &SurfacePatch,
    h: f64,
    policy: &GridPolicy,
    opts: &EigenOptions,
) -> Result<ConstantEstimate> {
    check_h(h)?;
    let grid = policy.grid(patch, h)?;
    let forms = ShellForms::new(patch, &grid, StrainSource::Full)?;
    let g = ShellForm::new(forms.clone(), FormWeights::G, "G");
    let mut block: Option<Vec<Vec<f64>>> = None;
    let mut evals = 0usize;
    let mut eval = |log_s: f64, block: &mut Option<Vec<Vec<f64>>>| -> Result<EigResult> {
        let w = split_weights(log_s.exp(), h);
        let d = ShellForm::new(forms.clone(), w, "D_s");
        let pre = forms.block_jacobi(w)?;
        let r = max_rayleigh(&g, &d, &pre, opts, block.as_deref())?;
        *block = Some(r.block.clone());
        evals += r.iterations;
        Ok(r)
    };

    let (lo, hi) = LOG_S_RANGE;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for k in 0..SCAN_POINTS {
        let x = lo + k as f64 * step;
        scan.push((x, eval(x, &mut block)?));
    }
    let best = (0..SCAN_POINTS)
        .max_by(|&a, &b| scan[a].1.lambda.partial_cmp(&scan[b].1.lambda).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let (lmin, lmax) = scan.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), (_, r)| (a.min(r.lambda), b.max(r.lambda)));
    let flat = best == 0 || best + 1 == SCAN_POINTS || (lmax - lmin) <= opts.tol * lmax;

    let mut a = scan[best.saturating_sub(1)].0;
    let mut b = scan[(best + 1).min(SCAN_POINTS - 1)].0;
    let mut top = scan[best].clone();
    if a == b {
        return Err(KornError::Bracket("scan produced an empty bracket".into()));
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1, &mut block)?;
    let mut f2 = eval(x2, &mut block)?;
    while b - a > GOLDEN_WIDTH {
        if f1.lambda >= f2.lambda {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1, &mut block)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2, &mut block)?;
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1.lambda > top.1.lambda {
            top = cand;
        }
    }
    let (log_s, r) = top;
    Ok(ConstantEstimate {
        h,
        constant: r.lambda,
        lambda: r.lambda,
        maximizer: VecField3::from_dofs(&grid, &r.vector)?,
        grid,
        iterations: evals,
        residual: r.residual,
        s_opt: Some(log_s.exp()),
        flat,
    })
}
