//! Largest generalized eigenpairs of `(G, D)` without factorizing either form.
//!
//! The outer iteration is a block locally optimal conjugate-direction method:
//! the search space at every step is `[X, T R, P]` where `R = G X - D X L` is
//! the block residual, `T` an approximate `D^{-1}` built from a few
//! preconditioned conjugate-gradient sweeps on `D`, and `P` the previous
//! search direction. Rayleigh-Ritz on that space keeps the top `m` Ritz pairs.
//! Columns whose residual is already below tolerance are locked (no new
//! direction is generated for them).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::forms::{dot, Preconditioner, QuadraticForm};
use crate::error::{KornError, Result};

/// Tuning knobs for [`max_rayleigh`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenOptions {
    /// Relative change of the top eigenvalue between iterations.
    pub tol: f64,
    /// Relative residual `|G x - lambda D x|_T / lambda` required for the top pair.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub block_size: usize,
    /// Relative tolerance of the inner conjugate-gradient solves with `D`.
    pub inner_tol: f64,
    /// Inner sweeps per preconditioner application (0 uses the bare preconditioner).
    pub inner_max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            residual_tol: 1e-4,
            max_iter: 500,
            seed: 42,
            block_size: 8,
            inner_tol: 1e-8,
            inner_max_iter: 20,
        }
    }
}

/// Top generalized eigenpair and diagnostics.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub lambda: f64,
    /// Maximizer, normalized so that `<x, D x> = 1`.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `|G x - lambda D x|_{D^{-1}} / lambda`.
    pub residual: f64,
    /// Ritz values of the final block, descending.
    pub ritz: Vec<f64>,
    /// Final Ritz block, usable as a warm start.
    pub block: Vec<Vec<f64>>,
}

/// Preconditioned conjugate gradients for `D x = b`.
///
/// Returns the solution, the iteration count and the final relative residual.
pub fn pcg(
    d: &dyn QuadraticForm,
    b: &[f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        d.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(KornError::Breakdown(format!("<p, D p> = {pap:e} in conjugate gradients")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok((x, it, rel));
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((x, max_iter, rel))
}

/// A fixed number of preconditioned CG sweeps on `D`, used as `T ~ D^{-1}`.
struct InnerSolve<'a> {
    d: &'a dyn QuadraticForm,
    precond: &'a dyn Preconditioner,
    tol: f64,
    max_iter: usize,
}

impl Preconditioner for InnerSolve<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        if self.max_iter == 0 {
            self.precond.apply(r, z);
            return;
        }
        match pcg(self.d, r, self.precond, self.tol, self.max_iter) {
            Ok((x, _, _)) => z.copy_from_slice(&x),
            // an indefinite direction can only come from rounding; fall back
            Err(_) => self.precond.apply(r, z),
        }
    }
}

fn combine(basis: &[&Vec<f64>], coef: &DMatrix<f64>, col: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for i in rows {
        let c = coef[(i, col)];
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(basis[i].iter()) {
                *o += c * v;
            }
        }
    }
    out
}

fn gram(a: &[&Vec<f64>], b: &[&Vec<f64>]) -> DMatrix<f64> {
    let k = a.len();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = 0.5 * (dot(a[i], b[j]) + dot(a[j], b[i]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Rayleigh-Ritz on the span of `s`: returns the top `m` coefficient columns
/// (D-orthonormal combinations) and their Ritz values, descending.
fn rayleigh_ritz(s: &[&Vec<f64>], gs: &[&Vec<f64>], ds: &[&Vec<f64>], m: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = s.len();
    let gb = gram(s, ds);
    let ga = gram(s, gs);
    let scale: Vec<f64> = (0..k).map(|i| if gb[(i, i)] > 0.0 { 1.0 / gb[(i, i)].sqrt() } else { 0.0 }).collect();
    let mut gbs = gb.clone();
    let mut gas = ga.clone();
    for i in 0..k {
        for j in 0..k {
            gbs[(i, j)] *= scale[i] * scale[j];
            gas[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eb = SymmetricEigen::new(gbs);
    let smax = eb.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Err(KornError::Breakdown("search space collapsed".into()));
    }
    let keep: Vec<usize> = (0..k).filter(|&i| eb.eigenvalues[i] > 1e-10 * smax).collect();
    let r = keep.len();
    // Q = diag(scale) V_keep Sigma^{-1/2}
    let mut q = DMatrix::zeros(k, r);
    for (c, &i) in keep.iter().enumerate() {
        let f = 1.0 / eb.eigenvalues[i].sqrt();
        for row in 0..k {
            q[(row, c)] = scale[row] * eb.eigenvectors[(row, i)] * f;
        }
    }
    let unscaled_q = {
        let mut u = q.clone();
        for row in 0..k {
            if scale[row] != 0.0 {
                for c in 0..r {
                    u[(row, c)] /= scale[row];
                }
            }
        }
        u
    };
    let h = unscaled_q.transpose() * &gas * &unscaled_q;
    let h = 0.5 * (&h + h.transpose());
    let eh = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eh.eigenvalues[b].partial_cmp(&eh.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let m = m.min(r);
    let mut u = DMatrix::zeros(r, m);
    let mut vals = Vec::with_capacity(m);
    for (c, &i) in order.iter().take(m).enumerate() {
        vals.push(eh.eigenvalues[i]);
        for row in 0..r {
            u[(row, c)] = eh.eigenvectors[(row, i)];
        }
    }
    Ok((q * u, vals))
}

/// Largest generalized eigenvalue of `(G, D)` for `D` positive definite.
///
/// `precond` approximates `D^{-1}`; deterministic for a fixed seed and start.
pub fn max_rayleigh(
    g: &dyn QuadraticForm,
    d: &dyn QuadraticForm,
    precond: &dyn Preconditioner,
    opts: &EigenOptions,
    start: Option<&[Vec<f64>]>,
) -> Result<EigResult> {
    let n = g.dim();
    if d.dim() != n {
        return Err(KornError::InvalidParameter("forms have different dimensions".into()));
    }
    let m = opts.block_size.max(1).min((n / 3).max(1));
    let t = InnerSolve { d, precond, tol: opts.inner_tol, max_iter: opts.inner_max_iter };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(m);
    if let Some(st) = start {
        x.extend(st.iter().take(m).filter(|v| v.len() == n).cloned());
    }
    while x.len() < m {
        x.push((0..n).map(|_| rng.gen::<f64>() - 0.5).collect());
    }
    let apply_all = |f: &dyn QuadraticForm, v: &[Vec<f64>]| -> Vec<Vec<f64>> {
        v.iter()
            .map(|vi| {
                let mut y = vec![0.0; n];
                f.apply(vi, &mut y);
                y
            })
            .collect()
    };

    let mut gx = apply_all(g, &x);
    let mut dx = apply_all(d, &x);
    let (c, mut lambdas) = {
        let s: Vec<&Vec<f64>> = x.iter().collect();
        let gs: Vec<&Vec<f64>> = gx.iter().collect();
        let ds: Vec<&Vec<f64>> = dx.iter().collect();
        rayleigh_ritz(&s, &gs, &ds, m)?
    };
    let upd = |basis: &[Vec<f64>], c: &DMatrix<f64>| -> Vec<Vec<f64>> {
        let refs: Vec<&Vec<f64>> = basis.iter().collect();
        (0..c.ncols()).map(|j| combine(&refs, c, j, 0..c.nrows())).collect()
    };
    x = upd(&x, &c);
    gx = upd(&gx, &c);
    dx = upd(&dx, &c);
    let mut m = x.len();

    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut gp: Vec<Vec<f64>> = Vec::new();
    let mut dp: Vec<Vec<f64>> = Vec::new();
    let mut prev = lambdas[0];
    let mut last_res = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        // residuals and preconditioned directions
        let mut w: Vec<Vec<f64>> = Vec::new();
        let mut top_res = f64::INFINITY;
        for j in 0..m {
            let r: Vec<f64> = gx[j].iter().zip(&dx[j]).map(|(a, b)| a - lambdas[j] * b).collect();
            let mut z = vec![0.0; n];
            t.apply(&r, &mut z);
            let res = dot(&r, &z).abs().sqrt() / lambdas[j].abs().max(f64::MIN_POSITIVE);
            if j == 0 {
                top_res = res;
            }
            if res > opts.residual_tol {
                w.push(z);
            }
        }
        last_res = top_res;
        let change = (lambdas[0] - prev).abs() / lambdas[0].abs().max(f64::MIN_POSITIVE);
        if top_res <= opts.residual_tol && (iter > 1 && change <= opts.tol || top_res == 0.0 || w.is_empty()) {
            return finish(g, d, precond, opts, x, lambdas, iter);
        }
        prev = lambdas[0];
        if w.is_empty() {
            return finish(g, d, precond, opts, x, lambdas, iter);
        }
        let gw = apply_all(g, &w);
        let dw = apply_all(d, &w);

        let (nx, nw) = (x.len(), w.len());
        let s: Vec<&Vec<f64>> = x.iter().chain(&w).chain(&p).collect();
        let gs: Vec<&Vec<f64>> = gx.iter().chain(&gw).chain(&gp).collect();
        let ds: Vec<&Vec<f64>> = dx.iter().chain(&dw).chain(&dp).collect();
        let (c, vals) = rayleigh_ritz(&s, &gs, &ds, m)?;
        let k = s.len();
        let new_x: Vec<Vec<f64>> = (0..c.ncols()).map(|j| combine(&s, &c, j, 0..k)).collect();
        let new_gx: Vec<Vec<f64>> = (0..c.ncols()).map(|j| combine(&gs, &c, j, 0..k)).collect();
        let new_dx: Vec<Vec<f64>> = (0..c.ncols()).map(|j| combine(&ds, &c, j, 0..k)).collect();
        p = (0..c.ncols()).map(|j| combine(&s, &c, j, nx..k)).collect();
        gp = (0..c.ncols()).map(|j| combine(&gs, &c, j, nx..k)).collect();
        dp = (0..c.ncols()).map(|j| combine(&ds, &c, j, nx..k)).collect();
        let _ = nw;
        x = new_x;
        m = x.len();
        lambdas = vals;
        if iter % 20 == 0 {
            // refresh the images to stop rounding drift of the running updates
            gx = apply_all(g, &x);
            dx = apply_all(d, &x);
        } else {
            gx = new_gx;
            dx = new_dx;
        }
    }
    Err(KornError::NoConvergence { iterations: opts.max_iter, residual: last_res })
}

fn finish(
    g: &dyn QuadraticForm,
    d: &dyn QuadraticForm,
    precond: &dyn Preconditioner,
    opts: &EigenOptions,
    x: Vec<Vec<f64>>,
    lambdas: Vec<f64>,
    iterations: usize,
) -> Result<EigResult> {
    let n = g.dim();
    let mut v = x[0].clone();
    let mut dv = vec![0.0; n];
    d.apply(&v, &mut dv);
    let scale = 1.0 / dot(&v, &dv).sqrt();
    v.iter_mut().for_each(|a| *a *= scale);
    let mut gv = vec![0.0; n];
    g.apply(&v, &mut gv);
    d.apply(&v, &mut dv);
    let lambda = dot(&v, &gv);
    let r: Vec<f64> = gv.iter().zip(&dv).map(|(a, b)| a - lambda * b).collect();
    let (y, _, _) = pcg(d, &r, precond, opts.inner_tol, 20 * n.min(5000))?;
    let residual = dot(&r, &y).abs().sqrt() / lambda.abs().max(f64::MIN_POSITIVE);
    Ok(EigResult { lambda, vector: v, iterations, residual, ritz: lambdas, block: x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::korn_solver::forms::Identity;

    /// Dense symmetric form for tests.
    struct Dense(DMatrix<f64>);

    impl QuadraticForm for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let v = &self.0 * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
        fn label(&self) -> String {
            "dense".into()
        }
    }

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identical_forms_give_one() {
        let d = Dense(spd(30, 1));
        let r = max_rayleigh(&d, &d, &Identity, &EigenOptions::default(), None).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_form_gives_scale() {
        let a = spd(30, 2);
        let d = Dense(a.clone());
        let g = Dense(a * 2.0);
        let r = max_rayleigh(&g, &d, &Identity, &EigenOptions::default(), None).unwrap();
        assert!((r.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_generalized_eigensolve() {
        let n = 60;
        let gm = spd(n, 3);
        let dm = spd(n, 4);
        let opts = EigenOptions { residual_tol: 1e-9, ..Default::default() };
        let r = max_rayleigh(&Dense(gm.clone()), &Dense(dm.clone()), &Identity, &opts, None).unwrap();
        let l = dm.cholesky().unwrap().l();
        let li = l.clone().try_inverse().unwrap();
        let c = &li * gm * li.transpose();
        let top = SymmetricEigen::new(c).eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        assert!((r.lambda - top).abs() <= 1e-9 * top, "{} vs {}", r.lambda, top);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn same_seed_same_bits() {
        let gm = Dense(spd(40, 5));
        let dm = Dense(spd(40, 6));
        let o = EigenOptions::default();
        let a = max_rayleigh(&gm, &dm, &Identity, &o, None).unwrap();
        let b = max_rayleigh(&gm, &dm, &Identity, &o, None).unwrap();
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let a = spd(25, 7);
        let x_true: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
        let b = (&a * nalgebra::DVector::from_column_slice(&x_true)).as_slice().to_vec();
        let (x, _, rel) = pcg(&Dense(a), &b, &Identity, 1e-12, 200).unwrap();
        assert!(rel <= 1e-12);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn pcg_reports_breakdown_on_indefinite() {
        let mut a = DMatrix::identity(4, 4);
        a[(0, 0)] = -1.0;
        assert!(matches!(pcg(&Dense(a), &[1.0, 0.0, 0.0, 0.0], &Identity, 1e-10, 10), Err(KornError::Breakdown(_))));
    }
}
