//! Kirchhoff-type displacement fields oscillating at scale `sqrt(h)` in
//! `theta`, which realize the `h`-scaling of both Korn inequalities.
//!
//! For a profile `W(x, y)`, periodic in `x`, the field is
//!
//! ```text
//! u_t     = W(theta / sqrt(h), z)
//! u_theta = -t W_x(theta / sqrt(h), z) / (A_theta sqrt(h))
//! u_z     = -t W_y(theta / sqrt(h), z) / A_z
//! ```
//!
//! with analytic partials of `W` throughout.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{KornError, Result};
use crate::grid_field::{ScalarField, ShellGrid, VecField3};
use crate::korn_solver::{parallel_map, SweepPoint, SweepReport};
use crate::shell_ops::{korn_terms, KornTerms, StrainSource};
use crate::surface::SurfacePatch;

pub type ProfileFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Theta nodes required per period `P sqrt(h)` of the oscillation.
pub const NODES_PER_PERIOD: usize = 32;

/// Smooth profile `W(x, y)`, `P`-periodic in `x`, with analytic partials.
#[derive(Clone)]
pub struct ProfileW {
    name: String,
    period: f64,
    w: ProfileFn,
    wx: ProfileFn,
    wy: ProfileFn,
}

impl fmt::Debug for ProfileW {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileW").field("name", &self.name).field("period", &self.period).finish()
    }
}

impl ProfileW {
    /// Validates periodicity and `W_x != 0` on a sample of `[0, P] x [y_lo, y_hi]`.
    pub fn new(name: &str, period: f64, y_range: (f64, f64), w: ProfileFn, wx: ProfileFn, wy: ProfileFn) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(KornError::InvalidProfile(format!("period must be positive, got {period}")));
        }
        let (y_lo, y_hi) = y_range;
        let (mut wmax, mut wxmax) = (0.0_f64, 0.0_f64);
        for i in 0..=16 {
            let x = period * i as f64 / 16.0;
            for j in 0..=16 {
                let y = y_lo + (y_hi - y_lo) * j as f64 / 16.0;
                let (a, b) = (w(x, y), w(x + period, y));
                if !(a.is_finite() && b.is_finite() && wx(x, y).is_finite() && wy(x, y).is_finite()) {
                    return Err(KornError::InvalidProfile(format!("'{name}' is not finite at ({x}, {y})")));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(KornError::InvalidProfile(format!("'{name}' is not {period}-periodic in x")));
                }
                wmax = wmax.max(a.abs());
                wxmax = wxmax.max(wx(x, y).abs());
            }
        }
        if !(wxmax > 1e-12 * wmax.max(1.0)) {
            return Err(KornError::InvalidProfile(format!("'{name}' has W_x identically zero")));
        }
        Ok(Self { name: name.to_string(), period, w, wx, wy })
    }

    /// `W(x, y) = sin(x) sin(pi (y - z_lo) / (z_hi - z_lo))`.
    pub fn default_for(patch: &SurfacePatch) -> Result<Self> {
        Self::named("default", patch)
    }

    /// Built-in profiles: `default`, `two-mode`, `cos-bump`, and `flat` (which
    /// has `W_x = 0` and is rejected).
    pub fn named(name: &str, patch: &SurfacePatch) -> Result<Self> {
        let (lo, width) = (patch.z_lo(), patch.z_width());
        let k = PI / width;
        let range = (patch.z_lo(), patch.z_hi());
        match name {
            "default" => Self::new(
                name,
                2.0 * PI,
                range,
                Arc::new(move |x, y| x.sin() * (k * (y - lo)).sin()),
                Arc::new(move |x, y| x.cos() * (k * (y - lo)).sin()),
                Arc::new(move |x, y| k * x.sin() * (k * (y - lo)).cos()),
            ),
            "two-mode" => Self::new(
                name,
                2.0 * PI,
                range,
                Arc::new(move |x, y| (x.sin() + 0.3 * (2.0 * x).sin()) * (k * (y - lo)).sin()),
                Arc::new(move |x, y| (x.cos() + 0.6 * (2.0 * x).cos()) * (k * (y - lo)).sin()),
                Arc::new(move |x, y| k * (x.sin() + 0.3 * (2.0 * x).sin()) * (k * (y - lo)).cos()),
            ),
            "cos-bump" => {
                let s = 4.0 / (width * width);
                Self::new(
                    name,
                    2.0 * PI,
                    range,
                    Arc::new(move |x, y| x.cos() * s * (y - lo) * (lo + width - y)),
                    Arc::new(move |x, y| -x.sin() * s * (y - lo) * (lo + width - y)),
                    Arc::new(move |x, y| x.cos() * s * (2.0 * lo + width - 2.0 * y)),
                )
            }
            "flat" => Self::new(
                name,
                2.0 * PI,
                range,
                Arc::new(move |_, y| (k * (y - lo)).sin()),
                Arc::new(|_, _| 0.0),
                Arc::new(move |_, y| k * (k * (y - lo)).cos()),
            ),
            other => Err(KornError::InvalidProfile(format!(
                "unknown profile '{other}' (expected default, two-mode, cos-bump)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn w(&self, x: f64, y: f64) -> f64 {
        (self.w)(x, y)
    }

    pub fn wx(&self, x: f64, y: f64) -> f64 {
        (self.wx)(x, y)
    }

    pub fn wy(&self, x: f64, y: f64) -> f64 {
        (self.wy)(x, y)
    }
}

/// Smallest `n_theta` giving [`NODES_PER_PERIOD`] nodes per oscillation period.
pub fn required_theta_nodes(profile: &ProfileW, omega: f64, h: f64) -> usize {
    let wavelength = profile.period * h.sqrt();
    ((omega / wavelength) * NODES_PER_PERIOD as f64).ceil() as usize + 1
}

/// Grid satisfying the resolution policy: 5 nodes across the thickness (the
/// field is linear in `t`), `n_theta` from [`required_theta_nodes`] and 65
/// nodes along `z`.
pub fn auto_grid(profile: &ProfileW, patch: &SurfacePatch, h: f64) -> Result<ShellGrid> {
    ShellGrid::new(patch, h, 5, required_theta_nodes(profile, patch.omega(), h), 65)
}

/// Samples the field on any grid, without the resolution check.
pub fn sample_ansatz(profile: &ProfileW, patch: &SurfacePatch, grid: &ShellGrid) -> Result<VecField3> {
    if grid.patch != patch.name() || grid.omega != patch.omega() {
        return Err(KornError::GridMismatch);
    }
    let h = grid.h;
    let sh = h.sqrt();
    let n = grid.len();
    let (mut ut, mut uth, mut uz) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for iz in 0..grid.n_z {
        let z = grid.z(iz);
        for ith in 0..grid.n_theta {
            let th = grid.theta(ith);
            let x = th / sh;
            let (w, wx, wy) = (profile.w(x, z), profile.wx(x, z), profile.wy(x, z));
            let (a_th, a_z) = (patch.a_theta(th, z), patch.a_z(th, z));
            for it in 0..grid.n_t {
                let t = grid.t(it);
                ut.push(w);
                uth.push(-t * wx / (a_th * sh));
                uz.push(-t * wy / a_z);
            }
        }
    }
    VecField3::new(
        ScalarField::from_values(grid, ut)?,
        ScalarField::from_values(grid, uth)?,
        ScalarField::from_values(grid, uz)?,
    )
}

/// Builds the field, refusing grids that under-resolve the `sqrt(h)` scale.
pub fn make_ansatz(profile: &ProfileW, patch: &SurfacePatch, grid: &ShellGrid, h: f64) -> Result<VecField3> {
    if grid.h != h {
        return Err(KornError::InvalidParameter(format!("grid thickness {} differs from h = {h}", grid.h)));
    }
    let need = required_theta_nodes(profile, grid.omega, h);
    if grid.n_theta < need {
        return Err(KornError::UnderResolved { have: grid.n_theta, need, per_period: NODES_PER_PERIOD });
    }
    sample_ansatz(profile, patch, grid)
}

/// Quotients of one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnsatzQuotients {
    pub interp: f64,
    pub second: f64,
    /// `h |grad u|^2 / (|u_t| |e(u)|)`
    pub diagnostic: f64,
    /// `|e(u)| / |grad u|`
    pub strain_ratio: f64,
    pub terms: KornTerms,
}

pub fn ansatz_quotients(u: &VecField3, patch: &SurfacePatch) -> Result<AnsatzQuotients> {
    let k = korn_terms(u, patch, StrainSource::Full)?;
    Ok(AnsatzQuotients {
        interp: k.interp_quotient(),
        second: k.second_quotient(),
        diagnostic: k.h * k.grad_sq / (k.normal * k.strain),
        strain_ratio: k.strain / k.grad_sq.sqrt(),
        terms: k,
    })
}

/// Grid choice for a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum AnsatzGrid {
    /// [`auto_grid`] at every thickness.
    Auto,
    /// Fixed node counts, checked against the resolution policy.
    Fixed { n_t: usize, n_theta: usize, n_z: usize },
}

/// Evaluates the field and its quotients for each `h` (in parallel) and fits
/// the scaling of each quotient. The main series is the interpolation
/// quotient; `second`, `diagnostic` and `strain_ratio` are extra series.
pub fn ansatz_sweep(patch: &SurfacePatch, profile: &ProfileW, hs: &[f64], grid: AnsatzGrid) -> Result<SweepReport> {
    let mut hs = hs.to_vec();
    if hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(KornError::InvalidParameter("thicknesses must be positive".into()));
    }
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let points = parallel_map(&hs, |&h| {
        let start = Instant::now();
        let g = match grid {
            AnsatzGrid::Auto => auto_grid(profile, patch, h)?,
            AnsatzGrid::Fixed { n_t, n_theta, n_z } => ShellGrid::new(patch, h, n_t, n_theta, n_z)?,
        };
        let u = make_ansatz(profile, patch, &g, h)?;
        let q = ansatz_quotients(&u, patch)?;
        let extra = BTreeMap::from([
            ("second".to_string(), q.second),
            ("diagnostic".to_string(), q.diagnostic),
            ("strain_ratio".to_string(), q.strain_ratio),
        ]);
        Ok((SweepPoint { h, value: q.interp, dims: g.dims(), extra }, start.elapsed().as_secs_f64()))
    })?;
    let settings = serde_json::json!({
        "profile": profile.name(),
        "period": profile.period(),
        "grid": grid,
        "nodes_per_period": NODES_PER_PERIOD,
    });
    SweepReport::new(
        "ansatz",
        patch.descriptor(),
        settings,
        points,
        &["second", "diagnostic", "strain_ratio"],
    )
}
