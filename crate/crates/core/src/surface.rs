//! Mid-surface patches in principal coordinates.
//!
//! A patch is described by its Lamé coefficients `A_theta = |dr/dtheta|`,
//! `A_z = |dr/dz|`, its principal curvatures and (for the built-ins) an exact
//! embedding. The parameter domain is `theta in [0, omega]`,
//! `z in [z_lo, z_hi]`.
//!
//! Sign convention: the unit normal `n` is chosen so that
//! `dn/dtheta = kappa_theta * A_theta * e_theta` and
//! `dn/dz = kappa_z * A_z * e_z`. With this choice the metric factor at depth
//! `t` along `n` is `A (1 + t kappa)`, which is what the shell gradient uses.
//! For the cylinder, the sphere band and the torus the normal points away from
//! the centres of curvature (outward), and the curvatures are positive on the
//! convex parts.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{KornError, Result};

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
pub(crate) fn norm3(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Scalar coefficient function of the surface parameters `(theta, z)`.
pub type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Raw coefficient functions for a user-defined patch.
///
/// No Gauss-Codazzi compatibility check is made; the shell operators only
/// consume the coefficients. When the two cross-derivatives are omitted they
/// are approximated by central differences of the supplied functions.
#[derive(Clone)]
pub struct CustomCoefficients {
    pub a_theta: CoefFn,
    pub a_z: CoefFn,
    pub kappa_theta: CoefFn,
    pub kappa_z: CoefFn,
    /// `dA_theta/dz`
    pub da_theta_dz: Option<CoefFn>,
    /// `dA_z/dtheta`
    pub da_z_dtheta: Option<CoefFn>,
}

impl fmt::Debug for CustomCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCoefficients")
            .field("da_theta_dz", &self.da_theta_dz.is_some())
            .field("da_z_dtheta", &self.da_z_dtheta.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Plate,
    Cylinder { radius: f64 },
    SphereBand { radius: f64 },
    Torus { major: f64, minor: f64 },
    Custom(CustomCoefficients),
}

/// Orthonormal local frame at a mid-surface point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub e_theta: Vec3,
    pub e_z: Vec3,
    pub n: Vec3,
}

/// A single principal-coordinate patch of a shell mid-surface.
///
/// Patches are immutable after construction and can be shared across threads.
#[derive(Clone, Debug)]
pub struct SurfacePatch {
    name: String,
    shape: Shape,
    omega: f64,
    z_lo: f64,
    z_hi: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(KornError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

const FD_STEP: f64 = 1e-5;

fn central(f: &CoefFn, th: f64, z: f64, along_theta: bool) -> f64 {
    if along_theta {
        (f(th + FD_STEP, z) - f(th - FD_STEP, z)) / (2.0 * FD_STEP)
    } else {
        (f(th, z + FD_STEP) - f(th, z - FD_STEP)) / (2.0 * FD_STEP)
    }
}

impl SurfacePatch {
    /// Flat sheet `r = (theta, z, 0)` over `[0, width_theta] x [0, width_z]`.
    pub fn plate(width_theta: f64, width_z: f64) -> Result<Self> {
        positive("plate width_theta", width_theta)?;
        positive("plate width_z", width_z)?;
        Ok(Self { name: "plate".into(), shape: Shape::Plate, omega: width_theta, z_lo: 0.0, z_hi: width_z })
    }

    /// Circular cylinder `r = (R cos theta, R sin theta, z)`, `z in [0, length]`.
    ///
    /// Outward normal, `kappa_theta = 1/R`, `kappa_z = 0`.
    pub fn cylinder(radius: f64, omega: f64, length: f64) -> Result<Self> {
        positive("cylinder radius", radius)?;
        positive("cylinder omega", omega)?;
        positive("cylinder length", length)?;
        Ok(Self { name: "cylinder".into(), shape: Shape::Cylinder { radius }, omega, z_lo: 0.0, z_hi: length })
    }

    /// Sphere band with `theta` the longitude and `z` the colatitude in
    /// `[phi1, phi2]`. Both curvatures equal `1/R` with the outward normal.
    pub fn sphere_band(radius: f64, phi1: f64, phi2: f64, omega: f64) -> Result<Self> {
        positive("sphere radius", radius)?;
        positive("sphere omega", omega)?;
        if !(phi1 > 0.0 && phi1 < phi2 && phi2 < std::f64::consts::PI) {
            return Err(KornError::InvalidParameter(format!(
                "sphere band [{phi1}, {phi2}] must satisfy 0 < phi1 < phi2 < pi (poles excluded)"
            )));
        }
        Ok(Self { name: "sphere".into(), shape: Shape::SphereBand { radius }, omega, z_lo: phi1, z_hi: phi2 })
    }

    /// Torus patch: `theta in [0, omega]` runs along the major circle, `z` is
    /// the minor angle in `[phi1, phi2]`.
    ///
    /// `kappa_theta = cos z / (R + r cos z)`, `kappa_z = 1/r`.
    pub fn torus(major: f64, minor: f64, omega: f64, phi1: f64, phi2: f64) -> Result<Self> {
        positive("torus minor radius", minor)?;
        positive("torus omega", omega)?;
        if !(major > minor) {
            return Err(KornError::InvalidParameter(format!(
                "torus needs major radius > minor radius, got R = {major}, r = {minor}"
            )));
        }
        if !(phi1.is_finite() && phi2.is_finite() && phi1 < phi2) {
            return Err(KornError::InvalidParameter(format!("torus minor range [{phi1}, {phi2}] is empty")));
        }
        Ok(Self { name: "torus".into(), shape: Shape::Torus { major, minor }, omega, z_lo: phi1, z_hi: phi2 })
    }

    /// User-defined patch from raw coefficient functions (no embedding).
    pub fn custom(name: &str, coefficients: CustomCoefficients, omega: f64, z_lo: f64, z_hi: f64) -> Result<Self> {
        positive("custom omega", omega)?;
        if !(z_lo.is_finite() && z_hi.is_finite() && z_hi > z_lo) {
            return Err(KornError::InvalidParameter(format!("z-range [{z_lo}, {z_hi}] is empty")));
        }
        let patch = Self { name: name.to_string(), shape: Shape::Custom(coefficients), omega, z_lo, z_hi };
        // cheap sanity pass: the Lamé coefficients must be positive on the domain
        for i in 0..=8 {
            for j in 0..=8 {
                let th = omega * i as f64 / 8.0;
                let z = z_lo + (z_hi - z_lo) * j as f64 / 8.0;
                let (at, az) = (patch.a_theta(th, z), patch.a_z(th, z));
                if !(at > 0.0 && az > 0.0) {
                    return Err(KornError::InvalidParameter(format!(
                        "Lamé coefficients must be positive, got A_theta = {at}, A_z = {az} at ({th}, {z})"
                    )));
                }
            }
        }
        Ok(patch)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn z_lo(&self) -> f64 {
        self.z_lo
    }

    pub fn z_hi(&self) -> f64 {
        self.z_hi
    }

    pub fn z_width(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    pub fn has_embedding(&self) -> bool {
        !matches!(self.shape, Shape::Custom(_))
    }

    /// Numeric parameters of the patch, for reports.
    pub fn descriptor(&self) -> PatchDescriptor {
        let (radius, major, minor) = match self.shape {
            Shape::Cylinder { radius } | Shape::SphereBand { radius } => (Some(radius), None, None),
            Shape::Torus { major, minor } => (None, Some(major), Some(minor)),
            _ => (None, None, None),
        };
        PatchDescriptor { name: self.name.clone(), radius, major, minor, omega: self.omega, z_lo: self.z_lo, z_hi: self.z_hi }
    }

    pub fn a_theta(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Plate => 1.0,
            Shape::Cylinder { radius } => *radius,
            Shape::SphereBand { radius } => radius * z.sin(),
            Shape::Torus { major, minor } => major + minor * z.cos(),
            Shape::Custom(c) => (c.a_theta)(th, z),
        }
    }

    pub fn a_z(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Plate | Shape::Cylinder { .. } => 1.0,
            Shape::SphereBand { radius } => *radius,
            Shape::Torus { minor, .. } => *minor,
            Shape::Custom(c) => (c.a_z)(th, z),
        }
    }

    pub fn kappa_theta(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Plate => 0.0,
            Shape::Cylinder { radius } | Shape::SphereBand { radius } => 1.0 / radius,
            Shape::Torus { major, minor } => z.cos() / (major + minor * z.cos()),
            Shape::Custom(c) => (c.kappa_theta)(th, z),
        }
    }

    pub fn kappa_z(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Plate | Shape::Cylinder { .. } => 0.0,
            Shape::SphereBand { radius } => 1.0 / radius,
            Shape::Torus { minor, .. } => 1.0 / minor,
            Shape::Custom(c) => (c.kappa_z)(th, z),
        }
    }

    /// `dA_theta/dz`
    pub fn da_theta_dz(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Plate | Shape::Cylinder { .. } => 0.0,
            Shape::SphereBand { radius } => radius * z.cos(),
            Shape::Torus { minor, .. } => -minor * z.sin(),
            Shape::Custom(c) => match &c.da_theta_dz {
                Some(f) => f(th, z),
                None => central(&c.a_theta, th, z, false),
            },
        }
    }

    /// `dA_z/dtheta`
    pub fn da_z_dtheta(&self, th: f64, z: f64) -> f64 {
        match &self.shape {
            Shape::Custom(c) => match &c.da_z_dtheta {
                Some(f) => f(th, z),
                None => central(&c.a_z, th, z, true),
            },
            _ => 0.0,
        }
    }

    /// Mid-surface point `r(theta, z)`.
    pub fn embedding(&self, th: f64, z: f64) -> Option<Vec3> {
        match &self.shape {
            Shape::Plate => Some([th, z, 0.0]),
            Shape::Cylinder { radius } => Some([radius * th.cos(), radius * th.sin(), z]),
            Shape::SphereBand { radius } => {
                Some([radius * z.sin() * th.cos(), radius * z.sin() * th.sin(), radius * z.cos()])
            }
            Shape::Torus { major, minor } => {
                let rho = major + minor * z.cos();
                Some([rho * th.cos(), rho * th.sin(), minor * z.sin()])
            }
            Shape::Custom(_) => None,
        }
    }

    /// Local frame `(e_theta, e_z, n)` at `(theta, z)`.
    ///
    /// On the plate `n = e_theta x e_z`; on the sphere band the outward
    /// normal makes the triple left-handed. Only orthonormality is relied on.
    pub fn frame(&self, th: f64, z: f64) -> Result<Frame> {
        let (s, c) = th.sin_cos();
        match &self.shape {
            Shape::Plate => Ok(Frame { e_theta: [1.0, 0.0, 0.0], e_z: [0.0, 1.0, 0.0], n: [0.0, 0.0, 1.0] }),
            Shape::Cylinder { .. } => Ok(Frame { e_theta: [-s, c, 0.0], e_z: [0.0, 0.0, 1.0], n: [c, s, 0.0] }),
            Shape::SphereBand { .. } => {
                let (sz, cz) = z.sin_cos();
                Ok(Frame { e_theta: [-s, c, 0.0], e_z: [cz * c, cz * s, -sz], n: [sz * c, sz * s, cz] })
            }
            Shape::Torus { .. } => {
                let (sz, cz) = z.sin_cos();
                Ok(Frame { e_theta: [-s, c, 0.0], e_z: [-sz * c, -sz * s, cz], n: [cz * c, cz * s, sz] })
            }
            Shape::Custom(_) => Err(KornError::NoEmbedding(self.name.clone())),
        }
    }

    /// Largest `|kappa|` over a uniform sample of the domain.
    pub fn max_abs_curvature(&self, resolution: usize) -> f64 {
        let res = resolution.max(2);
        let mut k: f64 = 0.0;
        for i in 0..res {
            for j in 0..res {
                let (th, z) = self.sample_point(i, j, res);
                k = k.max(self.kappa_theta(th, z).abs()).max(self.kappa_z(th, z).abs());
            }
        }
        k
    }

    fn sample_point(&self, i: usize, j: usize, res: usize) -> (f64, f64) {
        let th = self.omega * i as f64 / (res - 1) as f64;
        let z = self.z_lo + self.z_width() * j as f64 / (res - 1) as f64;
        (th, z)
    }
}

/// Serializable summary of a patch.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PatchDescriptor {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub major: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minor: Option<f64>,
    pub omega: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

/// The geometric constants the Korn constants depend on.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct MidSurfaceParams {
    /// `min(A_theta, A_z)` over the domain.
    pub a: f64,
    /// `|A_theta|_{W^{2,inf}} + |A_z|_{W^{2,inf}}`.
    pub lame_norm: f64,
    /// `|kappa_theta|_{W^{1,inf}} + |kappa_z|_{W^{1,inf}}`.
    pub curvature_norm: f64,
    /// Minimal z-width.
    pub l: f64,
    /// Maximal z-width.
    pub big_l: f64,
    /// `|z_lo|_{W^{1,inf}} + |z_hi|_{W^{1,inf}}`; constant bounds make this `|z_lo| + |z_hi|`.
    pub z_norm: f64,
    pub omega: f64,
}

/// Sampled mid-surface parameters on a `resolution x resolution` grid.
///
/// Sup-norms of derivatives are taken from central differences of the
/// coefficient functions at each sample point; `W^{m,inf}` norms use the
/// maximum over all partial derivatives of order `<= m`.
pub fn mid_surface_params(patch: &SurfacePatch, resolution: usize) -> Result<MidSurfaceParams> {
    if resolution < 2 {
        return Err(KornError::InvalidParameter("sampling resolution must be >= 2".into()));
    }
    let d = 1e-4;
    let w2 = |f: &dyn Fn(f64, f64) -> f64, th: f64, z: f64| -> f64 {
        let f0 = f(th, z);
        let ft = (f(th + d, z) - f(th - d, z)) / (2.0 * d);
        let fz = (f(th, z + d) - f(th, z - d)) / (2.0 * d);
        let ftt = (f(th + d, z) - 2.0 * f0 + f(th - d, z)) / (d * d);
        let fzz = (f(th, z + d) - 2.0 * f0 + f(th, z - d)) / (d * d);
        let ftz = (f(th + d, z + d) - f(th + d, z - d) - f(th - d, z + d) + f(th - d, z - d)) / (4.0 * d * d);
        [f0, ft, fz, ftt, fzz, ftz].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let w1 = |f: &dyn Fn(f64, f64) -> f64, th: f64, z: f64| -> f64 {
        let ft = (f(th + d, z) - f(th - d, z)) / (2.0 * d);
        let fz = (f(th, z + d) - f(th, z - d)) / (2.0 * d);
        f(th, z).abs().max(ft.abs()).max(fz.abs())
    };
    let at = |th: f64, z: f64| patch.a_theta(th, z);
    let az = |th: f64, z: f64| patch.a_z(th, z);
    let kt = |th: f64, z: f64| patch.kappa_theta(th, z);
    let kz = |th: f64, z: f64| patch.kappa_z(th, z);

    let mut a = f64::INFINITY;
    let (mut nat, mut naz, mut nkt, mut nkz) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..resolution {
        for j in 0..resolution {
            let (th, z) = patch.sample_point(i, j, resolution);
            a = a.min(at(th, z)).min(az(th, z));
            nat = nat.max(w2(&at, th, z));
            naz = naz.max(w2(&az, th, z));
            nkt = nkt.max(w1(&kt, th, z));
            nkz = nkz.max(w1(&kz, th, z));
        }
    }
    // derivatives of exactly constant coefficients come out as rounding noise
    let clean = |v: f64| if v < 1e-7 { 0.0 } else { v };
    Ok(MidSurfaceParams {
        a,
        lame_norm: clean(nat) + clean(naz),
        curvature_norm: clean(nkt) + clean(nkz),
        l: patch.z_width(),
        big_l: patch.z_width(),
        z_norm: patch.z_lo.abs() + patch.z_hi.abs(),
        omega: patch.omega,
    })
}
