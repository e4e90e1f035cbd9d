//! Harmonic functions on thin rectangles `(0, h) x (0, b)` and the
//! gradient-separation, Hardy-type and distance-weighted estimates they obey.
//!
//! Norms are plain (unweighted) 2-D L² norms by the trapezoid rule.

use std::io::Write;

use serde::Serialize;

use crate::error::{KornError, Result};
use crate::grid_field::trapezoid_weights;
use crate::korn_solver::{fit_scaling, pcg, Identity, QuadraticForm};

/// The rectangle `(0, h) x (0, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub h: f64,
    pub b: f64,
}

impl Rect {
    pub fn new(h: f64, b: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(KornError::InvalidParameter(format!("rectangle sides must be positive, got {h} x {b}")));
        }
        Ok(Self { h, b })
    }

    /// Whether the rectangle is thin enough for the gradient-separation bound.
    pub fn is_thin(&self) -> bool {
        self.b > 3.0 * self.h
    }

    /// Distance from `(x, y)` to the boundary.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        x.min(self.h - x).min(y).min(self.b - y).max(0.0)
    }
}

/// Uniform nodes on a [`Rect`], `x`-fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid2D {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        for (axis, n) in [("x", nx), ("y", ny)] {
            if n < 3 {
                return Err(KornError::TooFewNodes { axis, nodes: n });
            }
        }
        Ok(Self { rect, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.rect.h / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.rect.b / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.rect.h
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.rect.b
        } else {
            j as f64 * self.dy()
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    fn weights(&self) -> Vec<f64> {
        let wx = trapezoid_weights(self.nx, self.dx());
        let wy = trapezoid_weights(self.ny, self.dy());
        let mut w = Vec::with_capacity(self.len());
        for b in &wy {
            for a in &wx {
                w.push(a * b);
            }
        }
        w
    }
}

/// Real value per node of a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KornError::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KornError::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(grid: &Grid2D, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Trapezoidal L² norm.
    pub fn norm(&self) -> f64 {
        weighted_sq(&self.grid.weights(), &self.values).sqrt()
    }

    /// Trapezoidal mean value.
    pub fn mean(&self) -> f64 {
        let w = self.grid.weights();
        w.iter().zip(&self.values).map(|(a, b)| a * b).sum::<f64>() / (self.grid.rect.h * self.grid.rect.b)
    }

    /// Second-order difference along `x` (`axis = 0`) or `y` (`axis = 1`).
    pub fn diff(&self, axis: usize) -> Self {
        let g = &self.grid;
        let (n, stride, d) = if axis == 0 { (g.nx, 1, g.dx()) } else { (g.ny, g.nx, g.dy()) };
        let inv2d = 0.5 / d;
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j);
                let k = if axis == 0 { i } else { j };
                let f = |o: isize| self.values[(idx as isize + o * stride as isize) as usize];
                out[idx] = if k == 0 {
                    (-3.0 * f(0) + 4.0 * f(1) - f(2)) * inv2d
                } else if k + 1 == n {
                    (3.0 * f(0) - 4.0 * f(-1) + f(-2)) * inv2d
                } else {
                    (f(1) - f(-1)) * inv2d
                };
            }
        }
        Self { grid: g.clone(), values: out }
    }

    /// L² norm of the 5-point Laplacian over interior nodes.
    pub fn laplacian_residual(&self) -> f64 {
        let g = &self.grid;
        let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let w = g.weights();
        let mut acc = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let c = self.at(i, j);
                let lap = (self.at(i + 1, j) - 2.0 * c + self.at(i - 1, j)) * ix2
                    + (self.at(i, j + 1) - 2.0 * c + self.at(i, j - 1)) * iy2;
                acc += w[g.index(i, j)] * lap * lap;
            }
        }
        acc.sqrt()
    }
}

fn weighted_sq(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b * b).sum()
}

/// Closed-form harmonic functions with exact partial derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HarmonicKind {
    /// `Re (x + iy)^n`
    RePoly { n: u32 },
    /// `Im (x + iy)^n`
    ImPoly { n: u32 },
    /// `e^{ky} cos(kx)`
    ExpCos { k: f64 },
    /// `e^{ky} sin(kx)`
    ExpSin { k: f64 },
    /// `e^{kx} cos(ky)`, oscillating along the long side
    ExpXCos { k: f64 },
    /// `scale * inner(x - x0, y - y0)`
    Shifted { inner: Box<HarmonicKind>, x0: f64, y0: f64, scale: f64 },
}

fn cpow(x: f64, y: f64, n: u32) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..n {
        let r = re * x - im * y;
        im = re * y + im * x;
        re = r;
    }
    (re, im)
}

impl HarmonicKind {
    /// Parses names such as `re-poly:3`, `exp-cos:2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, param) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |s: &str| s.parse::<f64>().map_err(|_| KornError::Parse(format!("bad parameter in '{spec}'")));
        let kind = match name {
            "re-poly" | "im-poly" => {
                let n = param.parse::<u32>().map_err(|_| KornError::Parse(format!("bad degree in '{spec}'")))?;
                if n > 6 {
                    return Err(KornError::InvalidParameter(format!("polynomial degree {n} exceeds 6")));
                }
                if name == "re-poly" {
                    Self::RePoly { n }
                } else {
                    Self::ImPoly { n }
                }
            }
            "exp-cos" => Self::ExpCos { k: num(param)? },
            "exp-sin" => Self::ExpSin { k: num(param)? },
            "exp-x-cos" => Self::ExpXCos { k: num(param)? },
            other => return Err(KornError::Parse(format!("unknown harmonic kind '{other}'"))),
        };
        Ok(kind)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RePoly { .. } => "re-poly",
            Self::ImPoly { .. } => "im-poly",
            Self::ExpCos { .. } => "exp-cos",
            Self::ExpSin { .. } => "exp-sin",
            Self::ExpXCos { .. } => "exp-x-cos",
            Self::Shifted { .. } => "shifted",
        }
    }

    pub fn param(&self) -> f64 {
        match self {
            Self::RePoly { n } | Self::ImPoly { n } => *n as f64,
            Self::ExpCos { k } | Self::ExpSin { k } | Self::ExpXCos { k } => *k,
            Self::Shifted { inner, .. } => inner.param(),
        }
    }

    /// `(w, w_x, w_y)` at a point.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match self {
            Self::RePoly { n } | Self::ImPoly { n } => {
                let n = *n;
                let (re, im) = cpow(x, y, n);
                // derivative of z^n is n z^{n-1}; d/dy multiplies by i
                let (dre, dim) = if n == 0 {
                    (0.0, 0.0)
                } else {
                    let (a, b) = cpow(x, y, n - 1);
                    (n as f64 * a, n as f64 * b)
                };
                if matches!(self, Self::RePoly { .. }) {
                    (re, dre, -dim)
                } else {
                    (im, dim, dre)
                }
            }
            Self::ExpCos { k } => {
                let e = (k * y).exp();
                (e * (k * x).cos(), -k * e * (k * x).sin(), k * e * (k * x).cos())
            }
            Self::ExpSin { k } => {
                let e = (k * y).exp();
                (e * (k * x).sin(), k * e * (k * x).cos(), k * e * (k * x).sin())
            }
            Self::ExpXCos { k } => {
                let e = (k * x).exp();
                (e * (k * y).cos(), k * e * (k * y).cos(), -k * e * (k * y).sin())
            }
            Self::Shifted { inner, x0, y0, scale } => {
                let (w, wx, wy) = inner.eval(x - x0, y - y0);
                (scale * w, scale * wx, scale * wy)
            }
        }
    }
}

/// A function on a grid with its two partial derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicSample {
    pub w: ScalarField2D,
    pub wx: ScalarField2D,
    pub wy: ScalarField2D,
}

impl HarmonicSample {
    /// Derivatives by second-order finite differences.
    pub fn from_field(w: ScalarField2D) -> Self {
        let (wx, wy) = (w.diff(0), w.diff(1));
        Self { w, wx, wy }
    }

    pub fn grid(&self) -> &Grid2D {
        self.w.grid()
    }

    /// Rejects inputs whose 5-point Laplacian exceeds `1e-6 |w| / d^2`, with
    /// `d` the smaller grid spacing.
    pub fn check_harmonic(&self) -> Result<()> {
        let g = self.grid();
        let d = g.dx().min(g.dy());
        let residual = self.w.laplacian_residual();
        let gate = 1e-6 * self.w.norm() / (d * d);
        if residual > gate {
            return Err(KornError::NotHarmonic { residual, gate });
        }
        Ok(())
    }
}

/// Exact samples of a closed-form harmonic function and its derivatives.
pub fn harmonic_family(kind: &HarmonicKind, grid: &Grid2D) -> HarmonicSample {
    let mut w = Vec::with_capacity(grid.len());
    let mut wx = Vec::with_capacity(grid.len());
    let mut wy = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (a, b, c) = kind.eval(grid.x(i), grid.y(j));
            w.push(a);
            wx.push(b);
            wy.push(c);
        }
    }
    let f = |values| ScalarField2D { grid: grid.clone(), values };
    HarmonicSample { w: f(w), wx: f(wx), wy: f(wy) }
}

/// Negative 5-point Laplacian on interior unknowns (SPD).
struct InteriorLaplacian<'a> {
    grid: &'a Grid2D,
}

impl InteriorLaplacian<'_> {
    fn interior(&self) -> (usize, usize) {
        (self.grid.nx - 2, self.grid.ny - 2)
    }
}

impl QuadraticForm for InteriorLaplacian<'_> {
    fn dim(&self) -> usize {
        let (a, b) = self.interior();
        a * b
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (mx, my) = self.interior();
        let ix2 = 1.0 / (self.grid.dx() * self.grid.dx());
        let iy2 = 1.0 / (self.grid.dy() * self.grid.dy());
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= mx as isize || j >= my as isize {
                0.0
            } else {
                x[i as usize + mx * j as usize]
            }
        };
        for j in 0..my as isize {
            for i in 0..mx as isize {
                let c = at(i, j);
                y[i as usize + mx * j as usize] =
                    (2.0 * c - at(i - 1, j) - at(i + 1, j)) * ix2 + (2.0 * c - at(i, j - 1) - at(i, j + 1)) * iy2;
            }
        }
    }

    fn label(&self) -> String {
        "-Laplacian".into()
    }
}

/// Discrete harmonic extension of boundary data: the 5-point Laplacian
/// vanishes at interior nodes and the field equals `boundary` on the edge.
pub fn solve_dirichlet_harmonic<F: Fn(f64, f64) -> f64>(
    boundary: F,
    grid: &Grid2D,
    tol: f64,
) -> Result<ScalarField2D> {
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                let v = boundary(grid.x(i), grid.y(j));
                if !v.is_finite() {
                    return Err(KornError::InvalidParameter("boundary data must be finite".into()));
                }
                values[grid.index(i, j)] = v;
            }
        }
    }
    let op = InteriorLaplacian { grid };
    let (mx, my) = op.interior();
    let ix2 = 1.0 / (grid.dx() * grid.dx());
    let iy2 = 1.0 / (grid.dy() * grid.dy());
    // boundary values move to the right-hand side
    let mut rhs = vec![0.0; mx * my];
    for j in 0..my {
        for i in 0..mx {
            let (gi, gj) = (i + 1, j + 1);
            let mut r = 0.0;
            if gi == 1 {
                r += values[grid.index(0, gj)] * ix2;
            }
            if gi == grid.nx - 2 {
                r += values[grid.index(grid.nx - 1, gj)] * ix2;
            }
            if gj == 1 {
                r += values[grid.index(gi, 0)] * iy2;
            }
            if gj == grid.ny - 2 {
                r += values[grid.index(gi, grid.ny - 1)] * iy2;
            }
            rhs[i + mx * j] = r;
        }
    }
    let max_iter = 20 * (mx * my).max(100);
    let (x, iterations, rel) = pcg(&op, &rhs, &Identity, tol, max_iter)?;
    if rel > tol {
        return Err(KornError::NoConvergence { iterations, residual: rel });
    }
    for j in 0..my {
        for i in 0..mx {
            values[grid.index(i + 1, j + 1)] = x[i + mx * j];
        }
    }
    ScalarField2D::from_values(grid, values)
}

/// `|w_y|^2 / (|w| |w_x| / h + |w|^2 / b^2 + |w_x|^2)` on a thin rectangle.
pub fn gradient_separation_ratio(w: &HarmonicSample) -> Result<f64> {
    let rect = w.grid().rect;
    if !rect.is_thin() {
        return Err(KornError::InvalidParameter(format!("need b > 3h, got h = {}, b = {}", rect.h, rect.b)));
    }
    w.check_harmonic()?;
    let (n, nx, ny) = (w.w.norm(), w.wx.norm(), w.wy.norm());
    if n == 0.0 {
        return Err(KornError::Degenerate("zero function".into()));
    }
    Ok(ny * ny / (n * nx / rect.h + n * n / (rect.b * rect.b) + nx * nx))
}

/// `h |w_y - a| / |w_x|` on `(0, h) x (0, 1)`, where `a` is the mean of `w_y`.
pub fn mean_deviation_ratio(w: &HarmonicSample) -> Result<f64> {
    let rect = w.grid().rect;
    if rect.b != 1.0 {
        return Err(KornError::InvalidParameter(format!("the long side must be 1, got {}", rect.b)));
    }
    w.check_harmonic()?;
    let a = w.wy.mean();
    let dev = ScalarField2D { grid: w.grid().clone(), values: w.wy.values.iter().map(|v| v - a).collect() };
    let (num, den) = (dev.norm(), w.wx.norm());
    // cancellation in w_y - a leaves rounding-level noise for affine-in-y data
    let scale = w.wy.norm().max(f64::MIN_POSITIVE);
    if num <= 1e-12 * scale {
        return Ok(0.0);
    }
    if den == 0.0 {
        return Err(KornError::Degenerate("w_x vanishes while w_y is not constant".into()));
    }
    Ok(rect.h * num / den)
}

/// Both sides of the Hardy-type bound
/// `int_0^a f^2 <= 4 int_a^{2a} f^2 + 4 int_0^{2a} t^2 f'(t)^2 dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyBounds {
    pub lhs: f64,
    pub rhs: f64,
}

impl HardyBounds {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn hardy_exact(samples: &[f64], a: f64) -> HardyBounds {
    let n = samples.len() - 1;
    let dt = 2.0 * a / n as f64;
    let half = n / 2;
    let (mut lhs, mut tail, mut grad) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (f0, f1) = (samples[k], samples[k + 1]);
        // integrals of the piecewise-linear interpolant, exact per interval
        let sq = (f0 * f0 + f0 * f1 + f1 * f1) * dt / 3.0;
        if k < half {
            lhs += sq;
        } else {
            tail += sq;
        }
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let slope = (f1 - f0) / dt;
        grad += slope * slope * (t1.powi(3) - t0.powi(3)) / 3.0;
    }
    HardyBounds { lhs, rhs: 4.0 * tail + 4.0 * grad }
}

/// Evaluates both sides for `f` sampled at `n + 1` equispaced points of
/// `[0, 2a]` (`n` even), integrating the piecewise-linear interpolant.
///
/// Sampling is rejected as too coarse when halving the resolution moves
/// either side by more than 1%.
pub fn hardy_check(samples: &[f64], a: f64) -> Result<HardyBounds> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(KornError::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let n = samples.len().saturating_sub(1);
    if n < 8 || !n.is_multiple_of(4) {
        return Err(KornError::InvalidParameter(format!("need 4k + 1 samples with k >= 2, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(KornError::InvalidParameter("samples must be finite".into()));
    }
    let fine = hardy_exact(samples, a);
    let coarse_samples: Vec<f64> = samples.iter().step_by(2).copied().collect();
    let coarse = hardy_exact(&coarse_samples, a);
    let rel = |x: f64, y: f64| if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) };
    let change = rel(fine.lhs, coarse.lhs).max(rel(fine.rhs, coarse.rhs));
    if change > 0.01 {
        return Err(KornError::TooCoarse(100.0 * change));
    }
    Ok(fine)
}

/// Samples `f` at `n + 1` equispaced points of `[0, 2a]`.
pub fn sample_interval<F: Fn(f64) -> f64>(f: F, a: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| f(2.0 * a * k as f64 / n as f64)).collect()
}

/// `|delta grad u| / |grad u|` with `delta` the exact distance to the boundary.
pub fn distance_weighted_ratio(u: &HarmonicSample) -> Result<f64> {
    u.check_harmonic()?;
    let g = u.grid();
    let w = g.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            let d = g.rect.distance_to_boundary(g.x(i), g.y(j));
            let sq = u.wx.values[idx].powi(2) + u.wy.values[idx].powi(2);
            num += w[idx] * d * d * sq;
            den += w[idx] * sq;
        }
    }
    if den == 0.0 {
        return Err(KornError::Degenerate("gradient vanishes identically".into()));
    }
    Ok((num / den).sqrt())
}

/// One evaluated ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RectRow {
    pub estimate: String,
    pub kind: String,
    pub param: f64,
    pub h: f64,
    pub b: f64,
    pub ratio: f64,
}

/// Verdict for one estimate over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub estimate: String,
    pub cases: usize,
    pub max_ratio: f64,
    /// Slope of `log(max ratio per h)` against `log h`, where applicable.
    pub trend_slope: Option<f64>,
    pub passed: bool,
}

/// Rows and per-estimate summaries of a rectangle sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RectReport {
    pub rows: Vec<RectRow>,
    pub summaries: Vec<EstimateSummary>,
}

impl RectReport {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(|s| s.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Columns `estimate,kind,param,h,b,ratio`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "estimate,kind,param,h,b,ratio")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.estimate, r.kind, r.param, r.h, r.b, r.ratio)?;
        }
        Ok(())
    }
}

/// Thicknesses `1/4, 1/8, ..., 1/64`.
pub const DEFAULT_WIDTHS: [f64; 5] = [0.25, 0.125, 0.0625, 0.03125, 0.015625];

/// Lower bound on the slope of the per-`h` maxima (no blow-up as `h -> 0`).
pub const TREND_FLOOR: f64 = -0.1;

/// Cap for the distance-weighted gradient ratio including discretization slack.
pub const DISTANCE_CAP: f64 = 2.2;

/// Analytic harmonic test family used by the sweeps.
pub fn default_family() -> Vec<HarmonicKind> {
    let mut fam = vec![
        HarmonicKind::RePoly { n: 2 },
        HarmonicKind::RePoly { n: 3 },
        HarmonicKind::RePoly { n: 6 },
        HarmonicKind::ImPoly { n: 2 },
        HarmonicKind::ImPoly { n: 4 },
        HarmonicKind::ImPoly { n: 5 },
        HarmonicKind::ExpCos { k: 1.0 },
        HarmonicKind::ExpCos { k: 3.0 },
        HarmonicKind::ExpSin { k: 2.0 },
        HarmonicKind::ExpXCos { k: 4.0 },
        HarmonicKind::ExpXCos { k: 20.0 },
    ];
    fam.push(HarmonicKind::Shifted { inner: Box::new(HarmonicKind::RePoly { n: 3 }), x0: -0.5, y0: 0.5, scale: 3.0 });
    fam.push(HarmonicKind::Shifted { inner: Box::new(HarmonicKind::ExpSin { k: 1.5 }), x0: 0.3, y0: -0.2, scale: 0.5 });
    fam
}

/// Grid on `(0, h) x (0, b)` fine enough for every member of the default family.
pub fn default_grid(rect: Rect) -> Result<Grid2D> {
    let nx = 33;
    let per_unit = 2048.0;
    let ny = ((rect.b * per_unit).ceil() as usize).max(64) + 1;
    Grid2D::new(rect, nx, ny)
}

/// Battery of 20 functions on `[0, 2a]` for the Hardy-type bound: polynomial,
/// trigonometric and piecewise linear.
pub fn hardy_battery() -> Vec<(String, Box<dyn Fn(f64, f64) -> f64 + Send + Sync>)> {
    type F = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
    let mut v: Vec<(String, F)> = Vec::new();
    v.push(("one".into(), Box::new(|_, _| 1.0)));
    v.push(("t".into(), Box::new(|t, _| t)));
    v.push(("1-t/2a".into(), Box::new(|t, a| 1.0 - t / (2.0 * a))));
    for p in [2, 3, 5] {
        v.push((format!("(1-t/2a)^{p}"), Box::new(move |t, a| (1.0 - t / (2.0 * a)).powi(p))));
    }
    v.push(("t^2-3t+1".into(), Box::new(|t, _| t * t - 3.0 * t + 1.0)));
    v.push(("(t-a)^2".into(), Box::new(|t, a| (t - a) * (t - a))));
    for k in [1.0, 3.0, 10.0] {
        v.push((format!("cos({k}t)"), Box::new(move |t, _| (k * t).cos())));
        v.push((format!("sin({k}t)+0.5"), Box::new(move |t, _| (k * t).sin() + 0.5)));
    }
    v.push(("cos(pi t/2a)".into(), Box::new(|t, a| (std::f64::consts::PI * t / (2.0 * a)).cos())));
    v.push(("hat".into(), Box::new(|t, a| (1.0 - (t - 0.5 * a).abs() / (0.5 * a)).max(0.0))));
    v.push(("ramp-down".into(), Box::new(|t, a| (1.0 - t / a).max(0.0))));
    v.push(("step-ramp".into(), Box::new(|t, a| if t < a { 1.0 } else { (2.0 - t / a).max(0.0) })));
    v.push(("zigzag".into(), Box::new(|t, a| ((4.0 * t / a).rem_euclid(2.0) - 1.0).abs())));
    v.push(("spike-near-0".into(), Box::new(|t, a| (1.0 - 8.0 * t / a).max(0.0))));
    v
}

/// Full sweep over the four rectangle estimates.
///
/// `b` is the rectangle length for the gradient-separation estimate; the
/// mean-deviation estimate runs on the rectangle rescaled to length 1. `kind`
/// restricts the analytic family to members with that name.
pub fn estimate_sweep(widths: &[f64], b: f64, kind: Option<&str>) -> Result<RectReport> {
    let family: Vec<HarmonicKind> = default_family()
        .into_iter()
        .filter(|k| kind.is_none_or(|name| k.name() == name))
        .collect();
    if family.is_empty() {
        return Err(KornError::InvalidParameter(format!("no family member named '{}'", kind.unwrap_or(""))));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();

    let mut max_sep = Vec::new();
    let mut max_step = Vec::new();
    for &h in widths {
        let rect = Rect::new(h, b)?;
        if !rect.is_thin() {
            return Err(KornError::InvalidParameter(format!("need b > 3h, got h = {h}, b = {b}")));
        }
        let grid = default_grid(rect)?;
        let unit_grid = if b == 1.0 { None } else { Some(default_grid(Rect::new(h / b, 1.0)?)?) };
        let (mut m_sep, mut ms) = (0.0_f64, 0.0_f64);
        for member in &family {
            let s = harmonic_family(member, &grid);
            let r_sep = gradient_separation_ratio(&s)?;
            let rs = match &unit_grid {
                None => mean_deviation_ratio(&s)?,
                Some(g) => mean_deviation_ratio(&harmonic_family(member, g))?,
            };
            m_sep = m_sep.max(r_sep);
            ms = ms.max(rs);
            rows.push(RectRow { estimate: "gradient-separation".into(), kind: member.name().into(), param: member.param(), h, b, ratio: r_sep });
            rows.push(RectRow { estimate: "mean-deviation".into(), kind: member.name().into(), param: member.param(), h: h / b, b: 1.0, ratio: rs });
        }
        max_sep.push((h, m_sep));
        max_step.push((h, ms));
    }
    for (estimate, maxes) in [("gradient-separation", &max_sep), ("mean-deviation", &max_step)] {
        let max_ratio = maxes.iter().fold(0.0_f64, |m, p| m.max(p.1));
        let positive: Vec<(f64, f64)> = maxes.iter().copied().filter(|p| p.1 > 0.0).collect();
        let trend = if positive.len() >= 3 { Some(fit_scaling(&positive)?.slope) } else { None };
        let finite = maxes.iter().all(|p| p.1.is_finite());
        summaries.push(EstimateSummary {
            estimate: estimate.into(),
            cases: maxes.len() * family.len(),
            max_ratio,
            trend_slope: trend,
            passed: finite && trend.is_none_or(|s| s >= TREND_FLOOR),
        });
    }

    let mut worst_hardy = 0.0_f64;
    let battery = hardy_battery();
    let mut ok_hardy = true;
    for a in [0.5, 1.0, 2.0] {
        for (name, f) in &battery {
            let r = hardy_check(&sample_interval(|t| f(t, a), a, 4096), a)?;
            ok_hardy &= r.holds();
            worst_hardy = worst_hardy.max(r.ratio());
            rows.push(RectRow { estimate: "hardy".into(), kind: name.clone(), param: a, h: 2.0 * a, b: 0.0, ratio: r.ratio() });
        }
    }
    summaries.push(EstimateSummary {
        estimate: "hardy".into(),
        cases: 3 * battery.len(),
        max_ratio: worst_hardy,
        trend_slope: None,
        passed: ok_hardy,
    });

    let mut worst_dist = 0.0_f64;
    let mut cases_dist = 0;
    for aspect in [1.0, 4.0, 16.0] {
        let rect = Rect::new(1.0 / aspect, 1.0)?;
        let grid = Grid2D::new(rect, (512.0 / aspect) as usize + 1, 513)?;
        let mut inputs: Vec<(String, f64, HarmonicSample)> = family
            .iter()
            .map(|m| (m.name().to_string(), m.param(), harmonic_family(m, &grid)))
            .collect();
        let solved = solve_dirichlet_harmonic(|x, y| x * y * y + (3.0 * y).cos() - x, &grid, 1e-12)?;
        inputs.push(("dirichlet".into(), 0.0, HarmonicSample::from_field(solved)));
        for (name, param, s) in inputs {
            let r = distance_weighted_ratio(&s)?;
            worst_dist = worst_dist.max(r);
            cases_dist += 1;
            rows.push(RectRow { estimate: "distance-weighted".into(), kind: name, param, h: rect.h, b: rect.b, ratio: r });
        }
    }
    summaries.push(EstimateSummary {
        estimate: "distance-weighted".into(),
        cases: cases_dist,
        max_ratio: worst_dist,
        trend_slope: None,
        passed: worst_dist <= DISTANCE_CAP,
    });
    Ok(RectReport { rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64, b: f64, nx: usize, ny: usize) -> Grid2D {
        Grid2D::new(Rect::new(h, b).unwrap(), nx, ny).unwrap()
    }

    #[test]
    fn quadratic_is_discretely_harmonic() {
        let g = grid(0.2, 1.0, 9, 41);
        let s = harmonic_family(&HarmonicKind::RePoly { n: 2 }, &g);
        assert!(s.w.laplacian_residual() < 1e-9);
    }

    #[test]
    fn exp_cos_residual_is_second_order() {
        let k = 2.0;
        let res = |n: usize| {
            let g = grid(1.0, 1.0, n, n);
            harmonic_family(&HarmonicKind::ExpCos { k }, &g).w.laplacian_residual()
        };
        let (r1, r2) = (res(33), res(65));
        assert!((r1 / r2).log2() > 1.9);
        let d = 1.0 / 32.0;
        assert!(r1 <= k.powi(4) * d * d * 10.0);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let g = grid(0.5, 2.0, 201, 801);
        for kind in default_family() {
            let s = harmonic_family(&kind, &g);
            let fd = HarmonicSample::from_field(s.w.clone());
            let err = fd.wx.values().iter().zip(s.wx.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = s.wx.values().iter().chain(s.wy.values()).fold(1e-300_f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-2 * scale, "{kind:?}");
        }
    }

    #[test]
    fn separation_ratio_closed_forms() {
        let g = grid(0.1, 1.0, 9, 101);
        let lin_x = HarmonicSample {
            w: ScalarField2D::sample(&g, |x, _| x),
            wx: ScalarField2D::sample(&g, |_, _| 1.0),
            wy: ScalarField2D::sample(&g, |_, _| 0.0),
        };
        assert_eq!(gradient_separation_ratio(&lin_x).unwrap(), 0.0);
        let lin_y = harmonic_family(&HarmonicKind::ImPoly { n: 1 }, &g);
        // |w_y|^2 = hb and the only denominator term is |w|^2 / b^2 = hb/3
        let r = gradient_separation_ratio(&lin_y).unwrap();
        assert!((r - 3.0).abs() < 1e-3, "{r}");
        let scaled = HarmonicSample {
            w: ScalarField2D::sample(&g, |x, y| 5.0 * (x * x - y * y)),
            wx: ScalarField2D::sample(&g, |x, _| 10.0 * x),
            wy: ScalarField2D::sample(&g, |_, y| -10.0 * y),
        };
        let base = harmonic_family(&HarmonicKind::RePoly { n: 2 }, &g);
        assert!((gradient_separation_ratio(&scaled).unwrap() - gradient_separation_ratio(&base).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn separation_needs_thin_rect() {
        let g = grid(0.5, 1.0, 9, 9);
        let s = harmonic_family(&HarmonicKind::RePoly { n: 2 }, &g);
        assert!(gradient_separation_ratio(&s).is_err());
    }

    #[test]
    fn non_harmonic_input_is_rejected() {
        let g = grid(0.1, 1.0, 9, 101);
        let s = HarmonicSample::from_field(ScalarField2D::sample(&g, |x, y| x * x + y * y));
        assert!(matches!(gradient_separation_ratio(&s), Err(KornError::NotHarmonic { .. })));
    }

    #[test]
    fn mean_deviation_closed_forms() {
        let h = 0.125;
        let g = grid(h, 1.0, 65, 129);
        let y = harmonic_family(&HarmonicKind::ImPoly { n: 1 }, &g);
        assert_eq!(mean_deviation_ratio(&y).unwrap(), 0.0);
        // w = xy = Im z^2 / 2: ratio h^2 / 2
        let xy = harmonic_family(&HarmonicKind::ImPoly { n: 2 }, &g);
        let r = mean_deviation_ratio(&xy).unwrap();
        assert!((r - h * h / 2.0).abs() < 1e-3 * h * h, "{r}");
    }

    #[test]
    fn dirichlet_reproduces_quadratic_and_constant() {
        let g = grid(1.0, 2.0, 17, 33);
        let u = solve_dirichlet_harmonic(|x, y| x * x - y * y, &g, 1e-13).unwrap();
        let exact = ScalarField2D::sample(&g, |x, y| x * x - y * y);
        let err = u.values().iter().zip(exact.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9);
        let c = solve_dirichlet_harmonic(|_, _| 2.5, &g, 1e-13).unwrap();
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-10));
    }

    #[test]
    fn dirichlet_converges_at_second_order() {
        let err = |n: usize| {
            let g = grid(1.0, 1.0, n, n);
            let u = solve_dirichlet_harmonic(|x, y| y.exp() * x.cos(), &g, 1e-13).unwrap();
            let e = ScalarField2D::sample(&g, |x, y| y.exp() * x.cos());
            u.values().iter().zip(e.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let (e1, e2) = (err(17), err(33));
        assert!((e1 / e2).log2() >= 1.8, "{}", (e1 / e2).log2());
    }

    #[test]
    fn dirichlet_is_linear() {
        let g = grid(0.5, 2.0, 13, 41);
        let f1 = |x: f64, y: f64| (x * 3.0).sin() + y;
        let f2 = |x: f64, y: f64| x * y * y;
        let a = solve_dirichlet_harmonic(f1, &g, 1e-13).unwrap();
        let b = solve_dirichlet_harmonic(f2, &g, 1e-13).unwrap();
        let c = solve_dirichlet_harmonic(|x, y| f1(x, y) + f2(x, y), &g, 1e-13).unwrap();
        for ((x, y), z) in a.values().iter().zip(b.values()).zip(c.values()) {
            assert!((x + y - z).abs() < 1e-9);
        }
    }

    #[test]
    fn hardy_closed_forms() {
        let one = hardy_check(&sample_interval(|_| 1.0, 1.0, 64), 1.0).unwrap();
        assert!((one.lhs - 1.0).abs() < 1e-14 && (one.rhs - 4.0).abs() < 1e-14);
        let t = hardy_check(&sample_interval(|t| t, 1.0, 64), 1.0).unwrap();
        assert!((t.lhs - 1.0 / 3.0).abs() < 1e-12);
        assert!((t.rhs - 20.0).abs() < 1e-12);
        let lin = hardy_check(&sample_interval(|t| 1.0 - t / 4.0, 2.0, 64), 2.0).unwrap();
        assert!(lin.holds());
    }

    #[test]
    fn hardy_rejects_coarse_sampling() {
        let s = sample_interval(|t| (40.0 * t).sin(), 1.0, 16);
        assert!(matches!(hardy_check(&s, 1.0), Err(KornError::TooCoarse(_))));
    }

    #[test]
    fn distance_ratio_on_unit_square() {
        let g = grid(1.0, 1.0, 65, 65);
        let s = harmonic_family(&HarmonicKind::RePoly { n: 1 }, &g);
        let r = distance_weighted_ratio(&s).unwrap();
        assert!(r <= 0.5 && r > 0.0);
        let c = HarmonicSample::from_field(ScalarField2D::sample(&g, |_, _| 1.0));
        assert!(matches!(distance_weighted_ratio(&c), Err(KornError::Degenerate(_))));
    }

    #[test]
    fn parse_kinds() {
        assert_eq!(HarmonicKind::parse("re-poly:3").unwrap(), HarmonicKind::RePoly { n: 3 });
        assert_eq!(HarmonicKind::parse("exp-cos:2").unwrap(), HarmonicKind::ExpCos { k: 2.0 });
        assert!(HarmonicKind::parse("re-poly:7").is_err());
        assert!(HarmonicKind::parse("bessel:1").is_err());
    }
}
