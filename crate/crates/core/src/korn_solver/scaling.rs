//! Log-log scaling fits and thickness sweeps.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use super::{korn_interp_constant, korn_second_constant, EigenOptions, GridPolicy};
use crate::error::{KornError, Result};
use crate::surface::{PatchDescriptor, SurfacePatch};

/// Least-squares line through `(log h, log C)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

/// Fits `log C = slope log h + intercept`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(KornError::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    for (i, &(h, c)) in points.iter().enumerate() {
        if !(h > 0.0 && h.is_finite()) {
            return Err(KornError::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(KornError::InvalidParameter(format!("values must be positive, got {c}")));
        }
        if points[..i].iter().any(|&(h2, _)| h2 == h) {
            return Err(KornError::InvalidParameter(format!("duplicate h = {h}")));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(ScalingFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Which optimal constant a sweep computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantKind {
    Interp,
    Second,
}

impl std::str::FromStr for ConstantKind {
    type Err = KornError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interp" => Ok(Self::Interp),
            "second" => Ok(Self::Second),
            other => Err(KornError::Parse(format!("unknown quotient '{other}' (expected interp or second)"))),
        }
    }
}

/// One thickness of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub h: f64,
    pub value: f64,
    pub dims: [usize; 3],
    /// Secondary measurements (eigenvalue, iterations, other quotients...).
    pub extra: BTreeMap<String, f64>,
}

/// Results of a sweep over thicknesses.
///
/// Everything serialized by [`SweepReport::payload_json`] is a deterministic
/// function of the inputs; wall-clock data lives in `metadata` only.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub kind: String,
    pub patch: PatchDescriptor,
    pub settings: serde_json::Value,
    /// Sorted by strictly decreasing `h`.
    pub points: Vec<SweepPoint>,
    pub fit: ScalingFit,
    /// Fits of the `extra` series that were requested.
    pub extra_fits: BTreeMap<String, ScalingFit>,
    #[serde(skip)]
    pub metadata: RunMetadata,
}

/// Non-deterministic run information.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunMetadata {
    /// Seconds since the Unix epoch at the end of the run.
    pub timestamp: u64,
    /// Wall-clock seconds per point, in point order.
    pub seconds: Vec<f64>,
}

impl RunMetadata {
    pub fn now(seconds: Vec<f64>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { timestamp, seconds }
    }
}

impl SweepReport {
    /// Builds a report, sorting points by decreasing `h` and fitting the main
    /// series and the named extra series.
    pub fn new(
        kind: &str,
        patch: PatchDescriptor,
        settings: serde_json::Value,
        points: Vec<(SweepPoint, f64)>,
        extra_series: &[&str],
    ) -> Result<Self> {
        let mut points = points;
        points.sort_by(|a, b| b.0.h.partial_cmp(&a.0.h).unwrap_or(std::cmp::Ordering::Equal));
        if points.windows(2).any(|w| w[0].0.h == w[1].0.h) {
            return Err(KornError::InvalidParameter("duplicate h in sweep".into()));
        }
        let (points, seconds): (Vec<SweepPoint>, Vec<f64>) = points.into_iter().unzip();
        let fit = fit_scaling(&points.iter().map(|p| (p.h, p.value)).collect::<Vec<_>>())?;
        let mut extra_fits = BTreeMap::new();
        for name in extra_series {
            let series: Option<Vec<(f64, f64)>> = points.iter().map(|p| p.extra.get(*name).map(|&v| (p.h, v))).collect();
            let series = series.ok_or_else(|| KornError::InvalidParameter(format!("series '{name}' missing")))?;
            extra_fits.insert(name.to_string(), fit_scaling(&series)?);
        }
        Ok(Self {
            kind: kind.to_string(),
            patch,
            settings,
            points,
            fit,
            extra_fits,
            metadata: RunMetadata::now(seconds),
        })
    }

    /// The deterministic part of the report as pretty JSON.
    pub fn payload_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Full JSON document: `{"report": payload, "metadata": {...}}`.
    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({ "report": self, "metadata": self.metadata });
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    /// Plot data with columns
    /// `h,value,n_t,n_theta,n_z,seconds,slope_to_date` followed by one column
    /// per extra series in name order. `slope_to_date` is the fit over the
    /// points so far (empty for the first two rows).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names: Vec<&String> = self.points.first().map(|p| p.extra.keys().collect()).unwrap_or_default();
        write!(out, "h,value,n_t,n_theta,n_z,seconds,slope_to_date")?;
        for n in &names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        for (i, p) in self.points.iter().enumerate() {
            let slope = if i >= 2 {
                let pts: Vec<(f64, f64)> = self.points[..=i].iter().map(|q| (q.h, q.value)).collect();
                fit_scaling(&pts).map(|f| f.slope.to_string()).unwrap_or_default()
            } else {
                String::new()
            };
            let secs = self.metadata.seconds.get(i).copied().unwrap_or(0.0);
            write!(out, "{},{},{},{},{},{:.3},{}", p.h, p.value, p.dims[0], p.dims[1], p.dims[2], secs, slope)?;
            for n in &names {
                write!(out, ",{}", p.extra.get(*n).copied().unwrap_or(f64::NAN))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Worker threads for sweeps: `KORNSHELL_THREADS` if set, else all cores.
pub fn worker_count() -> usize {
    std::env::var("KORNSHELL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `f` on every item in a pool capped by [`worker_count`], keeping order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| KornError::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Computes the chosen constant for every `h` (in parallel) and fits its
/// scaling. `h` values are reported in decreasing order.
pub fn sweep_constant(
    patch: &SurfacePatch,
    hs: &[f64],
    policy: &GridPolicy,
    opts: &EigenOptions,
    kind: ConstantKind,
) -> Result<SweepReport> {
    let mut hs = hs.to_vec();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let results = parallel_map(&hs, |&h| {
        let start = Instant::now();
        let r = match kind {
            ConstantKind::Second => korn_second_constant(patch, h, policy, opts)?,
            ConstantKind::Interp => korn_interp_constant(patch, h, policy, opts)?,
        };
        let mut extra = BTreeMap::new();
        extra.insert("lambda".to_string(), r.lambda);
        extra.insert("iterations".to_string(), r.iterations as f64);
        extra.insert("residual".to_string(), r.residual);
        if let Some(s) = r.s_opt {
            extra.insert("s_opt".to_string(), s);
            extra.insert("flat".to_string(), if r.flat { 1.0 } else { 0.0 });
        }
        let point = SweepPoint { h, value: r.constant, dims: r.grid.dims(), extra };
        Ok((point, start.elapsed().as_secs_f64()))
    })?;
    let settings = serde_json::json!({ "grid": policy, "solver": opts, "quotient": kind });
    SweepReport::new(
        match kind {
            ConstantKind::Second => "second_constant",
            ConstantKind::Interp => "interp_constant",
        },
        patch.descriptor(),
        settings,
        results,
        &["lambda"],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exact_power_laws() {
        let hs = [0.2, 0.1, 0.05, 0.025];
        let f = fit_scaling(&hs.iter().map(|&h| (h, h)).collect::<Vec<_>>()).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.residual < 1e-12);
        let f = fit_scaling(&hs.iter().map(|&h| (h, 7.0)).collect::<Vec<_>>()).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(fit_scaling(&[(0.1, 1.0), (0.2, 1.0)]).is_err());
        assert!(fit_scaling(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
        assert!(fit_scaling(&[(0.1, 1.0), (0.1, 2.0), (0.3, 1.0)]).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("second".parse::<ConstantKind>().unwrap(), ConstantKind::Second);
        assert!("third".parse::<ConstantKind>().is_err());
    }
}
