//! Command-line flags, config files and their resolution into a [`RunConfig`].
//!
//! Precedence: flags, then the `--config` file, then built-in defaults.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kornshell::ansatz::AnsatzGrid;
use kornshell::korn_solver::{ConstantKind, GridPolicy};
use kornshell::surface::SurfacePatch;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "kornshell", version, about = "Korn-inequality sweeps on thin shells", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal discrete Korn constants over a list of thicknesses.
    SweepConstant(Shared),
    /// Korn quotients of the oscillating Kirchhoff-type field over thicknesses.
    SweepAnsatz(Shared),
    /// Harmonic-function estimates on thin rectangles.
    RectLemmas(Shared),
    /// Strain residual of rigid motions under grid refinement.
    CheckRigid(Shared),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepConstant(_) => "sweep-constant",
            Command::SweepAnsatz(_) => "sweep-ansatz",
            Command::RectLemmas(_) => "rect-lemmas",
            Command::CheckRigid(_) => "check-rigid",
        }
    }

    pub fn shared(&self) -> &Shared {
        match self {
            Command::SweepConstant(s) | Command::SweepAnsatz(s) | Command::RectLemmas(s) | Command::CheckRigid(s) => s,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// plate, cylinder, sphere or torus
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub major: Option<f64>,
    #[arg(long)]
    pub minor: Option<f64>,
    /// Angular band `lo,hi` (colatitude for the sphere, minor angle for the torus)
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Comma-separated thicknesses (rectangle widths for rect-lemmas)
    #[arg(long)]
    pub h: Option<String>,
    /// `NTxNTHxNZ` or `auto`
    #[arg(long)]
    pub grid: Option<String>,
    /// Relative eigenvalue tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV plot-data path
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// interp or second
    #[arg(long)]
    pub quotient: Option<String>,
    /// Profile name for the oscillating field
    #[arg(long)]
    pub profile: Option<String>,
    /// Restrict rect-lemmas to one harmonic family
    #[arg(long)]
    pub kind: Option<String>,
    /// Rectangle length for rect-lemmas
    #[arg(long)]
    pub b: Option<f64>,
    /// Translation `a1,a2,a3` for check-rigid
    #[arg(long)]
    pub rigid_a: Option<String>,
    /// Row-major 3x3 matrix `b11,...,b33` for check-rigid (must be skew)
    #[arg(long)]
    pub rigid_b: Option<String>,
    /// Nodes per axis for the refinement levels of check-rigid
    #[arg(long)]
    pub levels: Option<String>,
    /// Flat `key = value` file with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Configuration problem: reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

const KEYS: [&str; 20] = [
    "surface", "radius", "major", "minor", "band", "omega", "length", "h", "grid", "tol", "seed", "out", "csv",
    "quotient", "profile", "kind", "b", "rigid-a", "rigid-b", "levels",
];

/// Turns `key = value` lines into flag arguments. Blank lines and `#`
/// comments are skipped; underscores in keys are accepted for dashes.
pub fn config_args(text: &str) -> Result<Vec<String>, ConfigError> {
    let mut args = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return bad(format!("config line {}: expected key = value", no + 1));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return bad(format!("config line {}: unknown key '{key}'", no + 1));
        }
        args.push(format!("--{key}"));
        args.push(value.trim().to_string());
    }
    Ok(args)
}

/// Splices the config file (if any) in front of the user's flags so that
/// flags given on the command line win.
pub fn merged_args(argv: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = argv.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError(format!("cannot read config {path}: {e}")))?;
    let extra = config_args(&text)?;
    if argv.len() < 2 {
        return Ok(argv);
    }
    // program name and subcommand first, then file values, then flags
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

/// Fully resolved settings, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub surface: Option<SurfaceConfig>,
    pub hs: Vec<f64>,
    pub grid: Option<String>,
    pub tol: f64,
    pub seed: u64,
    pub quotient: ConstantKind,
    pub profile: String,
    pub kind: Option<String>,
    pub b: f64,
    pub rigid: Option<([f64; 3], [[f64; 3]; 3])>,
    pub levels: Vec<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceConfig {
    pub name: String,
    pub radius: f64,
    pub major: f64,
    pub minor: f64,
    pub band: [f64; 2],
    pub omega: f64,
    pub length: f64,
}

impl SurfaceConfig {
    pub fn build(&self) -> Result<SurfacePatch, ConfigError> {
        let r = match self.name.as_str() {
            "plate" => SurfacePatch::plate(self.omega, self.length),
            "cylinder" => SurfacePatch::cylinder(self.radius, self.omega, self.length),
            "sphere" => SurfacePatch::sphere_band(self.radius, self.band[0], self.band[1], self.omega),
            "torus" => SurfacePatch::torus(self.major, self.minor, self.omega, self.band[0], self.band[1]),
            other => return bad(format!("unknown surface '{other}' (expected plate, cylinder, sphere, torus)")),
        };
        r.map_err(|e| ConfigError(e.to_string()))
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| ConfigError(format!("bad number '{v}' in --{what}"))))
        .collect()
}

/// Positive thicknesses, sorted decreasing; duplicates are an error.
pub fn parse_hs(s: &str) -> Result<Vec<f64>, ConfigError> {
    let mut hs = parse_list(s, "h")?;
    if hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return bad("--h values must be positive");
    }
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if hs.windows(2).any(|w| w[0] == w[1]) {
        return bad("--h contains a duplicate thickness");
    }
    Ok(hs)
}

/// `NTxNTHxNZ`, or `None` for `auto`.
pub fn parse_grid(s: &str) -> Result<Option<[usize; 3]>, ConfigError> {
    if s == "auto" {
        return Ok(None);
    }
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return bad(format!("--grid expects NTxNTHxNZ or auto, got '{s}'"));
    }
    let mut dims = [0; 3];
    for (d, p) in dims.iter_mut().zip(parts) {
        *d = p.parse().map_err(|_| ConfigError(format!("bad node count '{p}' in --grid")))?;
        if *d < 3 {
            return bad("--grid needs at least 3 nodes per axis");
        }
    }
    Ok(Some(dims))
}

impl RunConfig {
    pub fn resolve(cmd: &Command) -> Result<Self, ConfigError> {
        let s = cmd.shared();
        let name = cmd.name();
        let needs_surface = !matches!(cmd, Command::RectLemmas(_));
        let surface = match (&s.surface, needs_surface) {
            (Some(n), _) => {
                let band_default = if n == "torus" { [0.0, 1.0] } else { [PI / 3.0, 2.0 * PI / 3.0] };
                let band = match &s.band {
                    Some(b) => {
                        let v = parse_list(b, "band")?;
                        if v.len() != 2 {
                            return bad("--band expects lo,hi");
                        }
                        [v[0], v[1]]
                    }
                    None => band_default,
                };
                let omega_default = match n.as_str() {
                    "torus" => 1.0,
                    "plate" => 1.0,
                    _ => PI,
                };
                Some(SurfaceConfig {
                    name: n.clone(),
                    radius: s.radius.unwrap_or(1.0),
                    major: s.major.unwrap_or(2.0),
                    minor: s.minor.unwrap_or(1.0),
                    band,
                    omega: s.omega.unwrap_or(omega_default),
                    length: s.length.unwrap_or(1.0),
                })
            }
            (None, true) => return bad("--surface is required (plate, cylinder, sphere, torus)"),
            (None, false) => None,
        };
        let default_hs = match cmd {
            Command::SweepConstant(_) => "0.2,0.1,0.05,0.025",
            Command::SweepAnsatz(_) => "0.1,0.05,0.02,0.01,0.005",
            Command::RectLemmas(_) => "0.25,0.125,0.0625,0.03125,0.015625",
            Command::CheckRigid(_) => "0.1",
        };
        let hs = parse_hs(s.h.as_deref().unwrap_or(default_hs))?;
        if let Some(g) = &s.grid {
            parse_grid(g)?;
        }
        let tol = s.tol.unwrap_or(1e-6);
        if !(tol > 0.0 && tol < 1.0) {
            return bad("--tol must lie in (0, 1)");
        }
        let quotient = match &s.quotient {
            Some(q) => q.parse::<ConstantKind>().map_err(|e| ConfigError(e.to_string()))?,
            None => ConstantKind::Second,
        };
        let b = s.b.unwrap_or(1.0);
        if !(b > 0.0 && b.is_finite()) {
            return bad("--b must be positive");
        }
        if matches!(cmd, Command::RectLemmas(_)) {
            if let Some(h) = hs.iter().find(|&&h| b <= 3.0 * h) {
                return bad(format!("rectangle needs b > 3h, got b = {b}, h = {h}"));
            }
        }
        let rigid = match (&s.rigid_a, &s.rigid_b) {
            (None, None) => None,
            (a, bm) => {
                let a = match a {
                    Some(a) => parse_list(a, "rigid-a")?,
                    None => vec![0.0; 3],
                };
                let bm = match bm {
                    Some(m) => parse_list(m, "rigid-b")?,
                    None => vec![0.0; 9],
                };
                if a.len() != 3 || bm.len() != 9 {
                    return bad("--rigid-a takes 3 values and --rigid-b takes 9");
                }
                let mut m = [[0.0; 3]; 3];
                for (k, v) in bm.iter().enumerate() {
                    m[k / 3][k % 3] = *v;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        if (m[i][j] + m[j][i]).abs() > 1e-12 {
                            return bad("--rigid-b must be skew-symmetric (B + B^T = 0)");
                        }
                    }
                }
                Some(([a[0], a[1], a[2]], m))
            }
        };
        let levels = match &s.levels {
            Some(l) => {
                let v: Result<Vec<usize>, _> = l.split(',').map(|x| x.trim().parse::<usize>()).collect();
                let v = v.map_err(|_| ConfigError("--levels expects comma-separated node counts".into()))?;
                if v.len() < 2 || v.iter().any(|&n| n < 3) {
                    return bad("--levels needs at least two counts of 3 or more nodes");
                }
                v
            }
            None => vec![9, 17, 33],
        };
        Ok(Self {
            subcommand: name.to_string(),
            surface,
            hs,
            grid: s.grid.clone(),
            tol,
            seed: s.seed.unwrap_or(42),
            quotient,
            profile: s.profile.clone().unwrap_or_else(|| "default".into()),
            kind: s.kind.clone(),
            b,
            rigid,
            levels,
            out: s.out.clone(),
            csv: s.csv.clone(),
        })
    }

    pub fn policy(&self) -> Result<GridPolicy, ConfigError> {
        Ok(match self.grid.as_deref().map(parse_grid).transpose()?.flatten() {
            Some([a, b, c]) => GridPolicy::new(a, b, c),
            None => GridPolicy::default(),
        })
    }

    pub fn ansatz_grid(&self) -> Result<AnsatzGrid, ConfigError> {
        Ok(match self.grid.as_deref().map(parse_grid).transpose()?.flatten() {
            Some([n_t, n_theta, n_z]) => AnsatzGrid::Fixed { n_t, n_theta, n_z },
            None => AnsatzGrid::Auto,
        })
    }
}
