use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kornshell::ansatz::{ansatz_sweep, ProfileW};
use kornshell::error::KornError;
use kornshell::korn_solver::{sweep_constant, EigenOptions, SweepReport};
use kornshell::rect_harmonic::estimate_sweep;
use kornshell::shell_ops::{random_rigid_motions, rigid_refinement, RigidStudy};
use kornshell::surface::SurfacePatch;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// Observed order that `check-rigid` requires.
pub const MIN_RIGID_ORDER: f64 = 1.8;

/// How a command ended; mapped to the process exit code by `main`.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Run(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<KornError> for Failure {
    fn from(e: KornError) -> Self {
        match e {
            KornError::InvalidParameter(_)
            | KornError::NoEmbedding(_)
            | KornError::TooFewNodes { .. }
            | KornError::ShellTooThick { .. }
            | KornError::Degenerate(_)
            | KornError::NotSkew(_)
            | KornError::UnderResolved { .. }
            | KornError::InvalidProfile(_)
            | KornError::Parse(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Run(format!("cannot write {}: {e}", path.display()))
}

fn emit_json(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| io_err(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_csv(cfg: &RunConfig, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), KornError>) -> Result<(), Failure> {
    if let Some(p) = &cfg.csv {
        let mut w = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
        write(&mut w)?;
        w.flush().map_err(|e| io_err(p, e))?;
    }
    Ok(())
}

fn config_value(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn surface(cfg: &RunConfig) -> Result<SurfacePatch, Failure> {
    let s = cfg.surface.as_ref().ok_or_else(|| Failure::Config("--surface is required".into()))?;
    Ok(s.build()?)
}

fn emit_sweep(cfg: &RunConfig, mut report: SweepReport) -> Result<(), Failure> {
    if let serde_json::Value::Object(m) = &mut report.settings {
        m.insert("config".into(), config_value(cfg));
    }
    emit_json(cfg, &report.to_json())?;
    emit_csv(cfg, |w| report.write_csv(w))?;
    eprintln!(
        "{}: {} points, slope {:.4} (rms residual {:.2e})",
        report.kind,
        report.points.len(),
        report.fit.slope,
        report.fit.residual
    );
    for (name, fit) in &report.extra_fits {
        eprintln!("  {name}: slope {:.4}", fit.slope);
    }
    Ok(())
}

pub fn sweep_constant_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let patch = surface(cfg)?;
    let policy = cfg.policy()?;
    let opts = EigenOptions { tol: cfg.tol, seed: cfg.seed, ..EigenOptions::default() };
    let report = sweep_constant(&patch, &cfg.hs, &policy, &opts, cfg.quotient)?;
    emit_sweep(cfg, report)
}

pub fn sweep_ansatz_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let patch = surface(cfg)?;
    let profile = ProfileW::named(&cfg.profile, &patch)?;
    let report = ansatz_sweep(&patch, &profile, &cfg.hs, cfg.ansatz_grid()?)?;
    emit_sweep(cfg, report)
}

pub fn rect_estimates_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let report = estimate_sweep(&cfg.hs, cfg.b, cfg.kind.as_deref())?;
    let doc = serde_json::json!({ "config": config_value(cfg), "report": report });
    emit_json(cfg, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    emit_csv(cfg, |w| report.write_csv(w))?;
    for s in &report.summaries {
        let trend = s.trend_slope.map(|t| format!(", trend {t:.3}")).unwrap_or_default();
        eprintln!(
            "{}: {} ({} cases, max ratio {:.4}{trend})",
            s.estimate,
            if s.passed { "pass" } else { "FAIL" },
            s.cases,
            s.max_ratio
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Run("a rectangle estimate failed".into()))
    }
}

#[derive(Serialize)]
struct RigidCase {
    translation: [f64; 3],
    rotation: [[f64; 3]; 3],
    study: RigidStudy,
    passed: bool,
}

pub fn check_rigid_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let patch = surface(cfg)?;
    let h = cfg.hs[0];
    let motions = match cfg.rigid {
        Some(m) => vec![m],
        None => random_rigid_motions(cfg.seed, 5),
    };
    let mut cases = Vec::with_capacity(motions.len());
    for (a, b) in motions {
        let study = rigid_refinement(a, b, &patch, h, &cfg.levels)?;
        let passed = study.passes(MIN_RIGID_ORDER);
        cases.push(RigidCase { translation: a, rotation: b, study, passed });
    }
    let all = cases.iter().all(|c| c.passed);
    let doc = serde_json::json!({
        "config": config_value(cfg),
        "patch": patch.descriptor(),
        "min_order": MIN_RIGID_ORDER,
        "cases": cases,
        "passed": all,
    });
    emit_json(cfg, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    emit_csv(cfg, |w| {
        writeln!(w, "case,nodes,spacing,residual")?;
        for (i, c) in cases.iter().enumerate() {
            for l in &c.study.levels {
                writeln!(w, "{i},{},{},{}", l.nodes, l.spacing, l.residual)?;
            }
        }
        Ok(())
    })?;
    for (i, c) in cases.iter().enumerate() {
        let order = c.study.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "exact".into());
        let last = c.study.levels.last().map(|l| l.residual).unwrap_or(0.0);
        eprintln!("motion {i}: order {order}, finest residual {last:.3e}, {}", if c.passed { "pass" } else { "FAIL" });
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Run(format!("observed order below {MIN_RIGID_ORDER}")))
    }
}
