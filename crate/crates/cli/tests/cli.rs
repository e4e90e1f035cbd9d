use std::process::{Command, Output};

fn kornshell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kornshell")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn missing_surface_is_a_config_error() {
    let o = kornshell(&["sweep-constant", "--h", "0.1,0.05,0.025"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--surface"));
}

#[test]
fn duplicate_h_is_a_config_error() {
    let o = kornshell(&["sweep-constant", "--surface", "cylinder", "--h", "0.1,0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate"));
}

#[test]
fn tolerance_must_be_a_fraction() {
    let o = kornshell(&["sweep-constant", "--surface", "plate", "--tol", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_config_error() {
    let o = kornshell(&["sweep-constant", "--surface", "plate", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_constant_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = kornshell(&[
        "sweep-constant",
        "--surface",
        "cylinder",
        "--h",
        "0.2,0.1,0.05",
        "--grid",
        "4x10x10",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let report = &doc["report"];
    assert_eq!(report["points"].as_array().unwrap().len(), 3);
    assert!(report["fit"]["slope"].is_f64());
    assert_eq!(report["settings"]["config"]["surface"]["name"], "cylinder");
    assert_eq!(report["settings"]["config"]["seed"], 42);
    assert!(doc["metadata"]["timestamp"].is_u64());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("h,value,n_t,n_theta,n_z,seconds"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn same_seed_gives_identical_payload() {
    let args = ["sweep-constant", "--surface", "plate", "--h", "0.2,0.1,0.05", "--grid", "3x6x6", "--seed", "7"];
    let a = json(&kornshell(&args));
    let b = json(&kornshell(&args));
    assert_eq!(serde_json::to_string(&a["report"]).unwrap(), serde_json::to_string(&b["report"]).unwrap());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test config\nsurface = plate\nh = 0.2,0.1,0.05\ngrid = 3x6x6\nseed = 5\n").unwrap();
    let o = kornshell(&["sweep-constant", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let config = &json(&o)["report"]["settings"]["config"];
    assert_eq!(config["surface"]["name"], "plate");
    assert_eq!(config["seed"], 9);
    assert_eq!(config["tol"], 1e-6);
}

#[test]
fn bad_config_line_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "surface cylinder\n").unwrap();
    let o = kornshell(&["sweep-constant", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ansatz_sweep_runs_on_a_resolved_grid() {
    let o = kornshell(&["sweep-ansatz", "--surface", "cylinder", "--h", "0.1,0.05,0.02"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    assert_eq!(doc["report"]["kind"], "ansatz");
    assert!(doc["report"]["extra_fits"]["second"]["slope"].is_f64());
}

#[test]
fn ansatz_rejects_unknown_profile() {
    let o = kornshell(&["sweep-ansatz", "--surface", "cylinder", "--profile", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("profile"));
}

#[test]
fn ansatz_refuses_under_resolved_grid() {
    let o = kornshell(&["sweep-ansatz", "--surface", "cylinder", "--h", "0.1,0.05,0.02", "--grid", "5x16x33"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sqrt(h)"), "{}", stderr(&o));
}

#[test]
fn rect_lemmas_kind_filter() {
    let o = kornshell(&["rect-lemmas", "--kind", "exp-cos"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    let rows = doc["report"]["rows"].as_array().unwrap();
    for r in rows.iter().filter(|r| r["estimate"] == "gradient-separation" || r["estimate"] == "mean-deviation") {
        assert_eq!(r["kind"], "exp-cos");
    }
}

#[test]
fn rect_lemmas_needs_thin_rectangles() {
    let o = kornshell(&["rect-lemmas", "--b", "0.5", "--h", "0.25,0.125,0.0625"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("b > 3h"));
}

#[test]
fn check_rigid_on_cylinder_passes() {
    let o = kornshell(&["check-rigid", "--surface", "cylinder"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    assert_eq!(doc["cases"].as_array().unwrap().len(), 5);
    assert_eq!(doc["passed"], true);
}

#[test]
fn check_rigid_on_plate_is_exact() {
    let o = kornshell(&["check-rigid", "--surface", "plate", "--rigid-a", "1,2,3", "--rigid-b", "0,-1,2,1,0,-3,-2,3,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    for level in doc["cases"][0]["study"]["levels"].as_array().unwrap() {
        assert!(level["residual"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn check_rigid_rejects_non_skew_matrix() {
    let o = kornshell(&["check-rigid", "--surface", "cylinder", "--rigid-b", "1,0,0,0,0,0,0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("skew"));
}
