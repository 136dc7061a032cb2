use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const ELLIPTIC: &str = r#"
seed = 4

[model]
kind = "elliptic1d"
n_sources = 3
cells_per_gap = 8
inner = "coefficient_dependent"

[model.coefficient]
theta = [0.5]
base = { kind = "constant", value = 1.0 }
basis = [{ kind = "sin_squared", k = 3.0 }]
"#;

const POISSON_SPAN: &str = r#"
[model]
kind = "poisson2d"
mesh = 16
n_sources = 6
inner = "coefficient_independent"
basis = "span"

[model.coefficient]
theta = [0.0]
base = { kind = "poisson_base" }
basis = [{ kind = "sin_squared_axis", k = 10.0, axis = 0, scale = 100.0 }]
"#;

const HELMHOLTZ: &str = r#"
spectral_step = 1e-3

[model]
kind = "helmholtz1d"
n_sources = 4
k = 20.0
"#;

const SCHRODINGER: &str = r#"
truth = [0.8, -0.3, 0.5]

[model]
kind = "schrodinger2d"
mesh = 12
n_sources = 6
source_width = 10.0
n_potentials = 3
lambda = 1.0
basis = "span"
"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("config.toml"), config).unwrap();
        Self { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, command: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_pdeinv"))
            .arg(command)
            .arg("--config")
            .arg(self.dir.path().join("config.toml"))
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .env("PDEINV_THREADS", "2")
            .output()
            .unwrap()
    }

    fn ok(&self, command: &str) {
        let o = self.exec(command, &[]);
        assert!(o.status.success(), "{command}: {}", String::from_utf8_lossy(&o.stderr));
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

/// `(i, j, re, im)` rows of a matrix CSV.
fn matrix(text: &str) -> Vec<(usize, usize, f64, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,j,re,im"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

/// Landscape rows `(theta, rho, mode, J)`.
fn landscape(text: &str) -> Vec<(f64, String, String, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,rho,mode,J"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].to_string(), f[2].to_string(), f[3].parse().unwrap())
        })
        .collect()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn synthesize_writes_symmetric_data_and_metadata() {
    let r = Run::new(ELLIPTIC);
    r.ok("synthesize");
    assert_eq!(files(&r.out()), ["data.csv", "metadata.json"]);
    let d = matrix(&r.read("data.csv"));
    assert_eq!(d.len(), 9);
    let at = |i, j| d.iter().find(|e| e.0 == i && e.1 == j).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (at(i, j), at(j, i));
            assert!((a.2 - b.2).abs() <= 1e-12 * a.2.abs().max(1e-300), "{a:?} {b:?}");
            assert_eq!(a.3, 0.0);
        }
    }
    let m = r.json("metadata.json");
    assert_eq!(m["command"], "synthesize");
    assert_eq!(m["model"], "elliptic1d");
    assert_eq!(m["seed"], 4);
    assert_eq!(m["n_sources"], 3);
    assert_eq!(m["truth"], serde_json::json!([0.5]));
}

#[test]
fn outputs_are_reproducible() {
    let noisy = format!("noise = 0.05\n{ELLIPTIC}\n[landscape]\nstart = 0.0\nend = 1.0\npoints = 7\n");
    let (a, b) = (Run::new(&noisy), Run::new(&noisy));
    for cmd in ["synthesize", "landscape"] {
        a.ok(cmd);
        b.ok(cmd);
    }
    assert_eq!(a.read("data.csv"), b.read("data.csv"));
    assert_eq!(a.read("landscape.csv"), b.read("landscape.csv"));
    assert_eq!(a.read("metadata.json"), b.read("metadata.json"));

    let c = Run::new(&noisy);
    assert!(c.exec("synthesize", &["--seed", "5"]).status.success());
    assert_ne!(a.read("data.csv"), c.read("data.csv"));
    assert_eq!(c.json("metadata.json")["seed"], 5);
}

#[test]
fn spectral_step_writes_three_data_and_trace_files() {
    let r = Run::new(HELMHOLTZ);
    r.ok("synthesize");
    assert_eq!(
        files(&r.out()),
        ["data_0.csv", "data_1.csv", "data_2.csv", "metadata.json", "traces_0.csv", "traces_1.csv", "traces_2.csv"]
    );
    let spectral = r.json("metadata.json")["spectral"].clone();
    let s: Vec<f64> = serde_json::from_value(spectral).unwrap();
    assert_eq!(s.len(), 3);
    assert!((s[0] - 19.999).abs() < 1e-12 && s[1] == 20.0 && (s[2] - 20.001).abs() < 1e-12, "{s:?}");
}

#[test]
fn landscape_minimum_sits_at_truth() {
    let cfg = format!(
        "{POISSON_SPAN}\n[[objectives]]\nmode = \"variable\"\nrho = \"zero\"\n\n[landscape]\nstart = 0.0\nend = 2.0\npoints = 11\n"
    );
    let r = Run::new(&cfg);
    r.ok("landscape");
    let rows = landscape(&r.read("landscape.csv"));
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|row| row.1 == "zero" && row.2 == "variable" && row.3 >= 0.0));
    let best = rows.iter().min_by(|a, b| a.3.total_cmp(&b.3)).unwrap();
    assert!(best.0.abs() < 1e-12, "{best:?}");
    assert!(best.3 < 1e-10 * rows[10].3);
}

#[test]
fn landscape_single_point_and_infinite_penalty() {
    let cfg = format!(
        "{ELLIPTIC}\n[[objectives]]\nmode = \"conventional\"\n\n[[objectives]]\nmode = \"variable\"\nrho = \"inf\"\n\n[landscape]\nstart = 0.3\nend = 0.3\npoints = 1\n"
    );
    let r = Run::new(&cfg);
    r.ok("landscape");
    let rows = landscape(&r.read("landscape.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|row| row.0 == 0.3));
    assert!((rows[0].3 - rows[1].3).abs() <= 1e-14 * rows[0].3, "{rows:?}");
}

#[test]
fn invert_writes_reports_and_recovers_truth() {
    let cfg = format!("initial = [0.2]\n{ELLIPTIC}\n[[objectives]]\nmode = \"variable\"\n\n[[objectives]]\nmode = \"data_driven\"\nrho = 0.5\n");
    let r = Run::new(&cfg);
    r.ok("invert");
    for label in ["variable_rho1.0", "data_driven_rho0.5"] {
        let rep = r.json(&format!("report_{label}.json"));
        assert_eq!(rep["label"], label);
        let theta = rep["final_theta"][0].as_f64().unwrap();
        assert!((theta - 0.5).abs() < 1e-5, "{label}: {theta}");
        let hist: Vec<f64> = serde_json::from_value(rep["objective_history"].clone()).unwrap();
        assert!(hist.windows(2).all(|w| w[1] <= w[0]));
        let coef = r.read(&format!("coefficients_{label}.csv"));
        assert_eq!(coef.lines().count(), 2);
    }
    assert_eq!(r.json("report_variable_rho1.0.json")["rho"], 1.0);
    let summary = r.read("summary.csv");
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("label,mode,rho,data_fit,parameter_error"));
}

#[test]
fn invert_from_truth_stays_at_truth() {
    let cfg = format!("initial = [0.5]\n{ELLIPTIC}");
    let r = Run::new(&cfg);
    r.ok("invert");
    let rep = r.json("report_variable_rho1.0.json");
    assert_eq!(rep["final_theta"][0].as_f64().unwrap(), 0.5);
    assert_eq!(rep["iterations"], 0);
}

#[test]
fn direct_recovers_potential_from_consistent_data() {
    let r = Run::new(SCHRODINGER);
    r.ok("direct");
    let out = r.json("direct.json");
    assert!(out["max_error"].as_f64().unwrap() < 1e-8, "{out}");
    assert_eq!(out["selection"]["kind"], "column");
    let coef = r.read("coefficients.csv");
    assert_eq!(coef.lines().count(), 4);

    let e = Run::new(ELLIPTIC).exec("direct", &[]);
    assert_eq!(e.status.code(), Some(2));
}

#[test]
fn gramcheck_reports_helmholtz_estimate() {
    let r = Run::new(&format!("{HELMHOLTZ}\n[data_gram]\nsteps = [2e-3, 1e-3]\n"));
    r.ok("gramcheck");
    let g = r.json("gramcheck.json");
    let entries = g["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    let ratio = g["ratios"][0].as_f64().unwrap();
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");

    let e = Run::new(ELLIPTIC);
    e.ok("gramcheck");
    let g = e.json("gramcheck.json");
    assert!(g["entries"][0]["relative_error"].as_f64().unwrap() < 1e-10, "{g}");
}

#[test]
fn bad_input_exits_with_code_two() {
    let r = Run::new("seed = 1\n");
    let o = r.exec("synthesize", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let r = Run::new(&ELLIPTIC.replace("n_sources = 3", "n_sources = 3\nextra = true"));
    assert_eq!(r.exec("synthesize", &[]).status.code(), Some(2));

    let r = Run::new(ELLIPTIC);
    assert_eq!(r.exec("landscape", &[]).status.code(), Some(2));
    assert_eq!(r.exec("synthesize", &["--threads", "0"]).status.code(), Some(2));

    let missing = Command::new(env!("CARGO_BIN_EXE_pdeinv"))
        .args(["synthesize", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let usage = Command::new(env!("CARGO_BIN_EXE_pdeinv")).arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_code_three() {
    // Sixty overlapping ring sources make the span Gram numerically singular.
    let cfg = POISSON_SPAN.replace("n_sources = 6", "n_sources = 60");
    let o = Run::new(&cfg).exec("synthesize", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg =
                pdeinv::config::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.problem().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}
