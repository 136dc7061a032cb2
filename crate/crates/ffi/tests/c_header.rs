//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on the path.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "pdeinv.h"

static const char *CONFIG =
    "[model]\n"
    "kind = \"elliptic1d\"\n"
    "n_sources = 2\n"
    "inner = \"coefficient_independent\"\n"
    "[model.coefficient]\n"
    "theta = [0.25]\n"
    "basis = [{ kind = \"sin_squared\", k = 2.0 }]\n"
    "base = { kind = \"constant\", value = 1.0 }\n";

int main(void) {
    PdeinvExperiment *exp = NULL;
    if (pdeinv_experiment_new("not toml [", &exp) != PDEINV_STATUS_CONFIG || exp != NULL) return 1;
    char msg[256];
    if (pdeinv_last_error(msg, sizeof msg) == 0) return 2;
    if (pdeinv_experiment_new(CONFIG, &exp) != PDEINV_STATUS_OK) return 3;
    size_t p = 0, s = 0, o = 0;
    if (pdeinv_experiment_dims(exp, &p, &s, &o) != PDEINV_STATUS_OK || p != 1 || s != 2 || o != 1) return 4;
    double theta = 0.25, value = -1.0, grad = -1.0;
    if (pdeinv_experiment_objective(exp, 0, &theta, 1, &value, &grad) != PDEINV_STATUS_OK) return 5;
    if (value > 1e-20 || value < 0.0) return 6;
    double e[4] = {1.0, 0.0, 0.0, 2.0};
    double out = 0.0;
    if (pdeinv_objective(2, e, NULL, NULL, NULL, 1.0 / 0.0, &out) != PDEINV_STATUS_OK || out < 2.5 - 1e-12 || out > 2.5 + 1e-12) return 7;
    pdeinv_experiment_free(exp);
    printf("%s ok\n", pdeinv_version());
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile = exe.parent()?.parent()?;
    let lib = profile.join("libpdeinv_ffi.a");
    lib.is_file().then_some(lib)
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("prog.c");
    std::fs::write(&src, PROGRAM).unwrap();
    for extra in [&["-std=c99"][..], &["-x", "c++"][..]] {
        let st = Command::new("cc")
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-Wno-div-by-zero", "-I"])
            .arg(include_dir())
            .arg(&src)
            .status()
            .unwrap();
        assert!(st.success(), "header failed with {extra:?}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib().filter(|_| have_cc()) else {
        eprintln!("no C compiler or static library; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("prog.c");
    let exe = dir.path().join("prog");
    std::fs::write(&src, PROGRAM).unwrap();
    let st = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("{} ok", env!("CARGO_PKG_VERSION")));
}
