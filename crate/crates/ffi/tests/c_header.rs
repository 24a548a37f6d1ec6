//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "floquet_ep.h"

int main(void) {
    FepModel *m = NULL;
    if (fep_model_new(FEP_FAMILY_STATIC, FEP_DISSIPATOR_MINUS, 8.0, 40.0, 1.0, &m) != FEP_STATUS_OK) return 1;
    FepSpectrum *s = NULL;
    if (fep_spectrum_compute(m, &s) != FEP_STATUS_OK) return 2;
    FepObservables o;
    if (fep_spectrum_observables(s, &o) != FEP_STATUS_OK) return 3;
    fep_spectrum_free(s);
    fep_model_free(m);
    if (fep_spectrum_compute(NULL, &s) != FEP_STATUS_NULL_POINTER) return 4;
    char msg[64];
    fep_last_error_message(msg, sizeof msg);
    printf("%s|%.6f|%s\n", fep_version(), o.ip, msg);
    return 0;
}
"#;

fn static_lib() -> Option<PathBuf> {
    // target/<profile>/deps/c_header-… → target/<profile>
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libfloquet_ep_ffi.a");
    lib.exists().then_some(lib)
}

fn compiler() -> String {
    std::env::var("CC").unwrap_or_else(|_| "cc".into())
}

#[test]
fn header_compiles_links_and_runs() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = static_lib().expect("static library next to the test binary; build with `cargo test`");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new(compiler())
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .expect("C compiler available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = stdout.trim().split('|').collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    // static σ₋ EP at γ = 8
    assert!(fields[1].parse::<f64>().unwrap() > 0.999);
    assert_eq!(fields[2], "model is NULL");
}

#[test]
fn header_is_valid_cxx() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("h.cpp");
    std::fs::write(&src, "#include \"floquet_ep.h\"\nint main() { return fep_version() == nullptr; }\n").unwrap();
    let cxx = std::env::var("CXX").unwrap_or_else(|_| "c++".into());
    let out = Command::new(cxx)
        .args(["-std=c++11", "-Wall", "-Werror", "-fsyntax-only"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .output()
        .expect("C++ compiler available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
