//! The generated header must compile as C and C++ and declare every export.

use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("mimo_cfo.h")
}

const USE_ALL: &str = r#"
#include "mimo_cfo.h"
int main(void) {
    MimoCfoSystem *sys = 0;
    double w = 0.0, out[4];
    uint64_t k;
    MimoCfoStatus s = mimo_cfo_system_new(4, 2, 1, 8, 1.0, 1.0, &w, 1, &sys);
    uintptr_t b;
    s = mimo_cfo_system_blocks(sys, &b);
    s = mimo_cfo_estimate(sys, out, 4, out, 2, 0);
    s = mimo_cfo_simulate_estimate(sys, 1, 0, out, 2, 0);
    s = mimo_cfo_crlb(sys, 1, 0, out, 4);
    s = mimo_cfo_theoretical_mse(sys, 1.0, 1.0, &w);
    s = mimo_cfo_gamma_threshold(sys, 1.0, &w);
    s = mimo_cfo_required_snr(sys, 1e-8, 1.0, &w);
    s = mimo_cfo_noise_variance(sys, 1.0, 1.0, 0.0, &w, &w);
    s = mimo_cfo_max_users(1e-7, 2e9, 5e-6, &k);
    (void)mimo_cfo_last_error();
    mimo_cfo_system_free(sys);
    return s == MIMO_CFO_STATUS_OK ? 0 : 1;
}
"#;

fn syntax_check(compiler: &str, lang: &str) {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join(format!("use_all.{lang}"));
    std::fs::write(&src, USE_ALL).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let out = match Command::new(compiler)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .output()
    {
        Ok(o) => o,
        Err(_) => {
            eprintln!("{compiler} not available; skipping");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn header_declares_all_exports() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    for line in src.lines().filter(|l| l.contains("extern \"C\" fn ")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("typedef struct MimoCfoSystem MimoCfoSystem;"));
}

#[test]
fn header_compiles_as_c() {
    syntax_check("cc", "c");
}

#[test]
fn header_compiles_as_cpp() {
    syntax_check("c++", "cpp");
}
