use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().map(|_| cc)
}

/// `target/<profile>`, the directory holding the staticlib.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(manifest().join("include/whitebox_ca.h")).unwrap();
    for name in [
        "wca_version",
        "wca_last_error",
        "wca_string_free",
        "wca_ruleset_parse",
        "wca_lattice_new",
        "wca_simulation_new",
        "wca_simulation_explain",
        "WCA_STATUS_UNSUPPORTED = 4",
        "typedef struct WcaSimulation WcaSimulation;",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler, skipped");
        return;
    };
    let include = manifest().join("include");
    let source = manifest().join("tests/c/blinker.c");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&source)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile");

    let lib = profile_dir().join("libwhitebox_ca_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, link step skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("blinker");
    let status = Command::new(&cc)
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&source)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(text.trim(), format!("ok {}", env!("CARGO_PKG_VERSION")));
}
