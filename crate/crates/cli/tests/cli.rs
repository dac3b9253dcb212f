use std::process::Command;

fn shapelab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapelab"))
}

#[test]
fn lists_presets() {
    let out = shapelab().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["linear-awgn", "ssfm-3ch-4span", "ssfm-3ch-dcf", "npn-grid"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapelab()
        .args(["run", "linear-awgn", "--seed", "5", "--workers", "1", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("linear-awgn.csv");
    assert!(csv.exists());
    let manifest = std::fs::read_to_string(dir.path().join("linear-awgn.manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"));
    let report = shapelab().arg("report").arg(&csv).output().unwrap();
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("ss") && text.contains("mpr"), "{text}");
}

#[test]
fn kernel_from_link_config_uses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let link = dir.path().join("link.toml");
    std::fs::write(
        &link,
        r#"
kernel_memory = 8
kernel_rel_tol = 1e-4

[grid]
channels = 3
spacing_ghz = 50.0
baud_gbd = 41.67
rolloff = 0.1
samples_per_symbol = 4

[link]
repeat = 2
[[link.cell]]
length_km = 80.0
attenuation_db_per_km = 0.2
dispersion_ps_per_nm_km = 17.0
gamma_per_w_km = 1.3
"#,
    )
    .unwrap();
    let cache = dir.path().join("cache");
    let run = || {
        let out = shapelab().arg("kernel").arg(&link).arg("--cache-dir").arg(&cache).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(run().starts_with("computed"));
    assert!(run().starts_with("cached"));
}

#[test]
fn unknown_config_fails() {
    let out = shapelab().args(["sweep", "no-such-preset"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("neither a file nor a preset"));
}
