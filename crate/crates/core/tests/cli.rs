use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn conceal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conceal"))
        .args(args)
        .output()
        .expect("spawn conceal")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        r#"
[input]
format = "synthetic"

[search]
range = 4

[loss]
count = 4
seed = 9

[output]
dir = "run"

[synthetic]
width = 128
height = 128
frames = 3
motion_px = [1.0, 1.0]
output = "seq.yuv"
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = conceal(&["run", "--config", &cfg, "--engine", "etec", "--frames", "2..3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("run");
    for name in [
        "report.json",
        "frame_0002_lossy.pgm",
        "frame_0002_dmve.pgm",
        "frame_0002_etec.pgm",
        "frame_0002_overlay.png",
    ] {
        assert!(run.join(name).exists(), "{name}");
    }
    assert!(!run.join("frame_0001_lossy.pgm").exists());

    let out = conceal(&["report", "--in", run.to_str().unwrap()]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("etec"), "{table}");
}

#[test]
fn synth_writes_yuv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = conceal(&["synth", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let len = fs::metadata(dir.path().join("seq.yuv")).unwrap().len();
    assert_eq!(len, 3 * (128 * 128 + 2 * 64 * 64));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = conceal(&["run", "--config", &cfg, "--engine", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("conceal: "));

    let out = conceal(&["run", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let out = conceal(&["report", "--in", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
