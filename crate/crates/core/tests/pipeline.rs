use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fisheye_tec::pipeline::io::{write_yuv420, yuv420_frame_size};
use fisheye_tec::pipeline::{run_experiment, ExperimentConfig, Report};
use fisheye_tec::{EngineRegistry, Error, Frame, Method, Plane};

fn textured(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(w, h, |_, _| rng.gen())
}

fn yuv_config(dir: &Path, engine: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
engine = "{engine}"

[input]
format = "yuv420"
path = "seq.yuv"
width = 128
height = 128

[search]
range = 4

[loss]
blocks = [[24, 24], [56, 56], [88, 40]]

[output]
dir = "out"
images = false
{extra}
"#
    );
    let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
    cfg.resolve_paths(dir);
    cfg
}

#[test]
fn static_sequence_conceals_perfectly_with_every_engine() {
    let dir = tempfile::tempdir().unwrap();
    let f = Frame::luma_only(textured(128, 128, 1));
    write_yuv420(&dir.path().join("seq.yuv"), &[f.clone(), f]).unwrap();
    let registry = EngineRegistry::with_builtins();
    for engine in ["dmve", "etec", "hybrid"] {
        let report = run_experiment(&yuv_config(dir.path(), engine, ""), &registry, true).unwrap();
        assert_eq!(report.frames.len(), 1);
        let score = &report.frames[0];
        assert!(score.psnr_dmve.is_none(), "{engine}");
        assert!(score.psnr_hetec.is_none(), "{engine}");
        assert!(score.blocks.iter().all(|b| b.mv.is_zero()));

        let text = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
        assert!(text.contains("\"psnr_dmve\": null"));
        assert_eq!(Report::load(&dir.path().join("out")).unwrap(), report);
    }
}

#[test]
fn hybrid_equals_dmve_when_no_block_back_projects() {
    let dir = tempfile::tempdir().unwrap();
    let a = textured(128, 128, 2);
    let b = Plane::from_fn(128, 128, |x, y| a.get_clamped(x as i64 - 2, y as i64 + 1));
    write_yuv420(&dir.path().join("seq.yuv"), &[Frame::luma_only(a), Frame::luma_only(b)]).unwrap();
    let registry = EngineRegistry::with_builtins();
    let mut dmve = yuv_config(dir.path(), "dmve", "");
    dmve.search.theta_limit_deg = 1.0;
    let mut hybrid = yuv_config(dir.path(), "hybrid", "");
    hybrid.search.theta_limit_deg = 1.0;

    let d = run_experiment(&dmve, &registry, false).unwrap();
    let h = run_experiment(&hybrid, &registry, false).unwrap();
    assert!(h.frames[0].blocks.iter().all(|b| !b.feasible_etec && b.method == Method::Dmve));
    let mvs = |r: &Report| r.frames[0].blocks.iter().map(|b| b.mv).collect::<Vec<_>>();
    assert_eq!(mvs(&d), mvs(&h));
    assert_eq!(d.frames[0].psnr_dmve, h.frames[0].psnr_hetec);
}

#[test]
fn synthetic_motion_favors_the_hybrid() {
    let text = r#"
[input]
format = "synthetic"

[search]
range = 8

[loss]
count = 12
seed = 3

[synthetic]
width = 256
height = 256
frames = 4
motion_px = [2.0, -2.0]
texture_seed = 11
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let report = run_experiment(&cfg, &EngineRegistry::with_builtins(), false).unwrap();
    let s = &report.summary;
    assert_eq!(s.frames, 3);
    assert_eq!(s.counts.total(), 36);
    assert!(s.mean_psnr_hetec.unwrap() >= s.mean_psnr_dmve.unwrap());
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let registry = EngineRegistry::with_builtins();

    let cfg = yuv_config(dir.path(), "nope", "");
    assert!(matches!(run_experiment(&cfg, &registry, false), Err(Error::UnknownEngine(_))));

    let cfg = yuv_config(dir.path(), "dmve", "");
    assert!(matches!(run_experiment(&cfg, &registry, false), Err(Error::Io { .. })));

    fs::write(dir.path().join("seq.yuv"), vec![0u8; yuv420_frame_size(128, 128) + 5]).unwrap();
    assert!(matches!(
        run_experiment(&cfg, &registry, false),
        Err(Error::TruncatedFile { .. })
    ));

    let missing = ExperimentConfig::from_toml("[input]\nformat = \"synthetic\"\n").unwrap();
    assert!(matches!(missing.validate(), Err(Error::Config(_))));

    assert!(ExperimentConfig::from_toml("[input]\nformat = \"yuv420\"\nbogus = 1\n").is_err());

    let mut bad = yuv_config(dir.path(), "dmve", "");
    bad.search.theta_limit_deg = 90.0;
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

#[test]
fn failed_run_leaves_no_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = Frame::luma_only(textured(128, 128, 4));
    write_yuv420(&dir.path().join("seq.yuv"), &[f.clone(), f]).unwrap();
    // The second block does not fit inside the frame.
    let mut cfg = yuv_config(dir.path(), "hybrid", "");
    cfg.loss.blocks = Some(vec![[24, 24], [120, 120]]);
    assert!(run_experiment(&cfg, &EngineRegistry::with_builtins(), true).is_err());
    assert!(!dir.path().join("out/report.json").exists());
}

#[test]
fn bundled_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["synthetic.toml", "yuv.toml"] {
        let cfg = ExperimentConfig::load(&dir.join(name)).unwrap();
        cfg.validate().unwrap();
        assert!(cfg.output.dir.starts_with(&dir));
    }
}
