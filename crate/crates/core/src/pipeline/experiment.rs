//! Loss injection, concealment, scoring and artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::config::{validate_synthetic, ExperimentConfig, InputFormat, SyntheticConfig};
use super::io::{load_sequence, write_pgm, write_png_rgb, write_yuv420};
use super::synth::{generate_synthetic, SynthParams};
use crate::concealment::{
    conceal_frame, BlockDecision, ConcealmentEngine, DmveEngine, EngineRegistry, Method, SearchConfig,
};
use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::imaging::{Frame, Plane};
use crate::loss_model::{corrupt_frame, inject, LossMap};
use crate::metrics::{aggregate, psnr_loss_area, FrameScore, Summary};

pub const REPORT_FILE: &str = "report.json";

/// JSON report written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub engine: String,
    pub width: usize,
    pub height: usize,
    pub search: SearchConfig,
    pub frames: Vec<FrameScore>,
    pub summary: Summary,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Renders a synthetic sequence from a `[synthetic]` section.
pub fn synthesize(cam_cfg: &super::config::CameraConfig, s: &SyntheticConfig) -> Result<(CameraModel, Vec<Frame>)> {
    validate_synthetic(s)?;
    let cam = cam_cfg.build(s.width, s.height)?;
    let params = SynthParams {
        motion_mm: s.motion_mm(&cam),
        texture_seed: s.texture_seed,
        frames: s.frames,
        components: s.components,
        wavelength_mm: [
            s.wavelength_px[0] * cam.pitch_x(),
            s.wavelength_px[1] * cam.pitch_x(),
        ],
    };
    Ok((cam.clone(), generate_synthetic(&cam, &params)))
}

/// Generates the configured synthetic sequence and writes it as YUV 4:2:0.
/// Returns the output path.
pub fn write_synthetic(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let s = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("missing [synthetic] section".into()))?;
    let (_, frames) = synthesize(&cfg.camera, s)?;
    let path = s
        .output
        .clone()
        .unwrap_or_else(|| cfg.output.dir.join("synthetic.yuv"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_yuv420(&path, &frames)?;
    Ok(path)
}

fn load_input(cfg: &ExperimentConfig) -> Result<(CameraModel, Vec<Frame>)> {
    match cfg.input_format()? {
        InputFormat::Synthetic => {
            let s = cfg
                .synthetic
                .as_ref()
                .ok_or_else(|| Error::Config("missing [synthetic] section".into()))?;
            synthesize(&cfg.camera, s)
        }
        format => {
            let path = cfg
                .input
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("input.path is required".into()))?;
            let dims = cfg.input.width.zip(cfg.input.height);
            let frames = load_sequence(path, format, dims)?;
            let first = frames
                .first()
                .ok_or_else(|| Error::Config(format!("{} holds no frames", path.display())))?;
            let cam = cfg.camera.build(first.width(), first.height())?;
            Ok((cam, frames))
        }
    }
}

/// Tracks written files so a failed run leaves nothing behind.
struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Runs the configured experiment, writing artifacts when `write` is set.
///
/// For every tested frame `i` (reference `i - 1`): inject losses, conceal
/// with DMVE as the baseline and with the selected engine, and score both
/// over the loss areas.
pub fn run_experiment(cfg: &ExperimentConfig, registry: &EngineRegistry, write: bool) -> Result<Report> {
    cfg.validate()?;
    let engine = registry.get(&cfg.engine)?;
    let mut artifacts = if write {
        Some(Artifacts::open(&cfg.output.dir)?)
    } else {
        None
    };
    let result = run_inner(cfg, engine.as_ref(), artifacts.as_mut());
    match (result, artifacts) {
        (Ok(report), _) => Ok(report),
        (Err(e), Some(a)) => {
            a.discard();
            Err(e)
        }
        (Err(e), None) => Err(e),
    }
}

fn run_inner(
    cfg: &ExperimentConfig,
    engine: &dyn ConcealmentEngine,
    mut artifacts: Option<&mut Artifacts>,
) -> Result<Report> {
    let (cam, frames) = load_input(cfg)?;
    let search = &cfg.search;
    let (w, h) = (cam.image_width, cam.image_height);
    let end = cfg.frames.end.unwrap_or(frames.len()).min(frames.len());
    if cfg.frames.start >= end {
        return Err(Error::Config(format!(
            "frame range {}..{end} selects no frames from a {}-frame sequence",
            cfg.frames.start,
            frames.len()
        )));
    }

    let mut scores = Vec::new();
    for i in cfg.frames.start..end {
        let (orig, reference) = (&frames[i], &frames[i - 1]);
        let losses = match &cfg.loss.blocks {
            Some(blocks) => LossMap::new(search.block_size, search.decision_width, blocks.clone()),
            None => {
                let pattern = cfg.loss.pattern(search.block_size, i);
                inject(&orig.luma, &pattern, search.decision_width, Some(&cam))?.1
            }
        };
        losses.validate(w, h)?;
        if losses.is_empty() {
            return Err(Error::EmptyLossSet);
        }
        let lossy = corrupt_frame(orig, &losses);

        let baseline = conceal_frame(&DmveEngine, &lossy, reference, &losses, &cam, search)?;
        let tested = if engine.name() == DmveEngine.name() {
            baseline.clone()
        } else {
            conceal_frame(engine, &lossy, reference, &losses, &cam, search)?
        };
        let psnr_dmve = psnr_loss_area(&orig.luma, &baseline.frame.luma, &losses)?;
        let psnr_tested = psnr_loss_area(&orig.luma, &tested.frame.luma, &losses)?;

        let mut score = FrameScore::new(i, psnr_dmve, psnr_tested, tested.decisions.clone());
        let off_center: Vec<&BlockDecision> = tested
            .decisions
            .iter()
            .zip(losses.loss_areas())
            .filter(|(d, r)| {
                let pp = cam.principal_point;
                d.feasible_etec
                    && !(pp.x >= r.x as f64
                        && pp.y >= r.y as f64
                        && pp.x < (r.x + r.width as i64) as f64
                        && pp.y < (r.y + r.height as i64) as f64)
            })
            .map(|(d, _)| d)
            .collect();
        score.feasible_off_center = off_center.len();
        score.feasible_off_center_etec = off_center.iter().filter(|d| d.method == Method::Etec).count();
        scores.push(score);

        if let (Some(a), true) = (artifacts.as_deref_mut(), cfg.output.images) {
            write_pgm(&a.path(&format!("frame_{i:04}_lossy.pgm")), &lossy.luma)?;
            write_pgm(&a.path(&format!("frame_{i:04}_dmve.pgm")), &baseline.frame.luma)?;
            if engine.name() != DmveEngine.name() {
                write_pgm(
                    &a.path(&format!("frame_{i:04}_{}.pgm", engine.name())),
                    &tested.frame.luma,
                )?;
            }
            let overlay = decision_overlay(&tested.frame.luma, &losses, &tested.decisions);
            write_png_rgb(&a.path(&format!("frame_{i:04}_overlay.png")), &overlay)?;
        }
    }

    let summary = aggregate(&scores)?;
    let report = Report {
        engine: engine.name().to_string(),
        width: w,
        height: h,
        search: search.clone(),
        frames: scores,
        summary,
    };
    if let Some(a) = artifacts {
        let path = a.path(REPORT_FILE);
        fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

/// Concealed luma as grayscale RGB with lost blocks tinted at 50% opacity:
/// red where E-TEC was used, blue where DMVE was used.
pub fn decision_overlay(luma: &Plane, losses: &LossMap, decisions: &[BlockDecision]) -> RgbImage {
    let mut img = RgbImage::from_fn(luma.width() as u32, luma.height() as u32, |x, y| {
        let v = luma.get(x as usize, y as usize);
        Rgb([v, v, v])
    });
    for (region, d) in losses.loss_areas().zip(decisions) {
        let tint: [u16; 3] = match d.method {
            Method::Etec => [255, 0, 0],
            Method::Dmve => [0, 0, 255],
        };
        for (x, y) in region.pixels() {
            let px = img.get_pixel_mut(x as u32, y as u32);
            for (v, t) in px.0.iter_mut().zip(tint) {
                *v = (*v as u16 + t).div_ceil(2) as u8;
            }
        }
    }
    img
}

/// Plain-text summary table of a report.
pub fn format_report(report: &Report) -> String {
    use std::fmt::Write;
    let show = |v: Option<f64>| match v {
        Some(v) => format!("{v:8.2}"),
        None => format!("{:>8}", "inf"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "engine: {}   {}x{}   range {}   blocks {}x{}",
        report.engine,
        report.width,
        report.height,
        report.search.range,
        report.search.block_size,
        report.search.block_size
    );
    let _ = writeln!(s, "{:>6} {:>8} {:>8} {:>8} {:>6} {:>6}", "frame", "DMVE", "tested", "gain", "etec", "dmve");
    for f in &report.frames {
        let _ = writeln!(
            s,
            "{:>6} {} {} {} {:>6} {:>6}",
            f.frame_index,
            show(f.psnr_dmve),
            show(f.psnr_hetec),
            f.gain.map_or(format!("{:>8}", "-"), |g| format!("{g:8.2}")),
            f.counts.etec,
            f.counts.dmve
        );
    }
    let m = &report.summary;
    let _ = writeln!(
        s,
        "{:>6} {} {} {} {:>6} {:>6}",
        "mean",
        show(m.mean_psnr_dmve),
        show(m.mean_psnr_hetec),
        show(m.mean_gain),
        m.counts.etec,
        m.counts.dmve
    );
    if let (Some(g), Some(i)) = (m.max_gain, m.max_gain_frame) {
        let _ = writeln!(s, "max gain {g:.2} dB at frame {i}");
    }
    if let Some(frac) = m.etec_fraction {
        let _ = writeln!(s, "E-TEC share {:.1}% of {} blocks", 100.0 * frac, m.counts.total());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_tints_blocks() {
        let luma = Plane::filled(48, 48, 100);
        let losses = LossMap::new(16, 8, vec![[0, 0], [32, 32]]);
        let mk = |origin, method| BlockDecision {
            origin,
            method,
            mv: Default::default(),
            ssd_dmve: None,
            ssd_etec: None,
            feasible_etec: true,
        };
        let img = decision_overlay(&luma, &losses, &[mk([0, 0], Method::Etec), mk([32, 32], Method::Dmve)]);
        assert_eq!(img.get_pixel(3, 3).0, [178, 50, 50]);
        assert_eq!(img.get_pixel(40, 40).0, [50, 50, 178]);
        assert_eq!(img.get_pixel(20, 20).0, [100, 100, 100]);
    }
}
