//! Experiment configuration (TOML).
//!
//! ```toml
//! engine = "hybrid"              # dmve | etec | hybrid
//!
//! [input]
//! format = "yuv420"              # yuv420 | pgm | png | synthetic
//! path = "street.yuv"            # relative to the config file
//! width = 1088
//! height = 1088
//!
//! [camera]
//! focal_length_mm = 1.8
//! sensor_width_mm = 5.2
//! sensor_height_mm = 5.2
//! fov_degrees = 185.0
//! # principal_point = [543.5, 543.5]
//!
//! [search]
//! range = 128
//! block_size = 16
//! decision_width = 8
//! upsample_factor = 8
//! theta_limit_deg = 89.0
//!
//! [loss]
//! count = 20                     # or: density = 0.05, or: blocks = [[x, y], ...]
//! seed = 1
//! min_separation = 8
//! exclude_outside_fov = true
//!
//! [frames]
//! start = 1                      # first concealed frame; frame i uses i - 1 as reference
//! # end = 30                     # exclusive
//!
//! [output]
//! dir = "out"
//! images = true
//!
//! [synthetic]                    # used by `format = "synthetic"` and `conceal synth`
//! width = 512
//! height = 512
//! frames = 11
//! motion_px = [3.0, 2.0]         # perspective-plane translation per frame, in pixel pitches
//! texture_seed = 7
//! output = "synthetic.yuv"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concealment::SearchConfig;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, PixelCoord};
use crate::loss_model::{LossAmount, LossPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Yuv420,
    Pgm,
    Png,
    Synthetic,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yuv" | "yuv420" | "yuv420p" | "i420" => Ok(InputFormat::Yuv420),
            "pgm" => Ok(InputFormat::Pgm),
            "png" => Ok(InputFormat::Png),
            "synthetic" => Ok(InputFormat::Synthetic),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InputFormat::Yuv420 => "yuv420",
            InputFormat::Pgm => "pgm",
            InputFormat::Png => "png",
            InputFormat::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub format: String,
    pub path: Option<PathBuf>,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
    pub fov_degrees: f64,
    pub principal_point: Option<[f64; 2]>,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            focal_length_mm: 1.8,
            sensor_width_mm: 5.2,
            sensor_height_mm: 5.2,
            fov_degrees: 185.0,
            principal_point: None,
        }
    }
}

impl CameraConfig {
    pub fn build(&self, width: usize, height: usize) -> Result<CameraModel> {
        let cam = CameraModel::new(
            self.focal_length_mm,
            self.sensor_width_mm,
            self.sensor_height_mm,
            width,
            height,
            self.fov_degrees,
        )?;
        let cam = match self.principal_point {
            Some([x, y]) => cam.with_principal_point(PixelCoord::new(x, y)),
            None => cam,
        };
        cam.validate()?;
        Ok(cam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub count: Option<usize>,
    pub density: Option<f64>,
    /// Explicit block origins, applied to every tested frame.
    pub blocks: Option<Vec<[usize; 2]>>,
    pub seed: u64,
    pub min_separation: usize,
    pub exclude_outside_fov: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            count: None,
            density: None,
            blocks: None,
            seed: 0,
            min_separation: 8,
            exclude_outside_fov: true,
        }
    }
}

impl LossConfig {
    /// Pattern for one frame; the seed is mixed with the frame index.
    pub fn pattern(&self, block_size: usize, frame_index: usize) -> LossPattern {
        let amount = match (self.count, self.density) {
            (_, Some(d)) => LossAmount::Density(d),
            (Some(n), None) => LossAmount::Count(n),
            (None, None) => LossAmount::Count(10),
        };
        LossPattern {
            block_size,
            seed: frame_seed(self.seed, frame_index),
            amount,
            min_separation: self.min_separation,
            exclude_outside_fov: self.exclude_outside_fov,
        }
    }
}

pub fn frame_seed(seed: u64, frame_index: usize) -> u64 {
    seed ^ (frame_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameRange {
    pub start: usize,
    /// Exclusive; `None` runs to the end of the sequence.
    pub end: Option<usize>,
}

impl Default for FrameRange {
    fn default() -> Self {
        FrameRange {
            start: 1,
            end: None,
        }
    }
}

impl FromStr for FrameRange {
    type Err = Error;

    /// `A..B` (exclusive), `A..=B`, `A..` or a single index `A`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid frame range '{s}'"));
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        if let Some((a, b)) = s.split_once("..") {
            let start = if a.trim().is_empty() { 1 } else { parse(a)? };
            let end = if let Some(b) = b.strip_prefix('=') {
                Some(parse(b)? + 1)
            } else if b.trim().is_empty() {
                None
            } else {
                Some(parse(b)?)
            };
            Ok(FrameRange { start, end })
        } else {
            let a = parse(s)?;
            Ok(FrameRange {
                start: a,
                end: Some(a + 1),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write lossy/concealed PGMs and the decision overlay PNG per frame.
    pub images: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            images: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Perspective-plane translation per frame, millimeters.
    pub motion_mm: Option<[f64; 2]>,
    /// Same, in units of the horizontal / vertical pixel pitch.
    pub motion_px: Option<[f64; 2]>,
    pub texture_seed: u64,
    /// Number of cosine components in the texture.
    pub components: usize,
    /// Texture wavelength band, in pixel pitches at the optical axis.
    pub wavelength_px: [f64; 2],
    /// Where `conceal synth` writes the YUV file.
    pub output: Option<PathBuf>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            width: 512,
            height: 512,
            frames: 11,
            motion_mm: None,
            motion_px: Some([3.0, 2.0]),
            texture_seed: 7,
            components: 24,
            wavelength_px: [6.0, 24.0],
            output: None,
        }
    }
}

impl SyntheticConfig {
    pub fn motion_mm(&self, cam: &CameraModel) -> [f64; 2] {
        match (self.motion_mm, self.motion_px) {
            (Some(mm), _) => mm,
            (None, Some([x, y])) => [x * cam.pitch_x(), y * cam.pitch_y()],
            (None, None) => [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_engine")]
    pub engine: String,
    pub input: InputConfig,
    #[serde(default)]
    pub camera: CameraConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub frames: FrameRange,
    #[serde(default)]
    pub output: OutputConfig,
    pub synthetic: Option<SyntheticConfig>,
}

fn default_engine() -> String {
    "hybrid".to_string()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.input.path.as_mut() {
            fix(p);
        }
        fix(&mut self.output.dir);
        if let Some(p) = self.synthetic.as_mut().and_then(|s| s.output.as_mut()) {
            fix(p);
        }
    }

    pub fn input_format(&self) -> Result<InputFormat> {
        self.input.format.parse()
    }

    /// Checks the whole configuration and reports the first problem.
    pub fn validate(&self) -> Result<()> {
        let format = self.input_format()?;
        self.search.validate()?;
        match format {
            InputFormat::Synthetic => {
                let s = self.synthetic.as_ref().ok_or_else(|| {
                    Error::Config("input.format = \"synthetic\" needs a [synthetic] section".into())
                })?;
                validate_synthetic(s)?;
            }
            InputFormat::Yuv420 => {
                if self.input.path.is_none() {
                    return Err(Error::Config("input.path is required".into()));
                }
                if self.input.width.unwrap_or(0) == 0 || self.input.height.unwrap_or(0) == 0 {
                    return Err(Error::Config(
                        "input.width and input.height are required for yuv420".into(),
                    ));
                }
            }
            InputFormat::Pgm | InputFormat::Png => {
                if self.input.path.is_none() {
                    return Err(Error::Config("input.path is required".into()));
                }
            }
        }
        if self.loss.min_separation < self.search.decision_width && self.loss.blocks.is_none() {
            return Err(Error::Config(format!(
                "loss.min_separation ({}) is smaller than search.decision_width ({})",
                self.loss.min_separation, self.search.decision_width
            )));
        }
        if let Some(d) = self.loss.density {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::Config(format!("loss.density must lie in [0, 1], got {d}")));
            }
        }
        if self.frames.start == 0 {
            return Err(Error::Config(
                "frames.start must be at least 1 (frame 0 has no reference)".into(),
            ));
        }
        if let Some(end) = self.frames.end {
            if end <= self.frames.start {
                return Err(Error::Config(format!(
                    "empty frame range {}..{end}",
                    self.frames.start
                )));
            }
        }
        let (w, h) = match (&self.synthetic, format) {
            (Some(s), InputFormat::Synthetic) => (s.width, s.height),
            _ => (self.input.width.unwrap_or(16), self.input.height.unwrap_or(16)),
        };
        self.camera.build(w, h)?;
        Ok(())
    }
}

pub(crate) fn validate_synthetic(s: &SyntheticConfig) -> Result<()> {
    if s.width == 0 || s.height == 0 {
        return Err(Error::Config("synthetic width and height must be positive".into()));
    }
    if s.frames == 0 {
        return Err(Error::Config("synthetic.frames must be positive".into()));
    }
    if s.components == 0 {
        return Err(Error::Config("synthetic.components must be positive".into()));
    }
    let [lo, hi] = s.wavelength_px;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Config(format!(
            "synthetic.wavelength_px must satisfy 0 < min <= max, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}
