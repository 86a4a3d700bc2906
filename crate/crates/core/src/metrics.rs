//! Loss-area PSNR and per-sequence aggregation.

use serde::{Deserialize, Serialize};

use crate::concealment::{BlockDecision, Method};
use crate::error::{Error, Result};
use crate::imaging::Plane;
use crate::loss_model::LossMap;

/// Peak sample value for 8-bit video.
pub const PEAK: f64 = 255.0;

/// Stand-in for an infinite PSNR in tables and averages.
pub const PSNR_CAP_DB: f64 = 99.99;

/// Squared-error sum and pixel count over the union of the loss areas.
pub fn loss_area_error(orig: &Plane, concealed: &Plane, losses: &LossMap) -> Result<(u64, usize)> {
    orig.same_dims(concealed)?;
    if losses.is_empty() {
        return Err(Error::EmptyLossSet);
    }
    let mask = losses.mask(orig.width(), orig.height());
    let (mut sse, mut n) = (0u64, 0usize);
    for ((lost, a), b) in mask.iter().zip(orig.data()).zip(concealed.data()) {
        if *lost {
            let d = *a as i64 - *b as i64;
            sse += (d * d) as u64;
            n += 1;
        }
    }
    Ok((sse, n))
}

/// `10 log10(255^2 / MSE)` over the loss areas; `f64::INFINITY` when the
/// concealment is exact.
pub fn psnr_loss_area(orig: &Plane, concealed: &Plane, losses: &LossMap) -> Result<f64> {
    let (sse, n) = loss_area_error(orig, concealed, losses)?;
    Ok(psnr_from_mse(sse as f64 / n as f64))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// PSNR for display and averaging: infinity becomes [`PSNR_CAP_DB`].
pub fn capped(psnr: f64) -> f64 {
    if psnr.is_infinite() {
        PSNR_CAP_DB
    } else {
        psnr
    }
}

fn finite_or_null(psnr: f64) -> Option<f64> {
    psnr.is_finite().then_some(psnr)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodCounts {
    pub dmve: usize,
    pub etec: usize,
}

impl MethodCounts {
    pub fn from_decisions(decisions: &[BlockDecision]) -> Self {
        let etec = decisions.iter().filter(|d| d.method == Method::Etec).count();
        MethodCounts {
            dmve: decisions.len() - etec,
            etec,
        }
    }

    pub fn total(&self) -> usize {
        self.dmve + self.etec
    }
}

/// Per-frame scores. PSNR values are `None` when infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    /// Baseline DMVE PSNR over the loss areas.
    pub psnr_dmve: Option<f64>,
    /// PSNR of the engine under evaluation.
    pub psnr_hetec: Option<f64>,
    /// `psnr_hetec - psnr_dmve` with infinities capped; `None` when both are
    /// infinite.
    pub gain: Option<f64>,
    pub counts: MethodCounts,
    /// Feasible blocks not containing the principal point, and how many of
    /// them chose E-TEC.
    pub feasible_off_center: usize,
    pub feasible_off_center_etec: usize,
    pub blocks: Vec<BlockDecision>,
}

impl FrameScore {
    pub fn new(frame_index: usize, psnr_dmve: f64, psnr_hetec: f64, blocks: Vec<BlockDecision>) -> Self {
        let gain = if psnr_dmve.is_infinite() && psnr_hetec.is_infinite() {
            None
        } else {
            Some(capped(psnr_hetec) - capped(psnr_dmve))
        };
        FrameScore {
            frame_index,
            psnr_dmve: finite_or_null(psnr_dmve),
            psnr_hetec: finite_or_null(psnr_hetec),
            gain,
            counts: MethodCounts::from_decisions(&blocks),
            feasible_off_center: 0,
            feasible_off_center_etec: 0,
            blocks,
        }
    }

    fn display(v: Option<f64>) -> f64 {
        v.unwrap_or(PSNR_CAP_DB)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    /// Frames entering the averages (not infinite for every method).
    pub frames_averaged: usize,
    pub mean_psnr_dmve: Option<f64>,
    pub mean_psnr_hetec: Option<f64>,
    pub mean_gain: Option<f64>,
    pub max_gain: Option<f64>,
    pub max_gain_frame: Option<usize>,
    pub counts: MethodCounts,
    pub etec_fraction: Option<f64>,
    pub feasible_off_center: usize,
    pub feasible_off_center_etec: usize,
}

/// Sequence averages and the best single-frame gain.
pub fn aggregate(scores: &[FrameScore]) -> Result<Summary> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let averaged: Vec<&FrameScore> = scores.iter().filter(|s| s.gain.is_some()).collect();
    let mean = |f: &dyn Fn(&FrameScore) -> f64| {
        (!averaged.is_empty())
            .then(|| averaged.iter().map(|s| f(s)).sum::<f64>() / averaged.len() as f64)
    };
    let mean_psnr_dmve = mean(&|s| FrameScore::display(s.psnr_dmve));
    let mean_psnr_hetec = mean(&|s| FrameScore::display(s.psnr_hetec));
    let mean_gain = mean(&|s| s.gain.unwrap_or(0.0));

    let mut max_gain: Option<(f64, usize)> = None;
    for s in &averaged {
        let g = s.gain.unwrap_or(0.0);
        if max_gain.is_none_or(|(m, _)| g > m) {
            max_gain = Some((g, s.frame_index));
        }
    }

    let counts = scores.iter().fold(MethodCounts::default(), |acc, s| MethodCounts {
        dmve: acc.dmve + s.counts.dmve,
        etec: acc.etec + s.counts.etec,
    });
    Ok(Summary {
        frames: scores.len(),
        frames_averaged: averaged.len(),
        mean_psnr_dmve,
        mean_psnr_hetec,
        mean_gain,
        max_gain: max_gain.map(|(g, _)| g),
        max_gain_frame: max_gain.map(|(_, i)| i),
        counts,
        etec_fraction: (counts.total() > 0).then(|| counts.etec as f64 / counts.total() as f64),
        feasible_off_center: scores.iter().map(|s| s.feasible_off_center).sum(),
        feasible_off_center_etec: scores.iter().map(|s| s.feasible_off_center_etec).sum(),
    })
}
