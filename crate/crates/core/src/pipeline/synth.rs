//! Synthetic equisolid sequences of a translating textured plane.
//!
//! The scene is a fronto-parallel plane carrying band-limited noise (a sum
//! of cosines). Frame `t` shows the plane shifted by `t * motion` in
//! perspective-plane millimeters, imaged through the equisolid lens. Each
//! cosine is attenuated where the lens compresses it above half the pixel
//! Nyquist rate, so the rendered frames are free of aliasing. Pixels that
//! do not see the plane (incident angle of 90 degrees or more, or outside
//! the field-of-view circle) are black.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{CameraModel, PixelCoord};
use crate::imaging::{Frame, Plane};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Perspective-plane translation per frame, mm.
    pub motion_mm: [f64; 2],
    pub texture_seed: u64,
    pub frames: usize,
    pub components: usize,
    /// Wavelength band of the texture, mm on the perspective plane.
    pub wavelength_mm: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
}

/// Band-limited random texture on the perspective plane.
#[derive(Debug, Clone)]
pub struct Texture {
    waves: Vec<Wave>,
    amplitude: f64,
}

impl Texture {
    pub fn new(seed: u64, components: usize, wavelength_mm: [f64; 2]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [lo, hi] = wavelength_mm;
        let waves = (0..components)
            .map(|_| {
                let lambda = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                let dir = rng.gen_range(0.0..PI);
                let k = TAU / lambda;
                Wave {
                    kx: k * dir.cos(),
                    ky: k * dir.sin(),
                    phase: rng.gen_range(0.0..TAU),
                }
            })
            .collect();
        // Standard deviation of about 40 gray levels.
        let amplitude = 40.0 / (components as f64 / 2.0).sqrt();
        Texture { waves, amplitude }
    }

    /// Unattenuated texture value at perspective-plane millimeters.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        128.0
            + self.amplitude
                * self
                    .waves
                    .iter()
                    .map(|w| (w.kx * x + w.ky * y + w.phase).cos())
                    .sum::<f64>()
    }
}

/// Local lens mapping at one pixel: perspective position and the pieces of
/// the Jacobian of equisolid -> perspective millimeters.
struct LocalMap {
    xp: f64,
    yp: f64,
    /// Tangential gain `r_p / r_e`.
    g: f64,
    /// Radial gain `dr_p / dr_e`.
    h: f64,
    ux: f64,
    uy: f64,
}

fn local_map(cam: &CameraModel, p: PixelCoord) -> Option<LocalMap> {
    let (xe, ye) = cam.pixel_to_mm(p);
    let re = xe.hypot(ye);
    if re > cam.max_equisolid_radius() {
        return None;
    }
    let f = cam.focal_length;
    let theta = cam.incident_angle(re).ok()?;
    if theta >= PI / 2.0 {
        return None;
    }
    let (g, ux, uy) = if re == 0.0 {
        (1.0, 1.0, 0.0)
    } else {
        (f * theta.tan() / re, xe / re, ye / re)
    };
    let c = theta.cos();
    let h = 1.0 / (c * c * (theta / 2.0).cos());
    Some(LocalMap {
        xp: xe * g,
        yp: ye * g,
        g,
        h,
        ux,
        uy,
    })
}

fn attenuation(cycles_per_pixel: f64) -> f64 {
    // Full contrast below 0.25 cycles/pixel, fading to zero at Nyquist.
    let t = ((0.5 - cycles_per_pixel) / 0.25).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Renders `params.frames` luma frames.
pub fn generate_synthetic(cam: &CameraModel, params: &SynthParams) -> Vec<Frame> {
    let texture = Texture::new(params.texture_seed, params.components, params.wavelength_mm);
    let (w, h) = (cam.image_width, cam.image_height);
    let (px, py) = (cam.pitch_x(), cam.pitch_y());

    // Per-pixel perspective position and per-wave attenuation are fixed
    // across frames.
    let pixels: Vec<Option<(f64, f64, Vec<f64>)>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let p = PixelCoord::new((i % w) as f64, (i / w) as f64);
            let m = local_map(cam, p)?;
            let weights = texture
                .waves
                .iter()
                .map(|wave| {
                    // J^T k with J = g I + (h - g) u u^T, then per-axis pitch.
                    let dot = m.ux * wave.kx + m.uy * wave.ky;
                    let jx = m.g * wave.kx + (m.h - m.g) * dot * m.ux;
                    let jy = m.g * wave.ky + (m.h - m.g) * dot * m.uy;
                    attenuation((jx * px).hypot(jy * py) / TAU)
                })
                .collect();
            Some((m.xp, m.yp, weights))
        })
        .collect();

    (0..params.frames)
        .map(|t| {
            let (sx, sy) = (
                t as f64 * params.motion_mm[0],
                t as f64 * params.motion_mm[1],
            );
            let data: Vec<u8> = pixels
                .par_iter()
                .map(|px| match px {
                    None => 0,
                    Some((xp, yp, weights)) => {
                        let (x, y) = (xp - sx, yp - sy);
                        let s: f64 = texture
                            .waves
                            .iter()
                            .zip(weights)
                            .map(|(wave, wt)| wt * (wave.kx * x + wave.ky * y + wave.phase).cos())
                            .sum();
                        (128.0 + texture.amplitude * s).round().clamp(0.0, 255.0) as u8
                    }
                })
                .collect();
            Frame::luma_only(Plane::from_vec(w, h, data).expect("raster size"))
        })
        .collect()
}
