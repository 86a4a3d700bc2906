//! Equisolid temporal error concealment: candidates are applied in the
//! perspective domain and the re-projected positions are read from the
//! upsampled reference.

use super::{candidates, DecisionPixels, MotionVector, SearchConfig, SearchOutcome};
use crate::error::{Error, Result};
use crate::geometry::{back_project_xy, reproject_xy, CameraModel, PixelCoord, ProjectionError};
use crate::imaging::{cubic_sample, to_u8, Plane, Region, UpsampledReference};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtecOutcome {
    pub mv: MotionVector,
    pub ssd: f64,
    /// False when some decision or loss pixel cannot be back-projected.
    pub feasible: bool,
}

/// Maps pixels through back-projection, a perspective shift and
/// re-projection, all in Cartesian form.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Warp {
    pitch_x: f64,
    pitch_y: f64,
    inv_pitch_x: f64,
    inv_pitch_y: f64,
    inv_f2: f64,
    cx: f64,
    cy: f64,
    theta_limit: f64,
}

impl Warp {
    pub(crate) fn new(cam: &CameraModel, theta_limit: f64) -> Self {
        Warp {
            pitch_x: cam.pitch_x(),
            pitch_y: cam.pitch_y(),
            inv_pitch_x: 1.0 / cam.pitch_x(),
            inv_pitch_y: 1.0 / cam.pitch_y(),
            inv_f2: 1.0 / (cam.focal_length * cam.focal_length),
            cx: cam.principal_point.x,
            cy: cam.principal_point.y,
            theta_limit,
        }
    }

    /// Perspective-plane millimeters of a pixel position.
    pub(crate) fn back_project(
        &self,
        x: f64,
        y: f64,
        cam: &CameraModel,
    ) -> Result<[f64; 2], ProjectionError> {
        let (px, py) = back_project_xy(
            (x - self.cx) * self.pitch_x,
            (y - self.cy) * self.pitch_y,
            cam,
            self.theta_limit,
        )?;
        Ok([px, py])
    }

    #[inline]
    pub(crate) fn shift(&self, mv: MotionVector) -> [f64; 2] {
        [mv.dm as f64 * self.pitch_x, mv.dn as f64 * self.pitch_y]
    }

    /// Pixel position of a shifted perspective point.
    #[inline]
    pub(crate) fn pixel_at(&self, p: [f64; 2], shift: [f64; 2]) -> (f64, f64) {
        let (ex, ey) = reproject_xy(p[0] + shift[0], p[1] + shift[1], self.inv_f2);
        (ex * self.inv_pitch_x + self.cx, ey * self.inv_pitch_y + self.cy)
    }
}

fn loss_pixels(block: &Region) -> impl Iterator<Item = (i64, i64)> + '_ {
    block.pixels()
}

fn back_project_all(
    warp: &Warp,
    cam: &CameraModel,
    coords: impl Iterator<Item = (f64, f64)>,
) -> Option<Vec<[f64; 2]>> {
    coords
        .map(|(x, y)| warp.back_project(x, y, cam).ok())
        .collect()
}

/// Whether every decision and loss pixel of `block` back-projects below the
/// incident-angle limit.
pub fn etec_feasible(block: &Region, decision: &DecisionPixels, cam: &CameraModel, cfg: &SearchConfig) -> bool {
    let warp = Warp::new(cam, cfg.theta_limit());
    let ok = |x: f64, y: f64| warp.back_project(x, y, cam).is_ok();
    decision
        .coords
        .iter()
        .all(|&[x, y]| ok(x as f64, y as f64))
        && loss_pixels(block).all(|(x, y)| ok(x as f64, y as f64))
}

/// E-TEC motion search over the `(2R + 1)^2` perspective-domain candidates.
///
/// Candidates are integer multiples of the pixel pitch added in perspective
/// millimeters. Ties keep the earliest candidate in scan order. Infeasible
/// blocks return `feasible = false` with an infinite SSD.
pub fn etec_search(
    decision: &DecisionPixels,
    reference: &UpsampledReference,
    block: &Region,
    cam: &CameraModel,
    cfg: &SearchConfig,
) -> EtecOutcome {
    let infeasible = EtecOutcome {
        mv: MotionVector::ZERO,
        ssd: f64::INFINITY,
        feasible: false,
    };
    if !etec_feasible(block, decision, cam, cfg) {
        return infeasible;
    }
    if decision.is_empty() {
        return EtecOutcome {
            mv: MotionVector::ZERO,
            ssd: 0.0,
            feasible: true,
        };
    }
    let warp = Warp::new(cam, cfg.theta_limit());
    let Some(persp) = back_project_all(
        &warp,
        cam,
        decision.coords.iter().map(|&[x, y]| (x as f64, y as f64)),
    ) else {
        return infeasible;
    };
    let values: Vec<f64> = decision.values.iter().map(|&v| v as f64).collect();

    let mut best = SearchOutcome {
        mv: MotionVector::ZERO,
        ssd: f64::INFINITY,
    };
    for mv in candidates(cfg.range) {
        let shift = warp.shift(mv);
        let ssd = warped_ssd(&warp, &persp, &values, reference, shift, best.ssd);
        if ssd < best.ssd {
            best = SearchOutcome { mv, ssd };
        }
    }
    EtecOutcome {
        mv: best.mv,
        ssd: best.ssd,
        feasible: true,
    }
}

#[inline]
fn warped_ssd(
    warp: &Warp,
    persp: &[[f64; 2]],
    values: &[f64],
    reference: &UpsampledReference,
    shift: [f64; 2],
    bound: f64,
) -> f64 {
    let mut acc = 0.0;
    for (chunk_p, chunk_v) in persp.chunks(64).zip(values.chunks(64)) {
        for (p, v) in chunk_p.iter().zip(chunk_v) {
            let (x, y) = warp.pixel_at(*p, shift);
            let d = v - reference.sample_xy(x, y) as f64;
            acc += d * d;
        }
        if acc >= bound {
            return acc;
        }
    }
    acc
}

/// Fills the loss area with reference samples at the re-projected positions
/// of its pixels shifted by `mv` in the perspective domain.
pub fn etec_conceal(
    reference: &UpsampledReference,
    block: &Region,
    mv: MotionVector,
    cam: &CameraModel,
    cfg: &SearchConfig,
) -> Result<Vec<u8>> {
    let warp = Warp::new(cam, cfg.theta_limit());
    let shift = warp.shift(mv);
    let infeasible = || Error::InfeasibleBlock {
        x: block.x.max(0) as usize,
        y: block.y.max(0) as usize,
    };
    let mut out = Vec::with_capacity(block.width * block.height);
    for (x, y) in loss_pixels(block) {
        let p = warp
            .back_project(x as f64, y as f64, cam)
            .map_err(|_| infeasible())?;
        let (sx, sy) = warp.pixel_at(p, shift);
        out.push(to_u8(reference.sample_xy(sx, sy) as f64));
    }
    Ok(out)
}

/// Conceals a 4:2:0 chroma block by mapping chroma sample centers to luma
/// positions, displacing them with the luma-domain motion, and sampling the
/// chroma reference with cubic convolution. `perspective` selects E-TEC
/// displacement; otherwise the vector is applied as a plain translation.
pub(crate) fn conceal_chroma_block(
    reference: &Plane,
    luma_block: &Region,
    mv: MotionVector,
    perspective: Option<(&CameraModel, &SearchConfig)>,
) -> (Region, Vec<u8>) {
    let cx0 = luma_block.x.max(0) / 2;
    let cy0 = luma_block.y.max(0) / 2;
    let cx1 = ((luma_block.x + luma_block.width as i64 + 1) / 2).min(reference.width() as i64);
    let cy1 = ((luma_block.y + luma_block.height as i64 + 1) / 2).min(reference.height() as i64);
    let region = Region {
        x: cx0,
        y: cy0,
        width: (cx1 - cx0).max(0) as usize,
        height: (cy1 - cy0).max(0) as usize,
        kind: crate::imaging::RegionKind::LossArea,
    };
    let warp = perspective.map(|(cam, cfg)| (Warp::new(cam, cfg.theta_limit()), cam));
    let mut out = Vec::with_capacity(region.width * region.height);
    for cy in cy0..cy1 {
        for cx in cx0..cx1 {
            let (lx, ly) = (2.0 * cx as f64 + 0.5, 2.0 * cy as f64 + 0.5);
            let translated = (lx + mv.dm as f64, ly + mv.dn as f64);
            let (tx, ty) = match &warp {
                Some((w, cam)) => match w.back_project(lx, ly, cam) {
                    Ok(p) => w.pixel_at(p, w.shift(mv)),
                    Err(_) => translated,
                },
                None => translated,
            };
            let p = PixelCoord::new((tx - 0.5) / 2.0, (ty - 0.5) / 2.0);
            out.push(to_u8(cubic_sample(reference, p)));
        }
    }
    (region, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concealment::dmve::{dmve_conceal, dmve_search};
    use crate::geometry::{pixel_to_sensor, sensor_to_pixel, shift_in_perspective};
    use crate::imaging::{extract_region, upsample};
    use rand::{Rng, SeedableRng};

    fn cam(size: usize) -> CameraModel {
        CameraModel::new(1.8, 5.2, 5.2, size, size, 185.0).unwrap()
    }

    fn cfg(range: u32) -> SearchConfig {
        SearchConfig {
            range,
            ..SearchConfig::default()
        }
    }

    fn smooth(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let waves: Vec<(f64, f64, f64)> = (0..8)
            .map(|_| {
                (
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Plane::from_fn(w, h, |x, y| {
            let s: f64 = waves
                .iter()
                .map(|(a, b, p)| (a * x as f64 + b * y as f64 + p).cos())
                .sum();
            (128.0 + 14.0 * s).clamp(0.0, 255.0) as u8
        })
    }

    #[test]
    fn warp_matches_polar_route() {
        let cam = cam(256);
        let c = cfg(4);
        let warp = Warp::new(&cam, c.theta_limit());
        for &(x, y) in &[(60.0, 180.0), (127.5, 127.5), (40.0, 90.0), (200.0, 61.0)] {
            let mv = MotionVector::new(3, -7);
            let p = warp.back_project(x, y, &cam).unwrap();
            let (fx, fy) = warp.pixel_at(p, warp.shift(mv));
            let polar = pixel_to_sensor(PixelCoord::new(x, y), &cam);
            let out = sensor_to_pixel(
                shift_in_perspective(polar, mv, &cam, c.theta_limit()).unwrap(),
                &cam,
            );
            assert!((fx - out.x).abs() < 1e-8 && (fy - out.y).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_frames_pick_zero() {
        let cam = cam(128);
        let p = smooth(128, 128, 1);
        let up = upsample(&p, 8);
        let block = Region::loss(40, 56, 16);
        let d = DecisionPixels::gather(&p, &block, 8, None);
        let out = etec_search(&d, &up, &block, &cam, &cfg(3));
        assert!(out.feasible);
        assert_eq!(out.mv, MotionVector::ZERO);
        assert_eq!(out.ssd, 0.0);
    }

    #[test]
    fn zero_mv_reproduces_reference_block() {
        let cam = cam(128);
        let p = smooth(128, 128, 2);
        let up = upsample(&p, 8);
        let block = Region::loss(72, 24, 16);
        let out = etec_conceal(&up, &block, MotionVector::ZERO, &cam, &cfg(1)).unwrap();
        assert_eq!(out, extract_region(&p, &block).unwrap());
    }

    #[test]
    fn center_block_agrees_with_dmve() {
        let size = 256;
        let cam = cam(size);
        let big = smooth(size + 40, size + 40, 3);
        let (a, b) = (3i64, -2i64);
        let crop = |ox: i64, oy: i64| {
            Plane::from_fn(size, size, |x, y| {
                big.get((x as i64 + ox) as usize, (y as i64 + oy) as usize)
            })
        };
        let cur = crop(20, 20);
        let reference = crop(20 - a, 20 - b);
        let block = Region::loss(120, 120, 16);
        let c = cfg(6);
        let d = DecisionPixels::gather(&cur, &block, 8, None);
        let dm = dmve_search(&d, &reference, &c);
        let up = upsample(&reference, 8);
        let et = etec_search(&d, &up, &block, &cam, &c);
        assert_eq!(dm.mv, MotionVector::new(a as i32, b as i32));
        assert_eq!(et.mv, dm.mv);

        let from_dmve = dmve_conceal(&reference, &block, dm.mv);
        let from_etec = etec_conceal(&up, &block, et.mv, &cam, &c).unwrap();
        for (p, q) in from_dmve.iter().zip(&from_etec) {
            assert!((*p as i32 - *q as i32).abs() <= 1);
        }
    }

    #[test]
    fn periphery_is_infeasible() {
        let cam = cam(256);
        let p = smooth(256, 256, 4);
        let up = upsample(&p, 8);
        // Near the rim on the horizontal axis, theta exceeds 89 degrees.
        let block = Region::loss(0, 120, 16);
        let d = DecisionPixels::gather(&p, &block, 8, None);
        let out = etec_search(&d, &up, &block, &cam, &cfg(2));
        assert!(!out.feasible);
        assert!(matches!(
            etec_conceal(&up, &block, MotionVector::ZERO, &cam, &cfg(2)),
            Err(Error::InfeasibleBlock { .. })
        ));
    }

    #[test]
    fn lowering_limit_never_restores_feasibility() {
        let cam = cam(256);
        let p = smooth(256, 256, 5);
        for by in (0..256).step_by(16) {
            for bx in (0..256).step_by(16) {
                let block = Region::loss(bx, by, 16);
                let d = DecisionPixels::gather(&p, &block, 8, None);
                let mut prev = true;
                for limit in [89.0, 80.0, 60.0, 30.0, 5.0] {
                    let c = SearchConfig {
                        theta_limit_deg: limit,
                        ..cfg(1)
                    };
                    let f = etec_feasible(&block, &d, &cam, &c);
                    assert!(prev || !f);
                    prev = f;
                }
            }
        }
    }

    #[test]
    fn equisolid_extent_shrinks_off_center() {
        let cam = cam(512);
        let c = cfg(32);
        let warp = Warp::new(&cam, c.theta_limit());
        let (x, y) = (380.0, 300.0);
        let p = warp.back_project(x, y, &cam).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for mv in candidates(c.range) {
            let (sx, _) = warp.pixel_at(p, warp.shift(mv));
            lo = lo.min(sx);
            hi = hi.max(sx);
        }
        assert!(hi - lo + 1.0 < (2 * c.range + 1) as f64);
    }

    #[test]
    fn chroma_translation_with_even_mv_is_exact() {
        let reference = smooth(32, 32, 6);
        let block = Region::loss(16, 16, 16);
        let (region, out) = conceal_chroma_block(&reference, &block, MotionVector::new(4, -2), None);
        assert_eq!((region.x, region.y, region.width, region.height), (8, 8, 8, 8));
        for (i, v) in out.iter().enumerate() {
            let (cx, cy) = (8 + i % 8, 8 + i / 8);
            assert_eq!(*v, reference.get(cx + 2, cy - 1));
        }
    }
}
