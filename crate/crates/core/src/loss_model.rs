//! Reproducible isolated block losses.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, PixelCoord};
use crate::imaging::{Frame, Plane, Region};

/// Value written into lost samples. Never read by the concealment engines.
pub const LOST_SAMPLE: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossAmount {
    Count(usize),
    /// Fraction of the eligible grid cells.
    Density(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPattern {
    pub block_size: usize,
    pub seed: u64,
    pub amount: LossAmount,
    /// Minimum number of received pixels between two lost blocks, measured
    /// along the axis where they are farthest apart.
    pub min_separation: usize,
    /// Skip grid cells lying entirely outside the fisheye circle.
    pub exclude_outside_fov: bool,
}

impl Default for LossPattern {
    fn default() -> Self {
        LossPattern {
            block_size: 16,
            seed: 0,
            amount: LossAmount::Count(10),
            min_separation: 8,
            exclude_outside_fov: true,
        }
    }
}

/// Lost blocks of one frame with the geometry of their decision areas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossMap {
    pub block_size: usize,
    pub decision_width: usize,
    /// Top-left origins `[x, y]` of the lost blocks.
    pub blocks: Vec<[usize; 2]>,
}

impl LossMap {
    pub fn new(block_size: usize, decision_width: usize, blocks: Vec<[usize; 2]>) -> Self {
        LossMap {
            block_size,
            decision_width,
            blocks,
        }
    }

    pub fn empty(block_size: usize, decision_width: usize) -> Self {
        Self::new(block_size, decision_width, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn loss_area(&self, i: usize) -> Region {
        let [x, y] = self.blocks[i];
        Region::loss(x as i64, y as i64, self.block_size)
    }

    pub fn decision_area(&self, i: usize) -> Region {
        self.loss_area(i).decision_area(self.decision_width)
    }

    pub fn loss_areas(&self) -> impl Iterator<Item = Region> + '_ {
        (0..self.len()).map(|i| self.loss_area(i))
    }

    /// Per-pixel lost flag for a `width x height` frame.
    pub fn mask(&self, width: usize, height: usize) -> Vec<bool> {
        let mut mask = vec![false; width * height];
        for r in self.loss_areas() {
            for (x, y) in r.pixels() {
                if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                    mask[y as usize * width + x as usize] = true;
                }
            }
        }
        mask
    }

    /// Every lost block must lie inside the frame.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        for r in self.loss_areas() {
            if !r.fits_in(width, height) {
                return Err(Error::RegionOutOfBounds {
                    x: r.x,
                    y: r.y,
                    width: r.width,
                    height: r.height,
                    plane_width: width,
                    plane_height: height,
                });
            }
        }
        Ok(())
    }

    /// Smallest boundary gap over all block pairs, `None` for fewer than two
    /// blocks.
    pub fn min_gap(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[i + 1..] {
                let g = block_gap(*a, *b, self.block_size);
                best = Some(best.map_or(g, |m| m.min(g)));
            }
        }
        best
    }
}

/// Number of pixels between two equally sized blocks along the axis where
/// they are farthest apart; 0 when they touch or overlap.
fn block_gap(a: [usize; 2], b: [usize; 2], size: usize) -> usize {
    let gx = a[0].abs_diff(b[0]).saturating_sub(size);
    let gy = a[1].abs_diff(b[1]).saturating_sub(size);
    gx.max(gy)
}

/// Zeroes the lost blocks of `map` in a copy of `plane`.
pub fn corrupt(plane: &Plane, map: &LossMap) -> Plane {
    let mut out = plane.clone();
    for r in map.loss_areas() {
        for (x, y) in r.pixels() {
            out.set(x as usize, y as usize, LOST_SAMPLE);
        }
    }
    out
}

/// Corrupts luma and the co-located 4:2:0 chroma blocks.
pub fn corrupt_frame(frame: &Frame, map: &LossMap) -> Frame {
    let luma = corrupt(&frame.luma, map);
    let chroma = frame.chroma.as_ref().map(|planes| {
        planes.clone().map(|mut p| {
            for [x, y] in &map.blocks {
                let (cx0, cy0) = (x / 2, y / 2);
                let (cx1, cy1) = (
                    ((x + map.block_size).div_ceil(2)).min(p.width()),
                    ((y + map.block_size).div_ceil(2)).min(p.height()),
                );
                for cy in cy0..cy1 {
                    for cx in cx0..cx1 {
                        p.set(cx, cy, LOST_SAMPLE);
                    }
                }
            }
            p
        })
    });
    Frame { luma, chroma }
}

/// Places grid-snapped, mutually separated block losses and returns the
/// corrupted plane with its loss map. Deterministic in `pattern.seed`.
///
/// `cam` enables the outside-the-circle exclusion when the pattern asks
/// for it.
pub fn inject(
    frame: &Plane,
    pattern: &LossPattern,
    decision_width: usize,
    cam: Option<&CameraModel>,
) -> Result<(Plane, LossMap)> {
    let bs = pattern.block_size;
    if bs == 0 {
        return Err(Error::InfeasiblePattern("block size is zero".into()));
    }
    let (w, h) = frame.dims();
    let mut cells: Vec<[usize; 2]> = (0..h / bs)
        .flat_map(|j| (0..w / bs).map(move |i| [i * bs, j * bs]))
        .collect();
    if pattern.exclude_outside_fov {
        if let Some(cam) = cam {
            cells.retain(|&[x, y]| cell_touches_fov(cam, x, y, bs));
        }
    }

    let wanted = match pattern.amount {
        LossAmount::Count(n) => n,
        LossAmount::Density(d) => {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InfeasiblePattern(format!(
                    "density {d} outside [0, 1]"
                )));
            }
            (d * cells.len() as f64).round() as usize
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(pattern.seed);
    cells.shuffle(&mut rng);
    let mut chosen: Vec<[usize; 2]> = Vec::with_capacity(wanted);
    for cell in cells {
        if chosen.len() == wanted {
            break;
        }
        if chosen
            .iter()
            .all(|&c| block_gap(c, cell, bs) >= pattern.min_separation)
        {
            chosen.push(cell);
        }
    }
    if chosen.len() < wanted {
        return Err(Error::InfeasiblePattern(format!(
            "placed only {} of {} blocks of {bs}x{bs} with separation {} in a {w}x{h} frame",
            chosen.len(),
            wanted,
            pattern.min_separation
        )));
    }
    // Report in raster order regardless of draw order.
    chosen.sort_by_key(|&[x, y]| (y, x));
    let map = LossMap::new(bs, decision_width, chosen);
    Ok((corrupt(frame, &map), map))
}

fn cell_touches_fov(cam: &CameraModel, x: usize, y: usize, bs: usize) -> bool {
    // The nearest point of the cell to the principal point decides.
    let pp = cam.principal_point;
    let nx = pp.x.clamp(x as f64, (x + bs - 1) as f64);
    let ny = pp.y.clamp(y as f64, (y + bs - 1) as f64);
    cam.in_fov(PixelCoord::new(nx, ny))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| (1 + (x * 7 + y * 13) % 250) as u8)
    }

    fn pattern(count: usize, seed: u64) -> LossPattern {
        LossPattern {
            amount: LossAmount::Count(count),
            seed,
            exclude_outside_fov: false,
            ..LossPattern::default()
        }
    }

    #[test]
    fn zero_count_is_identity() {
        let p = textured(128, 96);
        let (out, map) = inject(&p, &pattern(0, 1), 8, None).unwrap();
        assert_eq!(out, p);
        assert!(map.is_empty());
    }

    #[test]
    fn single_block_zeroes_256_pixels() {
        let p = textured(128, 96);
        let (out, map) = inject(&p, &pattern(1, 42), 8, None).unwrap();
        assert_eq!(map.len(), 1);
        let diff = out.data().iter().zip(p.data()).filter(|(a, b)| a != b).count();
        assert_eq!(diff, 256);
        assert!(map.loss_area(0).pixels().all(|(x, y)| out.get(x as usize, y as usize) == 0));
    }

    #[test]
    fn deterministic_under_seed() {
        let p = textured(256, 256);
        let a = inject(&p, &pattern(10, 9), 8, None).unwrap();
        let b = inject(&p, &pattern(10, 9), 8, None).unwrap();
        assert_eq!(a, b);
        let c = inject(&p, &pattern(10, 10), 8, None).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn infeasible_count_is_reported() {
        let p = textured(64, 64);
        // A 4x4 grid fits at most 4 blocks with one-cell gaps.
        assert!(matches!(
            inject(&p, &pattern(5, 0), 8, None),
            Err(Error::InfeasiblePattern(_))
        ));
    }

    #[test]
    fn excludes_cells_outside_circle() {
        let cam = CameraModel::new(1.8, 5.2, 5.2, 256, 256, 185.0).unwrap();
        let p = textured(256, 256);
        let pat = LossPattern {
            amount: LossAmount::Density(1.0),
            min_separation: 0,
            ..LossPattern::default()
        };
        let (_, map) = inject(&p, &pat, 8, Some(&cam)).unwrap();
        assert!(!map.blocks.contains(&[0, 0]));
        assert!(!map.blocks.contains(&[240, 240]));
        assert!(map.blocks.contains(&[128, 128]));
        assert!(map.len() < 256);
    }

    #[test]
    fn chroma_blocks_follow_luma() {
        let frame = Frame {
            luma: textured(64, 64),
            chroma: Some([Plane::filled(32, 32, 90), Plane::filled(32, 32, 160)]),
        };
        let map = LossMap::new(16, 8, vec![[16, 32]]);
        let out = corrupt_frame(&frame, &map);
        let [u, v] = out.chroma.unwrap();
        assert_eq!(u.get(8, 16), 0);
        assert_eq!(v.get(15, 23), 0);
        assert_eq!(u.get(16, 16), 90);
        assert_eq!(u.data().iter().filter(|&&s| s == 0).count(), 64);
    }

    #[test]
    fn loss_map_json_lists_origins() {
        let map = LossMap::new(16, 8, vec![[16, 32], [64, 0]]);
        let json = serde_json::to_string(&map).unwrap();
        assert_eq!(json, r#"{"block_size":16,"decision_width":8,"blocks":[[16,32],[64,0]]}"#);
        let back: LossMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn separation_and_untouched_pixels(seed in any::<u64>(), count in 0usize..25) {
            let p = textured(320, 240);
            let (out, map) = inject(&p, &pattern(count, seed), 8, None).unwrap();
            prop_assert_eq!(map.len(), count);
            if let Some(g) = map.min_gap() {
                prop_assert!(g >= 8);
            }
            map.validate(320, 240).unwrap();
            let mask = map.mask(320, 240);
            for (i, (a, b)) in out.data().iter().zip(p.data()).enumerate() {
                if mask[i] {
                    prop_assert_eq!(*a, LOST_SAMPLE);
                } else {
                    prop_assert_eq!(a, b);
                }
            }
            // No decision ring touches another block's loss area.
            for i in 0..map.len() {
                let ring = map.decision_area(i);
                for j in 0..map.len() {
                    if i != j {
                        let l = map.loss_area(j);
                        prop_assert!(ring.pixels().all(|(x, y)| !l.contains(x, y)));
                    }
                }
            }
        }
    }
}
