//! Decoder motion vector estimation on the equisolid raster.

use super::{candidates, DecisionPixels, MotionVector, SearchConfig, SearchOutcome};
use crate::imaging::{Plane, Region};

/// Exhaustive SSD minimization over the `(2R + 1)^2` integer candidates.
///
/// Reference reads are clamped to the frame. Ties keep the earliest
/// candidate in scan order. An empty decision set yields the zero vector.
pub fn dmve_search(decision: &DecisionPixels, reference: &Plane, cfg: &SearchConfig) -> SearchOutcome {
    if decision.is_empty() {
        return SearchOutcome {
            mv: MotionVector::ZERO,
            ssd: 0.0,
        };
    }
    let (w, h) = reference.dims();
    let data = reference.data();
    let base: Vec<usize> = decision
        .coords
        .iter()
        .map(|&[x, y]| y as usize * w + x as usize)
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for &[x, y] in &decision.coords {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }

    let mut best = SearchOutcome {
        mv: MotionVector::ZERO,
        ssd: f64::INFINITY,
    };
    let mut best_int = u64::MAX;
    for mv in candidates(cfg.range) {
        let inside = x0 as i64 + mv.dm as i64 >= 0
            && y0 as i64 + mv.dn as i64 >= 0
            && (x1 as i64 + mv.dm as i64) < w as i64
            && (y1 as i64 + mv.dn as i64) < h as i64;
        let ssd = if inside {
            let offset = mv.dn as isize * w as isize + mv.dm as isize;
            ssd_direct(&base, &decision.values, data, offset, best_int)
        } else {
            ssd_clamped(decision, reference, mv, best_int)
        };
        if ssd < best_int {
            best_int = ssd;
            best = SearchOutcome {
                mv,
                ssd: ssd as f64,
            };
        }
    }
    best
}

// Both SSD kernels stop once the partial sum reaches `bound`; the result is
// then only known to be >= bound, which is all the strict-less test needs.
#[inline]
fn ssd_direct(base: &[usize], values: &[u8], data: &[u8], offset: isize, bound: u64) -> u64 {
    let mut acc = 0u64;
    for (chunk_b, chunk_v) in base.chunks(64).zip(values.chunks(64)) {
        for (&b, &v) in chunk_b.iter().zip(chunk_v) {
            let r = data[(b as isize + offset) as usize];
            let d = v as i32 - r as i32;
            acc += (d * d) as u64;
        }
        if acc >= bound {
            return acc;
        }
    }
    acc
}

fn ssd_clamped(decision: &DecisionPixels, reference: &Plane, mv: MotionVector, bound: u64) -> u64 {
    let mut acc = 0u64;
    for (i, (&[x, y], &v)) in decision.coords.iter().zip(&decision.values).enumerate() {
        let r = reference.get_clamped(x as i64 + mv.dm as i64, y as i64 + mv.dn as i64);
        let d = v as i32 - r as i32;
        acc += (d * d) as u64;
        if i % 64 == 63 && acc >= bound {
            return acc;
        }
    }
    acc
}

/// Copies the `mv`-shifted reference block over the loss area, clamped at
/// the frame edges. Row-major, `block.width * block.height` samples.
pub fn dmve_conceal(reference: &Plane, block: &Region, mv: MotionVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(block.width * block.height);
    for y in block.y..block.y + block.height as i64 {
        for x in block.x..block.x + block.width as i64 {
            out.push(reference.get_clamped(x + mv.dm as i64, y + mv.dn as i64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::extract_region;
    use rand::{Rng, SeedableRng};

    fn noise(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.gen())
    }

    fn cfg(range: u32) -> SearchConfig {
        SearchConfig {
            range,
            ..SearchConfig::default()
        }
    }

    /// Naive oracle: every candidate, full sum, first minimum in scan order.
    fn naive(cur: &Plane, reference: &Plane, block: &Region, dw: usize, range: i32) -> (MotionVector, u64) {
        let ring = block.decision_area(dw);
        let mut best = (MotionVector::ZERO, u64::MAX);
        for dn in -range..=range {
            for dm in -range..=range {
                let mut s = 0u64;
                for y in ring.y..ring.y + ring.height as i64 {
                    for x in ring.x..ring.x + ring.width as i64 {
                        if !ring.contains(x, y)
                            || x < 0
                            || y < 0
                            || x >= cur.width() as i64
                            || y >= cur.height() as i64
                        {
                            continue;
                        }
                        let c = cur.get(x as usize, y as usize) as i64;
                        let rx = (x + dm as i64).clamp(0, reference.width() as i64 - 1);
                        let ry = (y + dn as i64).clamp(0, reference.height() as i64 - 1);
                        let r = reference.get(rx as usize, ry as usize) as i64;
                        s += ((c - r) * (c - r)) as u64;
                    }
                }
                if s < best.1 {
                    best = (MotionVector::new(dm, dn), s);
                }
            }
        }
        best
    }

    #[test]
    fn identical_frames_pick_zero() {
        let p = noise(64, 64, 1);
        let block = Region::loss(24, 24, 16);
        let d = DecisionPixels::gather(&p, &block, 8, None);
        let out = dmve_search(&d, &p, &cfg(8));
        assert_eq!(out.mv, MotionVector::ZERO);
        assert_eq!(out.ssd, 0.0);
    }

    #[test]
    fn recovers_global_shift() {
        let big = noise(160, 160, 2);
        let (a, b) = (5i64, -3i64);
        let crop = |ox: i64, oy: i64| {
            Plane::from_fn(96, 96, |x, y| big.get((x as i64 + ox) as usize, (y as i64 + oy) as usize))
        };
        let cur = crop(30, 30);
        let reference = crop(30 - a, 30 - b);
        let block = Region::loss(40, 40, 16);
        let d = DecisionPixels::gather(&cur, &block, 8, None);
        let out = dmve_search(&d, &reference, &cfg(8));
        assert_eq!(out.mv, MotionVector::new(a as i32, b as i32));
        assert_eq!(out.ssd, 0.0);
        let naive_best = naive(&cur, &reference, &block, 8, 8);
        assert_eq!(naive_best.0, out.mv);

        let concealed = dmve_conceal(&reference, &block, out.mv);
        assert_eq!(concealed, extract_region(&cur, &block).unwrap());
    }

    #[test]
    fn tiny_image_matches_naive() {
        // 3x3 image with a 1x1 loss in the middle and a 1-pixel ring.
        for seed in 0..20 {
            let cur = noise(3, 3, seed);
            let reference = noise(3, 3, seed + 100);
            let block = Region::loss(1, 1, 1);
            let d = DecisionPixels::gather(&cur, &block, 1, None);
            assert_eq!(d.len(), 8);
            let c = SearchConfig {
                range: 1,
                block_size: 1,
                decision_width: 1,
                ..SearchConfig::default()
            };
            let out = dmve_search(&d, &reference, &c);
            let (mv, ssd) = naive(&cur, &reference, &block, 1, 1);
            assert_eq!((out.mv, out.ssd), (mv, ssd as f64));
        }
    }

    #[test]
    fn random_instances_match_naive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for seed in 0..40 {
            let w = rng.gen_range(24..=64);
            let h = rng.gen_range(24..=64);
            let cur = noise(w, h, seed);
            let reference = noise(w, h, seed + 1000);
            let bx = rng.gen_range(0..=w as i64 - 16);
            let by = rng.gen_range(0..=h as i64 - 16);
            let block = Region::loss(bx, by, 16);
            let range = rng.gen_range(0..=4);
            let d = DecisionPixels::gather(&cur, &block, 8, None);
            let out = dmve_search(&d, &reference, &cfg(range));
            let (mv, ssd) = naive(&cur, &reference, &block, 8, range as i32);
            assert_eq!(out.mv, mv);
            assert_eq!(out.ssd, ssd as f64);
        }
    }

    #[test]
    fn lost_decision_pixels_are_skipped() {
        let cur = noise(64, 64, 3);
        let block = Region::loss(24, 24, 16);
        let mut lost = vec![false; 64 * 64];
        for x in 16..24 {
            lost[20 * 64 + x] = true;
        }
        let d = DecisionPixels::gather(&cur, &block, 8, Some(&lost));
        assert_eq!(d.len(), 768 - 8);
    }

    #[test]
    fn conceal_zero_and_clamped() {
        let reference = noise(32, 32, 4);
        let block = Region::loss(0, 0, 16);
        let same = dmve_conceal(&reference, &block, MotionVector::ZERO);
        assert_eq!(same, extract_region(&reference, &block).unwrap());
        assert_eq!(same.len(), 256);

        let clamped = dmve_conceal(&reference, &block, MotionVector::new(-20, -20));
        assert!(clamped.iter().all(|&v| v == reference.get(0, 0)));
    }

    #[test]
    fn empty_decision_set_yields_zero() {
        let reference = noise(16, 16, 5);
        let out = dmve_search(&DecisionPixels::default(), &reference, &cfg(3));
        assert_eq!(out.mv, MotionVector::ZERO);
    }
}
