//! Sample planes, block regions and the upsampled reference frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelCoord;

/// 8-bit sample grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BlockSizeMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with clamp-to-edge addressing.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Plane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// Luma plane plus optional 4:2:0 chroma planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub luma: Plane,
    pub chroma: Option<[Plane; 2]>,
}

impl Frame {
    pub fn luma_only(luma: Plane) -> Self {
        Frame { luma, chroma: None }
    }

    pub fn width(&self) -> usize {
        self.luma.width()
    }

    pub fn height(&self) -> usize {
        self.luma.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    LossArea,
    /// Ring of the given width around a loss area; the inner hole is not
    /// part of the region.
    DecisionArea { ring: usize },
}

/// Axis-aligned pixel region. `x`/`y` is the top-left origin (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
    pub kind: RegionKind,
}

impl Region {
    pub fn loss(x: i64, y: i64, size: usize) -> Self {
        Region {
            x,
            y,
            width: size,
            height: size,
            kind: RegionKind::LossArea,
        }
    }

    /// Decision ring of width `ring` around this region.
    pub fn decision_area(&self, ring: usize) -> Region {
        Region {
            x: self.x - ring as i64,
            y: self.y - ring as i64,
            width: self.width + 2 * ring,
            height: self.height + 2 * ring,
            kind: RegionKind::DecisionArea { ring },
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        let inside = x >= self.x
            && y >= self.y
            && x < self.x + self.width as i64
            && y < self.y + self.height as i64;
        match self.kind {
            RegionKind::LossArea => inside,
            RegionKind::DecisionArea { ring } => {
                let r = ring as i64;
                inside
                    && !(x >= self.x + r
                        && y >= self.y + r
                        && x < self.x + self.width as i64 - r
                        && y < self.y + self.height as i64 - r)
            }
        }
    }

    pub fn area(&self) -> usize {
        match self.kind {
            RegionKind::LossArea => self.width * self.height,
            RegionKind::DecisionArea { ring } => {
                self.width * self.height
                    - self.width.saturating_sub(2 * ring) * self.height.saturating_sub(2 * ring)
            }
        }
    }

    /// Pixels of the region in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.y..self.y + self.height as i64)
            .flat_map(move |y| (self.x..self.x + self.width as i64).map(move |x| (x, y)))
            .filter(move |&(x, y)| self.contains(x, y))
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.x as usize + self.width <= width
            && self.y as usize + self.height <= height
    }

    fn check_bounds(&self, plane: &Plane) -> Result<()> {
        if self.fits_in(plane.width(), plane.height()) {
            Ok(())
        } else {
            Err(Error::RegionOutOfBounds {
                x: self.x,
                y: self.y,
                width: self.width,
                height: self.height,
                plane_width: plane.width(),
                plane_height: plane.height(),
            })
        }
    }
}

/// Copies the bounding rectangle of `region` out of `plane`, row-major.
pub fn extract_region(plane: &Plane, region: &Region) -> Result<Vec<u8>> {
    region.check_bounds(plane)?;
    let (x0, y0) = (region.x as usize, region.y as usize);
    let mut out = Vec::with_capacity(region.width * region.height);
    for y in y0..y0 + region.height {
        let start = y * plane.width() + x0;
        out.extend_from_slice(&plane.data()[start..start + region.width]);
    }
    Ok(out)
}

/// Writes a row-major block into the bounding rectangle of `region`.
pub fn write_region(plane: &mut Plane, region: &Region, block: &[u8]) -> Result<()> {
    region.check_bounds(plane)?;
    if block.len() != region.width * region.height {
        return Err(Error::BlockSizeMismatch {
            expected: region.width * region.height,
            actual: block.len(),
        });
    }
    let (x0, y0) = (region.x as usize, region.y as usize);
    let w = plane.width();
    for (row, chunk) in block.chunks_exact(region.width).enumerate() {
        let start = (y0 + row) * w + x0;
        plane.data[start..start + region.width].copy_from_slice(chunk);
    }
    Ok(())
}

/// Cubic convolution (Keys) kernel parameter.
pub const KEYS_A: f64 = -0.5;

/// Cubic convolution kernel with parameter `a`.
pub fn cubic_kernel(x: f64, a: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Taps for neighbours at offsets -1, 0, 1, 2 of a sample at fraction `t`.
fn cubic_taps(t: f64) -> [f64; 4] {
    [
        cubic_kernel(1.0 + t, KEYS_A),
        cubic_kernel(t, KEYS_A),
        cubic_kernel(1.0 - t, KEYS_A),
        cubic_kernel(2.0 - t, KEYS_A),
    ]
}

/// Cubic convolution sample at a continuous position, clamp-to-edge.
pub fn cubic_sample(plane: &Plane, p: PixelCoord) -> f64 {
    let x = p.x.clamp(0.0, (plane.width() - 1) as f64);
    let y = p.y.clamp(0.0, (plane.height() - 1) as f64);
    let (xi, yi) = (x.floor(), y.floor());
    let (wx, wy) = (cubic_taps(x - xi), cubic_taps(y - yi));
    let (xi, yi) = (xi as i64, yi as i64);
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        let mut row = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            row += wxi * plane.get_clamped(xi + i as i64 - 1, yi + j as i64 - 1) as f64;
        }
        acc += wyj * row;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpolationKernel {
    /// Keys cubic convolution, a = -0.5.
    CubicConvolution,
}

/// Reference plane interpolated onto a grid of `1 / factor` pixel spacing.
///
/// The grid covers `[0, W - 1] x [0, H - 1]`, so it has
/// `(W - 1) * factor + 1` columns and `(H - 1) * factor + 1` rows.
#[derive(Debug, Clone)]
pub struct UpsampledReference {
    factor: usize,
    width: usize,
    height: usize,
    up_width: usize,
    up_height: usize,
    kernel: InterpolationKernel,
    samples: Vec<f32>,
}

/// Separable cubic-convolution upsampling; integer grid positions keep the
/// source sample exactly.
pub fn upsample(p: &Plane, factor: usize) -> UpsampledReference {
    assert!(factor >= 1, "upsampling factor must be at least 1");
    let (w, h) = p.dims();
    let up_w = (w - 1) * factor + 1;
    let up_h = (h - 1) * factor + 1;
    let taps: Vec<[f64; 4]> = (0..factor)
        .map(|ph| cubic_taps(ph as f64 / factor as f64))
        .collect();

    // Horizontal pass: up_w x h.
    let mut tmp = vec![0f64; up_w * h];
    for y in 0..h {
        let row = &mut tmp[y * up_w..(y + 1) * up_w];
        for (u, out) in row.iter_mut().enumerate() {
            let (i, ph) = ((u / factor) as i64, u % factor);
            if ph == 0 {
                *out = p.get(i as usize, y) as f64;
                continue;
            }
            let t = &taps[ph];
            *out = (0..4)
                .map(|k| t[k] * p.get_clamped(i + k as i64 - 1, y as i64) as f64)
                .sum();
        }
    }

    // Vertical pass: up_w x up_h.
    let mut samples = vec![0f32; up_w * up_h];
    for v in 0..up_h {
        let (j, ph) = ((v / factor) as i64, v % factor);
        let out = &mut samples[v * up_w..(v + 1) * up_w];
        if ph == 0 {
            let src = &tmp[j as usize * up_w..(j as usize + 1) * up_w];
            for (o, s) in out.iter_mut().zip(src) {
                *o = *s as f32;
            }
            continue;
        }
        let t = &taps[ph];
        let rows: [&[f64]; 4] = std::array::from_fn(|k| {
            let r = (j + k as i64 - 1).clamp(0, h as i64 - 1) as usize;
            &tmp[r * up_w..(r + 1) * up_w]
        });
        for (u, o) in out.iter_mut().enumerate() {
            *o = (t[0] * rows[0][u] + t[1] * rows[1][u] + t[2] * rows[2][u] + t[3] * rows[3][u])
                as f32;
        }
    }

    UpsampledReference {
        factor,
        width: w,
        height: h,
        up_width: up_w,
        up_height: up_h,
        kernel: InterpolationKernel::CubicConvolution,
        samples,
    }
}

impl UpsampledReference {
    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Source plane dimensions.
    pub fn source_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.up_width, self.up_height)
    }

    pub fn kernel(&self) -> InterpolationKernel {
        self.kernel
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    /// Value at a continuous pixel coordinate: the coordinate is rounded to
    /// the nearest `1 / factor` position (ties toward +inf) and clamped to
    /// the grid.
    #[inline]
    pub fn sample_at(&self, p: PixelCoord) -> f32 {
        self.sample_xy(p.x, p.y)
    }

    #[inline]
    pub fn sample_xy(&self, x: f64, y: f64) -> f32 {
        let f = self.factor as f64;
        let u = ((x * f + 0.5).floor()).clamp(0.0, (self.up_width - 1) as f64) as usize;
        let v = ((y * f + 0.5).floor()).clamp(0.0, (self.up_height - 1) as f64) as usize;
        self.samples[v * self.up_width + u]
    }
}

/// Rounds an interpolated value to an 8-bit sample.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
