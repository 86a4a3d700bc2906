//! Raw YUV 4:2:0 and single-image frame I/O.

use std::fs;
use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};

use super::config::InputFormat;
use crate::error::{Error, Result};
use crate::imaging::{Frame, Plane};

/// Bytes per planar 4:2:0 frame (chroma dimensions rounded up).
pub fn yuv420_frame_size(width: usize, height: usize) -> usize {
    width * height + 2 * width.div_ceil(2) * height.div_ceil(2)
}

/// Reads a frame sequence. `dims` is required for raw YUV and ignored for
/// image formats, which yield a single luma-only frame.
pub fn load_sequence(path: &Path, format: InputFormat, dims: Option<(usize, usize)>) -> Result<Vec<Frame>> {
    match format {
        InputFormat::Yuv420 => {
            let (w, h) = dims.ok_or_else(|| Error::Config("raw YUV input needs width and height".into()))?;
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_yuv420(path, &bytes, w, h)
        }
        InputFormat::Pgm | InputFormat::Png => {
            let fmt = if format == InputFormat::Pgm {
                ImageFormat::Pnm
            } else {
                ImageFormat::Png
            };
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let img = image::load_from_memory_with_format(&bytes, fmt).map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?;
            let gray = img.into_luma8();
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            Ok(vec![Frame::luma_only(Plane::from_vec(w, h, gray.into_raw())?)])
        }
        InputFormat::Synthetic => Err(Error::UnknownFormat(
            "synthetic sequences are generated, not loaded".into(),
        )),
    }
}

fn parse_yuv420(path: &Path, bytes: &[u8], w: usize, h: usize) -> Result<Vec<Frame>> {
    let frame_size = yuv420_frame_size(w, h);
    if !bytes.len().is_multiple_of(frame_size) {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            len: bytes.len() as u64,
            frame_size,
        });
    }
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    bytes
        .chunks_exact(frame_size)
        .map(|chunk| {
            let (y, rest) = chunk.split_at(w * h);
            let (u, v) = rest.split_at(cw * ch);
            Ok(Frame {
                luma: Plane::from_vec(w, h, y.to_vec())?,
                chroma: Some([
                    Plane::from_vec(cw, ch, u.to_vec())?,
                    Plane::from_vec(cw, ch, v.to_vec())?,
                ]),
            })
        })
        .collect()
}

/// Writes frames as planar 4:2:0; missing chroma is written as mid-gray.
pub fn write_yuv420(path: &Path, frames: &[Frame]) -> Result<()> {
    let mut out = Vec::new();
    for f in frames {
        out.extend_from_slice(f.luma.data());
        let (cw, ch) = (f.width().div_ceil(2), f.height().div_ceil(2));
        match &f.chroma {
            Some([u, v]) => {
                out.extend_from_slice(u.data());
                out.extend_from_slice(v.data());
            }
            None => out.resize(out.len() + 2 * cw * ch, 128),
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(path: &Path, plane: &Plane) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", plane.width(), plane.height()).into_bytes();
    out.extend_from_slice(plane.data());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_png_gray(path: &Path, plane: &Plane) -> Result<()> {
    let img = GrayImage::from_raw(plane.width() as u32, plane.height() as u32, plane.data().to_vec())
        .expect("plane buffer matches its dimensions");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn write_png_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}
