//! Temporal error concealment for equisolid fisheye video.
//!
//! Lost blocks are concealed from the previous frame by one of three
//! strategies:
//!
//! * **DMVE**: decoder motion vector estimation. The motion vector that
//!   minimizes the SSD over a ring of received pixels around the lost block
//!   is searched on the integer pixel grid and the shifted reference block
//!   is copied in.
//! * **E-TEC**: the same search, but each candidate is added in the
//!   perspective domain. Pixel positions are back-projected from the
//!   equisolid image onto the perspective plane, shifted, re-projected, and
//!   read from an 8x upsampled reference.
//! * **HE-TEC** (`hybrid`): runs both per block and keeps the smaller SSD.
//!   Blocks too close to the 90 degree horizon fall back to DMVE.
//!
//! [`pipeline`] adds loss injection, PSNR scoring over the lost areas, a
//! synthetic sequence generator and the `conceal` command-line tool.

pub mod concealment;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod loss_model;
pub mod metrics;
pub mod pipeline;

pub use concealment::{
    conceal_frame, BlockDecision, ConcealmentEngine, EngineRegistry, Method, MotionVector, SearchConfig,
};
pub use error::{Error, Result};
pub use geometry::{CameraModel, PixelCoord, PolarCoord};
pub use imaging::{Frame, Plane, Region, UpsampledReference};
pub use loss_model::{LossMap, LossPattern};
