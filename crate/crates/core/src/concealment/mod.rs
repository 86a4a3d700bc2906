//! Motion-vector search and block synthesis for lost blocks.
//!
//! Two per-block estimators are provided: [`dmve`] searches integer
//! translations directly on the equisolid raster, [`etec`] applies each
//! candidate in the perspective domain and samples the re-projected
//! position from an upsampled reference. [`engine`] wraps them as
//! interchangeable strategies (DMVE, E-TEC, hybrid) behind one trait.

pub mod dmve;
pub mod engine;
pub mod etec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_THETA_LIMIT_DEG;
use crate::imaging::{Plane, Region};

pub use dmve::{dmve_conceal, dmve_search};
pub use engine::{
    conceal_frame, hetec_conceal_frame, ConcealedFrame, ConcealmentEngine, DmveEngine,
    EngineRegistry, EtecEngine, HybridEngine,
};
pub use etec::{etec_conceal, etec_feasible, etec_search, EtecOutcome};

/// Integer displacement. `dm` is horizontal (columns), `dn` vertical (rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MotionVector {
    pub dm: i32,
    pub dn: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dm: 0, dn: 0 };

    pub const fn new(dm: i32, dn: i32) -> Self {
        MotionVector { dm, dn }
    }

    pub fn is_zero(&self) -> bool {
        self.dm == 0 && self.dn == 0
    }
}

/// Candidate lattice `[-R, R]^2` in row-major scan order, `(-R, -R)` first.
pub fn candidates(range: u32) -> impl Iterator<Item = MotionVector> {
    let r = range as i32;
    (-r..=r).flat_map(move |dn| (-r..=r).map(move |dm| MotionVector::new(dm, dn)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Search range R, pixels; the candidate grid is `(2R + 1)^2`.
    pub range: u32,
    pub block_size: usize,
    pub decision_width: usize,
    pub upsample_factor: usize,
    /// Incident-angle cutoff for perspective back-projection, degrees.
    pub theta_limit_deg: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            range: 128,
            block_size: 16,
            decision_width: 8,
            upsample_factor: 8,
            theta_limit_deg: DEFAULT_THETA_LIMIT_DEG,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("search.block_size must be positive".into()));
        }
        if self.upsample_factor == 0 {
            return Err(Error::Config("search.upsample_factor must be at least 1".into()));
        }
        if !(self.theta_limit_deg > 0.0 && self.theta_limit_deg < 90.0) {
            return Err(Error::Config(format!(
                "search.theta_limit_deg must lie in (0, 90), got {}",
                self.theta_limit_deg
            )));
        }
        Ok(())
    }

    pub fn theta_limit(&self) -> f64 {
        self.theta_limit_deg.to_radians()
    }

    pub fn candidate_count(&self) -> usize {
        let side = 2 * self.range as usize + 1;
        side * side
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dmve,
    Etec,
}

/// Outcome for one lost block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecision {
    pub origin: [usize; 2],
    pub method: Method,
    pub mv: MotionVector,
    /// Minimal decision-area SSD of each estimator; `None` when it was not run
    /// (or, for E-TEC, when the block is infeasible).
    pub ssd_dmve: Option<f64>,
    pub ssd_etec: Option<f64>,
    pub feasible_etec: bool,
}

impl BlockDecision {
    /// Method implied by the stored SSDs: the smaller one wins, ties go to
    /// E-TEC, a missing SSD never wins.
    pub fn implied_method(ssd_dmve: Option<f64>, ssd_etec: Option<f64>) -> Option<Method> {
        match (ssd_dmve, ssd_etec) {
            (Some(d), Some(e)) => Some(if e <= d { Method::Etec } else { Method::Dmve }),
            (Some(_), None) => Some(Method::Dmve),
            (None, Some(_)) => Some(Method::Etec),
            (None, None) => None,
        }
    }
}

/// Minimal SSD and its motion vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub mv: MotionVector,
    pub ssd: f64,
}

/// Received pixels of a decision area with their current-frame values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionPixels {
    pub coords: Vec<[u32; 2]>,
    pub values: Vec<u8>,
}

impl DecisionPixels {
    /// Collects the ring of width `decision_width` around `block`, skipping
    /// pixels outside the frame and pixels flagged in `lost`.
    pub fn gather(cur: &Plane, block: &Region, decision_width: usize, lost: Option<&[bool]>) -> Self {
        let (w, h) = cur.dims();
        let mut out = DecisionPixels::default();
        for (x, y) in block.decision_area(decision_width).pixels() {
            if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
                continue;
            }
            let (x, y) = (x as usize, y as usize);
            if lost.is_some_and(|m| m[y * w + x]) {
                continue;
            }
            out.coords.push([x as u32, y as u32]);
            out.values.push(cur.get(x, y));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}
