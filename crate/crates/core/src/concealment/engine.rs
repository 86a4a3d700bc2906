//! Concealment strategies behind a common trait, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::dmve::{dmve_conceal, dmve_search};
use super::etec::{conceal_chroma_block, etec_conceal, etec_feasible, etec_search};
use super::{BlockDecision, DecisionPixels, Method, SearchConfig};
use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::imaging::{upsample, write_region, Frame, Plane, Region, UpsampledReference};
use crate::loss_model::LossMap;

/// Everything a strategy may look at for one lost block.
pub struct BlockInput<'a> {
    pub loss: Region,
    pub decision: &'a DecisionPixels,
    pub reference: &'a Plane,
    /// Present when the engine asked for it.
    pub upsampled: Option<&'a UpsampledReference>,
    pub cam: &'a CameraModel,
    pub cfg: &'a SearchConfig,
}

impl BlockInput<'_> {
    fn origin(&self) -> [usize; 2] {
        [self.loss.x.max(0) as usize, self.loss.y.max(0) as usize]
    }

    fn upsampled(&self) -> &UpsampledReference {
        self.upsampled
            .expect("engine requires an upsampled reference")
    }
}

pub trait ConcealmentEngine: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether [`BlockInput::upsampled`] must be populated.
    fn needs_upsampled_reference(&self) -> bool;

    /// Picks the method and motion vector for one block.
    fn decide(&self, input: &BlockInput<'_>) -> BlockDecision;
}

/// Conventional DMVE on every block.
#[derive(Debug, Default, Clone, Copy)]
pub struct DmveEngine;

impl ConcealmentEngine for DmveEngine {
    fn name(&self) -> &'static str {
        "dmve"
    }

    fn needs_upsampled_reference(&self) -> bool {
        false
    }

    fn decide(&self, input: &BlockInput<'_>) -> BlockDecision {
        let dmve = dmve_search(input.decision, input.reference, input.cfg);
        BlockDecision {
            origin: input.origin(),
            method: Method::Dmve,
            mv: dmve.mv,
            ssd_dmve: Some(dmve.ssd),
            ssd_etec: None,
            feasible_etec: etec_feasible(&input.loss, input.decision, input.cam, input.cfg),
        }
    }
}

/// E-TEC wherever the block back-projects, DMVE elsewhere.
#[derive(Debug, Default, Clone, Copy)]
pub struct EtecEngine;

impl ConcealmentEngine for EtecEngine {
    fn name(&self) -> &'static str {
        "etec"
    }

    fn needs_upsampled_reference(&self) -> bool {
        true
    }

    fn decide(&self, input: &BlockInput<'_>) -> BlockDecision {
        let etec = etec_search(
            input.decision,
            input.upsampled(),
            &input.loss,
            input.cam,
            input.cfg,
        );
        if etec.feasible {
            return BlockDecision {
                origin: input.origin(),
                method: Method::Etec,
                mv: etec.mv,
                ssd_dmve: None,
                ssd_etec: Some(etec.ssd),
                feasible_etec: true,
            };
        }
        let dmve = dmve_search(input.decision, input.reference, input.cfg);
        BlockDecision {
            origin: input.origin(),
            method: Method::Dmve,
            mv: dmve.mv,
            ssd_dmve: Some(dmve.ssd),
            ssd_etec: None,
            feasible_etec: false,
        }
    }
}

/// Runs both estimators and keeps the one with the smaller decision-area
/// SSD; ties go to E-TEC.
#[derive(Debug, Default, Clone, Copy)]
pub struct HybridEngine;

impl ConcealmentEngine for HybridEngine {
    fn name(&self) -> &'static str {
        "hybrid"
    }

    fn needs_upsampled_reference(&self) -> bool {
        true
    }

    fn decide(&self, input: &BlockInput<'_>) -> BlockDecision {
        let dmve = dmve_search(input.decision, input.reference, input.cfg);
        let etec = etec_search(
            input.decision,
            input.upsampled(),
            &input.loss,
            input.cam,
            input.cfg,
        );
        let ssd_etec = etec.feasible.then_some(etec.ssd);
        let method = BlockDecision::implied_method(Some(dmve.ssd), ssd_etec)
            .unwrap_or(Method::Dmve);
        let mv = match method {
            Method::Dmve => dmve.mv,
            Method::Etec => etec.mv,
        };
        BlockDecision {
            origin: input.origin(),
            method,
            mv,
            ssd_dmve: Some(dmve.ssd),
            ssd_etec,
            feasible_etec: etec.feasible,
        }
    }
}

/// Name -> strategy table.
#[derive(Clone, Default)]
pub struct EngineRegistry {
    engines: BTreeMap<String, Arc<dyn ConcealmentEngine>>,
}

impl EngineRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `dmve`, `etec` and `hybrid` (alias `hetec`).
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register("dmve", Arc::new(DmveEngine));
        reg.register("etec", Arc::new(EtecEngine));
        let hybrid: Arc<dyn ConcealmentEngine> = Arc::new(HybridEngine);
        reg.register("hybrid", hybrid.clone());
        reg.register("hetec", hybrid);
        reg
    }

    pub fn register(&mut self, name: impl Into<String>, engine: Arc<dyn ConcealmentEngine>) {
        self.engines.insert(name.into(), engine);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ConcealmentEngine>> {
        self.engines
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownEngine(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.engines.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for EngineRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.engines.keys()).finish()
    }
}

#[derive(Debug, Clone)]
pub struct ConcealedFrame {
    pub frame: Frame,
    pub decisions: Vec<BlockDecision>,
}

/// Conceals every block of `losses` in `cur` against `reference`.
///
/// Blocks are decided in parallel; the result does not depend on the
/// execution order. Pixels outside the loss areas are copied from `cur`.
pub fn conceal_frame(
    engine: &dyn ConcealmentEngine,
    cur: &Frame,
    reference: &Frame,
    losses: &LossMap,
    cam: &CameraModel,
    cfg: &SearchConfig,
) -> Result<ConcealedFrame> {
    cfg.validate()?;
    cur.luma.same_dims(&reference.luma)?;
    let (w, h) = cur.luma.dims();
    losses.validate(w, h)?;

    let mask = losses.mask(w, h);
    let upsampled = engine
        .needs_upsampled_reference()
        .then(|| upsample(&reference.luma, cfg.upsample_factor));

    let blocks: Vec<(Region, DecisionPixels)> = losses
        .loss_areas()
        .map(|r| {
            let d = DecisionPixels::gather(&cur.luma, &r, losses.decision_width, Some(&mask));
            (r, d)
        })
        .collect();

    let synthesized: Vec<(BlockDecision, Vec<u8>)> = blocks
        .par_iter()
        .map(|(loss, decision)| {
            let input = BlockInput {
                loss: *loss,
                decision,
                reference: &reference.luma,
                upsampled: upsampled.as_ref(),
                cam,
                cfg,
            };
            let d = engine.decide(&input);
            let samples = match d.method {
                Method::Dmve => dmve_conceal(&reference.luma, loss, d.mv),
                Method::Etec => etec_conceal(
                    upsampled.as_ref().expect("E-TEC decision without upsampled reference"),
                    loss,
                    d.mv,
                    cam,
                    cfg,
                )?,
            };
            Ok((d, samples))
        })
        .collect::<Result<_>>()?;

    let mut out = cur.clone();
    for ((loss, _), (_, samples)) in blocks.iter().zip(&synthesized) {
        write_region(&mut out.luma, loss, samples)?;
    }
    if let (Some(out_chroma), Some(ref_chroma)) = (out.chroma.as_mut(), reference.chroma.as_ref()) {
        for (plane, ref_plane) in out_chroma.iter_mut().zip(ref_chroma) {
            for ((loss, _), (d, _)) in blocks.iter().zip(&synthesized) {
                let persp = (d.method == Method::Etec).then_some((cam, cfg));
                let (region, samples) = conceal_chroma_block(ref_plane, loss, d.mv, persp);
                write_region(plane, &region, &samples)?;
            }
        }
    }

    Ok(ConcealedFrame {
        frame: out,
        decisions: synthesized.into_iter().map(|(d, _)| d).collect(),
    })
}

/// Hybrid concealment of one frame.
pub fn hetec_conceal_frame(
    cur: &Frame,
    reference: &Frame,
    losses: &LossMap,
    cam: &CameraModel,
    cfg: &SearchConfig,
) -> Result<ConcealedFrame> {
    conceal_frame(&HybridEngine, cur, reference, losses, cam, cfg)
}
