//! Field registration: retrieval of the nearest synthetic camera pose
//! followed by homography refinement, plus registration quality scoring.

pub mod db;
pub mod descriptor;
pub mod iou;
pub mod refine;

pub use db::{build_feature_db, BuildStats, FeatureDb, Neighbor, RenderConfig};
pub use descriptor::{descriptor, Descriptor, DescriptorConfig, FeatureVector};
pub use iou::{iou_part, visible_field_region};
pub use refine::{refine_homography, Aligner, RefineStatus, Refinement, RefinementParams, UnrefinedReason};

use crate::error::Result;
use crate::field::{EdgeImage, FieldTemplate};
use crate::geometry::Homography;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegistrationParams {
    /// Number of retrieved candidates; each is refined and the one with the
    /// lowest final residual wins.
    pub candidates: usize,
    pub refine: bool,
    /// Candidates are tried in rank order; the search stops at the first one
    /// whose alignment score is at most this many pixels.
    pub accept_residual: f64,
    pub refinement: RefinementParams,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        RegistrationParams { candidates: 5, refine: true, accept_residual: 0.5, refinement: RefinementParams::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRegistration {
    pub homography: Homography<f64>,
    pub neighbor: Neighbor,
    pub residual: f64,
    pub status: Option<RefineStatus>,
}

/// Registers one observed edge image against the database.
pub fn register_frame(
    db: &FeatureDb,
    op: &Descriptor,
    observed: &EdgeImage,
    template: &FieldTemplate<f64>,
    params: &RegistrationParams,
) -> Result<FrameRegistration> {
    let query = op.describe(observed)?;
    let k = params.candidates.clamp(1, db.len());
    let neighbors = db.retrieve_nearest(&query, k)?;
    let aligner = Aligner::new(observed, template, params.refinement)?;
    let candidates_scored = params.refine || k > 1;
    let mut best: Option<FrameRegistration> = None;
    for nb in neighbors {
        let Ok(h0) = nb.pose.homography(observed.size) else { continue };
        let (h, status) = if params.refine {
            let r = aligner.refine(&h0);
            (r.homography, Some(r.status))
        } else {
            (h0, None)
        };
        let residual = if candidates_scored { aligner.residual(&h) } else { f64::NAN };
        let cand = FrameRegistration { homography: h, neighbor: nb, residual, status };
        if best.as_ref().is_none_or(|b| cand.residual < b.residual) {
            best = Some(cand);
        }
        if !candidates_scored || best.as_ref().is_some_and(|b| b.residual <= params.accept_residual) {
            break;
        }
    }
    best.ok_or(crate::Error::EmptyDatabase)
}
