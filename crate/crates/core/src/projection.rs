//! Player positions from detections: bottom-centre anchors mapped through the
//! inverse homography, then the self-verification filter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldTemplate;
use crate::geometry::{Homography, ImageSize, Point2, DEPTH_EPS};
use crate::linalg;
use crate::num::Real;
use crate::teams::Team;

/// Default self-verification tolerance in metres.
pub const DEFAULT_RHO: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: u64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl Detection {
    pub fn new(frame: u64, x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let d = Detection { frame, x1, y1, x2, y2, confidence: None };
        d.validate(None)?;
        Ok(d)
    }

    /// Box must be non-degenerate and, if a size is given, overlap the image.
    pub fn validate(&self, size: Option<ImageSize>) -> Result<()> {
        let finite = [self.x1, self.y1, self.x2, self.y2].iter().all(|v| v.is_finite());
        if !finite || !(self.x1 < self.x2 && self.y1 < self.y2) {
            return Err(Error::InvalidArgument(format!("degenerate box {self:?}")));
        }
        if let Some(s) = size {
            if self.x2 <= 0.0 || self.y2 <= 0.0 || self.x1 >= s.width as f64 || self.y1 >= s.height as f64 {
                return Err(Error::InvalidArgument(format!("box {self:?} outside the image")));
            }
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidArgument(format!("confidence {c} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn anchor(&self) -> Point2<f64> {
        detection_anchor(self.x1, self.y1, self.x2, self.y2)
    }
}

/// Bottom centre of a box.
pub fn detection_anchor<T: Real>(x1: T, _y1: T, x2: T, y2: T) -> Point2<T> {
    Point2::new((x1 + x2) / T::lit(2.0), y2)
}

/// Field position of an image point. Points that map to infinity or lie
/// above the horizon (behind the camera) are errors.
pub fn project_position<T: Real>(h: &Homography<T>, p: Point2<T>, size: ImageSize) -> Result<Point2<T>> {
    let inv = h.inverse()?;
    let v = inv.project(p);
    if v[2].abs() <= T::lit(DEPTH_EPS) {
        return Err(Error::AtInfinity(v[2].as_f64()));
    }
    // Same side of the horizon as the bottom-centre pixel, which sees the
    // ground in front of the camera.
    let reference = inv.project(Point2::new(T::lit(size.width as f64 / 2.0), T::from_count(size.height as usize)));
    if v[2] * reference[2] < T::zero() {
        return Err(Error::AtInfinity(v[2].as_f64()));
    }
    Ok(Point2::new(v[0] / v[2], v[1] / v[2]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvConfig {
    pub rho: f64,
}

impl Default for SvConfig {
    fn default() -> Self {
        SvConfig { rho: DEFAULT_RHO }
    }
}

impl SvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("rho must be non-negative, got {}", self.rho)))
        }
    }
}

/// Keeps a frame iff every position is finite and at most `rho` outside the
/// field rectangle (boundary inclusive). An infinite `rho` disables the
/// filter for finite positions.
pub fn self_verify<T: Real>(positions: &[Option<Point2<T>>], field: &FieldTemplate<T>, cfg: &SvConfig) -> bool {
    let rho = T::lit(cfg.rho);
    positions.iter().all(|p| match p {
        Some(p) if p.is_finite() => {
            p.x >= -rho && p.y >= -rho && p.x <= field.length + rho && p.y <= field.width + rho
        }
        _ => false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlayerEstimate {
    /// `None` when the anchor does not map to a finite field point.
    pub position: Option<Point2<f64>>,
    /// Index of the detection within its frame.
    pub detection_id: usize,
    pub team: Option<Team>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameEstimate {
    pub frame: u64,
    pub homography: Option<Homography<f64>>,
    pub players: Vec<PlayerEstimate>,
    /// Self-verification result.
    pub kept: bool,
}

impl FrameEstimate {
    pub fn positions(&self) -> impl Iterator<Item = Point2<f64>> + '_ {
        self.players.iter().filter_map(|p| p.position)
    }
}

/// Projects one frame's detections and applies self-verification. Without a
/// homography the frame is discarded with no positions.
pub fn extract_frame_positions(
    frame: u64,
    detections: &[Detection],
    h: Option<&Homography<f64>>,
    size: ImageSize,
    field: &FieldTemplate<f64>,
    cfg: &SvConfig,
) -> Result<FrameEstimate> {
    cfg.validate()?;
    if let Some(d) = detections.iter().find(|d| d.frame != frame) {
        return Err(Error::InvalidArgument(format!("detection of frame {} passed for frame {frame}", d.frame)));
    }
    let Some(h) = h else {
        return Ok(FrameEstimate { frame, homography: None, players: Vec::new(), kept: false });
    };
    if linalg::det(h.matrix()) == 0.0 {
        return Err(Error::Singular);
    }
    let players: Vec<PlayerEstimate> = detections
        .iter()
        .enumerate()
        .map(|(i, d)| PlayerEstimate { position: project_position(h, d.anchor(), size).ok(), detection_id: i, team: None })
        .collect();
    let positions: Vec<_> = players.iter().map(|p| p.position).collect();
    let kept = self_verify(&positions, field, cfg);
    Ok(FrameEstimate { frame, homography: Some(*h), players, kept })
}
