//! Player positions from broadcast soccer video: field registration against
//! a synthetic camera-pose database, shot classification, projection of
//! detections onto the pitch, team assignment and evaluation.
//!
//! The geometric core is generic over the scalar type; the aliases below fix
//! it to `f64` or `f32`.

pub mod camera;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod num;
pub mod pipeline;
pub mod polygon;
pub mod projection;
pub mod registration;
pub mod rng;
pub mod shots;
pub mod synth;
pub mod teams;
pub mod textfmt;

pub use error::{Error, Result};
pub use num::Real;

pub type Homography64 = geometry::Homography<f64>;
pub type Homography32 = geometry::Homography<f32>;
pub type CameraPose64 = camera::CameraPose<f64>;
pub type CameraPose32 = camera::CameraPose<f32>;
pub type Point64 = geometry::Point2<f64>;
pub type Point32 = geometry::Point2<f32>;
pub type FieldTemplate64 = field::FieldTemplate<f64>;
pub type FieldTemplate32 = field::FieldTemplate<f32>;
