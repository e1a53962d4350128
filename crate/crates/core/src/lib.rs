//! Segmentation-guided alignment of depth borders.
//!
//! The crate covers the numerical pipeline end to end: edge extraction and
//! segmentation/depth edge association, the edge-edge consistency measure,
//! a locally weighted line-pair morph of disparity maps, stereo occlusion
//! masks, the gated training losses, and the depth evaluation protocol.
//! A deterministic synthetic stereo generator provides ground truth for
//! all of it.
//!
//! Map containers are generic over the scalar type (any [`Real`]); the
//! aliases at the crate root fix the common choice of `f32` payloads with
//! `f64` geometry.

pub mod edges;
pub mod error;
pub mod eval;
pub mod grid;
pub mod io;
pub mod losses;
pub mod morph;
pub mod occlusion;
pub mod params;
pub mod pipeline;
pub mod sample;
pub mod scalar;
pub mod synth;

pub use crate::edges::{EdgePair, EdgeSet, PairSet};
pub use crate::error::{Error, Result};
pub use crate::eval::{Crop, MetricRow, RegionSplit};
pub use crate::grid::{BinaryMask, Image3, PixelCoord, Point2, ScalarMap, Unit};
pub use crate::morph::MorphField;
pub use crate::occlusion::{OcclusionParams, View};
pub use crate::params::Thresholds;
pub use crate::scalar::Real;
pub use crate::synth::{Fixture, SceneSpec};

/// Single-precision scalar map, the default payload type.
pub type Map = ScalarMap<f32>;
/// Double-precision scalar map.
pub type Map64 = ScalarMap<f64>;
/// Three-channel single-precision image.
pub type Image = Image3<f32>;
/// Double-precision point used for all geometric arithmetic.
pub type Point = Point2<f64>;
