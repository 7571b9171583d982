//! Two-stage alignment and fusion for noisy Bayer-CFA bursts.
//!
//! The pipeline aligns a burst of raw frames against a reference in two
//! stages: progressive block matching on quarter-scale planes compensates
//! large patch-level motion cheaply, then a small-radius dense search
//! refines each pixel. Aligned frames are merged by inverse-variance
//! weighting and demosaicked into a full-color image.
//!
//! The matching relaxation (temperature-controlled softmax over negated
//! patch distances), its Jacobian and the associated loss terms are exposed
//! as pure functions with analytic gradients that are verified against
//! finite differences.
//!
//! All image math is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the concrete aliases below fix the default
//! double-precision pipeline.

pub mod bayer;
pub mod burst;
pub mod cost;
pub mod downsample;
pub mod dpbm;
pub mod error;
pub mod fusion;
pub mod gradcheck;
pub mod grid;
pub mod io;
pub mod isp;
pub mod losses;
pub mod matching;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod refine;
pub mod rgb;
pub mod scalar;
pub mod synth;

pub use bayer::{demosaic_bilinear, mosaic, BayerFrame, BayerPattern};
pub use burst::Burst;
pub use error::{Error, Result};
pub use grid::{Grid, Shift, Vec2};
pub use noise::NoiseParams;
pub use rgb::{Channel, RgbImage};
pub use scalar::Scalar;

/// Double-precision aliases (the default pipeline precision).
pub type Grid64 = Grid<f64>;
pub type RgbImage64 = RgbImage<f64>;
pub type BayerFrame64 = BayerFrame<f64>;
pub type Burst64 = Burst<f64>;
pub type FlowField64 = refine::FlowField<f64>;

/// Single-precision aliases for memory-bound workloads.
pub type Grid32 = Grid<f32>;
pub type RgbImage32 = RgbImage<f32>;
pub type BayerFrame32 = BayerFrame<f32>;
pub type Burst32 = Burst<f32>;
pub type FlowField32 = refine::FlowField<f32>;
