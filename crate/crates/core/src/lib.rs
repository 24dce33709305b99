//! Synthetic k-space motion artifacts for 3D brain MRI, soft-label motion
//! regression and motion-bias statistics.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the usual choices.

// NaN-rejecting `!(x > y)` checks and index-heavy numeric loops are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod augment;
pub mod kspace;
pub mod phantom;
pub mod rigid;
pub mod sampler;
pub mod scalar;
pub mod softlabel;
pub mod stats;
pub mod tinynet;
pub mod volume;

pub use scalar::Real;

pub type Volume = volume::Volume3D<f32>;
pub type Volume64 = volume::Volume3D<f64>;
pub type Transform = rigid::RigidTransform<f64>;
pub type Trajectory = rigid::MotionTrajectory<f64>;
pub type Score = rigid::MotionScore<f64>;
pub type Label = softlabel::SoftLabel<f64>;
pub type Net32 = tinynet::Net<f32>;
pub type Net64 = tinynet::Net<f64>;
