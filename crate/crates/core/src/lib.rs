//! Synergistic hybrid feedback on spheres and unit quaternions.
//!
//! * [`manifold`]: sphere, skew-exponential, eigensolver and quaternion algebra.
//! * [`synergy`]: warped potential families, gap bounds, critical-point oracle.
//! * [`hybrid`]: fixed-step executor for flow/jump systems.
//! * [`sphere_stab`]: gradient and synergistic closed loops on the sphere.
//! * [`attitude`]: quaternion attitude tracking controllers.
//! * [`scenario`]: configuration, noise, presets, metrics and CSV output.

pub mod attitude;
pub mod error;
pub mod hybrid;
pub mod manifold;
pub mod scenario;
pub mod sphere_stab;
pub mod synergy;

pub use error::{Error, Result};
