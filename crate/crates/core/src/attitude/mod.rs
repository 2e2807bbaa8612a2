//! Unit-quaternion attitude tracking with the warped synergistic family.

pub mod control;
pub mod dynamics;
pub mod family;

pub use control::{
    cs_continuous_controller, cs_hybrid_controller, noncs_hybrid_controller, ControllerKind, Gains, Measurement,
    MeasurementNoise, TrackingSetup, TrackingState, TrackingSystem,
};
pub use dynamics::{
    error_dynamics, reference_generator, sigma, xi, BenchmarkProfile, ReferenceProfile, ReferenceState, StillProfile,
    TrackingError,
};
pub use family::QuatFamily;
