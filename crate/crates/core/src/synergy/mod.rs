//! Centrally synergistic families `U = P ∘ T` built by angular warping of a
//! quadratic potential, their gap bounds and a numerical certifier.

pub mod bounds;
pub mod certify;
pub mod critical;
pub mod family;
pub mod potential;

pub use bounds::{gap_bound_closed_form, gap_bound_for_angle_floor, warp_angle_floor, GapBound};
pub use certify::{certify_family, certify_family_with, random_basic_matrix, random_family, Certificate};
pub use critical::{critical_points, critical_points_sampled, CriticalKind, CriticalPoint};
pub use family::SynergisticFamily;
pub use potential::BasicPotential;
