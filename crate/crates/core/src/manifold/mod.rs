//! Small dense linear algebra on spheres: tangent projection, planar skew
//! exponentials, a Jacobi eigensolver and unit-quaternion algebra.

pub mod eigen;
pub mod inequalities;
pub mod quaternion;
pub mod skew;
pub mod sphere;

pub use eigen::{sym_eigen, SymSpectrum, DEFAULT_GROUP_TOL};
pub use quaternion::{hat, nu, quat_mul, quat_product, quat_tangent_map, quat_to_rot, UnitQuaternion};
pub use skew::{skew_exp, SkewGenerator};
pub use sphere::{distance_to_antipodes, project_tangent, retract, tangent_project, UnitVector};
