//! Rigid-body, reference and tracking-error dynamics.

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::manifold::{hat, nu, quat_product, quat_to_rot, UnitQuaternion};

/// `Q̇ = ½ Q ⊙ ν(ω)` as a raw 4-vector.
pub fn quat_rate(quat: &UnitQuaternion, omega: &Vector3<f64>) -> Vector4<f64> {
    quat_product(&quat.to_vector4(), &nu(omega)) * 0.5
}

/// `J ω̇ = -ω × Jω + τ`, solved for `ω̇`.
pub fn rigid_body_accel(
    j: &Matrix3<f64>,
    j_inv: &Matrix3<f64>,
    omega: &Vector3<f64>,
    tau: &Vector3<f64>,
) -> Vector3<f64> {
    j_inv * (-omega.cross(&(j * omega)) + tau)
}

/// `Σ = (J(ω̃ + ω̄_d))^× - ω̄_d^× J - J ω̄_d^×`.
pub fn sigma(j: &Matrix3<f64>, w_tilde: &Vector3<f64>, w_bar_d: &Vector3<f64>) -> Matrix3<f64> {
    hat(&(j * (w_tilde + w_bar_d))) - hat(w_bar_d) * j - j * hat(w_bar_d)
}

/// `Ξ = J R(Q̃)ᵀ ω̇_d + ω̄_d^× J ω̄_d`, with `ω̄_d = R(Q̃)ᵀ ω_d`.
pub fn xi(j: &Matrix3<f64>, q_tilde: &UnitQuaternion, w_bar_d: &Vector3<f64>, w_d_dot: &Vector3<f64>) -> Vector3<f64> {
    j * quat_to_rot(q_tilde).transpose() * w_d_dot + w_bar_d.cross(&(j * w_bar_d))
}

/// Tracking error `Q̃ = Q_d⁻¹ ⊙ Q`, `ω̃ = ω - R(Q̃)ᵀ ω_d`, and `ω̄_d = R(Q̃)ᵀ ω_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub q_tilde: UnitQuaternion,
    pub w_tilde: Vector3<f64>,
    pub w_bar_d: Vector3<f64>,
}

impl TrackingError {
    pub fn from_states(q: &UnitQuaternion, omega: &Vector3<f64>, q_d: &UnitQuaternion, omega_d: &Vector3<f64>) -> Self {
        let q_tilde = q_d.inverse() * *q;
        let w_bar_d = quat_to_rot(&q_tilde).transpose() * omega_d;
        Self {
            q_tilde,
            w_tilde: omega - w_bar_d,
            w_bar_d,
        }
    }
}

/// `(Q̃̇, ω̃̇)` of the error dynamics under torque `tau`.
pub fn error_dynamics(
    err: &TrackingError,
    j: &Matrix3<f64>,
    j_inv: &Matrix3<f64>,
    tau: &Vector3<f64>,
    w_d_dot: &Vector3<f64>,
) -> (Vector4<f64>, Vector3<f64>) {
    let dq = quat_rate(&err.q_tilde, &err.w_tilde);
    let dw =
        j_inv * (sigma(j, &err.w_tilde, &err.w_bar_d) * err.w_tilde - xi(j, &err.q_tilde, &err.w_bar_d, w_d_dot) + tau);
    (dq, dw)
}

/// Desired angular velocity as a function of time with its analytic derivative.
pub trait ReferenceProfile: Send + Sync {
    fn omega(&self, t: f64) -> Vector3<f64>;
    fn omega_dot(&self, t: f64) -> Vector3<f64>;
}

/// `ω_d ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StillProfile;

impl ReferenceProfile for StillProfile {
    fn omega(&self, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn omega_dot(&self, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }
}

/// `ω_d(t) = [t e^{-t/2}, 0.6 sin 0.4t, 0.6 sin 0.7t]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkProfile;

impl BenchmarkProfile {
    /// Upper bound on `|ω_d|`.
    pub const OMEGA_BOUND: f64 = 1.2;
    /// Upper bound on `|ω̇_d|`.
    pub const ACCEL_BOUND: f64 = 1.12;
}

impl ReferenceProfile for BenchmarkProfile {
    fn omega(&self, t: f64) -> Vector3<f64> {
        Vector3::new(t * (-0.5 * t).exp(), 0.6 * (0.4 * t).sin(), 0.6 * (0.7 * t).sin())
    }

    fn omega_dot(&self, t: f64) -> Vector3<f64> {
        Vector3::new(
            (-0.5 * t).exp() * (1.0 - 0.5 * t),
            0.24 * (0.4 * t).cos(),
            0.42 * (0.7 * t).cos(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub t: f64,
    pub q_d: UnitQuaternion,
    pub omega_d: Vector3<f64>,
    pub omega_d_dot: Vector3<f64>,
}

/// Integrates `Q̇_d = ½ Q_d ⊙ ν(ω_d)` with RK4 and renormalization, checking
/// `|ω_d| ≤ c_omega` and `|ω̇_d| ≤ c_accel` at every sample.
pub fn reference_generator(
    profile: &dyn ReferenceProfile,
    q_d0: UnitQuaternion,
    horizon: f64,
    dt: f64,
    c_omega: f64,
    c_accel: f64,
) -> Result<Vec<ReferenceState>> {
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut q_d = q_d0;
    for step in 0..=steps {
        let t = step as f64 * dt;
        let omega_d = profile.omega(t);
        let omega_d_dot = profile.omega_dot(t);
        if omega_d.norm() > c_omega {
            return Err(Error::ReferenceBound {
                which: "|omega_d|",
                bound: c_omega,
                value: omega_d.norm(),
                t,
            });
        }
        if omega_d_dot.norm() > c_accel {
            return Err(Error::ReferenceBound {
                which: "|omega_d_dot|",
                bound: c_accel,
                value: omega_d_dot.norm(),
                t,
            });
        }
        out.push(ReferenceState {
            t,
            q_d,
            omega_d,
            omega_d_dot,
        });
        if step < steps {
            q_d = rk4_quat(&q_d, |s| profile.omega(s), t, dt)?;
        }
    }
    Ok(out)
}

/// One RK4 step of `Q̇ = ½ Q ⊙ ν(ω(t))` followed by renormalization.
pub fn rk4_quat(quat: &UnitQuaternion, omega: impl Fn(f64) -> Vector3<f64>, t: f64, dt: f64) -> Result<UnitQuaternion> {
    let x = quat.to_vector4();
    let f = |s: f64, v: &Vector4<f64>| quat_product(v, &nu(&omega(s))) * 0.5;
    let k1 = f(t, &x);
    let k2 = f(t + 0.5 * dt, &(x + k1 * (0.5 * dt)));
    let k3 = f(t + 0.5 * dt, &(x + k2 * (0.5 * dt)));
    let k4 = f(t + dt, &(x + k3 * dt));
    UnitQuaternion::from_vector4(&(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)))
}
