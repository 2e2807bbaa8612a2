use nalgebra::{DMatrix, Matrix3, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::manifold::{nu, quat_tangent_map, UnitQuaternion, UnitVector};
use crate::synergy::family::argmin_of;
use crate::synergy::{BasicPotential, SynergisticFamily};

/// Warped family on S³ built from `P(Q) = εᵀAε`, i.e. `M = diag(0, A)` with
/// reference point the identity quaternion.
///
/// Values and gradients are evaluated in closed form; the generic family is
/// kept for bounds, certification and cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatFamily {
    a: Matrix3<f64>,
    family: SynergisticFamily,
    /// Vector parts of the warp directions, indexed by `q - 1`.
    u: Vec<Vector3<f64>>,
    lambda: Vec<f64>,
}

impl QuatFamily {
    pub fn new(a: Matrix3<f64>, k: f64, delta_fraction: f64, group_tol: f64) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((1, 1), (3, 3)).copy_from(&a);
        let basic = BasicPotential::with_reference(m, UnitVector::axis(4, 0), group_tol).map_err(|e| match e {
            Error::Assumption(msg) => Error::Assumption(format!("A must be symmetric positive definite: {msg}")),
            other => other,
        })?;
        let family = SynergisticFamily::new(basic, k, delta_fraction)?;
        let u = family
            .indices()
            .map(|q| {
                let d = family.direction(q);
                Vector3::new(d[1], d[2], d[3])
            })
            .collect();
        let lambda = family.indices().map(|q| family.lambda(q)).collect();
        Ok(Self { a, family, u, lambda })
    }

    pub fn a(&self) -> &Matrix3<f64> {
        &self.a
    }

    /// Generic family on S³ with `M = diag(0, A)`.
    pub fn family(&self) -> &SynergisticFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn direction(&self, q: usize) -> &Vector3<f64> {
        &self.u[q - 1]
    }

    pub fn delta(&self, q: usize) -> f64 {
        self.family.delta(q)
    }

    pub fn delta_bar(&self, q: usize) -> f64 {
        self.family.delta_bar(q)
    }

    fn lambda_max(&self) -> f64 {
        self.family.basic().lambda_max()
    }

    /// `(a, θ, b)` with `a = u_qᵀε`, `θ = k εᵀAε / λ_max`, `b = η sin θ + a cos θ`.
    fn warp_terms(&self, eta: f64, eps: &Vector3<f64>, q: usize) -> (f64, f64, f64) {
        let a = self.u[q - 1].dot(eps);
        let theta = self.family.k() * eps.dot(&(self.a * eps)) / self.lambda_max();
        (a, theta, eta * theta.sin() + a * theta.cos())
    }

    /// `U(Q, q) = εᵀAε + λ_q (b² - a²)`.
    pub fn eval(&self, quat: &UnitQuaternion, q: usize) -> f64 {
        let eps = &quat.eps;
        let (a, _, b) = self.warp_terms(quat.eta, eps, q);
        eps.dot(&(self.a * eps)) + self.lambda[q - 1] * (b * b - a * a)
    }

    /// Ambient gradient `∇U(Q, q) ∈ ℝ⁴` in closed form.
    pub fn grad(&self, quat: &UnitQuaternion, q: usize) -> Vector4<f64> {
        let eta = quat.eta;
        let eps = &quat.eps;
        let (a, theta, _) = self.warp_terms(eta, eps, q);
        let lq = self.lambda[q - 1];
        let (s2, c2) = (2.0 * theta).sin_cos();
        let sin_sq = theta.sin().powi(2);
        let rate = self.family.k() * lq / self.lambda_max();
        let scale = 2.0 * (1.0 + rate * ((eta * eta - a * a) * s2 + 2.0 * eta * a * c2));
        let warp_scalar = 2.0 * eta * sin_sq + a * s2;
        let warp_vector = self.u[q - 1] * (eta * s2 - 2.0 * a * sin_sq);
        nu(&(self.a * eps)) * scale + Vector4::new(warp_scalar, warp_vector.x, warp_vector.y, warp_vector.z) * lq
    }

    /// Chain-rule gradient of the generic family, for cross-checking.
    pub fn grad_chain_rule(&self, quat: &UnitQuaternion, q: usize) -> Vector4<f64> {
        let g = self.family.grad(&quat.to_dvector(), q);
        Vector4::new(g[0], g[1], g[2], g[3])
    }

    /// `κ₂(Q, q) = ½ Λ(Q)ᵀ ∇U(Q, q)`.
    pub fn kappa(&self, quat: &UnitQuaternion, q: usize) -> Vector3<f64> {
        quat_tangent_map(quat).transpose() * self.grad(quat, q) * 0.5
    }

    pub fn eval_all(&self, quat: &UnitQuaternion) -> Vec<f64> {
        (1..=self.len()).map(|p| self.eval(quat, p)).collect()
    }

    pub fn synergy_gap(&self, quat: &UnitQuaternion, q: usize) -> f64 {
        let values = self.eval_all(quat);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        values[q - 1] - min
    }

    /// Smallest index minimizing `U(Q, ·)`.
    pub fn argmin_index(&self, quat: &UnitQuaternion) -> usize {
        argmin_of(&self.eval_all(quat))[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::DEFAULT_GROUP_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn benchmark() -> QuatFamily {
        QuatFamily::new(
            Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0)),
            0.5,
            0.9,
            DEFAULT_GROUP_TOL,
        )
        .unwrap()
    }

    #[test]
    fn directions_follow_axes() {
        let f = benchmark();
        assert_eq!(f.len(), 6);
        for i in 0..3 {
            assert_eq!(f.direction(i + 1), &Vector3::ith(i, 1.0));
            assert_eq!(f.direction(i + 4), &(-Vector3::ith(i, 1.0)));
        }
    }

    #[test]
    fn closed_form_matches_generic_family() {
        let f = benchmark();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let quat = UnitQuaternion::random(&mut rng);
            let q = rng.random_range(1..=6);
            let generic = f.family().eval(&quat.to_dvector(), q);
            assert!((f.eval(&quat, q) - generic).abs() < 1e-12);
            let g = f.grad(&quat, q);
            let c = f.grad_chain_rule(&quat, q);
            assert!((g - c).amax() <= 1e-10 * c.amax().max(1.0));
        }
    }

    #[test]
    fn consistent_under_sign_change() {
        let f = benchmark();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let quat = UnitQuaternion::random(&mut rng);
            let q = rng.random_range(1..=6);
            let neg = -quat;
            assert!((f.eval(&quat, q) - f.eval(&neg, q)).abs() < 1e-12);
            assert!((f.grad(&quat, q) + f.grad(&neg, q)).amax() < 1e-12);
            assert!((f.kappa(&quat, q) - f.kappa(&neg, q)).amax() < 1e-12);
        }
    }

    #[test]
    fn feedback_vanishes_at_identity() {
        let f = benchmark();
        for q in 1..=6 {
            assert_eq!(f.kappa(&UnitQuaternion::IDENTITY, q), Vector3::zeros());
            assert_eq!(f.kappa(&-UnitQuaternion::IDENTITY, q), Vector3::zeros());
        }
    }

    #[test]
    fn rejects_indefinite_weight() {
        let a = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 2.0));
        assert!(QuatFamily::new(a, 0.5, 0.9, DEFAULT_GROUP_TOL).is_err());
    }
}
