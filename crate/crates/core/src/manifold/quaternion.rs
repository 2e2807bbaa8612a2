use nalgebra::{DVector, Matrix3, Matrix4x3, Vector3, Vector4};
use rand::Rng;

use crate::error::Result;
use crate::manifold::sphere::{retract, UnitVector};

/// Unit quaternion `Q = [η, εᵀ]ᵀ` on S³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub eta: f64,
    pub eps: Vector3<f64>,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        eta: 1.0,
        eps: Vector3::new(0.0, 0.0, 0.0),
    };

    /// Enforces the same drift contract as [`UnitVector::new`].
    pub fn new(eta: f64, eps: Vector3<f64>) -> Result<Self> {
        Self::from_vector4(&Vector4::new(eta, eps.x, eps.y, eps.z))
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Result<Self> {
        let d = retract(DVector::from_column_slice(v.as_slice()))?;
        Ok(Self {
            eta: d[0],
            eps: Vector3::new(d[1], d[2], d[3]),
        })
    }

    /// Normalizes an arbitrary nonzero 4-vector.
    pub fn normalize(v: &Vector4<f64>) -> Result<Self> {
        let u = UnitVector::normalize(DVector::from_column_slice(v.as_slice()))?;
        Ok(Self {
            eta: u[0],
            eps: Vector3::new(u[1], u[2], u[3]),
        })
    }

    pub fn from_unit_vector(u: &UnitVector) -> Result<Self> {
        Self::from_vector4(&Vector4::new(u[0], u[1], u[2], u[3]))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u = UnitVector::random(rng, 4);
        Self {
            eta: u[0],
            eps: Vector3::new(u[1], u[2], u[3]),
        }
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.eta, self.eps.x, self.eps.y, self.eps.z)
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.to_vector4().as_slice())
    }

    pub fn norm(&self) -> f64 {
        self.to_vector4().norm()
    }

    /// Conjugate, which is the inverse for unit quaternions.
    pub fn inverse(&self) -> Self {
        Self {
            eta: self.eta,
            eps: -self.eps,
        }
    }

    /// Rotation angle `2 acos |η|` of the represented attitude, in [0, π].
    pub fn rotation_angle(&self) -> f64 {
        2.0 * self.eta.abs().min(1.0).acos()
    }
}

impl std::ops::Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        UnitQuaternion {
            eta: -self.eta,
            eps: -self.eps,
        }
    }
}

impl std::ops::Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        quat_mul(&self, &rhs)
    }
}

/// Cross-product matrix `x^×`.
pub fn hat(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -x.z, x.y, x.z, 0.0, -x.x, -x.y, x.x, 0.0)
}

/// Embeds a 3-vector as a pure quaternion `[0, xᵀ]ᵀ`.
pub fn nu(x: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(0.0, x.x, x.y, x.z)
}

/// Hamilton product on raw 4-vectors `[η, ε]`.
pub fn quat_product(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    let (ea, va) = (a[0], Vector3::new(a[1], a[2], a[3]));
    let (eb, vb) = (b[0], Vector3::new(b[1], b[2], b[3]));
    let eta = ea * eb - va.dot(&vb);
    let eps = vb * ea + va * eb + va.cross(&vb);
    Vector4::new(eta, eps.x, eps.y, eps.z)
}

/// Quaternion multiplication of unit quaternions, renormalized when rounding
/// drifts past 1e-12.
pub fn quat_mul(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    let p = quat_product(&a.to_vector4(), &b.to_vector4());
    let n = p.norm();
    let p = if (n - 1.0).abs() > 1e-12 { p / n } else { p };
    UnitQuaternion {
        eta: p[0],
        eps: Vector3::new(p[1], p[2], p[3]),
    }
}

/// `R_a(Q) = I + 2η ε^× + 2 (ε^×)²`.
pub fn quat_to_rot(q: &UnitQuaternion) -> Matrix3<f64> {
    let e = hat(&q.eps);
    Matrix3::identity() + e * (2.0 * q.eta) + e * e * 2.0
}

/// `Λ(Q)`, mapping body angular velocity to `2 Q̇`: first row `-εᵀ`, then
/// `ηI + ε^×`.
pub fn quat_tangent_map(q: &UnitQuaternion) -> Matrix4x3<f64> {
    let lower = Matrix3::identity() * q.eta + hat(&q.eps);
    let mut m = Matrix4x3::zeros();
    m.fixed_view_mut::<1, 3>(0, 0).copy_from(&(-q.eps.transpose()));
    m.fixed_view_mut::<3, 3>(1, 0).copy_from(&lower);
    m
}
