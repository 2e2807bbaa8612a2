use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Norm drift that is silently corrected by renormalization.
pub const RENORM_TOL: f64 = 1e-12;
/// Norm drift beyond which a vector is rejected.
pub const DRIFT_TOL: f64 = 1e-6;

/// A point on the unit n-sphere, stored in ambient coordinates of length n+1.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Accepts `coords` whose norm is within [`DRIFT_TOL`] of one and
    /// renormalizes when the drift exceeds [`RENORM_TOL`].
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        Ok(Self(retract(coords)?))
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalize(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self(coords / norm))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// The i-th standard basis vector of the ambient space of dimension `dim`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        Self(v)
    }

    /// Uniformly distributed point on the sphere in `dim` ambient coordinates.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        loop {
            let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(u) = Self::normalize(v) {
                return u;
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for UnitVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl std::ops::Neg for UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

/// Pulls a vector back onto the unit sphere, enforcing the drift contract.
pub fn retract(mut v: DVector<f64>) -> Result<DVector<f64>> {
    let norm = v.norm();
    let drift = (norm - 1.0).abs();
    if !drift.is_finite() || drift > DRIFT_TOL {
        return Err(Error::NormDrift(drift));
    }
    if drift > RENORM_TOL {
        v /= norm;
    }
    Ok(v)
}

/// Orthogonal projector `I - x xᵀ` onto the tangent space at `x`.
pub fn tangent_project(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::identity(n, n) - x * x.transpose()
}

/// Applies `I - x xᵀ` to `y` without forming the matrix.
pub fn project_tangent(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    y - x * x.dot(y)
}

/// Euclidean distance from `x` to the antipodal pair `{r, -r}`.
pub fn distance_to_antipodes(x: &DVector<f64>, r: &DVector<f64>) -> f64 {
    (x - r).norm().min((x + r).norm())
}
