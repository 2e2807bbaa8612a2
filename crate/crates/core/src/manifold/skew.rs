use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on `‖S³ + S‖` accepted by [`skew_exp`].
pub const CUBIC_TOL: f64 = 1e-8;

/// Skew-symmetric generator of a planar rotation, `S = u rᵀ - r uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewGenerator(DMatrix<f64>);

impl SkewGenerator {
    /// Rank-two generator rotating `r` toward `u`. For orthonormal `u`, `r`
    /// the result satisfies `S³ = -S`.
    pub fn from_pair(u: &DVector<f64>, r: &DVector<f64>) -> Self {
        let m = u * r.transpose();
        let t = m.transpose();
        Self(m - t)
    }

    /// Wraps an existing matrix, requiring exact antisymmetry.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let asym = (&m + m.transpose()).amax();
        if asym != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "generator is not antisymmetric (|S + Sᵀ| = {asym:.3e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `‖S³ + S‖` in the Frobenius norm.
    pub fn cubic_residual(&self) -> f64 {
        let s = &self.0;
        (s * s * s + s).norm()
    }

    /// Closed-form exponential; caller guarantees `S³ = -S`.
    pub(crate) fn exp_unchecked(&self, phi: f64) -> DMatrix<f64> {
        let n = self.dim();
        let s = &self.0;
        DMatrix::identity(n, n) + s * phi.sin() + (s * s) * (1.0 - phi.cos())
    }

    /// `e^{Sφ} x` without forming the matrix.
    pub fn rotate(&self, phi: f64, x: &DVector<f64>) -> DVector<f64> {
        let sx = &self.0 * x;
        let ssx = &self.0 * &sx;
        x + sx * phi.sin() + ssx * (1.0 - phi.cos())
    }
}

/// Matrix exponential of a rank-two skew generator:
/// `e^{Sφ} = I + sin φ S + (1 - cos φ) S²`.
pub fn skew_exp(s: &SkewGenerator, phi: f64) -> Result<DMatrix<f64>> {
    let residual = s.cubic_residual();
    if residual > CUBIC_TOL {
        return Err(Error::MalformedGenerator(residual));
    }
    Ok(s.exp_unchecked(phi))
}
