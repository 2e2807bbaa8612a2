use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::{sym_eigen, SymSpectrum, UnitVector};

/// Quadratic potential `P(x) = xᵀMx` whose zero set on the sphere is the
/// antipodal pair `{r, -r}`.
///
/// Requires `M` symmetric positive semidefinite with a simple zero
/// eigenvalue; its eigenvector is the reference point `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicPotential {
    spectrum: SymSpectrum,
    reference: UnitVector,
}

impl BasicPotential {
    /// Builds the potential and takes `r` as the null eigenvector of `M`.
    pub fn new(m: DMatrix<f64>, group_tol: f64) -> Result<Self> {
        let spectrum = sym_eigen(&m, group_tol)?;
        check_null_eigenvalue(&spectrum)?;
        let reference = UnitVector::new(spectrum.eigenvector(0).clone())?;
        Ok(Self { spectrum, reference })
    }

    /// Builds the potential with an explicit reference point, which must be
    /// collinear with the null eigenvector of `M` to within 1e-9.
    pub fn with_reference(m: DMatrix<f64>, reference: UnitVector, group_tol: f64) -> Result<Self> {
        let mut spectrum = sym_eigen(&m, group_tol)?;
        if reference.ambient_dim() != spectrum.dim() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.dim(),
                got: reference.ambient_dim(),
            });
        }
        check_null_eigenvalue(&spectrum)?;
        let align = spectrum.eigenvector(0).dot(&reference).abs();
        if 1.0 - align > 1e-9 {
            return Err(Error::Assumption(format!(
                "reference point is not the null eigenvector (|vᵀr| = {align})"
            )));
        }
        spectrum.pin_eigenvector(0, reference.as_vector().clone());
        Ok(Self { spectrum, reference })
    }

    /// `P(x) = xᵀMx`, evaluated on the ambient extension.
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(self.matrix() * x))
    }

    /// `∇P(x) = 2Mx`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.matrix() * x * 2.0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.spectrum.matrix()
    }

    pub fn spectrum(&self) -> &SymSpectrum {
        &self.spectrum
    }

    pub fn reference(&self) -> &UnitVector {
        &self.reference
    }

    /// Ambient dimension n+1.
    pub fn ambient_dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Sphere dimension n.
    pub fn sphere_dim(&self) -> usize {
        self.spectrum.dim() - 1
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.max_eigenvalue()
    }
}

fn check_null_eigenvalue(spectrum: &SymSpectrum) -> Result<()> {
    if spectrum.dim() < 2 {
        return Err(Error::Assumption("ambient dimension must be at least 2".into()));
    }
    let scale = spectrum.eigenvalues().iter().fold(1.0_f64, |a, l| a.max(l.abs()));
    let tol = spectrum.group_tol() * scale;
    let l0 = spectrum.eigenvalue(0);
    if l0.abs() > tol {
        return Err(Error::Assumption(format!("smallest eigenvalue must be zero, got {l0}")));
    }
    let l1 = spectrum.eigenvalue(1);
    if l1 <= tol || spectrum.multiplicity(0) != 1 {
        return Err(Error::Assumption(format!(
            "zero eigenvalue must be simple (second eigenvalue {l1})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::DEFAULT_GROUP_TOL;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn evaluates_quadratic_form() {
        let p = BasicPotential::new(diag(&[0.0, 1.0, 1.0, 2.0]), DEFAULT_GROUP_TOL).unwrap();
        assert_eq!(p.eval(p.reference()), 0.0);
        assert_eq!(p.eval(&UnitVector::axis(4, 3)), 2.0);
        let s = 0.5_f64.sqrt();
        let x = DVector::from_column_slice(&[0.0, s, 0.0, s]);
        assert!((p.eval(&x) - 1.5).abs() < 1e-15);
        assert_eq!(p.reference().as_vector(), UnitVector::axis(4, 0).as_vector());
    }

    #[test]
    fn rejects_assumption_violations() {
        // no zero eigenvalue
        assert!(BasicPotential::new(diag(&[0.5, 1.0, 2.0]), DEFAULT_GROUP_TOL).is_err());
        // double zero eigenvalue
        assert!(BasicPotential::new(diag(&[0.0, 0.0, 2.0]), DEFAULT_GROUP_TOL).is_err());
        // reference not the null vector
        let r = UnitVector::axis(3, 1);
        assert!(BasicPotential::with_reference(diag(&[0.0, 1.0, 2.0]), r, DEFAULT_GROUP_TOL).is_err());
    }

    #[test]
    fn values_range_over_the_spectrum() {
        use rand::SeedableRng;
        let p = BasicPotential::new(diag(&[0.0, 1.0, 3.0]), DEFAULT_GROUP_TOL).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = UnitVector::random(&mut rng, 3);
            let v = p.eval(&x);
            assert!((-1e-15..=3.0 + 1e-12).contains(&v));
        }
        let minus_r = -p.reference().clone();
        assert_eq!(p.eval(&minus_r), 0.0);
    }
}
