use std::f64::consts::FRAC_PI_4;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::{project_tangent, SkewGenerator};
use crate::synergy::bounds::{closed_form_bounds, GapBound};
use crate::synergy::potential::BasicPotential;

/// Relative tolerance under which two member values count as tied when
/// selecting the minimizing index.
pub const ARGMIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Member {
    direction: DVector<f64>,
    generator: SkewGenerator,
    eigen_index: usize,
}

/// Family `U(x, q) = P(T(x, q))` of angularly warped copies of a basic
/// potential, indexed by `q ∈ {1, …, 2n}`.
///
/// Member `q ≤ n` warps toward the eigenvector `v_q`, member `q + n` toward
/// `-v_q`; the warp rotates by `θ(x) = k P(x) / λ_n` in the plane spanned by
/// the reference point and that direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SynergisticFamily {
    basic: BasicPotential,
    k: f64,
    delta_fraction: f64,
    members: Vec<Member>,
    bounds: Vec<GapBound>,
}

impl SynergisticFamily {
    pub fn new(basic: BasicPotential, k: f64, delta_fraction: f64) -> Result<Self> {
        if !(k > 0.0 && k < FRAC_PI_4) {
            return Err(Error::InvalidGain(k));
        }
        if !(delta_fraction > 0.0 && delta_fraction < 1.0) {
            return Err(Error::InvalidFraction(delta_fraction));
        }
        let n = basic.sphere_dim();
        let r = basic.reference().as_vector().clone();
        let mut members = Vec::with_capacity(2 * n);
        for sign in [1.0, -1.0] {
            for e in 1..=n {
                let direction = basic.spectrum().eigenvector(e) * sign;
                let generator = SkewGenerator::from_pair(&direction, &r);
                members.push(Member {
                    direction,
                    generator,
                    eigen_index: e,
                });
            }
        }
        let index_eigen: Vec<usize> = members.iter().map(|m| m.eigen_index).collect();
        let bounds = closed_form_bounds(basic.spectrum(), k, &index_eigen);
        Ok(Self {
            basic,
            k,
            delta_fraction,
            members,
            bounds,
        })
    }

    pub fn basic(&self) -> &BasicPotential {
        &self.basic
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn delta_fraction(&self) -> f64 {
        self.delta_fraction
    }

    pub fn sphere_dim(&self) -> usize {
        self.basic.sphere_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basic.ambient_dim()
    }

    /// Number of members, `2n`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn indices(&self) -> RangeInclusive<usize> {
        1..=self.members.len()
    }

    pub fn contains(&self, q: usize) -> bool {
        q >= 1 && q <= self.members.len()
    }

    pub fn check_index(&self, q: usize) -> Result<()> {
        if self.contains(q) {
            Ok(())
        } else {
            Err(Error::InvalidIndex {
                q,
                max: self.members.len(),
            })
        }
    }

    fn member(&self, q: usize) -> &Member {
        assert!(self.contains(q), "index q = {q} outside 1..={}", self.len());
        &self.members[q - 1]
    }

    /// Index whose warp direction is the negative of that of `q`.
    pub fn antipode(&self, q: usize) -> usize {
        let n = self.sphere_dim();
        if q > n {
            q - n
        } else {
            q + n
        }
    }

    /// Warp direction `u_q`.
    pub fn direction(&self, q: usize) -> &DVector<f64> {
        &self.member(q).direction
    }

    pub fn generator(&self, q: usize) -> &SkewGenerator {
        &self.member(q).generator
    }

    /// Position of `λ_q` in the sorted spectrum.
    pub fn eigen_index(&self, q: usize) -> usize {
        self.member(q).eigen_index
    }

    /// Extended eigenvalue `λ_q`.
    pub fn lambda(&self, q: usize) -> f64 {
        self.basic.spectrum().eigenvalue(self.eigen_index(q))
    }

    pub fn multiplicity(&self, q: usize) -> usize {
        self.basic.spectrum().multiplicity(self.eigen_index(q))
    }

    pub fn bounds(&self) -> &[GapBound] {
        &self.bounds
    }

    pub fn bound(&self, q: usize) -> &GapBound {
        &self.bounds[q - 1]
    }

    pub fn delta_bar(&self, q: usize) -> f64 {
        self.bound(q).delta_bar
    }

    /// Switching threshold `δ(q) = fraction · δ̄(q)`.
    pub fn delta(&self, q: usize) -> f64 {
        self.delta_fraction * self.delta_bar(q)
    }

    /// Lower bound `Θ(q)` of the warp angle at warped critical points.
    pub fn angle_floor(&self, q: usize) -> f64 {
        self.bound(q).angle_floor
    }

    /// `θ(x) = k P(x) / λ_n`.
    pub fn warp_angle(&self, x: &DVector<f64>) -> f64 {
        self.k * self.basic.eval(x) / self.basic.lambda_max()
    }

    /// `∇θ(x) = 2k M x / λ_n`.
    pub fn warp_angle_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basic.gradient(x) * (self.k / self.basic.lambda_max())
    }

    /// `T(x, q) = e^{S_q θ(x)} x`.
    pub fn warp(&self, x: &DVector<f64>, q: usize) -> DVector<f64> {
        self.member(q).generator.rotate(self.warp_angle(x), x)
    }

    /// Transposed Jacobian of the warp, `(I - ∇θ xᵀ S_q) e^{-S_q θ(x)}`.
    pub fn warp_gradient(&self, x: &DVector<f64>, q: usize) -> DMatrix<f64> {
        let s = &self.member(q).generator;
        let theta = self.warp_angle(x);
        let dim = self.ambient_dim();
        let grad_theta = self.warp_angle_gradient(x);
        let xs = x.transpose() * s.matrix();
        let left = DMatrix::identity(dim, dim) - grad_theta * xs;
        left * s.exp_unchecked(-theta)
    }

    /// `U(x, q) = P(T(x, q))`.
    pub fn eval(&self, x: &DVector<f64>, q: usize) -> f64 {
        self.basic.eval(&self.warp(x, q))
    }

    /// `∇U(x, q) = ∇T(x, q) ∇P(T(x, q))`.
    pub fn grad(&self, x: &DVector<f64>, q: usize) -> DVector<f64> {
        let t = self.warp(x, q);
        self.warp_gradient(x, q) * self.basic.gradient(&t)
    }

    /// Tangential component `Π(x) ∇U(x, q)`.
    pub fn tangent_grad(&self, x: &DVector<f64>, q: usize) -> DVector<f64> {
        project_tangent(x, &self.grad(x, q))
    }

    /// `U(x, p)` for every index, in index order.
    pub fn eval_all(&self, x: &DVector<f64>) -> Vec<f64> {
        self.indices().map(|p| self.eval(x, p)).collect()
    }

    /// `μ_U(x, q) = U(x, q) - min_p U(x, p)`.
    pub fn synergy_gap(&self, x: &DVector<f64>, q: usize) -> f64 {
        let values = self.eval_all(x);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        values[q - 1] - min
    }

    /// Every index attaining the minimum value at `x` (ties within
    /// [`ARGMIN_TIE_TOL`]), ascending.
    pub fn argmin_indices(&self, x: &DVector<f64>) -> Vec<usize> {
        argmin_of(&self.eval_all(x))
    }

    /// Smallest minimizing index.
    pub fn argmin_index(&self, x: &DVector<f64>) -> usize {
        self.argmin_indices(x)[0]
    }
}

/// Indices (1-based) within tolerance of the minimum of `values`.
pub(crate) fn argmin_of(values: &[f64]) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = ARGMIN_TIE_TOL * min.abs().max(1.0);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v - min <= tol)
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{skew_exp, UnitVector, DEFAULT_GROUP_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn benchmark_family() -> SynergisticFamily {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0, 2.0]));
        SynergisticFamily::new(BasicPotential::new(m, DEFAULT_GROUP_TOL).unwrap(), 0.5, 0.9).unwrap()
    }

    fn fd_jacobian(f: &SynergisticFamily, x: &DVector<f64>, q: usize, h: f64) -> DMatrix<f64> {
        let dim = x.len();
        let mut j = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let col = (f.warp(&xp, q) - f.warp(&xm, q)) / (2.0 * h);
            j.set_column(c, &col);
        }
        j
    }

    #[test]
    fn family_structure() {
        let f = benchmark_family();
        assert_eq!(f.len(), 6);
        let r = f.basic().reference().as_vector().clone();
        for q in f.indices() {
            let a = f.antipode(q);
            assert_eq!(f.antipode(a), q);
            assert_eq!(f.direction(q), &(-f.direction(a)));
            let s = f.generator(q).matrix();
            let u = f.direction(q);
            assert_eq!(s, &(u * r.transpose() - &r * u.transpose()));
            assert!(f.delta(q) > 0.0 && f.delta(q) < f.delta_bar(q));
        }
        assert_eq!(f.direction(3), UnitVector::axis(4, 3).as_vector());
        assert_eq!(f.lambda(6), 2.0);
        assert_eq!(f.multiplicity(1), 2);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 2.0]));
        let basic = BasicPotential::new(m, DEFAULT_GROUP_TOL).unwrap();
        assert!(matches!(
            SynergisticFamily::new(basic.clone(), 0.0, 0.9),
            Err(Error::InvalidGain(_))
        ));
        assert!(SynergisticFamily::new(basic.clone(), FRAC_PI_4, 0.9).is_err());
        assert!(matches!(
            SynergisticFamily::new(basic, 0.3, 1.0),
            Err(Error::InvalidFraction(_))
        ));
    }

    #[test]
    fn warp_angle_examples() {
        let f = benchmark_family();
        let r = f.basic().reference().as_vector().clone();
        assert_eq!(f.warp_angle(&r), 0.0);
        assert_eq!(f.warp_angle(&UnitVector::axis(4, 3)), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let x = UnitVector::random(&mut rng, 4);
            let t = f.warp_angle(&x);
            assert!((0.0..=0.5 + 1e-15).contains(&t) && t < FRAC_PI_4);
        }
    }

    #[test]
    fn warp_examples() {
        let f = benchmark_family();
        let r = f.basic().reference().as_vector().clone();
        for q in f.indices() {
            assert_eq!(f.warp(&r, q), r);
            assert_eq!(f.warp(&(-&r), q), -&r);
        }
        // u_3 = e4 and x = e4 rotate by 0.5 rad toward -r
        let y = f.warp(&UnitVector::axis(4, 3), 3);
        let expected = DVector::from_column_slice(&[-(0.5_f64.sin()), 0.0, 0.0, 0.5_f64.cos()]);
        assert!((y - expected).amax() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10_000 {
            let x = UnitVector::random(&mut rng, 4);
            let q = rng.random_range(1..=6);
            assert!((f.warp(&x, q).norm() - 1.0).abs() < 1e-14);
            let closed = skew_exp(f.generator(q), f.warp_angle(&x)).unwrap() * x.as_vector();
            assert!((f.warp(&x, q) - closed).amax() < 1e-14);
        }
    }

    #[test]
    fn warp_gradient_identity_at_reference_and_finite_differences() {
        let f = benchmark_family();
        let r = f.basic().reference().as_vector().clone();
        for q in f.indices() {
            assert_eq!(f.warp_gradient(&r, q), DMatrix::identity(4, 4));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let x = UnitVector::random(&mut rng, 4).into_inner();
            let q = rng.random_range(1..=6);
            let jt = f.warp_gradient(&x, q);
            let fd = fd_jacobian(&f, &x, q, 1e-5);
            // tangent directions only
            for _ in 0..3 {
                let d = project_tangent(&x, &UnitVector::random(&mut rng, 4));
                let a = jt.transpose() * &d;
                let b = &fd * &d;
                assert!((&a - &b).norm() <= 1e-5 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn determinant_floor() {
        let f = benchmark_family();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let x = UnitVector::random(&mut rng, 4).into_inner();
            let q = rng.random_range(1..=6);
            let det = f.warp_gradient(&x, q).determinant().abs();
            let floor = 1.0 - f.k() * f.lambda(q) / f.basic().lambda_max();
            assert!(det >= floor - 1e-12, "det {det} < {floor}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = benchmark_family();
        let r = f.basic().reference().as_vector().clone();
        for q in f.indices() {
            assert_eq!(f.eval(&r, q), 0.0);
            assert!(f.tangent_grad(&r, q).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let h = 1e-6;
        for _ in 0..1000 {
            let x = UnitVector::random(&mut rng, 4).into_inner();
            let q = rng.random_range(1..=6);
            assert_eq!(f.eval(&x, q), f.basic().eval(&f.warp(&x, q)));
            let g = f.grad(&x, q);
            let fd = DVector::from_fn(4, |c, _| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                (f.eval(&xp, q) - f.eval(&xm, q)) / (2.0 * h)
            });
            assert!((&g - &fd).norm() <= 1e-5 * g.norm().max(1.0));
        }
    }

    #[test]
    fn gap_and_argmin() {
        let f = benchmark_family();
        let r = f.basic().reference().as_vector().clone();
        for q in f.indices() {
            assert_eq!(f.synergy_gap(&r, q), 0.0);
        }
        assert_eq!(f.argmin_indices(&r), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(f.argmin_index(&r), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10_000 {
            let x = UnitVector::random(&mut rng, 4).into_inner();
            let q = rng.random_range(1..=6);
            assert!(f.synergy_gap(&x, q) >= 0.0);
            let p = f.argmin_index(&x);
            assert_eq!(f.synergy_gap(&x, p), 0.0);
        }
    }
}
