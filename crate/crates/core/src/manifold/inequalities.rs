//! Coordinate inequalities over orthonormal bases, used by the gap bounds.
//!
//! For an orthonormal basis `(e_1, …, e_n)` of ℝⁿ and any `x`:
//!
//! * `n · max_i (e_iᵀx)² ≥ xᵀx`
//! * `max_{e ∈ {±e_2, …, ±e_n}} |xᵀ(e + c e_1)| ≥ sqrt((xᵀx - (xᵀe_1)²)/(n-1)) + c |xᵀe_1|`
//!   for every `c ≥ 0` and `n ≥ 2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Relative slack for floating-point rounding in the comparisons.
const ROUNDING: f64 = 1e-12;

/// Left and right sides of the max-projection inequality; columns of `basis`
/// are the basis vectors.
pub fn max_projection_sides(basis: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let n = basis.ncols();
    let max_sq = basis.column_iter().map(|e| e.dot(x).powi(2)).fold(0.0, f64::max);
    (n as f64 * max_sq, x.dot(x))
}

/// Left and right sides of the shifted-axis inequality with shift `c ≥ 0`
/// along the first basis vector.
pub fn shifted_axis_sides(basis: &DMatrix<f64>, x: &DVector<f64>, c: f64) -> (f64, f64) {
    let n = basis.ncols();
    let e1 = basis.column(0);
    let a1 = x.dot(&e1);
    let mut lhs = 0.0_f64;
    for i in 1..n {
        let ei = basis.column(i);
        for sign in [1.0, -1.0] {
            let e = ei * sign + e1 * c;
            lhs = lhs.max(x.dot(&e).abs());
        }
    }
    let rhs = ((x.dot(x) - a1 * a1).max(0.0) / (n as f64 - 1.0)).sqrt() + c * a1.abs();
    (lhs, rhs)
}

/// Outcome of a randomized run over both inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub cases: usize,
    pub max_projection_failures: usize,
    pub shifted_axis_failures: usize,
    /// Smallest `lhs - rhs` seen, normalized by `max(1, rhs)`.
    pub worst_margin: f64,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.max_projection_failures == 0 && self.shifted_axis_failures == 0
    }
}

/// Checks both inequalities on `cases` random draws with `n ∈ {2, …, 6}`,
/// random orthonormal bases and random shifts `c ∈ [0, 3)`.
pub fn inequality_suite<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> InequalityReport {
    let mut report = InequalityReport {
        cases,
        max_projection_failures: 0,
        shifted_axis_failures: 0,
        worst_margin: f64::INFINITY,
    };
    for _ in 0..cases {
        let n = rng.random_range(2..=6);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let basis = g.qr().q();
        let scale: f64 = rng.random_range(0.1..10.0);
        let x = DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let c: f64 = rng.random_range(0.0..3.0);

        let (l, r) = max_projection_sides(&basis, &x);
        let margin = (l - r) / r.max(1.0);
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -ROUNDING {
            report.max_projection_failures += 1;
        }
        let (l, r) = shifted_axis_sides(&basis, &x, c);
        let margin = (l - r) / r.max(1.0);
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -ROUNDING {
            report.shifted_axis_failures += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equality_cases() {
        let basis = DMatrix::identity(4, 4);
        let x = DVector::from_element(4, 0.5);
        let (l, r) = max_projection_sides(&basis, &x);
        assert!((l - r).abs() < 1e-15);

        let x = DVector::from_column_slice(&[0.3, 0.4, 0.0]);
        let (l, r) = shifted_axis_sides(&DMatrix::identity(3, 3), &x, 2.0);
        // max over ±e2, ±e3 is |0.4| + 2·0.3 = 1.0, rhs = sqrt(0.16/2) + 0.6
        assert!((l - 1.0).abs() < 1e-15);
        assert!((r - ((0.16_f64 / 2.0).sqrt() + 0.6)).abs() < 1e-15);
    }

    #[test]
    fn randomized_suite_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let report = inequality_suite(&mut rng, 10_000);
        assert!(report.passed(), "{report:?}");
    }
}
