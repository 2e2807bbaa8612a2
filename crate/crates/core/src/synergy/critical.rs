//! Critical points of each family member, computed from the eigenstructure
//! of `M` rather than by searching for zeros of the gradient.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::manifold::UnitVector;
use crate::synergy::family::SynergisticFamily;

/// Directions sampled per degenerate eigenspace, on top of the axis directions.
pub const DEFAULT_EIGENSPACE_SAMPLES: usize = 512;

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalKind {
    /// `±r`, where every member vanishes.
    Desired,
    /// An eigenvector of an eigenvalue other than `λ_q`, left in place by the warp.
    Plain,
    /// Preimage under the warp of an eigenvector of `λ_q`.
    Warped,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Desired => "desired",
            CriticalKind::Plain => "plain",
            CriticalKind::Warped => "warped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub point: UnitVector,
    pub q: usize,
    /// Eigenvalue of the eigenvector the point was built from.
    pub eigenvalue: f64,
    /// `U(y, q)`.
    pub value: f64,
    pub kind: CriticalKind,
    /// `‖Π(y) ∇U(y, q)‖`.
    pub residual: f64,
    /// Root `P(y)` of the scalar fixed-point equation, for warped points.
    pub fixed_point: Option<f64>,
}

/// Critical points of every member with the default eigenspace sampling.
pub fn critical_points(family: &SynergisticFamily) -> Result<Vec<CriticalPoint>> {
    critical_points_sampled(family, DEFAULT_EIGENSPACE_SAMPLES)
}

/// Critical points of every member; eigenspaces of dimension above one are
/// covered by their `±` basis vectors plus `samples` low-discrepancy
/// directions.
pub fn critical_points_sampled(family: &SynergisticFamily, samples: usize) -> Result<Vec<CriticalPoint>> {
    let mut out = Vec::new();
    for q in family.indices() {
        out.extend(critical_points_for_index(family, q, samples)?);
    }
    Ok(out)
}

pub fn critical_points_for_index(family: &SynergisticFamily, q: usize, samples: usize) -> Result<Vec<CriticalPoint>> {
    family.check_index(q)?;
    let spectrum = family.basic().spectrum();
    let r = family.basic().reference().as_vector().clone();
    let own_group = spectrum.group_of(family.eigen_index(q));
    let null_group = spectrum.group_of(0);

    let mut out = Vec::new();
    for y in [r.clone(), -&r] {
        out.push(build(family, q, y, 0.0, CriticalKind::Desired, None)?);
    }
    for (g, members) in spectrum.groups().iter().enumerate() {
        if g == null_group {
            continue;
        }
        let lambda = spectrum.group_value(g);
        let basis: Vec<&DVector<f64>> = members.iter().map(|&i| spectrum.eigenvector(i)).collect();
        for v in eigenspace_directions(&basis, samples) {
            if g == own_group {
                let (y, p) = warped_point(family, q, &v)?;
                out.push(build(family, q, y, lambda, CriticalKind::Warped, Some(p))?);
            } else {
                out.push(build(family, q, v, lambda, CriticalKind::Plain, None)?);
            }
        }
    }
    Ok(out)
}

fn build(
    family: &SynergisticFamily,
    q: usize,
    y: DVector<f64>,
    eigenvalue: f64,
    kind: CriticalKind,
    fixed_point: Option<f64>,
) -> Result<CriticalPoint> {
    let point = UnitVector::new(y)?;
    let value = family.eval(&point, q);
    let residual = family.tangent_grad(&point, q).norm();
    Ok(CriticalPoint {
        point,
        q,
        eigenvalue,
        value,
        kind,
        residual,
        fixed_point,
    })
}

/// Solves `P = (1 - c² sin²(k P / λ_n)) λ_q` for `P ∈ (0, λ_q]` and returns
/// the point `y = e^{-S_q θ} v` with `θ = k P / λ_n`.
fn warped_point(family: &SynergisticFamily, q: usize, v: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let lambda_q = family.lambda(q);
    let c = v.dot(family.direction(q));
    let rate = family.k() / family.basic().lambda_max();
    let p = solve_fixed_point(lambda_q, c, rate)?;
    let y = family.generator(q).rotate(-rate * p, v);
    Ok((y, p))
}

/// Bisection on the increasing function `g(P) = P - (1 - c² sin²(rate·P)) λ_q`.
pub fn solve_fixed_point(lambda_q: f64, c: f64, rate: f64) -> Result<f64> {
    let g = |p: f64| p - (1.0 - c * c * (rate * p).sin().powi(2)) * lambda_q;
    let (mut lo, mut hi) = (0.0, lambda_q);
    if g(hi) <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..BISECTION_MAX_STEPS {
        if hi - lo <= BISECTION_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::RootFinder(BISECTION_MAX_STEPS))
}

/// `±` basis vectors, and for eigenspaces of dimension above one also
/// `samples` unit combinations drawn from a Halton sequence pushed through
/// Box–Muller.
pub(crate) fn eigenspace_directions(basis: &[&DVector<f64>], samples: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for b in basis {
        out.push((*b).clone());
        out.push(-*b);
    }
    let dim = basis.len();
    if dim < 2 {
        return out;
    }
    for i in 0..samples {
        let coeffs = halton_gaussian(i + 1, dim);
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let mut v = DVector::zeros(basis[0].len());
        for (b, c) in basis.iter().zip(&coeffs) {
            v += *b * (c / norm);
        }
        out.push(v);
    }
    out
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// `dim` standard-normal-like coordinates from the `index`-th Halton point.
fn halton_gaussian(index: usize, dim: usize) -> Vec<f64> {
    let pairs = dim.div_ceil(2);
    assert!(2 * pairs <= PRIMES.len(), "eigenspace dimension {dim} too large");
    let mut out = Vec::with_capacity(2 * pairs);
    for p in 0..pairs {
        let u1 = radical_inverse(index as u64, PRIMES[2 * p]).max(f64::MIN_POSITIVE);
        let u2 = radical_inverse(index as u64, PRIMES[2 * p + 1]);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        out.push(radius * angle.cos());
        out.push(radius * angle.sin());
    }
    out.truncate(dim);
    out
}
