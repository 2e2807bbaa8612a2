//! Closed-form lower bounds on the synergy gap at undesired critical points.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::manifold::SymSpectrum;
use crate::synergy::family::SynergisticFamily;

/// Gap bound for one family index.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBound {
    pub q: usize,
    pub lambda_q: f64,
    /// Geometric multiplicity of `lambda_q`.
    pub multiplicity: usize,
    /// Lower bound on the warp angle used for the warped critical points.
    pub angle_floor: f64,
    /// Bound from critical points outside the eigenspace of `lambda_q`;
    /// `None` when every nonzero eigenvalue equals `lambda_q` (treated as +∞).
    pub delta1: Option<f64>,
    /// Bound from the warped critical points of the eigenspace of `lambda_q`.
    pub delta2: f64,
    /// `min(delta1, delta2)`.
    pub delta_bar: f64,
}

impl GapBound {
    pub fn delta1_is_empty(&self) -> bool {
        self.delta1.is_none()
    }
}

/// `2kλ_q / (λ_n + sqrt(λ_n² + 4k²λ_q²))`: lower bound of the warp angle at
/// warped critical points when the warp angle is `k P(x) / λ_n`.
pub fn warp_angle_floor(k: f64, lambda_q: f64, lambda_max: f64) -> f64 {
    2.0 * k * lambda_q / (lambda_max + (lambda_max.powi(2) + 4.0 * k * k * lambda_q * lambda_q).sqrt())
}

fn sin2(x: f64) -> f64 {
    x.sin().powi(2)
}

/// Bound from the warped critical points, branching on the multiplicity.
pub(crate) fn same_eigenspace_bound(lambda_q: f64, multiplicity: usize, angle: f64) -> f64 {
    if multiplicity == 1 {
        lambda_q * sin2(2.0 * angle)
    } else {
        lambda_q * (sin2(angle) / (multiplicity as f64 - 1.0)).min(sin2(2.0 * angle) / 4.0)
    }
}

/// Minimum over eigenvalue groups other than zero and `lambda_q` of
/// `sin²(angle(λ)) λ / γ(λ)`.
fn other_eigenspace_bound(spectrum: &SymSpectrum, eigen_index: usize, angle: impl Fn(f64) -> f64) -> Option<f64> {
    let own = spectrum.group_of(eigen_index);
    let null = spectrum.group_of(0);
    spectrum
        .groups()
        .iter()
        .enumerate()
        .filter(|(g, _)| *g != own && *g != null)
        .map(|(g, members)| {
            let lambda = spectrum.group_value(g);
            sin2(angle(lambda)) * lambda / members.len() as f64
        })
        .reduce(f64::min)
}

pub(crate) fn closed_form_bounds(spectrum: &SymSpectrum, k: f64, index_eigen: &[usize]) -> Vec<GapBound> {
    let lambda_max = spectrum.max_eigenvalue();
    index_eigen
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let lambda_q = spectrum.eigenvalue(e);
            let multiplicity = spectrum.multiplicity(e);
            let floor = warp_angle_floor(k, lambda_q, lambda_max);
            let delta1 = other_eigenspace_bound(spectrum, e, |l| k * l / lambda_max);
            let delta2 = same_eigenspace_bound(lambda_q, multiplicity, floor);
            GapBound {
                q: i + 1,
                lambda_q,
                multiplicity,
                angle_floor: floor,
                delta1,
                delta2,
                delta_bar: delta1.map_or(delta2, |d| d.min(delta2)),
            }
        })
        .collect()
}

/// Gap bounds for a warp angle known to stay above `angle_floor` on every
/// undesired critical point of the family.
pub fn gap_bound_for_angle_floor(family: &SynergisticFamily, angle_floor: f64) -> Result<Vec<GapBound>> {
    if !(angle_floor > 0.0 && angle_floor < FRAC_PI_4) {
        return Err(Error::InvalidAngleBound(angle_floor));
    }
    let spectrum = family.basic().spectrum();
    Ok(family
        .indices()
        .map(|q| {
            let e = family.eigen_index(q);
            let lambda_q = spectrum.eigenvalue(e);
            let multiplicity = spectrum.multiplicity(e);
            let delta1 = other_eigenspace_bound(spectrum, e, |_| angle_floor);
            let delta2 = same_eigenspace_bound(lambda_q, multiplicity, angle_floor);
            GapBound {
                q,
                lambda_q,
                multiplicity,
                angle_floor,
                delta1,
                delta2,
                delta_bar: delta1.map_or(delta2, |d| d.min(delta2)),
            }
        })
        .collect())
}

/// Gap bounds for the family's own warp angle `θ(x) = k P(x) / λ_n`, in closed form.
pub fn gap_bound_closed_form(family: &SynergisticFamily) -> Vec<GapBound> {
    family.bounds().to_vec()
}
