//! Numerical certificate for a synergistic family: the gap at every
//! undesired critical point, warp invertibility and positivity spot checks.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Result;
use crate::manifold::{UnitVector, DEFAULT_GROUP_TOL};
use crate::synergy::critical::{critical_points_for_index, CriticalKind, DEFAULT_EIGENSPACE_SAMPLES};
use crate::synergy::family::SynergisticFamily;
use crate::synergy::potential::BasicPotential;

/// Allowed shortfall of the gap below `δ̄` at critical points.
pub const GAP_SLACK: f64 = 1e-6;
/// Largest tangential gradient accepted at an emitted critical point.
pub const RESIDUAL_TOL: f64 = 1e-8;
const FIXED_POINT_SLACK: f64 = 1e-9;
const DET_SLACK: f64 = 1e-12;
const ZERO_VALUE: f64 = 1e-12;
const NONZERO_BASIC: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub q: usize,
    pub lambda_q: f64,
    pub multiplicity: usize,
    pub angle_floor: f64,
    pub delta1: Option<f64>,
    pub delta2: f64,
    pub delta_bar: f64,
    pub delta: f64,
    /// Undesired critical points examined.
    pub critical_points: usize,
    /// Smallest `μ_U` over the undesired critical points.
    pub min_gap: f64,
    pub max_residual: f64,
    /// Smallest `|det ∇T|` over the random samples.
    pub min_det: f64,
    /// `1 - k λ_q / λ_n`.
    pub det_floor: f64,
    /// Smallest `P(T(y)) / P(y)` over the sampled points with `P(y) > 0`.
    pub min_preimage_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub check: &'static str,
    pub q: usize,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub valid: bool,
    pub dim: usize,
    pub k: f64,
    pub delta_fraction: f64,
    pub samples: usize,
    /// Smallest `μ_U - δ̄(q)` over all undesired critical points.
    pub gap_margin: f64,
    pub max_residual: f64,
    pub fixed_point_violations: usize,
    /// Smallest `|det ∇T| - (1 - k λ_q / λ_n)` over the samples.
    pub det_margin: f64,
    pub preimage_violations: usize,
    pub positivity_violations: usize,
    pub per_index: Vec<IndexSummary>,
    pub witnesses: Vec<Witness>,
}

impl Certificate {
    /// `key: value` lines followed by the per-index and witness tables.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "valid: {}", self.valid);
        let _ = writeln!(s, "ambient_dim: {}", self.dim);
        let _ = writeln!(s, "k: {}", self.k);
        let _ = writeln!(s, "delta_fraction: {}", self.delta_fraction);
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "gap_margin: {:.6e}", self.gap_margin);
        let _ = writeln!(s, "max_residual: {:.3e}", self.max_residual);
        let _ = writeln!(s, "fixed_point_violations: {}", self.fixed_point_violations);
        let _ = writeln!(s, "det_margin: {:.6e}", self.det_margin);
        let _ = writeln!(s, "preimage_violations: {}", self.preimage_violations);
        let _ = writeln!(s, "positivity_violations: {}", self.positivity_violations);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "q,lambda_q,gamma,theta_floor,delta1,delta2,delta_bar,delta,critical_points,min_gap,max_residual,min_det,det_floor,min_preimage_ratio"
        );
        for r in &self.per_index {
            let d1 = r.delta1.map_or_else(|| "inf".to_string(), |d| format!("{d:.6}"));
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{},{:.6},{:.6},{:.6},{},{:.6},{:.3e},{:.6},{:.6},{:.6}",
                r.q,
                r.lambda_q,
                r.multiplicity,
                r.angle_floor,
                d1,
                r.delta2,
                r.delta_bar,
                r.delta,
                r.critical_points,
                r.min_gap,
                r.max_residual,
                r.min_det,
                r.det_floor,
                r.min_preimage_ratio
            );
        }
        if !self.witnesses.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "check,q,value,point");
            for w in &self.witnesses {
                let p: Vec<String> = w.point.iter().map(|c| format!("{c:.9}")).collect();
                let _ = writeln!(s, "{},{},{:.6e},{}", w.check, w.q, w.value, p.join(" "));
            }
        }
        s
    }
}

struct IndexOutcome {
    summary: IndexSummary,
    gap_margin: f64,
    fixed_point_violations: usize,
    det_margin: f64,
    preimage_violations: usize,
    positivity_violations: usize,
    witnesses: Vec<Witness>,
}

/// Runs every check with `samples` random points per index.
pub fn certify_family(family: &SynergisticFamily, samples: usize, seed: u64) -> Result<Certificate> {
    certify_family_with(family, samples, DEFAULT_EIGENSPACE_SAMPLES, seed)
}

pub fn certify_family_with(
    family: &SynergisticFamily,
    samples: usize,
    eigenspace_samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let outcomes: Vec<IndexOutcome> = family
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|q| certify_index(family, q, samples, eigenspace_samples, seed))
        .collect::<Result<_>>()?;

    let mut cert = Certificate {
        valid: true,
        dim: family.ambient_dim(),
        k: family.k(),
        delta_fraction: family.delta_fraction(),
        samples,
        gap_margin: f64::INFINITY,
        max_residual: 0.0,
        fixed_point_violations: 0,
        det_margin: f64::INFINITY,
        preimage_violations: 0,
        positivity_violations: 0,
        per_index: Vec::with_capacity(outcomes.len()),
        witnesses: Vec::new(),
    };
    for o in outcomes {
        cert.gap_margin = cert.gap_margin.min(o.gap_margin);
        cert.max_residual = cert.max_residual.max(o.summary.max_residual);
        cert.fixed_point_violations += o.fixed_point_violations;
        cert.det_margin = cert.det_margin.min(o.det_margin);
        cert.preimage_violations += o.preimage_violations;
        cert.positivity_violations += o.positivity_violations;
        cert.witnesses.extend(o.witnesses);
        cert.per_index.push(o.summary);
    }
    cert.valid = cert.gap_margin >= -GAP_SLACK
        && cert.max_residual <= RESIDUAL_TOL
        && cert.fixed_point_violations == 0
        && cert.det_margin >= -DET_SLACK
        && cert.preimage_violations == 0
        && cert.positivity_violations == 0;
    Ok(cert)
}

fn certify_index(
    family: &SynergisticFamily,
    q: usize,
    samples: usize,
    eigenspace_samples: usize,
    seed: u64,
) -> Result<IndexOutcome> {
    let basic = family.basic();
    let r = basic.reference().as_vector().clone();
    let lambda_max = basic.lambda_max();
    let delta_bar = family.delta_bar(q);
    let mut witnesses = Vec::new();

    let points = critical_points_for_index(family, q, eigenspace_samples)?;
    let mut min_gap = f64::INFINITY;
    let mut max_residual = 0.0_f64;
    let mut fixed_point_violations = 0;
    let mut undesired = 0;
    let fixed_lower = family.angle_floor(q) * lambda_max / family.k();
    for c in &points {
        max_residual = max_residual.max(c.residual);
        if c.residual > RESIDUAL_TOL {
            witnesses.push(witness("residual", q, c.point.as_vector(), c.residual));
        }
        if c.kind == CriticalKind::Desired {
            continue;
        }
        undesired += 1;
        let gap = family.synergy_gap(&c.point, q);
        if gap < min_gap {
            min_gap = gap;
        }
        if gap - delta_bar < -GAP_SLACK {
            witnesses.push(witness("gap", q, c.point.as_vector(), gap - delta_bar));
        }
        if let Some(p) = c.fixed_point {
            if p > family.lambda(q) + FIXED_POINT_SLACK || p < fixed_lower - FIXED_POINT_SLACK {
                fixed_point_violations += 1;
                witnesses.push(witness("fixed_point", q, c.point.as_vector(), p));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(q as u64);
    let dim = family.ambient_dim();
    let det_floor = 1.0 - family.k() * family.lambda(q) / lambda_max;
    let mut min_det = f64::INFINITY;
    let mut min_preimage_ratio = f64::INFINITY;
    let mut preimage_violations = 0;
    let mut positivity_violations = 0;

    let mut check_point = |y: &DVector<f64>, witnesses: &mut Vec<Witness>| {
        let det = family.warp_gradient(y, q).determinant().abs();
        if det < min_det {
            min_det = det;
        }
        if det - det_floor < -DET_SLACK {
            witnesses.push(witness("det", q, y, det));
        }
        let p = basic.eval(y);
        let pt = family.eval(y, q);
        if p > NONZERO_BASIC {
            min_preimage_ratio = min_preimage_ratio.min(pt / p);
            if pt <= ZERO_VALUE {
                preimage_violations += 1;
                witnesses.push(witness("preimage", q, y, pt));
            }
            if pt <= 0.0 {
                positivity_violations += 1;
                witnesses.push(witness("positivity", q, y, pt));
            }
        }
    };

    for _ in 0..samples {
        let y = UnitVector::random(&mut rng, dim).into_inner();
        check_point(&y, &mut witnesses);
    }
    // near-solutions of T(y, q) = ±r: pull ±r back by a guessed warp angle,
    // and points close to ±r
    let grid = samples.clamp(16, 256);
    for i in 0..grid {
        let phi = std::f64::consts::PI * (2.0 * i as f64 / grid as f64 - 1.0);
        for sign in [1.0, -1.0] {
            let y = family.generator(q).rotate(-phi, &(&r * sign));
            check_point(&y, &mut witnesses);
        }
        let scale = 10f64.powf(-1.0 - 5.0 * i as f64 / grid as f64);
        let d = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal)) * scale;
        if let Ok(y) = UnitVector::normalize(&r + d) {
            check_point(&y, &mut witnesses);
        }
    }
    for y in [r.clone(), -&r] {
        let u = family.eval(&y, q);
        if u.abs() > ZERO_VALUE {
            positivity_violations += 1;
            witnesses.push(witness("desired_value", q, &y, u));
        }
    }

    let b = family.bound(q);
    Ok(IndexOutcome {
        gap_margin: min_gap - delta_bar,
        fixed_point_violations,
        det_margin: min_det - det_floor,
        preimage_violations,
        positivity_violations,
        witnesses,
        summary: IndexSummary {
            q,
            lambda_q: b.lambda_q,
            multiplicity: b.multiplicity,
            angle_floor: b.angle_floor,
            delta1: b.delta1,
            delta2: b.delta2,
            delta_bar,
            delta: family.delta(q),
            critical_points: undesired,
            min_gap,
            max_residual,
            min_det,
            det_floor,
            min_preimage_ratio,
        },
    })
}

fn witness(check: &'static str, q: usize, y: &DVector<f64>, value: f64) -> Witness {
    Witness {
        check,
        q,
        point: y.iter().copied().collect(),
        value,
    }
}

/// Random `M = V diag(0, λ_1, …, λ_n) Vᵀ` with `V` a random orthogonal
/// matrix and `λ_i ∈ [0.5, 3)`. With `repeat` set, one nonzero eigenvalue is
/// duplicated so that a degenerate eigenspace appears.
pub fn random_basic_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, repeat: bool) -> DMatrix<f64> {
    let dim = n + 1;
    let mut lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
    if repeat && n >= 2 {
        let i = rng.random_range(0..n);
        let j = (i + 1 + rng.random_range(0..n - 1)) % n;
        lambdas[j] = lambdas[i];
    }
    let mut diag = vec![0.0];
    diag.extend(lambdas);
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = g.qr().q();
    let m = &v * DMatrix::from_diagonal(&DVector::from_vec(diag)) * v.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random family satisfying the basic-potential assumption.
pub fn random_family<R: Rng + ?Sized>(rng: &mut R, n: usize, k: f64, repeat: bool) -> Result<SynergisticFamily> {
    let m = random_basic_matrix(rng, n, repeat);
    SynergisticFamily::new(BasicPotential::new(m, DEFAULT_GROUP_TOL)?, k, 0.9)
}
