//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Dimensions in this crate stay below ten, so the solver favours
//! robustness: every sweep annihilates each off-diagonal entry once and the
//! iteration stops when the off-diagonal Frobenius norm falls below
//! `1e-12 · ‖M‖_F`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance for grouping equal eigenvalues.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix, sorted nondecreasing, with
/// eigenvalues partitioned into groups of (numerically) equal value.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSpectrum {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<DVector<f64>>,
    groups: Vec<Vec<usize>>,
    group_index: Vec<usize>,
    group_tol: f64,
}

impl SymSpectrum {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    pub fn eigenvectors(&self) -> &[DVector<f64>] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> &DVector<f64> {
        &self.eigenvectors[i]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Group containing eigen-index `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.group_index[i]
    }

    /// Geometric multiplicity of the eigenvalue at index `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.groups[self.group_index[i]].len()
    }

    /// Representative value of a group (mean of its members).
    pub fn group_value(&self, g: usize) -> f64 {
        let members = &self.groups[g];
        members.iter().map(|&i| self.eigenvalues[i]).sum::<f64>() / members.len() as f64
    }

    pub fn group_tol(&self) -> f64 {
        self.group_tol
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Replaces eigenvector `i` by a collinear unit vector (used to pin the
    /// reference point exactly).
    pub(crate) fn pin_eigenvector(&mut self, i: usize, v: DVector<f64>) {
        self.eigenvectors[i] = v;
    }
}

/// Decomposes a symmetric matrix. Eigenvalues within
/// `group_tol · max(1, |λ|_max)` of their neighbour share a group.
pub fn sym_eigen(m: &DMatrix<f64>, group_tol: f64) -> Result<SymSpectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * m.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_DIAGONAL_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > OFF_DIAGONAL_TOL * scale {
        return Err(Error::EigenNoConvergence(MAX_SWEEPS));
    }

    // stable sort keeps the input order for exactly tied diagonal entries
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| canonical_sign(v.column(i).into_owned()))
        .collect();

    let lam_scale = eigenvalues.iter().fold(1.0_f64, |acc, l| acc.max(l.abs()));
    let tol = group_tol * lam_scale;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_index = vec![0; n];
    for i in 0..n {
        let start_new = i == 0 || eigenvalues[i] - eigenvalues[i - 1] > tol;
        if start_new {
            groups.push(Vec::new());
        }
        let g = groups.len() - 1;
        groups[g].push(i);
        group_index[i] = g;
    }

    Ok(SymSpectrum {
        matrix: m.clone(),
        eigenvalues,
        eigenvectors,
        groups,
        group_index,
        group_tol,
    })
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating `a[(p, q)]`; accumulates into `v`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// First component with magnitude above 1e-12 made positive.
fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => v,
    }
}
