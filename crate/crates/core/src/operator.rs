//! Dense Hermitian operator algebra.
//!
//! Everything in the optimisation pipeline is a small dense complex matrix:
//! states, moment operators, the optimal-estimator operator, symmetric
//! logarithmic derivatives and measurement projectors. This module owns
//! validation of those matrices, a deterministic Hermitian eigendecomposition,
//! the eigenbasis solver for `X A + A X = 2 B`, and the grouping of an
//! eigensystem into spectral projectors.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex square matrix equal to its own adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates `matrix` with the default entrywise tolerance.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::DEFAULT.hermiticity)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyOperator);
        }
        for i in 0..rows {
            for j in 0..cols {
                let z = matrix[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        for i in 0..rows {
            for j in i..cols {
                let deviation = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if deviation > tol {
                    return Err(Error::NotHermitian { row: i, col: j, deviation });
                }
            }
        }
        Ok(Self::hermitian_part(&matrix))
    }

    /// `(m + m^dagger) / 2`, the nearest Hermitian matrix. No validation beyond squareness.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "hermitian_part of a non-square matrix");
        let matrix = (m + m.adjoint()).scale(0.5);
        Self { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self { matrix: CMatrix::from_diagonal(&d) }
    }

    /// Rank-one projector onto the ray spanned by `v` (normalised internally).
    pub fn projector(v: &CVector) -> Self {
        let n = v.norm();
        let u = v.unscale(n);
        Self::hermitian_part(&(&u * u.adjoint()))
    }

    /// Builds from row-major `(re, im)` pairs.
    pub fn from_row_major(dim: usize, entries: &[(f64, f64)]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        let m = CMatrix::from_fn(dim, dim, |i, j| {
            let (re, im) = entries[i * dim + j];
            Complex64::new(re, im)
        });
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Re tr(self * other)`; exact for two Hermitian operators.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.matrix[(i, k)] * other.matrix[(k, i)];
            }
        }
        acc.re
    }

    /// `<v| self |v>` for a (not necessarily normalised) vector.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { matrix: self.matrix.scale(c) }
    }

    /// Symmetrised product `(AB + BA) / 2`.
    pub fn jordan_product(&self, other: &HermitianOperator) -> Self {
        let ab = &self.matrix * &other.matrix;
        Self::hermitian_part(&ab)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix.clone());
        eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// Spectral norm of an arbitrary square matrix (largest singular value).
pub fn matrix_spectral_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().fold(0.0_f64, |a, &b| a.max(b))
}

/// Pauli matrices `sigma_0..sigma_3` with `sigma_3 |0> = |0>`.
pub mod pauli {
    use super::*;

    pub fn sigma(k: usize) -> HermitianOperator {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = match k {
            0 => CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
            1 => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            2 => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            3 => CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
            _ => panic!("Pauli index {k} out of range"),
        };
        HermitianOperator { matrix: m }
    }

    /// `|k><k|` in the computational basis of a qubit.
    pub fn basis_projector(k: usize) -> HermitianOperator {
        let mut d = [0.0; 2];
        d[k] = 1.0;
        HermitianOperator::from_real_diagonal(&d)
    }
}

/// Positive semidefinite unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        let trace = op.trace();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace { trace });
        }
        let es = eigendecompose(&op);
        if let Some(&min) = es.values.first() {
            if min < -tol.positivity {
                return Err(Error::NotPositive { value: min });
            }
        }
        Ok(Self { op })
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.op
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        let n = self.vectors.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for (k, &value) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            acc += (&v * v.adjoint()).scale(value);
        }
        HermitianOperator::hermitian_part(&acc)
    }

    /// Largest deviation of `V^dagger V` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let n = g.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Rotates `v` so that its first entry of modulus above `1e-10` is real and positive.
fn fix_phase(v: &mut CVector) {
    if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-10).copied() {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Eigendecomposition with ascending eigenvalues and phase-fixed eigenvectors.
///
/// Degenerate eigenvalues (equal up to a few ulps of the spectral radius) are
/// ordered by the lexicographic order of their phase-fixed eigenvectors, so the
/// output is reproducible for identical input.
pub fn eigendecompose(op: &HermitianOperator) -> EigenSystem {
    let n = op.dim();
    let eig = SymmetricEigen::new(op.matrix.clone());
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scale = pairs.iter().fold(1.0_f64, |m, p| m.max(p.0.abs()));
    let tie = 64.0 * f64::EPSILON * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    EigenSystem { values, vectors }
}

/// Result of [`solve_sylvester`].
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub solution: HermitianOperator,
    /// Number of eigenbasis entries that fell on the kernel of the coefficient
    /// operator and were set to zero (minimal-norm pseudo-solution).
    pub kernel_entries: usize,
}

impl SylvesterSolution {
    pub fn is_pseudo_solution(&self) -> bool {
        self.kernel_entries > 0
    }
}

/// Solves `X A + A X = 2 B` for Hermitian `X`, with `A` positive semidefinite.
///
/// In the eigenbasis of `A` the equation is diagonal: `X_ij = 2 B_ij / (l_i + l_j)`.
/// Entries where `l_i + l_j` vanishes must have a vanishing right-hand side;
/// those are set to zero and counted in [`SylvesterSolution::kernel_entries`].
pub fn solve_sylvester(
    a: &HermitianOperator,
    b: &HermitianOperator,
    tol: &Tolerances,
) -> Result<SylvesterSolution> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    let es = eigendecompose(a);
    let a_norm = es.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let b_norm = b.spectral_norm();
    let v = &es.vectors;
    let bt = v.adjoint() * b.matrix() * v;

    let mut xt = CMatrix::zeros(n, n);
    let mut kernel_entries = 0;
    for i in 0..n {
        for j in 0..n {
            let lambda_sum = es.values[i] + es.values[j];
            if lambda_sum <= tol.kernel_eigenvalue * a_norm {
                let rhs = bt[(i, j)].norm();
                if rhs > tol.kernel_rhs * b_norm {
                    return Err(Error::InconsistentNullSpace { i, j, lambda_sum, rhs });
                }
                kernel_entries += 1;
            } else {
                xt[(i, j)] = bt[(i, j)].scale(2.0 / lambda_sum);
            }
        }
    }
    let x = v * xt * v.adjoint();
    Ok(SylvesterSolution { solution: HermitianOperator::hermitian_part(&x), kernel_entries })
}

/// Spectral norm of `X A + A X - 2 B`.
pub fn sylvester_residual(x: &HermitianOperator, a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let r = x.matrix() * a.matrix() + a.matrix() * x.matrix() - b.matrix().scale(2.0);
    HermitianOperator::hermitian_part(&r).spectral_norm()
}

/// Orthogonal spectral projectors, one per (clustered) eigenvalue.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    pub projectors: Vec<HermitianOperator>,
    pub labels: Vec<f64>,
}

impl ProjectorSet {
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Worst violation of idempotence, mutual orthogonality and completeness.
    pub fn defect(&self) -> f64 {
        let n = match self.projectors.first() {
            Some(p) => p.dim(),
            None => return f64::INFINITY,
        };
        let mut worst = 0.0_f64;
        let mut total = CMatrix::zeros(n, n);
        for (k, p) in self.projectors.iter().enumerate() {
            total += p.matrix();
            let sq = p.matrix() * p.matrix() - p.matrix();
            worst = worst.max(matrix_spectral_norm(&sq));
            for q in &self.projectors[k + 1..] {
                worst = worst.max(matrix_spectral_norm(&(p.matrix() * q.matrix())));
            }
        }
        total -= CMatrix::identity(n, n);
        worst.max(matrix_spectral_norm(&total))
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.projectors.iter().map(|p| p.trace().round() as usize).collect()
    }
}

/// Groups eigenvalues whose consecutive gaps are at most `merge_tol` and
/// returns one projector per group, labelled by the group mean.
pub fn project_eigenspaces(es: &EigenSystem, merge_tol: f64) -> ProjectorSet {
    let n = es.vectors.nrows();
    let mut projectors = Vec::new();
    let mut labels = Vec::new();
    let mut start = 0;
    while start < es.len() {
        let mut end = start + 1;
        while end < es.len() && es.values[end] - es.values[end - 1] <= merge_tol {
            end += 1;
        }
        let mut p = CMatrix::zeros(n, n);
        for k in start..end {
            let v = es.vectors.column(k);
            p += &v * v.adjoint();
        }
        projectors.push(HermitianOperator::hermitian_part(&p));
        labels.push(es.values[start..end].iter().sum::<f64>() / (end - start) as f64);
        start = end;
    }
    ProjectorSet { projectors, labels }
}
