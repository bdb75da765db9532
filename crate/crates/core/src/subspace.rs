//! Orthonormal bases of constraint subspaces, restriction of symmetric
//! operators to them (`M|_W = B^T M B`) and top eigenpairs.
//!
//! Bases are orthonormal in the Euclidean inner product; the 1/N
//! normalization is applied by callers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::dot;

/// Relative residual below which a Gram-Schmidt candidate is dependent.
pub const DEPENDENCE_TOL: f64 = 1e-12;

/// Subspace dimension up to which eigenpairs come from a dense decomposition.
pub const DEFAULT_DENSE_EIG_THRESHOLD: usize = 1500;

#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    /// `N x d`, one basis vector per column.
    cols: DMatrix<f64>,
}

impl OrthonormalBasis {
    /// Wraps columns that the caller guarantees to be orthonormal.
    pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> Self {
        let mut cols = DMatrix::zeros(n, columns.len());
        for (j, c) in columns.iter().enumerate() {
            cols.column_mut(j).copy_from_slice(c);
        }
        Self { cols }
    }

    pub fn standard(n: usize) -> Self {
        Self { cols: DMatrix::identity(n, n) }
    }

    pub fn dim_ambient(&self) -> usize {
        self.cols.nrows()
    }

    pub fn dim(&self) -> usize {
        self.cols.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.dim_ambient();
        &self.cols.as_slice()[j * n..(j + 1) * n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.dim()).map(move |j| self.column(j))
    }

    /// Ambient vector `B u`.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        (&self.cols * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    /// Coordinates `B^T y`.
    pub fn coords(&self, y: &[f64]) -> Vec<f64> {
        self.columns().map(|c| dot(c, y)).collect()
    }

    /// Orthogonal projection `B B^T y`.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(y))
    }

    /// `max |B^T B - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.cols.transpose() * &self.cols;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// Classical Gram-Schmidt with one re-orthogonalization pass.
///
/// `fixed` must already be orthonormal; it is used for projection only and
/// is not part of the result. Candidates whose residual drops below
/// `tol` times their own norm are discarded.
pub(crate) fn orthonormalize_against(
    fixed: &[Vec<f64>],
    candidates: impl IntoIterator<Item = Vec<f64>>,
    tol: f64,
) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for mut c in candidates {
        let scale = dot(&c, &c).sqrt();
        if scale == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in fixed.iter().chain(kept.iter()) {
                let r = dot(q, &c);
                if r != 0.0 {
                    for (ci, qi) in c.iter_mut().zip(q) {
                        *ci -= r * qi;
                    }
                }
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm < tol * scale {
            continue;
        }
        for ci in c.iter_mut() {
            *ci /= norm;
        }
        kept.push(c);
    }
    kept
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Basis of `W_S = span{e_s : s in S}`, or of `W_S ∩ x^⊥` when `x` is given.
///
/// If the projection of `x` onto `W_S` vanishes the full `W_S` basis is
/// returned, so the dimension is `|S|` or `|S| - 1`.
pub fn axis_subspace(n: usize, s: &[usize], x: Option<&[f64]>) -> Result<OrthonormalBasis> {
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let coordinate: Vec<Vec<f64>> = s.iter().map(|&i| unit(n, i)).collect();
    match x {
        None => Ok(OrthonormalBasis::from_columns(n, &coordinate)),
        Some(x) => {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
            let mut px = vec![0.0; n];
            for &i in s {
                px[i] = x[i];
            }
            Ok(remove_directions(n, coordinate, &[px]))
        }
    }
}

/// Orthonormal basis of `span(candidates) ∩ w^⊥` for each `w` in `ws`,
/// where each `w` is assumed to lie in `span(candidates)` already.
fn remove_directions(n: usize, candidates: Vec<Vec<f64>>, ws: &[Vec<f64>]) -> OrthonormalBasis {
    let fixed = orthonormalize_against(&[], ws.iter().cloned(), DEPENDENCE_TOL);
    let cols = orthonormalize_against(&fixed, candidates, DEPENDENCE_TOL);
    OrthonormalBasis::from_columns(n, &cols)
}

/// Basis of `span(B) ∩ w_1^⊥ ∩ ... ∩ w_r^⊥`.
///
/// The orthogonalization runs in the coordinates of `B`, so every column
/// lies in `span(B)` even when some `w` is nearly orthogonal to it.
pub fn intersect_orthogonal(b: &OrthonormalBasis, ws: &[&[f64]]) -> Result<OrthonormalBasis> {
    let n = b.dim_ambient();
    let d = b.dim();
    let mut projected = Vec::with_capacity(ws.len());
    for w in ws {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        let c = b.coords(w);
        if dot(&c, &c).sqrt() >= DEPENDENCE_TOL * dot(w, w).sqrt() {
            projected.push(c);
        }
    }
    let fixed = orthonormalize_against(&[], projected, DEPENDENCE_TOL);
    let kept = orthonormalize_against(&fixed, (0..d).map(|i| unit(d, i)), DEPENDENCE_TOL);
    if kept.is_empty() {
        return Err(Error::ResultEmpty);
    }
    let cols: Vec<Vec<f64>> = kept.iter().map(|u| b.lift(u)).collect();
    Ok(OrthonormalBasis::from_columns(n, &cols))
}

/// How the ambient operator is accessed.
pub enum OperatorBase<'a> {
    Dense(&'a DMatrix<f64>),
    MatVec(&'a (dyn Fn(&[f64]) -> Vec<f64> + Sync)),
}

impl OperatorBase<'_> {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        match self {
            OperatorBase::Dense(m) => (*m * DVector::from_column_slice(y)).as_slice().to_vec(),
            OperatorBase::MatVec(f) => f(y),
        }
    }
}

/// A symmetric operator viewed as a bilinear form on `span(B)`.
pub struct RestrictedOperator<'a> {
    pub base: OperatorBase<'a>,
    pub basis: &'a OrthonormalBasis,
}

impl<'a> RestrictedOperator<'a> {
    pub fn dense(m: &'a DMatrix<f64>, basis: &'a OrthonormalBasis) -> Self {
        Self { base: OperatorBase::Dense(m), basis }
    }

    pub fn matvec(f: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync), basis: &'a OrthonormalBasis) -> Self {
        Self { base: OperatorBase::MatVec(f), basis }
    }

    /// The `d x d` matrix `B^T M B`, symmetrized.
    pub fn restricted_matrix(&self) -> DMatrix<f64> {
        let b = self.basis.matrix();
        let mb = match &self.base {
            OperatorBase::Dense(m) => *m * b,
            OperatorBase::MatVec(_) => {
                let mut mb = DMatrix::zeros(b.nrows(), b.ncols());
                for (j, c) in self.basis.columns().enumerate() {
                    mb.column_mut(j).copy_from_slice(&self.base.apply(c));
                }
                mb
            }
        };
        let r = b.transpose() * mb;
        (&r + r.transpose()) * 0.5
    }

    /// Ambient action `M y`.
    pub fn apply_ambient(&self, y: &[f64]) -> Vec<f64> {
        self.base.apply(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Euclidean-unit vector in ambient coordinates, inside `span(B)`.
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub dense_threshold: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { dense_threshold: DEFAULT_DENSE_EIG_THRESHOLD, max_iter: 2000, tol: 1e-10, seed: 0 }
    }
}

/// Top-`k` eigenpairs of `M|_B`, in descending order.
pub fn top_eigs(r: &RestrictedOperator<'_>, k: usize) -> Result<Vec<EigenPair>> {
    top_eigs_with(r, k, &EigOptions::default())
}

pub fn top_eigs_with(r: &RestrictedOperator<'_>, k: usize, opts: &EigOptions) -> Result<Vec<EigenPair>> {
    let d = r.basis.dim();
    if k == 0 || k > d {
        return Err(Error::KOutOfRange { k, dim: d });
    }
    if d <= opts.dense_threshold {
        Ok(dense_top(r, k))
    } else {
        lanczos_top(r, k, opts)
    }
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev = m.symmetric_eigenvalues().as_slice().to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn dense_top(r: &RestrictedOperator<'_>, k: usize) -> Vec<EigenPair> {
    let eig = SymmetricEigen::new(r.restricted_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .take(k)
        .map(|i| EigenPair {
            value: eig.eigenvalues[i],
            vector: r.basis.lift(eig.eigenvectors.column(i).as_slice()),
        })
        .collect()
}

/// Lanczos with full re-orthogonalization on `P (M + cI) P`, `P = B B^T`.
///
/// The shift keeps the wanted eigenvalues above the zeros that the projector
/// contributes on the orthogonal complement of `span(B)`.
fn lanczos_top(r: &RestrictedOperator<'_>, k: usize, opts: &EigOptions) -> Result<Vec<EigenPair>> {
    let basis = r.basis;
    let d = basis.dim();
    let n = basis.dim_ambient();
    let mut rng = seed::stream(opts.seed, &[seed::TAG_LANCZOS]);
    let mut start = || -> Vec<f64> {
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let p = basis.project(&y);
        let norm = dot(&p, &p).sqrt();
        p.into_iter().map(|v| v / norm).collect()
    };

    // Operator-norm estimate by power iteration on P M P.
    let pmp = |y: &[f64]| basis.project(&r.apply_ambient(y));
    let mut q = start();
    let mut est = 0.0_f64;
    for _ in 0..30 {
        let y = pmp(&q);
        let norm = dot(&y, &y).sqrt();
        est = est.max(norm);
        if norm == 0.0 {
            break;
        }
        q = y.into_iter().map(|v| v / norm).collect();
    }
    let shift = 1.0 + est;
    let op = |y: &[f64]| {
        let mut z = r.apply_ambient(y);
        for (zi, yi) in z.iter_mut().zip(y) {
            *zi += shift * yi;
        }
        basis.project(&z)
    };

    let max_steps = opts.max_iter.min(d);
    let mut qs: Vec<Vec<f64>> = vec![start()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;
    loop {
        let j = qs.len() - 1;
        let mut w = op(&qs[j]);
        let alpha = dot(&w, &qs[j]);
        alphas.push(alpha);
        for _ in 0..2 {
            for qv in &qs {
                let c = dot(qv, &w);
                for (wi, qi) in w.iter_mut().zip(qv) {
                    *wi -= c * qi;
                }
            }
        }
        let beta = dot(&w, &w).sqrt();
        let m = alphas.len();
        let exhausted = beta <= 1e-14 * shift || m == max_steps;
        if m >= k && (m.is_multiple_of(8) || exhausted) {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let top = &order[..k];
            last_residual = top
                .iter()
                .map(|&i| (beta * eig.eigenvectors[(m - 1, i)]).abs())
                .fold(0.0, f64::max);
            if last_residual <= opts.tol * shift || exhausted && m == d || beta <= 1e-14 * shift {
                return Ok(top
                    .iter()
                    .map(|&i| {
                        let s = eig.eigenvectors.column(i);
                        let mut v = vec![0.0; n];
                        for (qv, &si) in qs.iter().zip(s.iter()) {
                            for (vi, qi) in v.iter_mut().zip(qv) {
                                *vi += si * qi;
                            }
                        }
                        let norm = dot(&v, &v).sqrt();
                        v.iter_mut().for_each(|vi| *vi /= norm);
                        EigenPair { value: eig.eigenvalues[i] - shift, vector: v }
                    })
                    .collect());
            }
        }
        if exhausted {
            return Err(Error::ConvergenceFailure { iterations: m, residual: last_residual });
        }
        betas.push(beta);
        qs.push(w.into_iter().map(|v| v / beta).collect());
    }
}

/// Largest violation of Cauchy interlacing between `M|_outer` and
/// `M|_inner`, where `span(inner)` is a subspace of `span(outer)` of
/// codimension `c`: `mu_j <= lambda_j` and `mu_j >= lambda_{j+c}`.
/// Returns `0` when both chains of inequalities hold exactly.
pub fn interlacing_violation(m: &DMatrix<f64>, outer: &OrthonormalBasis, inner: &OrthonormalBasis) -> f64 {
    let lambda = eigenvalues_desc(RestrictedOperator::dense(m, outer).restricted_matrix());
    let mu = eigenvalues_desc(RestrictedOperator::dense(m, inner).restricted_matrix());
    let c = lambda.len().saturating_sub(mu.len());
    mu.iter()
        .enumerate()
        .map(|(j, &mj)| (mj - lambda[j]).max(lambda[j + c] - mj).max(0.0))
        .fold(0.0, f64::max)
}
