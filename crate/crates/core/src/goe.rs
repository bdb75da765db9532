//! Monte Carlo checks of the random-matrix laws used by the ascent: the
//! restricted Hessian is a scaled GOE matrix, and the top eigenvalues of a
//! GOE matrix sit near the spectral edge `2`.
//!
//! `GOE(d)` here has diagonal variance `2/d` and off-diagonal variance `1/d`.
//! Hessians are reported in normalized units, `N` times the Euclidean Hessian,
//! where the restriction to a `d`-dimensional `W` is `zeta(|x|^2) sqrt(d/N)`
//! times a `GOE(d)` matrix.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geom;
use crate::hamiltonian::Hamiltonian;
use crate::mixture::Mixture;
use crate::seed;
use crate::stats;
use crate::subspace::{self, OrthonormalBasis, RestrictedOperator};

pub fn sample_goe<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let off = (1.0 / d as f64).sqrt();
    let diag = (2.0 / d as f64).sqrt();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = diag * rng.sample::<f64, _>(StandardNormal);
        for j in i + 1..d {
            let g = off * rng.sample::<f64, _>(StandardNormal);
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
    }
    m
}

fn goe_sample(d: usize, seed_value: u64, i: usize) -> DMatrix<f64> {
    let mut rng = seed::stream(seed_value, &[seed::TAG_SAMPLE, d as u64, i as u64]);
    sample_goe(d, &mut rng)
}

/// Semicircle law on `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI) + (x / 2.0).asin() / std::f64::consts::PI
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoeStatsReport {
    pub n_samples: usize,
    pub n: usize,
    /// Subspace dimension.
    pub d: usize,
    pub zeta: f64,
    pub offdiag_var_emp: f64,
    pub offdiag_var_se: f64,
    /// `zeta^2 / N`.
    pub offdiag_var_theory: f64,
    pub diag_var_emp: f64,
    pub diag_var_se: f64,
    /// `2 zeta^2 / N`.
    pub diag_var_theory: f64,
    pub lambda1_mean: f64,
    pub lambda1_std: f64,
    /// `2 zeta sqrt(d / N)`.
    pub lambda1_theory: f64,
    /// KS distance of the pooled rescaled spectrum from the semicircle.
    pub ks_statistic: f64,
}

impl GoeStatsReport {
    pub fn offdiag_z(&self) -> f64 {
        (self.offdiag_var_emp - self.offdiag_var_theory) / self.offdiag_var_se
    }

    pub fn diag_z(&self) -> f64 {
        (self.diag_var_emp - self.diag_var_theory) / self.diag_var_se
    }

    pub fn lambda1_rel_error(&self) -> f64 {
        (self.lambda1_mean - self.lambda1_theory).abs() / self.lambda1_theory
    }
}

struct SampleStats {
    offdiag_sq_mean: f64,
    diag_sq_mean: f64,
    lambdas: Vec<f64>,
}

fn sample_stats(r: &DMatrix<f64>) -> SampleStats {
    let d = r.nrows();
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..d {
        diag += r[(i, i)] * r[(i, i)];
        for j in i + 1..d {
            off += r[(i, j)] * r[(i, j)];
        }
    }
    let pairs = (d * (d - 1) / 2).max(1);
    SampleStats {
        offdiag_sq_mean: off / pairs as f64,
        diag_sq_mean: diag / d as f64,
        lambdas: subspace::eigenvalues_desc(r.clone()),
    }
}

/// Statistics of `B^T (N Hess H(x)) B` over independent disorders, for each
/// fixed basis `B`. One disorder per sample serves all bases.
///
/// Entry variances are computed with the known zero mean; their standard
/// errors come from the per-sample averages, which are independent.
pub fn hessian_stats_in_bases(
    m: &Mixture,
    n: usize,
    x: &[f64],
    bases: &[OrthonormalBasis],
    n_samples: usize,
    seed_value: u64,
) -> Result<Vec<GoeStatsReport>> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if n_samples < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    for b in bases {
        if b.dim_ambient() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.dim_ambient() });
        }
        if b.dim() < 2 {
            return Err(Error::Precondition("subspace dimension must be at least 2".into()));
        }
    }
    let per_sample = exec::map_indexed(n_samples, |i| -> Result<Vec<SampleStats>> {
        let h = Hamiltonian::sample(m.clone(), n, seed::derive(seed_value, &[seed::TAG_DISORDER, i as u64]))?;
        let mut hess = h.dense_hessian(x)?;
        hess *= n as f64;
        Ok(bases
            .iter()
            .map(|b| sample_stats(&RestrictedOperator::dense(&hess, b).restricted_matrix()))
            .collect())
    });
    let per_sample = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    let zeta = m.zeta(geom::norm_sq(x).min(1.0))?;
    Ok(bases
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let d = b.dim();
            let off: Vec<f64> = per_sample.iter().map(|s| s[k].offdiag_sq_mean).collect();
            let diag: Vec<f64> = per_sample.iter().map(|s| s[k].diag_sq_mean).collect();
            let l1: Vec<f64> = per_sample.iter().map(|s| s[k].lambdas[0]).collect();
            let (off_mean, off_se) = stats::mean_and_std_error(&off);
            let (diag_mean, diag_se) = stats::mean_and_std_error(&diag);
            let (l1_mean, l1_std) = stats::mean_and_std(&l1);
            let scale = zeta * (d as f64 / n as f64).sqrt();
            let pooled: Vec<f64> =
                per_sample.iter().flat_map(|s| s[k].lambdas.iter().map(|l| l / scale)).collect();
            GoeStatsReport {
                n_samples,
                n,
                d,
                zeta,
                offdiag_var_emp: off_mean,
                offdiag_var_se: off_se,
                offdiag_var_theory: zeta * zeta / n as f64,
                diag_var_emp: diag_mean,
                diag_var_se: diag_se,
                diag_var_theory: 2.0 * zeta * zeta / n as f64,
                lambda1_mean: l1_mean,
                lambda1_std: l1_std,
                lambda1_theory: 2.0 * scale,
                ks_statistic: stats::ks_statistic(pooled, semicircle_cdf),
            }
        })
        .collect())
}

/// [`hessian_stats_in_bases`] for the bases of `W_S(x)`, one per subset.
pub fn restricted_hessian_stats_multi(
    m: &Mixture,
    n: usize,
    x: &[f64],
    subsets: &[Vec<usize>],
    n_samples: usize,
    seed_value: u64,
) -> Result<Vec<GoeStatsReport>> {
    let bases = subsets
        .iter()
        .map(|s| {
            if s.len() < 2 {
                return Err(Error::Precondition("|S| must be at least 2".into()));
            }
            let mut s = s.clone();
            s.sort_unstable();
            subspace::axis_subspace(n, &s, Some(x))
        })
        .collect::<Result<Vec<_>>>()?;
    hessian_stats_in_bases(m, n, x, &bases, n_samples, seed_value)
}

pub fn restricted_hessian_stats(
    m: &Mixture,
    n: usize,
    x: &[f64],
    s: &[usize],
    n_samples: usize,
    seed_value: u64,
) -> Result<GoeStatsReport> {
    Ok(restricted_hessian_stats_multi(m, n, x, &[s.to_vec()], n_samples, seed_value)?.swap_remove(0))
}

fn check_goe_args(d: usize, min_d: usize, n_samples: usize) -> Result<()> {
    if d < min_d {
        return Err(Error::Precondition(format!("d must be at least {min_d}, got {d}")));
    }
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    Ok(())
}

/// Fraction of `GOE(d)` samples with `lambda_k >= 2 - delta`, for each `k`.
/// All `k` share the same samples.
pub fn lambda_k_tail_freqs(d: usize, ks: &[usize], delta: f64, n_samples: usize, seed_value: u64) -> Result<Vec<f64>> {
    check_goe_args(d, 10, n_samples)?;
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > d) {
        return Err(Error::KOutOfRange { k, dim: d });
    }
    let threshold = 2.0 - delta;
    let hits = exec::map_indexed(n_samples, |i| {
        let ev = subspace::eigenvalues_desc(goe_sample(d, seed_value, i));
        ks.iter().map(|&k| ev[k - 1] >= threshold).collect::<Vec<bool>>()
    });
    Ok((0..ks.len())
        .map(|j| hits.iter().filter(|h| h[j]).count() as f64 / n_samples as f64)
        .collect())
}

pub fn lambda_k_tail_freq(d: usize, k: usize, delta: f64, n_samples: usize, seed_value: u64) -> Result<f64> {
    Ok(lambda_k_tail_freqs(d, &[k], delta, n_samples, seed_value)?[0])
}

/// All eigenvalues of `n_samples` independent `GOE(d)` matrices.
pub fn pooled_spectrum(d: usize, n_samples: usize, seed_value: u64) -> Result<Vec<f64>> {
    check_goe_args(d, 1, n_samples)?;
    Ok(exec::map_indexed(n_samples, |i| subspace::eigenvalues_desc(goe_sample(d, seed_value, i)))
        .into_iter()
        .flatten()
        .collect())
}

/// KS distance between the pooled `GOE(d)` spectrum and the semicircle.
pub fn semicircle_ks(d: usize, n_samples: usize, seed_value: u64) -> Result<f64> {
    check_goe_args(d, 50, n_samples)?;
    Ok(stats::ks_statistic(pooled_spectrum(d, n_samples, seed_value)?, semicircle_cdf))
}

/// `sqrt(q)` times independent random signs, so `|x|_2^2 = q` exactly up to rounding.
pub fn random_sign_point(n: usize, q: f64, seed_value: u64) -> Vec<f64> {
    let mut rng = seed::stream(seed_value, &[seed::TAG_SAMPLE, n as u64]);
    let r = q.sqrt();
    (0..n).map(|_| if rng.random::<bool>() { r } else { -r }).collect()
}

/// Prefixes of one random permutation of `0..n`, each sorted: the subsets
/// are nested in order of size.
pub fn nested_subsets(n: usize, sizes: &[usize], seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if let Some(&bad) = sizes.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::KOutOfRange { k: bad, dim: n });
    }
    let mut rng = seed::stream(seed_value, &[seed::TAG_SUBSET, n as u64]);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    Ok(sizes
        .iter()
        .map(|&k| {
            let mut s = perm[..k].to_vec();
            s.sort_unstable();
            s
        })
        .collect())
}
