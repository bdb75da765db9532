//! Monte Carlo checks of the restricted-Hessian GOE law and the GOE edge.

use pspin_core::goe;
use pspin_core::subspace::{self, OrthonormalBasis};
use pspin_core::Mixture;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pure_two_spin_offdiagonal_variance_is_two_over_n() {
    let n = 40;
    let m = Mixture::pure(2).unwrap();
    let x = goe::random_sign_point(n, 0.5, 1);
    let s: Vec<usize> = (0..n).collect();
    let r = goe::restricted_hessian_stats(&m, n, &x, &s, 2000, 2).unwrap();
    assert!((r.zeta - 2f64.sqrt()).abs() < 1e-12);
    assert!((r.offdiag_var_theory - 2.0 / n as f64).abs() < 1e-15);
    assert!(r.offdiag_z().abs() < 5.0, "z = {}", r.offdiag_z());
    assert!(r.diag_z().abs() < 5.0, "z = {}", r.diag_z());
    let ratio = r.diag_var_emp / r.offdiag_var_emp;
    assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn variances_do_not_depend_on_the_subset_size() {
    let n = 40;
    let m = Mixture::new(vec![0.0, 1.0, 1.0]).unwrap();
    let x = goe::random_sign_point(n, 0.5, 3);
    let subsets = goe::nested_subsets(n, &[n / 4, n / 2, n], 4).unwrap();
    let reports = goe::restricted_hessian_stats_multi(&m, n, &x, &subsets, 1000, 5).unwrap();
    for r in &reports {
        assert!(r.offdiag_z().abs() < 5.0, "d = {}, z = {}", r.d, r.offdiag_z());
        assert!(r.diag_z().abs() < 5.0, "d = {}, z = {}", r.d, r.diag_z());
        assert!(r.offdiag_var_emp >= 0.0 && r.diag_var_emp >= 0.0);
    }
}

/// `b` with its columns rotated by a fixed random orthogonal matrix.
fn rotated(b: &OrthonormalBasis, seed: u64) -> OrthonormalBasis {
    let d = b.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = goe::sample_goe(d, &mut rng);
    let q = g.symmetric_eigen().eigenvectors;
    let cols = b.matrix() * q;
    let cols: Vec<Vec<f64>> = cols.column_iter().map(|c| c.as_slice().to_vec()).collect();
    OrthonormalBasis::from_columns(b.dim_ambient(), &cols)
}

#[test]
fn variances_are_basis_invariant() {
    let n = 30;
    let m = Mixture::new(vec![0.0, 1.0, 1.0]).unwrap();
    let x = goe::random_sign_point(n, 0.4, 6);
    let s: Vec<usize> = (0..n).step_by(2).collect();
    let axis = subspace::axis_subspace(n, &s, Some(&x)).unwrap();
    let other = rotated(&axis, 7);
    assert!(other.orthonormality_error() < 1e-12);
    let r = goe::hessian_stats_in_bases(&m, n, &x, &[axis, other], 1500, 8).unwrap();
    for k in [0, 1] {
        assert!(r[k].offdiag_z().abs() < 5.0);
        assert!(r[k].diag_z().abs() < 5.0);
    }
    // Same disorders, same subspace: the spectra coincide exactly.
    assert!((r[0].lambda1_mean - r[1].lambda1_mean).abs() < 1e-9);
    let se = (r[0].offdiag_var_se.powi(2) + r[1].offdiag_var_se.powi(2)).sqrt();
    assert!((r[0].offdiag_var_emp - r[1].offdiag_var_emp).abs() < 5.0 * se);
}

#[test]
fn truncating_a_basis_matches_the_direct_computation() {
    // At x = 0 the subspace for a subset is spanned by unit vectors, so the
    // basis of a smaller nested subset is a column subset of the larger one.
    let n = 30;
    let m = Mixture::new(vec![0.0, 1.0, 1.0]).unwrap();
    let x = vec![0.0; n];
    let subsets = goe::nested_subsets(n, &[10, 20], 9).unwrap();
    let big = subspace::axis_subspace(n, &subsets[1], Some(&x)).unwrap();
    let keep: Vec<Vec<f64>> = big
        .columns()
        .filter(|c| subsets[0].iter().any(|&i| c[i] != 0.0))
        .map(<[f64]>::to_vec)
        .collect();
    assert_eq!(keep.len(), 10);
    let truncated = OrthonormalBasis::from_columns(n, &keep);
    let direct = goe::restricted_hessian_stats(&m, n, &x, &subsets[0], 300, 10).unwrap();
    let via = goe::hessian_stats_in_bases(&m, n, &x, &[truncated], 300, 10).unwrap().swap_remove(0);
    assert!((direct.offdiag_var_emp - via.offdiag_var_emp).abs() < 1e-12);
    assert!((direct.diag_var_emp - via.diag_var_emp).abs() < 1e-12);
    assert!((direct.lambda1_mean - via.lambda1_mean).abs() < 1e-12);
}

#[test]
fn top_eigenvalue_tracks_the_edge_for_large_subspaces() {
    let n = 120;
    let m = Mixture::pure(2).unwrap();
    let x = goe::random_sign_point(n, 0.5, 11);
    let s: Vec<usize> = (0..n).collect();
    let r = goe::restricted_hessian_stats(&m, n, &x, &s, 200, 12).unwrap();
    assert!(r.d >= 100);
    assert!(r.lambda1_rel_error() < 0.1, "relative error {}", r.lambda1_rel_error());
}

#[test]
fn goe_sample_has_the_stated_entry_variances() {
    let d = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut off, mut diag) = (0.0, 0.0);
    let samples = 400;
    for _ in 0..samples {
        let g: DMatrix<f64> = goe::sample_goe(d, &mut rng);
        assert_eq!(g, g.transpose());
        for i in 0..d {
            diag += g[(i, i)].powi(2);
            for j in i + 1..d {
                off += g[(i, j)].powi(2);
            }
        }
    }
    let off = off / (samples * d * (d - 1) / 2) as f64;
    let diag = diag / (samples * d) as f64;
    assert!((off * d as f64 - 1.0).abs() < 0.02);
    assert!((diag * d as f64 - 2.0).abs() < 0.1);
}

#[test]
fn edge_frequencies() {
    let f = goe::lambda_k_tail_freqs(40, &[1, 3], 2.0, 50, 14).unwrap();
    assert_eq!(f, vec![1.0, 1.0]);
    let f = goe::lambda_k_tail_freqs(100, &[1, 3], 0.3, 200, 15).unwrap();
    assert!(f[0] >= 0.95 && f[1] <= f[0], "{f:?}");
    assert!(goe::lambda_k_tail_freq(20, 21, 0.3, 10, 0).is_err());
}

#[test]
fn semicircle_distance_shrinks_with_dimension() {
    let ks200 = goe::semicircle_ks(200, 50, 16).unwrap();
    assert!(ks200 < 0.05, "{ks200}");
    let trend: Vec<f64> = [50, 100, 200, 400].iter().map(|&d| goe::semicircle_ks(d, 20, 17).unwrap()).collect();
    assert!(trend.iter().all(|&k| (0.0..=1.0).contains(&k)));
    let inversions = trend.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "{trend:?}");
    assert!(trend[3] < trend[0]);
    assert!(goe::semicircle_ks(40, 5, 0).is_err());
}
