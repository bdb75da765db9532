//! Independent oracles for the Hamiltonian derivatives and the restricted
//! eigensolver: finite differences, dense matrices, full decompositions.

use nalgebra::DMatrix;
use pspin_core::subspace::{self, EigOptions, OrthonormalBasis, RestrictedOperator};
use pspin_core::{geom, seed, Hamiltonian, Mixture};
use rand::Rng;
use rand_distr::StandardNormal;

fn mixed() -> Mixture {
    Mixture::new(vec![0.0, 0.5, 1.0, 0.7]).unwrap()
}

fn random_point(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn gradient_matches_central_differences() {
    let n = 60;
    let h = Hamiltonian::sample(mixed(), n, 11).unwrap();
    let mut rng = seed::stream(1, &[]);
    let step = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let x = random_point(n, &mut rng);
        let g = h.gradient(&x).unwrap();
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd = (h.energy(&xp).unwrap() - h.energy(&xm).unwrap()) / (2.0 * step);
            worst = worst.max((fd - g[i]).abs());
        }
    }
    assert!(worst < 1e-6, "max finite-difference error {worst}");
}

#[test]
fn hessian_vec_matches_dense_hessian() {
    let n = 40;
    let h = Hamiltonian::sample(mixed(), n, 12).unwrap();
    let mut rng = seed::stream(2, &[]);
    for _ in 0..5 {
        let x = random_point(n, &mut rng);
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let dense = h.dense_hessian(&x).unwrap();
        assert!((&dense - dense.transpose()).amax() < 1e-12);
        let hv = h.hessian_vec(&x, &v).unwrap();
        let expected = &dense * nalgebra::DVector::from_column_slice(&v);
        let err = hv.iter().zip(expected.iter()).fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(err < 1e-9, "hessian_vec error {err}");
    }
}

#[test]
fn dense_hessian_matches_differenced_gradient() {
    let n = 15;
    let h = Hamiltonian::sample(mixed(), n, 13).unwrap();
    let x = random_point(n, &mut seed::stream(3, &[]));
    let dense = h.dense_hessian(&x).unwrap();
    let step = 1e-5;
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let gp = h.gradient(&xp).unwrap();
        let gm = h.gradient(&xm).unwrap();
        for i in 0..n {
            assert!(((gp[i] - gm[i]) / (2.0 * step) - dense[(i, j)]).abs() < 1e-6);
        }
    }
}

#[test]
fn line_polynomial_reproduces_energies() {
    let n = 25;
    let h = Hamiltonian::sample(mixed(), n, 14).unwrap();
    let mut rng = seed::stream(4, &[]);
    let x = random_point(n, &mut rng);
    let v = random_point(n, &mut rng);
    let c = h.line_polynomial(&x, &v).unwrap();
    for t in [-0.7, 0.0, 0.3, 1.1] {
        let p: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + t * b).collect();
        let poly = c.iter().rev().fold(0.0, |acc, ck| acc * t + ck);
        assert!((poly - h.energy(&p).unwrap()).abs() < 1e-12);
    }
}

fn random_symmetric(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&a + a.transpose()) * 0.5
}

fn random_basis(n: usize, k: usize, rng: &mut impl Rng) -> OrthonormalBasis {
    let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let full = OrthonormalBasis::standard(n);
    let w: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    // Complement of k random directions: dimension n - k.
    subspace::intersect_orthogonal(&full, &w).unwrap()
}

#[test]
fn top_eigs_match_full_decomposition_dense_and_lanczos() {
    let mut rng = seed::stream(5, &[]);
    let lanczos = EigOptions { dense_threshold: 0, ..EigOptions::default() };
    for _ in 0..100 {
        let n = rng.random_range(8..40);
        let m = random_symmetric(n, &mut rng);
        let b = random_basis(n, rng.random_range(1..n / 2), &mut rng);
        let r = RestrictedOperator::dense(&m, &b);
        let all = subspace::eigenvalues_desc(r.restricted_matrix());
        let dense = subspace::top_eigs(&r, 2).unwrap();
        let iter = subspace::top_eigs_with(&r, 2, &lanczos).unwrap();
        for k in 0..2 {
            assert!((dense[k].value - all[k]).abs() < 1e-8);
            assert!((iter[k].value - all[k]).abs() < 1e-8);
        }
        // The eigenvector is a unit vector in span(B) with M v = lambda v there.
        let v = &dense[0].vector;
        assert!((geom::euclidean_norm(v) - 1.0).abs() < 1e-10);
        let residual: Vec<f64> = b
            .project(&r.apply_ambient(v))
            .iter()
            .zip(v)
            .map(|(mv, vi)| mv - dense[0].value * vi)
            .collect();
        assert!(geom::euclidean_norm(&residual) < 1e-8);
    }
}

#[test]
fn cauchy_interlacing_holds_on_nested_subspaces() {
    let mut rng = seed::stream(6, &[]);
    for _ in 0..100 {
        let n = rng.random_range(6..30);
        let m = random_symmetric(n, &mut rng);
        let outer = random_basis(n, rng.random_range(0..n / 3).max(1), &mut rng);
        let extra: Vec<Vec<f64>> =
            (0..rng.random_range(1..3)).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let refs: Vec<&[f64]> = extra.iter().map(Vec::as_slice).collect();
        let inner = subspace::intersect_orthogonal(&outer, &refs).unwrap();
        assert!(subspace::interlacing_violation(&m, &outer, &inner) <= 1e-10);
    }
}
