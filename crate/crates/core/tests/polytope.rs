//! Polytope geometry against brute-force and decomposition oracles, and
//! trajectory-level properties of the face-aligned ascent.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pspin_core::ascent::{self, AscentConfig, Termination};
use pspin_core::polytope::{self, PolytopeConfig, PolytopeH};
use pspin_core::starts::StartDistribution;
use pspin_core::subspace::{self, RestrictedOperator};
use pspin_core::{geom, Error, Hamiltonian, Mixture};

fn euclid_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn config(eps: f64, cap: f64) -> PolytopeConfig {
    PolytopeConfig::new(AscentConfig::new(eps, 0.05, 5.0).unwrap().with_step_cap(cap))
}

#[test]
fn contains_agrees_with_rowwise_check() {
    let p = PolytopeH::product_of_simplices(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut inside = 0;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.2..1.2)).collect();
        let mut brute = true;
        for (a, b) in p.rows().iter().zip(p.offsets()) {
            let mut s = 0.0;
            for i in 0..p.n() {
                s += a[i] * x[i];
            }
            brute &= s <= *b;
        }
        assert_eq!(p.contains(&x, 0.0), brute);
        inside += brute as usize;
    }
    // Both verdicts occur.
    assert!(inside > 0 && inside < 10_000);
}

#[test]
fn contains_edge_examples() {
    let p = PolytopeH::cube(10).unwrap();
    assert!(p.contains(&[0.0; 10], 0.0));
    let mut x = vec![0.0; 10];
    x[3] = 1.0 + 2e-9;
    assert!(!p.contains(&x, 1e-9));
}

/// Vertices of a simplex as the solutions of every `n`-subset of its rows.
fn simplex_vertices(p: &PolytopeH) -> Vec<Vec<f64>> {
    let n = p.n();
    (0..p.m())
        .map(|skip| {
            let idx: Vec<usize> = (0..p.m()).filter(|&j| j != skip).collect();
            let a = DMatrix::from_fn(n, n, |r, c| p.rows()[idx[r]][c]);
            let b = DVector::from_iterator(n, idx.iter().map(|&j| p.offsets()[j]));
            a.lu().solve(&b).unwrap().as_slice().to_vec()
        })
        .collect()
}

#[test]
fn simplex_facet_point_has_one_active_constraint() {
    let p = PolytopeH::simplex(6).unwrap();
    let verts = simplex_vertices(&p);
    for v in &verts {
        assert!((geom::norm_sq(v) - 1.0).abs() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for facet in 0..p.m() {
        // Vertex `facet` is the one opposite to facet `facet`.
        let w: Vec<f64> = (0..p.m()).map(|j| if j == facet { 0.0 } else { rng.random_range(0.1..1.0) }).collect();
        let total: f64 = w.iter().sum();
        let mut x = vec![0.0; p.n()];
        for (wj, v) in w.iter().zip(&verts) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += wj / total * vi;
            }
        }
        assert_eq!(p.active_set(&x, 1e-9).unwrap(), vec![facet]);
    }
    assert!(p.active_set(&vec![0.0; p.n()], 1e-9).unwrap().is_empty());
}

#[test]
fn cube_vertex_activates_one_row_per_coordinate() {
    let n = 8;
    let p = PolytopeH::cube(n).unwrap();
    let x: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let active = p.active_set(&x, 1e-9).unwrap();
    let expected: Vec<usize> = (0..n).map(|i| if x[i] > 0.0 { 2 * i } else { 2 * i + 1 }).collect();
    assert_eq!(active, expected);
    assert!(matches!(p.face_tangent(&active), Err(Error::ResultEmpty)));
    assert!(p.is_eps_corner(&x, 0.01, 1e-9).unwrap());
    let mut outside = x.clone();
    outside[1] = 1.0 + 1e-6;
    assert!(matches!(p.active_set(&outside, 1e-9), Err(Error::PointOutside { constraint: 2, .. })));
}

fn svd_rank(rows: &[&Vec<f64>], n: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let a = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let sv = a.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

#[test]
fn tangent_dimension_matches_svd_rank() {
    let n = 8;
    let p = PolytopeH::cross_polytope(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200 {
        let k = 1 + trial % 12;
        let active: Vec<usize> = rand::seq::index::sample(&mut rng, p.m(), k).into_vec();
        let rows: Vec<&Vec<f64>> = active.iter().map(|&j| &p.rows()[j]).collect();
        let rank = svd_rank(&rows, n);
        assert_eq!(p.active_rank(&active).unwrap(), rank);
        match p.face_tangent(&active) {
            Ok(u) => {
                assert_eq!(u.dim(), n - rank);
                assert!(u.orthonormality_error() < 1e-12);
                for r in &rows {
                    for c in u.columns() {
                        assert!(euclid_dot(r, c).abs() < 1e-10);
                    }
                }
            }
            Err(Error::ResultEmpty) => assert_eq!(rank, n),
            Err(e) => panic!("{e}"),
        }
    }
    // At a vertex sqrt(N) e_0 half of all rows are active and they span R^N.
    let mut v = vec![0.0; n];
    v[0] = (n as f64).sqrt();
    let active = p.active_set(&v, 1e-9).unwrap();
    assert_eq!(active.len(), p.m() / 2);
    assert_eq!(p.active_rank(&active).unwrap(), n);
}

#[test]
fn cube_tangent_is_the_free_axis_subspace() {
    let n = 12;
    let p = PolytopeH::cube(n).unwrap();
    let x: Vec<f64> = (0..n).map(|i| if i < 5 { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.1 }).collect();
    let active = p.active_set(&x, 1e-9).unwrap();
    let u = p.face_tangent(&active).unwrap();
    let free = ascent::free_set(&x, 1e-9);
    let w = subspace::axis_subspace(n, &free, None).unwrap();
    assert_eq!(u.matrix(), w.matrix());
    for k in 0..=n {
        let mut y = vec![0.5; n];
        for yi in y.iter_mut().take(k) {
            *yi = 1.0;
        }
        let expected = ((n - k) as f64) < 0.3 * n as f64;
        assert_eq!(p.is_eps_corner(&y, 0.3, 1e-9).unwrap(), expected, "k = {k}");
    }
}

#[test]
fn ray_clip_examples() {
    let n = 10;
    let p = PolytopeH::cube(n).unwrap();
    let x = vec![0.0; n];
    let mut v = vec![0.0; n];
    v[4] = 0.25;
    assert!((p.ray_clip(&x, &v).unwrap() * 0.25 - 1.0).abs() < 1e-15);
    // Sliding along the facet x_0 = 1 is blocked by x_1 = 1 only.
    let mut on = vec![0.0; n];
    on[0] = 1.0;
    on[1] = 0.5;
    let mut t = vec![0.0; n];
    t[1] = 1.0;
    assert_eq!(p.ray_clip(&on, &t).unwrap(), 0.5);
    assert!(matches!(p.ray_clip(&x, &vec![0.0; n]), Err(Error::ZeroDirection)));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ray_clip_is_symmetric_and_lands_on_the_boundary(v in prop::collection::vec(-1.0f64..1.0, 6)) {
        prop_assume!(v.iter().any(|c| c.abs() > 1e-3));
        let p = PolytopeH::cross_polytope(6).unwrap();
        let x = vec![0.0; 6];
        let t = p.ray_clip(&x, &v).unwrap();
        let minus: Vec<f64> = v.iter().map(|c| -c).collect();
        prop_assert!((t - p.ray_clip(&x, &minus).unwrap()).abs() <= 1e-12 * t);
        let hit: Vec<f64> = v.iter().map(|c| t * c).collect();
        let min_slack = p.slacks(&hit).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min_slack.abs() < 1e-12);
    }

    #[test]
    fn contains_matches_slacks(x in prop::collection::vec(-1.5f64..1.5, 6), tol in 0.0f64..0.1) {
        let p = PolytopeH::product_of_simplices(3, 2).unwrap();
        let by_slack = p.slacks(&x).into_iter().all(|s| s >= -tol);
        prop_assert_eq!(p.contains(&x, tol), by_slack);
    }
}

#[test]
fn increment_is_orthogonal_to_x_and_anchor_and_stays_on_the_face() {
    let p = PolytopeH::product_of_simplices(10, 3).unwrap();
    let n = p.n();
    let h = Hamiltonian::sample(Mixture::new(vec![0.0, 1.0, 1.0]).unwrap(), n, 4).unwrap();
    let cfg = config(0.3, 0.05);
    let starts = StartDistribution::RayFraction { lo: 0.4, hi: 0.6 };
    let x0 = starts.sample_polytope(&p, 7, 0).unwrap();
    // Move from x0 onto a facet of the first block along a fixed direction.
    let mut dir = vec![0.0; n];
    dir[0] = 1.0;
    dir[1] = -0.4;
    let t = p.ray_clip(&x0, &dir).unwrap();
    let x: Vec<f64> = x0.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
    let before = p.active_set(&x, 1e-9).unwrap();
    assert_eq!(before.len(), 1);
    let inc = polytope::polytope_increment_step(&h, &p, &x, &x0, &cfg).unwrap();
    let vn = geom::euclidean_norm(&inc.v);
    assert!(vn > 0.0);
    assert!(euclid_dot(&inc.v, &x).abs() <= 1e-10 * vn * geom::euclidean_norm(&x));
    assert!(euclid_dot(&inc.v, &x0).abs() <= 1e-10 * vn * geom::euclidean_norm(&x0));
    let next: Vec<f64> = x.iter().zip(&inc.v).map(|(a, b)| a + b).collect();
    let after = p.active_set(&next, 1e-9).unwrap();
    assert!(before.iter().all(|j| after.contains(j)));
    assert!(geom::norm_sq(&next) > geom::norm_sq(&x));
}

#[test]
fn interlacing_holds_on_face_points() {
    let n = 40;
    let p = PolytopeH::cube(n).unwrap();
    let h = Hamiltonian::sample(Mixture::new(vec![0.0, 1.0, 1.0]).unwrap(), n, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.3..0.3)).collect();
    for k in [0, 5, 15, 25] {
        let x: Vec<f64> = (0..n)
            .map(|i| if i < k { if rng.random::<bool>() { 1.0 } else { -1.0 } } else { rng.random_range(-0.8..0.8) })
            .collect();
        let active = p.active_set(&x, 1e-9).unwrap();
        let u = p.face_tangent(&active).unwrap();
        let outer = subspace::intersect_orthogonal(&u, &[&x]).unwrap();
        let inner = subspace::intersect_orthogonal(&u, &[&x, &x0]).unwrap();
        let hess = h.dense_hessian(&x).unwrap();
        assert!(subspace::interlacing_violation(&hess, &outer, &inner) <= 1e-10);
        let l_inner = subspace::eigenvalues_desc(RestrictedOperator::dense(&hess, &inner).restricted_matrix());
        let l_outer = subspace::eigenvalues_desc(RestrictedOperator::dense(&hess, &outer).restricted_matrix());
        assert!(l_inner[0] >= l_outer[1] - 1e-10);
    }
}

#[test]
fn anchor_at_a_corner_gives_an_empty_trajectory() {
    let n = 10;
    let p = PolytopeH::cube(n).unwrap();
    let h = Hamiltonian::sample(Mixture::pure(3).unwrap(), n, 8).unwrap();
    let x0: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let t = polytope::run_polytope_ascent(&h, &p, &x0, &config(0.5, 0.05)).unwrap();
    assert!(t.steps.is_empty());
    assert_eq!(t.termination, Termination::ReachedCorner);
    assert_eq!(t.final_point, x0);
    assert_eq!(t.realized_gain(), 0.0);
}

#[test]
fn cube_runs_freeze_the_same_coordinates_as_the_cube_ascent() {
    let n = 60;
    let p = PolytopeH::cube(n).unwrap();
    let h = Hamiltonian::sample(Mixture::pure(3).unwrap(), n, 9).unwrap();
    let mut cube_cfg = AscentConfig::new(0.5, 0.02, 5.0).unwrap().with_step_cap(0.05);
    cube_cfg.clamp_tol = 1e-9;
    let mut poly_cfg = PolytopeConfig::new(cube_cfg.clone());
    poly_cfg.act_tol = 1e-9;
    let x0 = vec![0.0; n];
    let cube = ascent::run_ascent(&h, &x0, &cube_cfg).unwrap();
    let poly = polytope::run_polytope_ascent(&h, &p, &x0, &poly_cfg).unwrap();
    let common = cube.steps.len().min(poly.steps.len());
    assert!(common > 10);
    for (c, q) in cube.steps.iter().zip(&poly.steps).take(common) {
        let mapped: Vec<usize> = q.newly_active.iter().map(|j| j / 2).collect();
        assert_eq!(c.newly_clamped, mapped, "step {}", c.index);
        assert!((c.energy - q.energy).abs() < 1e-9);
        assert_eq!(c.free_dim, q.dim_u);
    }
}

#[test]
fn simplex_products_telescope_in_both_norms() {
    let p = PolytopeH::product_of_simplices(20, 2).unwrap();
    let n = p.n();
    let m = Mixture::pure(3).unwrap();
    let h = Hamiltonian::sample(m.clone(), n, 10).unwrap();
    let cfg = config(0.5, 0.05);
    let starts = StartDistribution::RayFraction { lo: 0.4, hi: 0.6 };
    for i in 0..3 {
        let x0 = starts.sample_polytope(&p, 11, i).unwrap();
        let t = polytope::run_polytope_ascent(&h, &p, &x0, &cfg).unwrap();
        assert_eq!(t.termination, Termination::ReachedCorner);
        assert!((t.final_dim_u as f64) < 0.5 * n as f64);
        let q0 = geom::norm_sq(&x0);
        let mut sum = 0.0;
        let mut dim = n;
        for s in &t.steps {
            assert!((s.x_norm_sq - q0 - sum).abs() < 1e-10);
            assert!((s.dist_sq - sum).abs() < 1e-10);
            assert!(s.dim_u <= dim);
            dim = s.dim_u;
            sum += s.v_norm_sq;
        }
        assert!(t.final_dim_u <= dim);
        assert!((t.final_dist_sq() - sum).abs() < 1e-8);
        assert!((geom::norm_sq(&t.final_point) - q0 - sum).abs() < 1e-8);
        assert!(p.contains(&t.final_point, 1e-9));
        assert!(t.realized_gain() > 0.0);
    }
}

#[test]
fn cube_polytope_run_reaches_a_corner_with_mostly_certified_steps() {
    let n = 100;
    let p = PolytopeH::cube(n).unwrap();
    let m = Mixture::pure(3).unwrap();
    let h = Hamiltonian::sample(m.clone(), n, 12).unwrap();
    let cfg = PolytopeConfig::new(AscentConfig::new(0.5, 0.02, 5.0).unwrap().with_step_cap(0.02));
    let x0 = StartDistribution::Shell { norm_sq_min: 0.45, norm_sq_max: 0.55, jitter: 0.3 }
        .sample_cube(n, 13, 0)
        .unwrap();
    let t = polytope::run_polytope_ascent(&h, &p, &x0, &cfg).unwrap();
    assert_eq!(t.termination, Termination::ReachedCorner);
    assert!(p.is_eps_corner(&t.final_point, 0.5, 1e-8).unwrap());
    let certified = t.steps.iter().filter(|s| s.realized_gain() >= s.bound_gain - 1e-9).count();
    let frac = certified as f64 / t.steps.len() as f64;
    println!("certified steps: {certified}/{} ({frac:.3})", t.steps.len());
    // At this size a few late steps miss the per-step bound: the face the
    // run selects has a smaller top eigenvalue than a fixed subspace of the
    // same dimension would.
    assert!(frac >= 0.9);
    let integral = t.gain_integral(&m, 0.5).unwrap();
    assert!(t.realized_gain() >= integral - 0.05, "{} vs {integral}", t.realized_gain());
}
