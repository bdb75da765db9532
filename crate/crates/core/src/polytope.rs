//! H-representation polytopes inside the normalized unit ball and the
//! face-aligned eigenvector ascent that drives a point to an ε-corner.
//!
//! The ascent moves inside the tangent space `U` of the minimal face through
//! the current point, additionally orthogonal to both the current point and
//! the start `x0`. Orthogonality to `x0` makes `|x - x0|_2^2` telescope
//! alongside `|x|_2^2`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ascent::{self, AscentConfig, Increment, Termination};
use crate::error::{Error, Result};
use crate::geom;
use crate::hamiltonian::{Hamiltonian, LocalModel};
use crate::mixture::Mixture;
use crate::seed;
use crate::subspace::{self, OrthonormalBasis};
use crate::tensor::dot;

/// Activity tolerance, relative to the constraint row norm.
pub const DEFAULT_ACT_TOL: f64 = 1e-8;
/// Relative threshold below which an active normal adds no rank.
pub const RANK_TOL: f64 = 1e-10;
pub const DUPLICATE_TOL: f64 = 1e-10;
/// The cross-polytope has `2^N` facets and is only generated up to this `N`.
pub const MAX_CROSS_POLYTOPE_DIM: usize = 16;
/// Largest number of row subsets tried by vertex enumeration.
pub const VERTEX_ENUMERATION_LIMIT: u128 = 20_000;
const RADIAL_PROBES: usize = 512;
const BALL_SLACK: f64 = 1e-9;

/// On-disk form: constraints `rows[j] . x <= b[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeH {
    n: usize,
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    row_norms: Vec<f64>,
}

impl PolytopeH {
    /// Validates shapes and distinctness, then checks that the polytope is
    /// bounded and inside `B^N`.
    pub fn new(n: usize, rows: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let p = Self::from_parts(n, rows, b)?;
        p.check_ball_containment()?;
        Ok(p)
    }

    fn from_parts(n: usize, rows: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPolytope("dimension must be positive".into()));
        }
        if rows.len() != b.len() {
            return Err(Error::InvalidPolytope(format!("{} rows but {} offsets", rows.len(), b.len())));
        }
        if rows.is_empty() {
            return Err(Error::InvalidPolytope("no constraints".into()));
        }
        let mut row_norms = Vec::with_capacity(rows.len());
        for (j, (a, bj)) in rows.iter().zip(&b).enumerate() {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            if !a.iter().chain(std::iter::once(bj)).all(|v| v.is_finite()) {
                return Err(Error::InvalidPolytope(format!("row {j} is not finite")));
            }
            let norm = dot(a, a).sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidPolytope(format!("row {j} is zero")));
            }
            row_norms.push(norm);
        }
        let p = Self { n, rows, b, row_norms };
        p.check_duplicates()?;
        Ok(p)
    }

    fn check_duplicates(&self) -> Result<()> {
        let normalized = |j: usize| -> Vec<f64> {
            let s = self.row_norms[j];
            self.rows[j].iter().map(|v| v / s).chain(std::iter::once(self.b[j] / s)).collect()
        };
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for j in 0..self.m() {
            let r = normalized(j);
            let key = r.iter().map(|v| (v * 1e9).round() as i64).collect();
            let bucket = buckets.entry(key).or_default();
            for &k in bucket.iter() {
                let other = normalized(k);
                if r.iter().zip(&other).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL) {
                    return Err(Error::InvalidPolytope(format!("rows {k} and {j} are duplicates")));
                }
            }
            bucket.push(j);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn row_norm(&self, j: usize) -> f64 {
        self.row_norms[j]
    }

    /// `[-1, 1]^N` as `±e_i . x <= 1`; row `2i` is `+e_i`, row `2i + 1` is `-e_i`.
    /// Its corners have `|x|_2 = 1`, so it already lies in `B^N`.
    pub fn cube(n: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; n];
                a[i] = sign;
                rows.push(a);
            }
        }
        Self::from_parts(n, rows, vec![1.0; 2 * n])
    }

    /// Regular `n`-simplex centred at the origin with vertices on the unit sphere.
    pub fn simplex(n: usize) -> Result<Self> {
        Self::product_of_simplices(1, n)
    }

    /// Product of `k` regular `d`-simplices on consecutive coordinate blocks,
    /// each of circumradius `sqrt(d)`, so every vertex has `|x|_2 = 1`.
    ///
    /// Block `b` owns coordinates `b d .. (b + 1) d` and rows
    /// `b (d + 1) .. (b + 1)(d + 1)`; row `k` of a block is the facet opposite
    /// vertex `k`.
    pub fn product_of_simplices(k: usize, d: usize) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidPolytope("need k >= 1 and d >= 1".into()));
        }
        let n = k * d;
        let unit = simplex_unit_vertices(d);
        let offset = (d as f64).sqrt() / d as f64;
        let mut rows = Vec::with_capacity(k * (d + 1));
        for block in 0..k {
            for u in &unit {
                let mut a = vec![0.0; n];
                for (j, uj) in u.iter().enumerate() {
                    a[block * d + j] = -uj;
                }
                rows.push(a);
            }
        }
        let m = rows.len();
        Self::from_parts(n, rows, vec![offset; m])
    }

    /// `{x : sum_i |x_i| <= sqrt(N)}` with all `2^N` sign rows; vertices
    /// `±sqrt(N) e_i` have `|x|_2 = 1`.
    pub fn cross_polytope(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_CROSS_POLYTOPE_DIM {
            return Err(Error::InvalidPolytope(format!(
                "cross-polytope dimension must be in 1..={MAX_CROSS_POLYTOPE_DIM}, got {n}"
            )));
        }
        let rows: Vec<Vec<f64>> = (0..1usize << n)
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 0 { 1.0 } else { -1.0 }).collect())
            .collect();
        let m = rows.len();
        Self::from_parts(n, rows, vec![(n as f64).sqrt(); m])
    }

    /// `b_j - a_j . x` for every constraint.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().zip(&self.b).map(|(a, bj)| bj - dot(a, x)).collect()
    }

    /// Constraint with the largest `a_j . x - b_j`.
    pub fn worst_violation(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.slacks(x)
            .into_iter()
            .enumerate()
            .map(|(j, s)| (j, -s))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// True iff `a_j . x <= b_j + tol` for all `j`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n && self.rows.iter().zip(&self.b).all(|(a, bj)| dot(a, x) <= bj + tol)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    /// Constraints with `b_j - a_j . x <= act_tol |a_j|`.
    pub fn active_set(&self, x: &[f64], act_tol: f64) -> Result<Vec<usize>> {
        self.check_point(x)?;
        let mut active = Vec::new();
        for (j, s) in self.slacks(x).into_iter().enumerate() {
            let tol = act_tol * self.row_norms[j];
            if s < -tol {
                return Err(Error::PointOutside { constraint: j, violation: -s });
            }
            if s <= tol {
                active.push(j);
            }
        }
        Ok(active)
    }

    fn orthonormal_active_rows(&self, active: &[usize]) -> Result<Vec<Vec<f64>>> {
        if let Some(&bad) = active.iter().find(|&&j| j >= self.m()) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.m() });
        }
        Ok(subspace::orthonormalize_against(
            &[],
            active.iter().map(|&j| self.rows[j].clone()),
            RANK_TOL,
        ))
    }

    /// Rank of the active normals.
    pub fn active_rank(&self, active: &[usize]) -> Result<usize> {
        Ok(self.orthonormal_active_rows(active)?.len())
    }

    /// Orthonormal basis of `U = {v : a_j . v = 0 for active j}`.
    ///
    /// The basis is the standard basis Gram-Schmidt-completed against the
    /// active normals, so for coordinate normals it consists of the free unit
    /// vectors in ascending order.
    pub fn face_tangent(&self, active: &[usize]) -> Result<OrthonormalBasis> {
        let fixed = self.orthonormal_active_rows(active)?;
        let want = self.n - fixed.len();
        if want == 0 {
            return Err(Error::ResultEmpty);
        }
        let candidates = (0..self.n).map(|i| {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            e
        });
        let cols = subspace::orthonormalize_against(&fixed, candidates, RANK_TOL);
        if cols.len() == want {
            return Ok(OrthonormalBasis::from_columns(self.n, &cols));
        }
        // Greedy completion dropped a borderline candidate; fall back to the
        // eigenvectors of the complementary projector.
        let mut proj = DMatrix::<f64>::identity(self.n, self.n);
        for q in &fixed {
            let q = DVector::from_column_slice(q);
            proj -= &q * q.transpose();
        }
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let cols: Vec<Vec<f64>> = order[..want]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).as_slice().to_vec())
            .collect();
        Ok(OrthonormalBasis::from_columns(self.n, &cols))
    }

    /// `dim U < eps N` at `x`.
    pub fn is_eps_corner(&self, x: &[f64], eps: f64, act_tol: f64) -> Result<bool> {
        let active = self.active_set(x, act_tol)?;
        let rank = self.active_rank(&active)?;
        Ok(((self.n - rank) as f64) < eps * self.n as f64)
    }

    /// Largest `t >= 0` with `x + t v` in the polytope.
    pub fn ray_clip(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(v)?;
        if v.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroDirection);
        }
        match self.ray_clip_skipping(x, v, &[]) {
            (t, Some(_)) => Ok(t),
            (_, None) => Err(Error::UnboundedRay),
        }
    }

    /// Exit time along `v` over constraints not flagged in `skip`, with the
    /// first blocking constraint. Slightly negative slacks count as zero.
    fn ray_clip_skipping(&self, x: &[f64], v: &[f64], skip: &[bool]) -> (f64, Option<usize>) {
        let mut best = (f64::INFINITY, None);
        for (j, (a, bj)) in self.rows.iter().zip(&self.b).enumerate() {
            if skip.get(j).copied().unwrap_or(false) {
                continue;
            }
            let av = dot(a, v);
            if av > 0.0 {
                let t = (bj - dot(a, x)).max(0.0) / av;
                if t < best.0 {
                    best = (t, Some(j));
                }
            }
        }
        best
    }

    /// Checks boundedness and `P ⊆ B^N`.
    ///
    /// Small instances are checked exactly by vertex enumeration. Otherwise the
    /// origin must be interior and the exit points of coordinate and random
    /// rays from it are checked, which is a sampled test.
    pub fn check_ball_containment(&self) -> Result<()> {
        if binomial(self.m() as u128, self.n as u128) <= VERTEX_ENUMERATION_LIMIT {
            self.check_vertices()?;
        }
        let origin = vec![0.0; self.n];
        if self.b.iter().all(|&bj| bj > 0.0) {
            self.check_radial_probes(&origin)
        } else if binomial(self.m() as u128, self.n as u128) <= VERTEX_ENUMERATION_LIMIT {
            Ok(())
        } else {
            Err(Error::InvalidPolytope(
                "too many constraints to enumerate vertices and the origin is not interior".into(),
            ))
        }
    }

    fn check_vertices(&self) -> Result<()> {
        let n = self.n;
        let mut idx: Vec<usize> = (0..n).collect();
        let m = self.m();
        if m < n {
            return Err(Error::InvalidPolytope("fewer constraints than dimensions: unbounded".into()));
        }
        loop {
            let a = DMatrix::from_fn(n, n, |r, c| self.rows[idx[r]][c]);
            let rhs = DVector::from_iterator(n, idx.iter().map(|&j| self.b[j]));
            if let Some(sol) = a.lu().solve(&rhs) {
                let x = sol.as_slice();
                let scale = 1.0 + x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                if x.iter().all(|v| v.is_finite()) && self.contains(x, 1e-9 * scale) {
                    let q = geom::norm_sq(x);
                    if q > 1.0 + BALL_SLACK {
                        return Err(Error::InvalidPolytope(format!(
                            "vertex with |x|_2^2 = {q} lies outside the unit ball"
                        )));
                    }
                }
            }
            // Next combination in lexicographic order.
            let mut i = n;
            while i > 0 && idx[i - 1] == m - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return Ok(());
            }
            idx[i - 1] += 1;
            for j in i..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    fn check_radial_probes(&self, origin: &[f64]) -> Result<()> {
        let n = self.n;
        let mut rng = seed::stream(0, &[seed::TAG_SAMPLE, n as u64, self.m() as u64]);
        let axes = (0..2 * n).map(|k| {
            let mut d = vec![0.0; n];
            d[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            d
        });
        let random: Vec<Vec<f64>> =
            (0..RADIAL_PROBES).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        for d in axes.chain(random) {
            let t = self.ray_clip(origin, &d).map_err(|e| match e {
                Error::UnboundedRay => Error::InvalidPolytope("polytope is unbounded".into()),
                other => other,
            })?;
            let q = geom::norm_sq(&d) * t * t;
            if q > 1.0 + BALL_SLACK {
                return Err(Error::InvalidPolytope(format!(
                    "boundary point with |x|_2^2 = {q} lies outside the unit ball"
                )));
            }
        }
        Ok(())
    }

    pub fn to_file_format(&self) -> PolytopeFile {
        PolytopeFile { n: self.n, rows: self.rows.clone(), b: self.b.clone() }
    }

    pub fn from_file_format(f: PolytopeFile) -> Result<Self> {
        Self::new(f.n, f.rows, f.b)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &self.to_file_format())?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Self::from_file_format(serde_json::from_reader(r)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_json(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > VERTEX_ENUMERATION_LIMIT * 1000 {
            return u128::MAX;
        }
    }
    acc
}

/// Unit vertices of a regular `d`-simplex centred at the origin, from the
/// Helmert basis of the sum-zero hyperplane in `R^{d+1}`.
fn simplex_unit_vertices(d: usize) -> Vec<Vec<f64>> {
    let scale = (d as f64 / (d as f64 + 1.0)).sqrt();
    (0..=d)
        .map(|k| {
            (1..=d)
                .map(|j| {
                    let norm = ((j * (j + 1)) as f64).sqrt();
                    let h = match k.cmp(&j) {
                        std::cmp::Ordering::Less => 1.0,
                        std::cmp::Ordering::Equal => -(j as f64),
                        std::cmp::Ordering::Greater => 0.0,
                    };
                    h / norm / scale
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeConfig {
    #[serde(flatten)]
    pub ascent: AscentConfig,
    #[serde(default = "default_act_tol")]
    pub act_tol: f64,
}

fn default_act_tol() -> f64 {
    DEFAULT_ACT_TOL
}

impl PolytopeConfig {
    pub fn new(ascent: AscentConfig) -> Self {
        Self { ascent, act_tol: DEFAULT_ACT_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        self.ascent.validate()?;
        if !(self.act_tol >= 0.0 && self.act_tol < 1e-2) {
            return Err(Error::Domain { what: "act_tol", value: self.act_tol, domain: "[0, 0.01)" });
        }
        Ok(())
    }
}

/// One increment from `x` inside `p`, orthogonal to `x` and `x0`.
pub fn polytope_increment_step(
    h: &Hamiltonian,
    p: &PolytopeH,
    x: &[f64],
    x0: &[f64],
    cfg: &PolytopeConfig,
) -> Result<Increment> {
    cfg.validate()?;
    p.check_point(x0)?;
    let active = p.active_set(x, cfg.act_tol)?;
    let tangent = face_tangent_or_corner(p, &active)?;
    if is_corner_dim(tangent.dim(), p.n, cfg.ascent.eps) {
        return Err(Error::AtCorner);
    }
    let model = h.local_model(x)?;
    increment_in_face(h, p, x, x0, &model, &tangent, &active, cfg)
}

fn face_tangent_or_corner(p: &PolytopeH, active: &[usize]) -> Result<OrthonormalBasis> {
    match p.face_tangent(active) {
        Err(Error::ResultEmpty) => Err(Error::AtCorner),
        other => other,
    }
}

fn is_corner_dim(dim_u: usize, n: usize, eps: f64) -> bool {
    (dim_u as f64) < eps * n as f64
}

#[allow(clippy::too_many_arguments)]
fn increment_in_face(
    h: &Hamiltonian,
    p: &PolytopeH,
    x: &[f64],
    x0: &[f64],
    model: &LocalModel,
    tangent: &OrthonormalBasis,
    active: &[usize],
    cfg: &PolytopeConfig,
) -> Result<Increment> {
    let basis = subspace::intersect_orthogonal(tangent, &[x, x0])?;
    let (lambda1, mut u) = ascent::top_direction(&model.hessian, &basis, &cfg.ascent.eig_options())?;
    ascent::align_with_gradient(&mut u, &model.gradient);
    let mut skip = vec![false; p.m()];
    for &j in active {
        skip[j] = true;
    }
    let (t_wall, blocking) = p.ray_clip_skipping(x, &u, &skip);
    if blocking.is_none() {
        return Err(Error::UnboundedRay);
    }
    let (mut t, capped) = ascent::step_length(&u, t_wall, cfg.ascent.step_cap());
    let mut blocking = if capped { None } else { blocking };
    let mut capped = capped;
    if cfg.ascent.line_search {
        let best = ascent::line_search(h, x, &u, t)?;
        if best < t {
            t = best;
            capped = false;
            blocking = None;
        }
    }
    Ok(Increment {
        v: u.iter().map(|ui| t * ui).collect(),
        lambda1,
        free_dim: tangent.dim(),
        subspace_dim: basis.dim(),
        capped,
        blocking,
        energy: model.energy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeStepRecord {
    pub index: usize,
    pub x_norm_sq: f64,
    /// `|x^i - x^0|_2^2`.
    pub dist_sq: f64,
    pub v_norm_sq: f64,
    pub energy: f64,
    pub energy_next: f64,
    pub lambda1: f64,
    /// Dimension of the face tangent space at `x^i`.
    pub dim_u: usize,
    /// Constraints that became active during this step, ascending.
    pub newly_active: Vec<usize>,
    pub capped: bool,
    /// `(zeta(|x^i|^2) sqrt(eps) - delta) |v|_2^2`.
    pub bound_gain: f64,
}

impl PolytopeStepRecord {
    pub fn realized_gain(&self) -> f64 {
        self.energy_next - self.energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeTrajectory {
    pub x0: Vec<f64>,
    pub steps: Vec<PolytopeStepRecord>,
    pub final_point: Vec<f64>,
    pub final_energy: f64,
    pub final_dim_u: usize,
    pub termination: Termination,
}

impl PolytopeTrajectory {
    pub fn initial_energy(&self) -> f64 {
        self.steps.first().map_or(self.final_energy, |s| s.energy)
    }

    pub fn realized_gain(&self) -> f64 {
        self.final_energy - self.initial_energy()
    }

    pub fn final_dist_sq(&self) -> f64 {
        geom::dist_sq(&self.final_point, &self.x0)
    }

    /// `sqrt(eps) int_{|x0|^2}^{|x0|^2 + |x^m - x0|^2} zeta(t) dt`.
    pub fn gain_integral(&self, m: &Mixture, eps: f64) -> Result<f64> {
        let a = geom::norm_sq(&self.x0).min(1.0);
        let b = (a + self.final_dist_sq()).min(1.0);
        m.gain_integral_polytope(a, b, eps)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,x_norm_sq,v_norm_sq,energy,lambda1,free_dim,clamped_new,dim_u,dist_sq")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                s.index,
                s.x_norm_sq,
                s.v_norm_sq,
                s.energy,
                s.lambda1,
                s.dim_u,
                s.newly_active.len(),
                s.dim_u,
                s.dist_sq
            )?;
        }
        let total_v: f64 = self.steps.iter().map(|s| s.v_norm_sq).sum();
        let active: usize = self.steps.iter().map(|s| s.newly_active.len()).sum();
        writeln!(
            w,
            "final,{},{},{},,{},{},{},{}",
            geom::norm_sq(&self.final_point),
            total_v,
            self.final_energy,
            self.final_dim_u,
            active,
            self.final_dim_u,
            self.final_dist_sq()
        )?;
        Ok(())
    }
}

/// Iterates [`polytope_increment_step`] with anchor `x0` until an ε-corner.
///
/// Constraints stay active once they become active; each newly active
/// constraint is met exactly by a one-row correction of `x`.
pub fn run_polytope_ascent(
    h: &Hamiltonian,
    p: &PolytopeH,
    x0: &[f64],
    cfg: &PolytopeConfig,
) -> Result<PolytopeTrajectory> {
    cfg.validate()?;
    if p.n() != h.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), got: p.n() });
    }
    let eps = cfg.ascent.eps;
    let delta = cfg.ascent.delta;
    let mixture = h.mixture();
    let mut pinned = vec![false; p.m()];
    for j in p.active_set(x0, cfg.act_tol)? {
        pinned[j] = true;
    }
    let mut x = x0.to_vec();
    let mut steps: Vec<PolytopeStepRecord> = Vec::new();
    loop {
        let active: Vec<usize> = (0..p.m()).filter(|&j| pinned[j]).collect();
        let dim_u = match p.face_tangent(&active) {
            Ok(b) => Some(b),
            Err(Error::ResultEmpty) => None,
            Err(e) => return Err(e),
        };
        let corner = dim_u.as_ref().is_none_or(|b| is_corner_dim(b.dim(), p.n, eps));
        if corner || steps.len() >= cfg.ascent.max_steps {
            let final_energy = h.energy(&x)?;
            if let Some(last) = steps.last_mut() {
                last.energy_next = final_energy;
            }
            let traj = PolytopeTrajectory {
                x0: x0.to_vec(),
                steps,
                final_point: x,
                final_energy,
                final_dim_u: dim_u.map_or(0, |b| b.dim()),
                termination: if corner { Termination::ReachedCorner } else { Termination::MaxSteps },
            };
            return if corner {
                Ok(traj)
            } else {
                Err(Error::PolytopeMaxStepsExceeded(Box::new(traj)))
            };
        }
        let tangent = dim_u.expect("non-corner has a tangent space");
        let model = h.local_model(&x)?;
        if let Some(last) = steps.last_mut() {
            last.energy_next = model.energy;
        }
        let inc = increment_in_face(h, p, &x, x0, &model, &tangent, &active, cfg)?;
        let q = geom::norm_sq(&x);
        let v_norm_sq = geom::norm_sq(&inc.v);
        let bound_gain = (mixture.zeta(q.min(1.0))? * eps.sqrt() - delta) * v_norm_sq;
        let dist_sq = geom::dist_sq(&x, x0);
        for (xi, vi) in x.iter_mut().zip(&inc.v) {
            *xi += vi;
        }
        let mut newly_active = Vec::new();
        for j in 0..p.m() {
            if pinned[j] {
                continue;
            }
            let a = &p.rows[j];
            let slack = p.b[j] - dot(a, &x);
            if inc.blocking == Some(j) || slack <= cfg.act_tol * p.row_norms[j] {
                let c = slack / (p.row_norms[j] * p.row_norms[j]);
                for (xi, ai) in x.iter_mut().zip(a) {
                    if *ai != 0.0 {
                        *xi += c * ai;
                    }
                }
                pinned[j] = true;
                newly_active.push(j);
            }
        }
        steps.push(PolytopeStepRecord {
            index: steps.len(),
            x_norm_sq: q,
            dist_sq,
            v_norm_sq,
            energy: inc.energy,
            energy_next: f64::NAN,
            lambda1: inc.lambda1,
            dim_u: tangent.dim(),
            newly_active,
            capped: inc.capped,
            bound_gain,
        });
    }
}
