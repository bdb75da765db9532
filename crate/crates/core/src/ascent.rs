//! Restricted-Hessian eigenvector ascent on the cube `[-1, 1]^N`.
//!
//! Each step moves along the top eigenvector of the Hessian restricted to
//! `W_S(x)`: the span of the coordinates not yet at `±1`, intersected with
//! `x^⊥`. The step is as long as allowed by the cube walls and the norm cap,
//! so it either reaches the cap or pins one more coordinate at `±1`. Because
//! every increment is orthogonal to the current point, `|x|_2^2` grows by
//! exactly `|v|_2^2` per step and the per-step gain certificates telescope
//! into a Riemann sum for `int zeta(t) sqrt(1 - t) dt`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geom;
use crate::hamiltonian::{Hamiltonian, LocalModel};
use crate::mixture::Mixture;
use crate::seed;
use crate::subspace::{self, EigOptions, OrthonormalBasis, RestrictedOperator};
use crate::tensor::dot;

pub const DEFAULT_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    /// Target distance from the corners; also the corner threshold for polytopes.
    pub eps: f64,
    /// Goodness slack; the cube ascent stops once `|x|_2^2 >= 1 - delta`.
    pub delta: f64,
    /// Uniform bound on the first three directional derivatives.
    pub c_bound: f64,
    /// Overrides the step cap `delta / (10 c_bound)` when set.
    #[serde(default)]
    pub step_cap: Option<f64>,
    #[serde(default = "default_clamp_tol")]
    pub clamp_tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replace the maximal step by the best point on the feasible segment.
    #[serde(default)]
    pub line_search: bool,
}

fn default_clamp_tol() -> f64 {
    DEFAULT_CLAMP_TOL
}

fn default_max_steps() -> usize {
    1_000_000
}

impl AscentConfig {
    pub fn new(eps: f64, delta: f64, c_bound: f64) -> Result<Self> {
        let cfg = Self {
            eps,
            delta,
            c_bound,
            step_cap: None,
            clamp_tol: DEFAULT_CLAMP_TOL,
            max_steps: default_max_steps(),
            seed: 0,
            line_search: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_step_cap(mut self, cap: f64) -> Self {
        self.step_cap = Some(cap);
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Domain { what: "eps", value: self.eps, domain: "(0, 1)" });
        }
        if !(self.delta > 0.0 && self.delta <= self.eps) {
            return Err(Error::Domain { what: "delta", value: self.delta, domain: "(0, eps]" });
        }
        if !(self.c_bound > 0.0 && self.c_bound.is_finite()) {
            return Err(Error::Domain { what: "c_bound", value: self.c_bound, domain: "(0, inf)" });
        }
        if let Some(cap) = self.step_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::Domain { what: "step_cap", value: cap, domain: "(0, inf)" });
            }
        }
        if !(0.0..0.5).contains(&self.clamp_tol) {
            return Err(Error::Domain { what: "clamp_tol", value: self.clamp_tol, domain: "[0, 0.5)" });
        }
        Ok(())
    }

    /// Largest allowed `|v|_2` per step.
    pub fn step_cap(&self) -> f64 {
        self.step_cap.unwrap_or(self.delta / (10.0 * self.c_bound))
    }

    pub(crate) fn eig_options(&self) -> EigOptions {
        EigOptions { seed: self.seed, ..EigOptions::default() }
    }
}

/// Coordinates strictly inside the walls: `{i : |x_i| < 1 - clamp_tol}`.
pub fn free_set(x: &[f64], clamp_tol: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() < 1.0 - clamp_tol)
        .map(|(i, _)| i)
        .collect()
}

/// One increment `v` produced by [`increment_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub v: Vec<f64>,
    /// Top eigenvalue of the restricted Hessian in normalized units
    /// (`N` times the Euclidean eigenvalue).
    pub lambda1: f64,
    /// `|S|`, the number of free coordinates.
    pub free_dim: usize,
    pub subspace_dim: usize,
    /// The step length was set by the norm cap rather than a wall.
    pub capped: bool,
    /// Constraint (coordinate or facet) that stopped the step, if any.
    pub blocking: Option<usize>,
    /// `H(x)` from the local model the step was computed from.
    pub energy: f64,
}

/// Chooses the sign of `u` so that `<grad, u> >= 0`; exact ties keep `u`.
pub(crate) fn align_with_gradient(u: &mut [f64], gradient: &[f64]) {
    if dot(gradient, u) < 0.0 {
        u.iter_mut().for_each(|c| *c = -*c);
    }
}

/// Top restricted eigenpair in normalized units.
pub(crate) fn top_direction(
    hessian: &DMatrix<f64>,
    basis: &OrthonormalBasis,
    opts: &EigOptions,
) -> Result<(f64, Vec<f64>)> {
    let r = RestrictedOperator::dense(hessian, basis);
    let top = subspace::top_eigs_with(&r, 1, opts)?.swap_remove(0);
    Ok((top.value * basis.dim_ambient() as f64, top.vector))
}

/// Step multiplier `t` for direction `u` given the first wall at `t_wall`
/// and the normalized norm cap. Returns `(t, capped)`.
pub(crate) fn step_length(u: &[f64], t_wall: f64, cap: f64) -> (f64, bool) {
    let t_cap = cap / geom::norm(u);
    if t_cap <= t_wall {
        (t_cap, true)
    } else {
        (t_wall, false)
    }
}

/// Best `t` in `(0, t_max]` along the line, by dense sampling of the exact
/// line polynomial.
pub(crate) fn line_search(h: &Hamiltonian, x: &[f64], u: &[f64], t_max: f64) -> Result<f64> {
    let c = h.line_polynomial(x, u)?;
    let eval = |t: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck);
    const GRID: usize = 256;
    let mut best = (t_max, eval(t_max));
    for i in 1..GRID {
        let t = t_max * i as f64 / GRID as f64;
        let val = eval(t);
        if val > best.1 {
            best = (t, val);
        }
    }
    Ok(best.0)
}

/// One ascent increment from `x`.
pub fn increment_step(h: &Hamiltonian, x: &[f64], cfg: &AscentConfig) -> Result<Increment> {
    cfg.validate()?;
    check_in_cube(x, cfg.clamp_tol)?;
    let q = geom::norm_sq(x);
    if q > 1.0 - cfg.delta {
        return Err(Error::Precondition(format!(
            "|x|_2^2 = {q} exceeds 1 - delta = {}",
            1.0 - cfg.delta
        )));
    }
    let model = h.local_model(x)?;
    increment_from_model(h, x, &model, cfg)
}

fn increment_from_model(
    h: &Hamiltonian,
    x: &[f64],
    model: &LocalModel,
    cfg: &AscentConfig,
) -> Result<Increment> {
    let s = free_set(x, cfg.clamp_tol);
    if s.is_empty() {
        return Err(Error::AtCorner);
    }
    let basis = subspace::axis_subspace(x.len(), &s, Some(x))?;
    if basis.dim() == 0 {
        return Err(Error::ResultEmpty);
    }
    let (lambda1, mut u) = top_direction(&model.hessian, &basis, &cfg.eig_options())?;
    align_with_gradient(&mut u, &model.gradient);

    let mut t_wall = f64::INFINITY;
    let mut blocking = None;
    for &i in &s {
        if u[i] != 0.0 {
            let t = (u[i].signum() - x[i]) / u[i];
            if t < t_wall {
                t_wall = t;
                blocking = Some(i);
            }
        }
    }
    let (mut t, capped) = step_length(&u, t_wall, cfg.step_cap());
    let blocking = if capped { None } else { blocking };
    let (t, capped, blocking) = if cfg.line_search {
        let best = line_search(h, x, &u, t)?;
        if best < t {
            t = best;
            (t, false, None)
        } else {
            (t, capped, blocking)
        }
    } else {
        (t, capped, blocking)
    };
    Ok(Increment {
        v: u.iter().map(|ui| t * ui).collect(),
        lambda1,
        free_dim: s.len(),
        subspace_dim: basis.dim(),
        capped,
        blocking,
        energy: model.energy,
    })
}

fn check_in_cube(x: &[f64], clamp_tol: f64) -> Result<()> {
    for (i, &xi) in x.iter().enumerate() {
        if !(xi.abs() <= 1.0 + clamp_tol) {
            return Err(Error::PointOutside { constraint: i, violation: xi.abs() - 1.0 });
        }
    }
    Ok(())
}

/// Moves `x` by `inc.v`, pins the blocking coordinate and snaps any
/// coordinate within `clamp_tol` of a wall. Returns the newly clamped
/// coordinates in ascending order.
fn apply_cube_step(x: &mut [f64], inc: &Increment, clamp_tol: f64) -> Vec<usize> {
    let was_free: Vec<bool> = x.iter().map(|v| v.abs() < 1.0 - clamp_tol).collect();
    for (xi, vi) in x.iter_mut().zip(&inc.v) {
        *xi += vi;
    }
    if let Some(i) = inc.blocking {
        x[i] = inc.v[i].signum();
    }
    let mut newly = Vec::new();
    for (i, xi) in x.iter_mut().enumerate() {
        if xi.abs() >= 1.0 - clamp_tol {
            *xi = xi.signum();
            if was_free[i] {
                newly.push(i);
            }
        }
    }
    newly
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    /// `|x^i|_2^2`.
    pub x_norm_sq: f64,
    /// `|v^i|_2^2`.
    pub v_norm_sq: f64,
    /// `H(x^i)`.
    pub energy: f64,
    /// `H(x^{i+1})`.
    pub energy_next: f64,
    pub lambda1: f64,
    pub free_dim: usize,
    /// Coordinates pinned at `±1` during this step, ascending.
    pub newly_clamped: Vec<usize>,
    pub capped: bool,
    /// Certified gain `(zeta(q) sqrt(1 - q) - delta) |v|_2^2` at `q = |x^i|_2^2`.
    pub bound_gain: f64,
}

impl StepRecord {
    pub fn realized_gain(&self) -> f64 {
        self.energy_next - self.energy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `|x|_2^2 >= 1 - delta`.
    ReachedNorm,
    /// Reached an ε-corner (polytope ascent).
    ReachedCorner,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub final_point: Vec<f64>,
    pub final_energy: f64,
    pub termination: Termination,
}

impl Trajectory {
    pub fn initial_energy(&self) -> f64 {
        self.steps.first().map_or(self.final_energy, |s| s.energy)
    }

    /// `H(x^m) - H(x^0)`.
    pub fn realized_gain(&self) -> f64 {
        self.final_energy - self.initial_energy()
    }

    pub fn initial_norm_sq(&self) -> f64 {
        geom::norm_sq(&self.x0)
    }

    pub fn final_norm_sq(&self) -> f64 {
        geom::norm_sq(&self.final_point)
    }

    /// Writes one row per step and a closing `final` summary row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,x_norm_sq,v_norm_sq,energy,lambda1,free_dim,clamped_new")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                s.index,
                s.x_norm_sq,
                s.v_norm_sq,
                s.energy,
                s.lambda1,
                s.free_dim,
                s.newly_clamped.len()
            )?;
        }
        let total_v: f64 = self.steps.iter().map(|s| s.v_norm_sq).sum();
        let clamped: usize = self.steps.iter().map(|s| s.newly_clamped.len()).sum();
        writeln!(
            w,
            "final,{},{},{},,{},{}",
            self.final_norm_sq(),
            total_v,
            self.final_energy,
            free_set(&self.final_point, DEFAULT_CLAMP_TOL).len(),
            clamped
        )?;
        Ok(())
    }
}

/// Iterates [`increment_step`] from `x0` until `|x|_2^2 >= 1 - delta`.
pub fn run_ascent(h: &Hamiltonian, x0: &[f64], cfg: &AscentConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if x0.len() != h.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), got: x0.len() });
    }
    check_in_cube(x0, cfg.clamp_tol)?;
    let mixture = h.mixture();
    let mut x: Vec<f64> = x0
        .iter()
        .map(|&v| if v.abs() >= 1.0 - cfg.clamp_tol { v.signum() } else { v })
        .collect();
    let mut steps: Vec<StepRecord> = Vec::new();
    loop {
        let q = geom::norm_sq(&x);
        if q >= 1.0 - cfg.delta {
            let final_energy = h.energy(&x)?;
            if let Some(last) = steps.last_mut() {
                last.energy_next = final_energy;
            }
            return Ok(Trajectory {
                x0: x0.to_vec(),
                steps,
                final_point: x,
                final_energy,
                termination: Termination::ReachedNorm,
            });
        }
        let model = h.local_model(&x)?;
        if let Some(last) = steps.last_mut() {
            last.energy_next = model.energy;
        }
        if steps.len() >= cfg.max_steps {
            let final_energy = model.energy;
            return Err(Error::MaxStepsExceeded(Box::new(Trajectory {
                x0: x0.to_vec(),
                steps,
                final_point: x,
                final_energy,
                termination: Termination::MaxSteps,
            })));
        }
        let inc = increment_from_model(h, &x, &model, cfg)?;
        let v_norm_sq = geom::norm_sq(&inc.v);
        let bound_gain = (mixture.zeta(q)? * (1.0 - q).max(0.0).sqrt() - cfg.delta) * v_norm_sq;
        let newly_clamped = apply_cube_step(&mut x, &inc, cfg.clamp_tol);
        steps.push(StepRecord {
            index: steps.len(),
            x_norm_sq: q,
            v_norm_sq,
            energy: inc.energy,
            energy_next: f64::NAN,
            lambda1: inc.lambda1,
            free_dim: inc.free_dim,
            newly_clamped,
            capped: inc.capped,
            bound_gain,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainBound {
    /// `sum_i (zeta(|x^i|^2) sqrt(1 - |x^i|^2) - delta) |v^i|^2`.
    pub riemann_sum: f64,
    /// `int_{|x^0|^2}^{|x^m|^2} zeta(t) sqrt(1 - t) dt`.
    pub integral: f64,
}

pub fn gain_lower_bound(traj: &Trajectory, m: &Mixture, delta: f64) -> Result<GainBound> {
    let mut riemann_sum = 0.0;
    for s in &traj.steps {
        let q = s.x_norm_sq;
        riemann_sum += (m.zeta(q)? * (1.0 - q).max(0.0).sqrt() - delta) * s.v_norm_sq;
    }
    let a = traj.initial_norm_sq().min(1.0);
    let b = traj.final_norm_sq().clamp(a, 1.0);
    Ok(GainBound { riemann_sum, integral: m.gain_integral_cube(a, b)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CEstimateOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Power-iteration refinements of the second- and third-order directions.
    pub refine_iters: usize,
}

/// `1.1` times the largest `|d_v^i H(sigma)|`, `i = 1, 2, 3`, over sampled
/// `sigma` in the unit ball and unit directions `v`.
pub fn estimate_c(h: &Hamiltonian, n_samples: usize, seed: u64) -> Result<f64> {
    estimate_c_with(h, &CEstimateOptions { n_samples, seed, refine_iters: 3 })
}

/// Per-sample maxima; [`estimate_c_with`] is `1.1` times their maximum.
pub fn c_samples(h: &Hamiltonian, opts: &CEstimateOptions) -> Result<Vec<f64>> {
    if opts.n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    let n = h.n();
    let results = exec::map_indexed(opts.n_samples, |i| -> Result<f64> {
        let mut rng = seed::stream(opts.seed, &[seed::TAG_SAMPLE, i as u64]);
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let radius = rng.random::<f64>().powf(1.0 / n as f64);
        let sigma: Vec<f64> = {
            let norm = geom::norm(&g);
            g.iter().map(|gi| radius * gi / norm).collect()
        };
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let d = h.directional_derivatives(&sigma, &v)?;
        let mut best = d.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if opts.refine_iters > 0 {
            // Along the gradient the first derivative attains its maximum.
            let grad = h.gradient(&sigma)?;
            if grad.iter().any(|&c| c != 0.0) {
                best = best.max(h.directional_derivatives(&sigma, &grad)?[0].abs());
            }
            let mut w2 = v.clone();
            let mut w3 = v.clone();
            for _ in 0..opts.refine_iters {
                let hw = h.hessian_vec(&sigma, &w2)?;
                if hw.iter().all(|&c| c == 0.0) {
                    break;
                }
                w2 = hw;
            }
            best = best.max(h.directional_derivatives(&sigma, &w2)?[1].abs());
            if h.mixture().max_degree() >= 3 {
                for _ in 0..opts.refine_iters {
                    let t = h.gradient_line(&sigma, &w3, 2)?.swap_remove(2);
                    if t.iter().all(|&c| c == 0.0) {
                        break;
                    }
                    w3 = t;
                }
                best = best.max(h.directional_derivatives(&sigma, &w3)?[2].abs());
            }
        }
        Ok(best)
    });
    results.into_iter().collect()
}

pub fn estimate_c_with(h: &Hamiltonian, opts: &CEstimateOptions) -> Result<f64> {
    let samples = c_samples(h, opts)?;
    Ok(1.1 * samples.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub subset_size: usize,
    pub n_checked: usize,
    pub n_pass: usize,
    pub pass_fraction: f64,
    /// `2 zeta(|x|^2) sqrt(eps) - delta`.
    pub threshold: f64,
    pub min_lambda1: f64,
    /// `min lambda1 - threshold`; negative when some subset fails.
    pub worst_margin: f64,
}

/// Sampled check of `lambda1(Hess|_{W_S(x)}) >= 2 zeta(|x|^2) sqrt(eps) - delta`
/// over random `S` with `|S| = ceil(eps N)`.
pub fn check_goodness(
    h: &Hamiltonian,
    x: &[f64],
    eps: f64,
    delta: f64,
    n_subsets: usize,
    seed_value: u64,
) -> Result<GoodnessReport> {
    let n = h.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain { what: "eps", value: eps, domain: "(0, 1]" });
    }
    let size = ((eps * n as f64).ceil() as usize).clamp(1, n);
    let n_checked = if size == n { 1 } else { n_subsets };
    let threshold = 2.0 * h.mixture().zeta(geom::norm_sq(x).min(1.0))? * eps.sqrt() - delta;
    let model = h.local_model(x)?;
    let lambdas = exec::map_indexed(n_checked, |j| -> Result<f64> {
        let mut s: Vec<usize> = if size == n {
            (0..n).collect()
        } else {
            let mut rng = seed::stream(seed_value, &[seed::TAG_SUBSET, j as u64]);
            rand::seq::index::sample(&mut rng, n, size).into_vec()
        };
        s.sort_unstable();
        let basis = subspace::axis_subspace(n, &s, Some(x))?;
        Ok(top_direction(&model.hessian, &basis, &EigOptions::default())?.0)
    });
    let lambdas = lambdas.into_iter().collect::<Result<Vec<_>>>()?;
    let n_pass = lambdas.iter().filter(|&&l| l >= threshold).count();
    let min_lambda1 = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GoodnessReport {
        subset_size: size,
        n_checked,
        n_pass,
        pass_fraction: if n_checked == 0 { 1.0 } else { n_pass as f64 / n_checked as f64 },
        threshold,
        min_lambda1,
        worst_margin: min_lambda1 - threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_set_examples() {
        assert_eq!(free_set(&[0.0; 5], DEFAULT_CLAMP_TOL), vec![0, 1, 2, 3, 4]);
        assert!(free_set(&[1.0; 5], DEFAULT_CLAMP_TOL).is_empty());
        let x = [1.0, 0.5, -1.0, 0.0];
        let s = free_set(&x, DEFAULT_CLAMP_TOL);
        assert_eq!(s, vec![1, 3]);
        let q = geom::norm_sq(&x);
        assert_eq!(q, 0.5625);
        assert!(s.len() as f64 >= (1.0 - q) * 4.0);
    }

    #[test]
    fn config_validation() {
        assert!(AscentConfig::new(0.5, 0.02, 5.0).is_ok());
        assert!(AscentConfig::new(0.5, 0.6, 5.0).is_err());
        assert!(AscentConfig::new(1.0, 0.02, 5.0).is_err());
        assert!(AscentConfig::new(0.5, 0.02, 0.0).is_err());
        let cfg = AscentConfig::new(0.5, 0.02, 4.0).unwrap();
        assert_eq!(cfg.step_cap(), 0.02 / 40.0);
        assert_eq!(cfg.clone().with_step_cap(0.1).step_cap(), 0.1);
    }

    #[test]
    fn step_length_prefers_the_nearer_limit() {
        let u = [1.0, 0.0, 0.0, 0.0]; // |u|_2 = 0.5
        assert_eq!(step_length(&u, 10.0, 0.5), (1.0, true));
        assert_eq!(step_length(&u, 0.25, 0.5), (0.25, false));
    }

    #[test]
    fn alignment_flips_only_negative_products() {
        let mut u = vec![1.0, -1.0];
        align_with_gradient(&mut u, &[-1.0, 0.0]);
        assert_eq!(u, vec![-1.0, 1.0]);
        let mut u = vec![1.0, 1.0];
        align_with_gradient(&mut u, &[1.0, -1.0]);
        assert_eq!(u, vec![1.0, 1.0]);
    }
}
