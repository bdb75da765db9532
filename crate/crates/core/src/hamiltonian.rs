//! Gaussian disorder and the mixed p-spin Hamiltonian
//! `H(x) = sum_p gamma_p N^{-(p+1)/2} sum_{i_1..i_p} g_{i_1..i_p} x_{i_1} ... x_{i_p}`.
//!
//! Coupling tensors are stored unsymmetrized, exactly as sampled, and every
//! evaluation sums over all ordered index tuples.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geom;
use crate::mixture::Mixture;
use crate::seed;
use crate::tensor::{contract_line, dot};

/// Largest tensor (in entries) `sample_disorder` will allocate by default.
pub const DEFAULT_MEMORY_BUDGET: usize = 2_000_000_000;

/// Largest dimension for which dense Hessians are formed by default.
pub const DEFAULT_DENSE_HESSIAN_LIMIT: usize = 2000;

const DUMP_MAGIC: &[u8; 4] = b"PSPN";
const DUMP_VERSION: u32 = 1;

/// The i.i.d. standard Gaussian couplings of one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    pub p: usize,
    /// Row-major, `n^p` entries.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disorder {
    n: usize,
    seed: Option<u64>,
    tensors: Vec<CouplingTensor>,
}

impl Disorder {
    /// Samples one coupling tensor for each degree in the support of `m`.
    pub fn sample(m: &Mixture, n: usize, seed: u64) -> Result<Self> {
        Self::sample_with_budget(m, n, seed, DEFAULT_MEMORY_BUDGET)
    }

    pub fn sample_with_budget(m: &Mixture, n: usize, seed: u64, budget: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("dimension n = {n} must be at least 2")));
        }
        let mut tensors = Vec::new();
        for (p, _) in m.support() {
            let entries = (n as u128).pow(p as u32);
            if entries > budget as u128 {
                return Err(Error::DegreeTooLarge { p, entries, budget });
            }
            let row = n.pow(p as u32 - 1);
            let mut data = vec![0.0; entries as usize];
            // One stream per leading index keeps sampling parallel and still
            // a pure function of (n, seed, p).
            exec::for_each_chunk_mut(&mut data, row, |i, chunk| {
                let mut rng = seed::stream(seed, &[seed::TAG_DISORDER, p as u64, i as u64]);
                for v in chunk.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            });
            tensors.push(CouplingTensor { p, data });
        }
        Ok(Self { n, seed: Some(seed), tensors })
    }

    /// Builds a disorder from explicitly supplied couplings.
    pub fn from_tensors(n: usize, mut tensors: Vec<CouplingTensor>) -> Result<Self> {
        tensors.sort_by_key(|t| t.p);
        for w in tensors.windows(2) {
            if w[0].p == w[1].p {
                return Err(Error::InvalidDump(format!("degree {} given twice", w[0].p)));
            }
        }
        for t in &tensors {
            let expected = n.pow(t.p as u32);
            if t.p == 0 || t.data.len() != expected {
                return Err(Error::DimensionMismatch { expected, got: t.data.len() });
            }
        }
        Ok(Self { n, seed: None, tensors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn tensors(&self) -> &[CouplingTensor] {
        &self.tensors
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.p).collect()
    }

    /// Writes the binary dump: magic, version, `n`, degree list, seed, then
    /// the little-endian `f64` tensors in ascending degree.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            w.write_all(&(t.p as u32).to_le_bytes())?;
        }
        w.write_all(&self.seed.unwrap_or(0).to_le_bytes())?;
        for t in &self.tensors {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::InvalidDump("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != DUMP_VERSION {
            return Err(Error::InvalidDump(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)? as usize;
        let degrees = (0..count)
            .map(|_| read_u32(&mut r).map(|p| p as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut seed_bytes = [0u8; 8];
        r.read_exact(&mut seed_bytes)?;
        let seed = u64::from_le_bytes(seed_bytes);
        let mut tensors = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for p in degrees {
            let len = n.pow(p as u32);
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            tensors.push(CouplingTensor { p, data });
        }
        let mut d = Self::from_tensors(n, tensors)?;
        d.seed = Some(seed);
        Ok(d)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Energy, gradient and dense Hessian at one point.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    mixture: Mixture,
    disorder: Disorder,
    /// `gamma_p * n^{-(p+1)/2}` per tensor, aligned with `disorder.tensors`.
    scales: Vec<f64>,
    dense_limit: usize,
}

impl Hamiltonian {
    pub fn new(mixture: Mixture, disorder: Disorder) -> Result<Self> {
        let n = disorder.n;
        if n == 0 {
            return Err(Error::Precondition("dimension n must be positive".into()));
        }
        let support: Vec<usize> = mixture.support().map(|(p, _)| p).collect();
        if support != disorder.degrees() {
            return Err(Error::Precondition(format!(
                "disorder degrees {:?} do not match mixture support {:?}",
                disorder.degrees(),
                support
            )));
        }
        let scales = disorder
            .tensors
            .iter()
            .map(|t| mixture.gamma(t.p) * (n as f64).powf(-(t.p as f64 + 1.0) / 2.0))
            .collect();
        Ok(Self { mixture, disorder, scales, dense_limit: DEFAULT_DENSE_HESSIAN_LIMIT })
    }

    pub fn sample(mixture: Mixture, n: usize, seed: u64) -> Result<Self> {
        let disorder = Disorder::sample(&mixture, n, seed)?;
        Self::new(mixture, disorder)
    }

    pub fn with_dense_limit(mut self, limit: usize) -> Self {
        self.dense_limit = limit;
        self
    }

    pub fn n(&self) -> usize {
        self.disorder.n
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn disorder(&self) -> &Disorder {
        &self.disorder
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        Ok(())
    }

    fn terms(&self) -> impl Iterator<Item = (&CouplingTensor, f64)> {
        self.disorder.tensors.iter().zip(self.scales.iter().copied())
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let n = self.n();
        Ok(self
            .terms()
            .map(|(t, c)| c * contract_line(&t.data, n, t.p, &[], x, None, 0)[0][0])
            .sum())
    }

    /// Euclidean gradient `dH/dx_k`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let n = self.n();
        let mut g = vec![0.0; n];
        for (t, c) in self.terms() {
            for a in 0..t.p {
                let part = &contract_line(&t.data, n, t.p, &[a], x, None, 0)[0];
                for (gk, pk) in g.iter_mut().zip(part) {
                    *gk += c * pk;
                }
            }
        }
        Ok(g)
    }

    /// Euclidean Hessian applied to `v`.
    pub fn hessian_vec(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gradient_line(x, v, 1)?.swap_remove(1))
    }

    /// Coefficients of `s -> grad H(x + s v)` up to `s^max_power`.
    ///
    /// Coefficient `k` equals `D^{k+1} H(x)[v, ..., v, .] / k!`; in particular
    /// coefficient 1 is the Hessian-vector product.
    pub fn gradient_line(&self, x: &[f64], v: &[f64], max_power: usize) -> Result<Vec<Vec<f64>>> {
        self.check_len(x)?;
        self.check_len(v)?;
        let n = self.n();
        let mut out = vec![vec![0.0; n]; max_power + 1];
        for (t, c) in self.terms() {
            for a in 0..t.p {
                let planes = contract_line(&t.data, n, t.p, &[a], x, Some(v), max_power);
                for (k, plane) in planes.iter().enumerate() {
                    for (o, pk) in out[k].iter_mut().zip(plane) {
                        *o += c * pk;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coefficients `c_0, ..., c_P` of the polynomial `s -> H(x + s v)`.
    pub fn line_polynomial(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.check_len(v)?;
        let n = self.n();
        let mut out = vec![0.0; self.mixture.max_degree() + 1];
        for (t, c) in self.terms() {
            let planes = contract_line(&t.data, n, t.p, &[], x, Some(v), t.p);
            for (k, plane) in planes.iter().enumerate() {
                out[k] += c * plane[0];
            }
        }
        Ok(out)
    }

    /// First three directional derivatives along `v` rescaled to unit
    /// normalized norm (`|v|_2 = 1`, i.e. Euclidean length `sqrt(N)`).
    pub fn directional_derivatives(&self, x: &[f64], v: &[f64]) -> Result<[f64; 3]> {
        let norm = geom::norm(v);
        if norm == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let u: Vec<f64> = v.iter().map(|vi| vi / norm).collect();
        let c = self.line_polynomial(x, &u)?;
        let coef = |k: usize| c.get(k).copied().unwrap_or(0.0);
        Ok([coef(1), 2.0 * coef(2), 6.0 * coef(3)])
    }

    pub fn dense_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.local_model(x)?.hessian)
    }

    /// Energy, gradient and Hessian from one pass over the couplings.
    ///
    /// For each pair of tensor axes the remaining axes are contracted with
    /// `x`; the gradient and energy then follow by contracting once more.
    pub fn local_model(&self, x: &[f64]) -> Result<LocalModel> {
        self.check_len(x)?;
        let n = self.n();
        if n > self.dense_limit {
            return Err(Error::DenseThresholdExceeded { dim: n, threshold: self.dense_limit });
        }
        let mut energy = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hessian = DMatrix::zeros(n, n);
        for (t, c) in self.terms() {
            if t.p == 1 {
                energy += c * dot(&t.data, x);
                for (g, d) in gradient.iter_mut().zip(&t.data) {
                    *g += c * d;
                }
                continue;
            }
            let mut axis_vec: Vec<Option<Vec<f64>>> = vec![None; t.p];
            for a in 0..t.p {
                for b in a + 1..t.p {
                    let m = contract_line(&t.data, n, t.p, &[a, b], x, None, 0).swap_remove(0);
                    for l in 0..n {
                        for k in 0..n {
                            hessian[(k, l)] += c * (m[k * n + l] + m[l * n + k]);
                        }
                    }
                    if axis_vec[a].is_none() {
                        axis_vec[a] = Some((0..n).map(|k| dot(&m[k * n..(k + 1) * n], x)).collect());
                    }
                    if axis_vec[b].is_none() {
                        let mut col = vec![0.0; n];
                        for k in 0..n {
                            let xk = x[k];
                            for (cl, mkl) in col.iter_mut().zip(&m[k * n..(k + 1) * n]) {
                                *cl += xk * mkl;
                            }
                        }
                        axis_vec[b] = Some(col);
                    }
                }
            }
            for v in axis_vec.iter().flatten() {
                for (g, vk) in gradient.iter_mut().zip(v) {
                    *g += c * vk;
                }
            }
            if let Some(v0) = &axis_vec[0] {
                energy += c * dot(v0, x);
            }
        }
        Ok(LocalModel { energy, gradient, hessian })
    }
}

/// Empirical check of `E[H(x) H(y)] = xi(<x, y>) / N` over independent disorders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariancePairReport {
    pub overlap: f64,
    pub expected: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: usize,
    pub n_seeds: usize,
    pub z_tolerance: f64,
    pub pairs: Vec<CovariancePairReport>,
    /// KS distance of `sqrt(N) H(x) / sqrt(xi(|x|^2))` from N(0, 1) at the first point.
    pub gaussian_ks: f64,
    pub gaussian_ks_critical: f64,
    pub pass: bool,
}

/// 1% critical value of the one-sample KS statistic (asymptotic).
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.628 / (samples as f64).sqrt()
}

/// `count` pairs `(x, y)` with `|x|_2 = |y|_2 = 1` and overlaps
/// `<x, y> = 1 - 2j / count`, `j = 0..count`, from Gaussian directions.
pub fn covariance_test_pairs(n: usize, count: usize, root_seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if n < 2 {
        return Err(Error::Precondition("pairs need n >= 2".into()));
    }
    (0..count)
        .map(|j| {
            let mut rng = seed::stream(root_seed, &[seed::TAG_SAMPLE, u64::MAX, j as u64]);
            let mut gauss = || -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
            let unit = |v: Vec<f64>| -> Vec<f64> {
                let s = geom::norm(&v);
                v.into_iter().map(|c| c / s).collect()
            };
            let x = unit(gauss());
            let mut z = gauss();
            let r = geom::inner(&z, &x);
            z.iter_mut().zip(&x).for_each(|(zi, xi)| *zi -= r * xi);
            let z = unit(z);
            let c = 1.0 - 2.0 * j as f64 / count as f64;
            let s = (1.0 - c * c).max(0.0).sqrt();
            let y = x.iter().zip(&z).map(|(a, b)| c * a + s * b).collect();
            Ok((x, y))
        })
        .collect()
}

pub fn covariance_check(
    m: &Mixture,
    n: usize,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n_seeds: usize,
    root_seed: u64,
    z_tolerance: f64,
) -> Result<CovarianceReport> {
    if pairs.is_empty() || n_seeds < 2 {
        return Err(Error::Precondition("need at least one pair and two seeds".into()));
    }
    for (x, y) in pairs {
        for v in [x, y] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
    }
    let energies: Vec<Result<Vec<(f64, f64)>>> = exec::map_indexed(n_seeds, |s| {
        let seed = seed::derive(root_seed, &[seed::TAG_SAMPLE, s as u64]);
        let h = Hamiltonian::sample(m.clone(), n, seed)?;
        pairs
            .iter()
            .map(|(x, y)| Ok((h.energy(x)?, h.energy(y)?)))
            .collect()
    });
    let energies = energies.into_iter().collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(pairs.len());
    for (j, (x, y)) in pairs.iter().enumerate() {
        // The process is centred, so the covariance is the mean product.
        let prods: Vec<f64> = energies.iter().map(|e| e[j].0 * e[j].1).collect();
        let (mean, se) = crate::stats::mean_and_std_error(&prods);
        let overlap = geom::inner(x, y);
        let expected = m.xi(overlap)? / n as f64;
        let z = if se > 0.0 { (mean - expected) / se } else { 0.0 };
        reports.push(CovariancePairReport {
            overlap,
            expected,
            empirical: mean,
            std_error: se,
            z_score: z,
            pass: z.abs() <= z_tolerance,
        });
    }

    let x0 = &pairs[0].0;
    let scale = (n as f64 / m.xi(geom::norm_sq(x0))?).sqrt();
    let standardized: Vec<f64> = energies.iter().map(|e| e[0].0 * scale).collect();
    let gaussian_ks = crate::stats::ks_statistic(standardized, crate::stats::standard_normal_cdf);
    let gaussian_ks_critical = ks_critical_1pct(n_seeds);
    let pass = reports.iter().all(|r| r.pass) && gaussian_ks < gaussian_ks_critical;
    Ok(CovarianceReport {
        n,
        n_seeds,
        z_tolerance,
        pairs: reports,
        gaussian_ks,
        gaussian_ks_critical,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn injected(n: usize, gammas: Vec<f64>, tensors: Vec<(usize, Vec<f64>)>) -> Hamiltonian {
        let m = Mixture::new(gammas).unwrap();
        let d = Disorder::from_tensors(
            n,
            tensors.into_iter().map(|(p, data)| CouplingTensor { p, data }).collect(),
        )
        .unwrap();
        Hamiltonian::new(m, d).unwrap()
    }

    fn random_point(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seed::stream(seed, &[]);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn hand_evaluated_energies() {
        let h = injected(1, vec![0.0, 1.0], vec![(2, vec![1.0])]);
        assert_eq!(h.energy(&[0.5]).unwrap(), 0.25);
        assert_eq!(h.gradient(&[0.5]).unwrap(), vec![1.0]);

        let h = injected(2, vec![0.0, 1.0], vec![(2, vec![1.0, 0.0, 0.0, 1.0])]);
        let e = h.energy(&[1.0, 1.0]).unwrap();
        assert!((e - 0.707_106_781_186_547_5).abs() < 1e-12);
    }

    #[test]
    fn zero_point_has_zero_energy_without_linear_term() {
        let h = Hamiltonian::sample(Mixture::new(vec![0.0, 1.0, 0.5]).unwrap(), 7, 3).unwrap();
        assert_eq!(h.energy(&[0.0; 7]).unwrap(), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = Mixture::new(vec![0.0, 1.0, 1.0]).unwrap();
        let a = Disorder::sample(&m, 9, 42).unwrap();
        let b = Disorder::sample(&m, 9, 42).unwrap();
        let c = Disorder::sample(&m, 9, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.tensors()[1].data, c.tensors()[1].data);
        let threaded = exec::with_threads(3, || Disorder::sample(&m, 9, 42).unwrap());
        assert_eq!(a, threaded);
    }

    #[test]
    fn sampled_entries_are_standard_normal() {
        let m = Mixture::pure(3).unwrap();
        let d = Disorder::sample(&m, 47, 11).unwrap();
        let data = &d.tensors()[0].data[..100_000];
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / data.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn budget_is_enforced() {
        let m = Mixture::pure(4).unwrap();
        assert!(matches!(
            Disorder::sample_with_budget(&m, 20, 0, 100_000),
            Err(Error::DegreeTooLarge { p: 4, .. })
        ));
        assert!(Disorder::sample(&m, 1, 0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = Hamiltonian::sample(Mixture::pure(2).unwrap(), 4, 0).unwrap();
        assert!(matches!(h.energy(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(h.gradient(&[0.0; 5]).is_err());
        assert!(h.hessian_vec(&[0.0; 4], &[0.0; 3]).is_err());
    }

    #[test]
    fn mismatched_support_is_rejected() {
        let d = Disorder::sample(&Mixture::pure(2).unwrap(), 4, 0).unwrap();
        assert!(Hamiltonian::new(Mixture::pure(3).unwrap(), d).is_err());
    }

    #[test]
    fn linear_model_structure() {
        let m = Mixture::new(vec![1.0, 0.0]).map(|_| ()).unwrap_err();
        assert!(matches!(m, Error::NotASpinGlass));
        // A linear term alongside a quadratic one: the linear part contributes
        // a constant gradient and nothing to the Hessian.
        let d = Disorder::sample(&Mixture::new(vec![1.0, 1.0]).unwrap(), 6, 5).unwrap();
        let lin = d.tensors()[0].clone();
        let only_quad = Disorder::from_tensors(6, vec![d.tensors()[1].clone()]).unwrap();
        let full = Hamiltonian::new(Mixture::new(vec![1.0, 1.0]).unwrap(), d).unwrap();
        let quad = Hamiltonian::new(Mixture::pure(2).unwrap(), only_quad).unwrap();
        let x = random_point(6, 1);
        let gf = full.gradient(&x).unwrap();
        let gq = quad.gradient(&x).unwrap();
        let c = 6f64.powf(-1.0);
        for k in 0..6 {
            assert!((gf[k] - gq[k] - c * lin.data[k]).abs() < 1e-14);
        }
        assert_eq!(full.dense_hessian(&x).unwrap(), quad.dense_hessian(&x).unwrap());
    }

    #[test]
    fn quadratic_hessian_is_constant() {
        let h = Hamiltonian::sample(Mixture::pure(2).unwrap(), 8, 9).unwrap();
        let v = random_point(8, 2);
        let a = h.hessian_vec(&random_point(8, 3), &v).unwrap();
        let b = h.hessian_vec(&random_point(8, 4), &v).unwrap();
        assert_eq!(a, b);
        assert!(h.hessian_vec(&v, &[0.0; 8]).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn local_model_matches_separate_evaluations() {
        let h = Hamiltonian::sample(Mixture::new(vec![0.3, 1.0, 0.8, 0.4]).unwrap(), 9, 17).unwrap();
        let x = random_point(9, 5);
        let lm = h.local_model(&x).unwrap();
        assert!((lm.energy - h.energy(&x).unwrap()).abs() < 1e-13);
        for (a, b) in lm.gradient.iter().zip(h.gradient(&x).unwrap()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((&lm.hessian - lm.hessian.transpose()).amax() < 1e-12);
    }

    #[test]
    fn dense_limit_is_enforced() {
        let h = Hamiltonian::sample(Mixture::pure(2).unwrap(), 10, 1).unwrap().with_dense_limit(5);
        assert!(matches!(
            h.dense_hessian(&[0.0; 10]),
            Err(Error::DenseThresholdExceeded { .. })
        ));
    }

    #[test]
    fn dump_round_trip() {
        let m = Mixture::new(vec![0.5, 1.0, 0.25]).unwrap();
        let d = Disorder::sample(&m, 5, 77).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PSPN");
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 + 3 * 4 + 8 + 8 * (5 + 25 + 125));
        let back = Disorder::read_from(&buf[..]).unwrap();
        assert_eq!(back, d);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Disorder::read_from(&bad[..]).is_err());
    }
}
