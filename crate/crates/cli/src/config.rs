//! Experiment configuration: one JSON document, with a few fields
//! overridable from the command line.

use std::path::{Path, PathBuf};

use pspin_core::ascent::DEFAULT_CLAMP_TOL;
use pspin_core::polytope::{PolytopeH, DEFAULT_ACT_TOL};
use pspin_core::starts::StartDistribution;
use pspin_core::Mixture;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mixture: Mixture,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub ascent: Option<AscentSection>,
    #[serde(default)]
    pub polytope: Option<PolytopeSection>,
    #[serde(default)]
    pub goe: Option<GoeSection>,
    #[serde(default)]
    pub covariance: Option<CovarianceSection>,
    #[serde(default)]
    pub estimate_c: Option<EstimateCSection>,
    #[serde(default)]
    pub goodness: Option<GoodnessSection>,
}

/// Either a numeric bound or the string `"estimate"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CBound {
    Value(f64),
    Keyword(EstimateKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKeyword {
    Estimate,
}

fn default_eta() -> f64 {
    0.05
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_c_samples() -> usize {
    200
}
fn default_refine_iters() -> usize {
    3
}
fn default_clamp_tol() -> f64 {
    DEFAULT_CLAMP_TOL
}
fn default_act_tol() -> f64 {
    DEFAULT_ACT_TOL
}
fn default_one() -> f64 {
    1.0
}
fn default_z_tol() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscentSection {
    pub eps: f64,
    pub delta: f64,
    pub c_bound: CBound,
    #[serde(default)]
    pub step_cap: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    pub n_trajectories: usize,
    #[serde(default = "origin")]
    pub start: StartDistribution,
    /// JSON array of start points; overrides `start`.
    #[serde(default)]
    pub start_file: Option<PathBuf>,
    /// Slack in the verdict `gain >= integral - eta`.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Fraction of trajectories that must pass.
    #[serde(default = "default_one")]
    pub min_pass_fraction: f64,
    #[serde(default = "default_c_samples")]
    pub c_samples: usize,
    #[serde(default)]
    pub line_search: bool,
    #[serde(default = "default_clamp_tol")]
    pub clamp_tol: f64,
}

fn origin() -> StartDistribution {
    StartDistribution::Origin
}

fn ray_start() -> StartDistribution {
    StartDistribution::RayFraction { lo: 0.4, hi: 0.6 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Cube { n: usize },
    Simplex { n: usize },
    ProductOfSimplices { k: usize, d: usize },
    CrossPolytope { n: usize },
}

impl Generator {
    pub fn build(&self) -> pspin_core::Result<PolytopeH> {
        match *self {
            Self::Cube { n } => PolytopeH::cube(n),
            Self::Simplex { n } => PolytopeH::simplex(n),
            Self::ProductOfSimplices { k, d } => PolytopeH::product_of_simplices(k, d),
            Self::CrossPolytope { n } => PolytopeH::cross_polytope(n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSection {
    #[serde(default)]
    pub generator: Option<Generator>,
    /// Polytope JSON file `{n, rows, b}`; exclusive with `generator`.
    #[serde(default)]
    pub file: Option<PathBuf>,
    pub eps: f64,
    pub delta: f64,
    pub c_bound: CBound,
    #[serde(default)]
    pub step_cap: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    pub n_trajectories: usize,
    #[serde(default = "ray_start")]
    pub start: StartDistribution,
    #[serde(default)]
    pub start_file: Option<PathBuf>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Reported against `|x^m - x^0|_2^2`; does not affect the verdict.
    #[serde(default)]
    pub eps_prime: Option<f64>,
    #[serde(default = "default_one")]
    pub min_pass_fraction: f64,
    #[serde(default = "default_c_samples")]
    pub c_samples: usize,
    #[serde(default)]
    pub line_search: bool,
    #[serde(default = "default_act_tol")]
    pub act_tol: f64,
}

impl PolytopeSection {
    pub fn load(&self) -> Result<PolytopeH, CliError> {
        match (&self.generator, &self.file) {
            (Some(g), None) => Ok(g.build()?),
            (None, Some(path)) => Ok(PolytopeH::load(path)?),
            _ => Err(CliError::Config("polytope needs exactly one of `generator` and `file`".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoeSection {
    #[serde(default)]
    pub tail: Option<TailCheck>,
    #[serde(default)]
    pub semicircle: Option<SemicircleCheck>,
    #[serde(default)]
    pub restricted: Option<RestrictedCheck>,
}

/// Frequency of `lambda_k >= 2 - delta` in `GOE(d)`, per `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCheck {
    pub d: usize,
    pub ks: Vec<usize>,
    pub delta: f64,
    pub n_samples: usize,
    /// Required frequency per entry of `ks`.
    pub min_freq: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemicircleCheck {
    pub d: usize,
    pub n_samples: usize,
    pub max_ks: f64,
    /// Also write the pooled eigenvalues to `goe_spectrum.csv`.
    #[serde(default)]
    pub write_spectrum: bool,
}

/// Restricted-Hessian statistics at a random sign point with `|x|_2^2 = x_norm_sq`
/// on nested random subsets of the given sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictedCheck {
    pub x_norm_sq: f64,
    pub subset_sizes: Vec<usize>,
    pub n_samples: usize,
    #[serde(default = "default_z_tol")]
    pub z_tol: f64,
    #[serde(default = "lambda_rel_tol")]
    pub lambda_rel_tol: f64,
    /// Smallest subspace dimension at which the eigenvalue mean is checked.
    #[serde(default = "lambda_min_d")]
    pub lambda_min_d: usize,
}

fn lambda_rel_tol() -> f64 {
    0.1
}
fn lambda_min_d() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSection {
    pub n_seeds: usize,
    /// Explicit `[x, x']` pairs; random pairs are drawn when absent.
    #[serde(default)]
    pub pairs: Option<Vec<[Vec<f64>; 2]>>,
    #[serde(default = "six")]
    pub n_random_pairs: usize,
    #[serde(default = "default_z_tol")]
    pub z_tol: f64,
}

fn six() -> usize {
    6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateCSection {
    pub n_samples: usize,
    #[serde(default = "default_refine_iters")]
    pub refine_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessSection {
    /// Explicit point; otherwise drawn from `start`.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default = "origin")]
    pub start: StartDistribution,
    pub eps: f64,
    pub delta: f64,
    pub n_subsets: usize,
    #[serde(default = "default_min_pass")]
    pub min_pass_fraction: f64,
}

fn default_min_pass() -> f64 {
    0.95
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Config("n must be positive".into()));
        }
        let files = self
            .ascent
            .iter()
            .filter_map(|a| a.start_file.as_ref())
            .chain(self.polytope.iter().filter_map(|p| p.start_file.as_ref()))
            .chain(self.polytope.iter().filter_map(|p| p.file.as_ref()));
        for f in files {
            if !f.exists() {
                return Err(CliError::Config(format!("file {} does not exist", f.display())));
            }
        }
        Ok(())
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref().ok_or_else(|| CliError::Config(format!("config has no `{name}` section")))
    }
}

pub fn read_points(path: &Path, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let points: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(bad) = points.iter().find(|p| p.len() != n) {
        return Err(CliError::Config(format!(
            "{}: point of length {} in dimension {n}",
            path.display(),
            bad.len()
        )));
    }
    Ok(points)
}
