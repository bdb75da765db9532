//! The mixture function `xi(t) = sum_p gamma_p^2 t^p` and scalar functions of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Largest degree accepted unless a caller raises it explicitly.
pub const DEFAULT_MAX_DEGREE: usize = 8;

/// Absolute tolerance of the gain integrals.
pub const QUADRATURE_TOL: f64 = 1e-10;

const DOMAIN_SLACK: f64 = 1e-12;

/// One `{p, gamma}` record of the serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTerm {
    pub p: usize,
    pub gamma: f64,
}

/// A finitely supported mixture `gamma_1, ..., gamma_P`.
///
/// Serialized as an array of `{p, gamma}` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MixtureTerm>", into = "Vec<MixtureTerm>")]
pub struct Mixture {
    /// `gammas[p - 1]` is `gamma_p`.
    gammas: Vec<f64>,
}

/// Checks the mixture invariants on raw coefficients (`gammas[p - 1] = gamma_p`).
pub fn validate(gammas: &[f64]) -> Result<()> {
    for (i, &g) in gammas.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::InvalidMixture(format!("gamma_{} is not finite", i + 1)));
        }
        if g < 0.0 {
            return Err(Error::NegativeCoefficient { p: i + 1, gamma: g });
        }
    }
    if !gammas.iter().skip(1).any(|&g| g > 0.0) {
        return Err(Error::NotASpinGlass);
    }
    Ok(())
}

impl Mixture {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        Self::with_max_degree(gammas, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(mut gammas: Vec<f64>, max_degree: usize) -> Result<Self> {
        validate(&gammas)?;
        while gammas.last() == Some(&0.0) {
            gammas.pop();
        }
        if gammas.len() > max_degree {
            return Err(Error::InvalidMixture(format!(
                "degree {} exceeds the cap {max_degree}",
                gammas.len()
            )));
        }
        Ok(Self { gammas })
    }

    /// The pure `p`-spin model with `gamma_p = 1`.
    pub fn pure(p: usize) -> Result<Self> {
        let mut g = vec![0.0; p];
        if p >= 1 {
            g[p - 1] = 1.0;
        }
        Self::new(g)
    }

    pub fn from_terms(terms: &[MixtureTerm]) -> Result<Self> {
        let max_p = terms.iter().map(|t| t.p).max().unwrap_or(0);
        let mut g = vec![0.0; max_p];
        for t in terms {
            if t.p == 0 {
                return Err(Error::InvalidMixture("degree p must be >= 1".into()));
            }
            if g[t.p - 1] != 0.0 {
                return Err(Error::InvalidMixture(format!("degree {} listed twice", t.p)));
            }
            g[t.p - 1] = t.gamma;
        }
        Self::new(g)
    }

    pub fn terms(&self) -> Vec<MixtureTerm> {
        self.support().map(|(p, gamma)| MixtureTerm { p, gamma }).collect()
    }

    pub fn gamma(&self, p: usize) -> f64 {
        if p == 0 {
            0.0
        } else {
            self.gammas.get(p - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn max_degree(&self) -> usize {
        self.gammas.len()
    }

    /// `(p, gamma_p)` for every `gamma_p > 0`, ascending in `p`.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.gammas
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0.0)
            .map(|(i, &g)| (i + 1, g))
    }

    fn check_domain(what: &'static str, t: f64, lo: f64, hi: f64, domain: &'static str) -> Result<f64> {
        if !(t >= lo - DOMAIN_SLACK && t <= hi + DOMAIN_SLACK) {
            return Err(Error::Domain { what, value: t, domain });
        }
        Ok(t.clamp(lo, hi))
    }

    pub fn xi(&self, t: f64) -> Result<f64> {
        let t = Self::check_domain("t", t, -1.0, 1.0, "[-1, 1]")?;
        Ok(self.support().map(|(p, g)| g * g * t.powi(p as i32)).sum())
    }

    pub fn xi_prime(&self, t: f64) -> Result<f64> {
        let t = Self::check_domain("t", t, -1.0, 1.0, "[-1, 1]")?;
        Ok(self
            .support()
            .map(|(p, g)| p as f64 * g * g * t.powi(p as i32 - 1))
            .sum())
    }

    pub fn xi_second(&self, t: f64) -> Result<f64> {
        let t = Self::check_domain("t", t, -1.0, 1.0, "[-1, 1]")?;
        Ok(self.xi_second_raw(t))
    }

    fn xi_second_raw(&self, t: f64) -> f64 {
        self.support()
            .filter(|&(p, _)| p >= 2)
            .map(|(p, g)| (p * (p - 1)) as f64 * g * g * t.powi(p as i32 - 2))
            .sum()
    }

    /// `zeta(t) = sqrt(xi''(t))` on `[0, 1]`.
    pub fn zeta(&self, t: f64) -> Result<f64> {
        let t = Self::check_domain("t", t, 0.0, 1.0, "[0, 1]")?;
        Ok(self.xi_second_raw(t).sqrt())
    }

    /// `int_a^b zeta(t) sqrt(1 - t) dt`.
    ///
    /// The lower half is integrated in `s = sqrt(t)` (zeta may behave like a
    /// power of `sqrt(t)` at 0) and the upper half in `u = sqrt(1 - t)`, which
    /// removes the square-root endpoint behaviour at `t = 1`.
    pub fn gain_integral_cube(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = Self::check_limits(a, b)?;
        const SPLIT: f64 = 0.5;
        let mut total = 0.0;
        if a < SPLIT {
            let hi = b.min(SPLIT);
            total += adaptive_simpson(
                |s| {
                    let t = s * s;
                    2.0 * s * self.xi_second_raw(t).sqrt() * (1.0 - t).sqrt()
                },
                a.sqrt(),
                hi.sqrt(),
                0.5 * QUADRATURE_TOL,
            );
        }
        if b > SPLIT {
            let lo = a.max(SPLIT);
            total += adaptive_simpson(
                |u| 2.0 * u * u * self.xi_second_raw(1.0 - u * u).sqrt(),
                (1.0 - b).sqrt(),
                (1.0 - lo).sqrt(),
                0.5 * QUADRATURE_TOL,
            );
        }
        Ok(total)
    }

    /// `sqrt(eps) * int_a^b zeta(t) dt`.
    pub fn gain_integral_polytope(&self, a: f64, b: f64, eps: f64) -> Result<f64> {
        let (a, b) = Self::check_limits(a, b)?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain { what: "eps", value: eps, domain: "(0, 1]" });
        }
        let integral = adaptive_simpson(
            |s| 2.0 * s * self.xi_second_raw(s * s).sqrt(),
            a.sqrt(),
            b.sqrt(),
            QUADRATURE_TOL,
        );
        Ok(eps.sqrt() * integral)
    }

    fn check_limits(a: f64, b: f64) -> Result<(f64, f64)> {
        let a = Self::check_domain("a", a, 0.0, 1.0, "[0, 1]")?;
        let b = Self::check_domain("b", b, 0.0, 1.0, "[0, 1]")?;
        if a > b {
            return Err(Error::Domain { what: "a", value: a, domain: "a <= b" });
        }
        Ok((a, b))
    }
}

impl TryFrom<Vec<MixtureTerm>> for Mixture {
    type Error = Error;

    fn try_from(terms: Vec<MixtureTerm>) -> Result<Self> {
        Self::from_terms(&terms)
    }
}

impl From<Mixture> for Vec<MixtureTerm> {
    fn from(m: Mixture) -> Self {
        m.terms()
    }
}
