//! Initial points for ascent trajectories.
//!
//! Start `i` of a batch is drawn from its own stream keyed by `(seed, i)`, so a
//! batch does not depend on how many trajectories run alongside it.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;
use crate::polytope::PolytopeH;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartDistribution {
    Origin,
    /// Independent uniform coordinates on `[-a, a]`; `|x|_2^2 ≈ a^2 / 3`.
    UniformBox { a: f64 },
    /// Random signs with magnitudes `sqrt(q) (1 + jitter U)`, `U` uniform on
    /// `[-1, 1]`, rescaled to `|x|_2^2 = q` for `q` uniform on
    /// `[norm_sq_min, norm_sq_max]`.
    Shell { norm_sq_min: f64, norm_sq_max: f64, jitter: f64 },
    /// `f t_max d` for a Gaussian direction `d`, the exit time `t_max` of the
    /// ray from the origin, and `f` uniform on `[lo, hi]`. Polytopes only.
    RayFraction { lo: f64, hi: f64 },
}

fn trajectory_rng(seed_value: u64, index: usize) -> seed::StreamRng {
    seed::stream(seed_value, &[seed::TAG_TRAJECTORY, index as u64])
}

impl StartDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Origin => Ok(()),
            Self::UniformBox { a } => {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::Domain { what: "a", value: a, domain: "[0, 1]" });
                }
                Ok(())
            }
            Self::Shell { norm_sq_min, norm_sq_max, jitter } => {
                if !(0.0 <= norm_sq_min && norm_sq_min <= norm_sq_max && norm_sq_max < 1.0) {
                    return Err(Error::Precondition(format!(
                        "shell needs 0 <= norm_sq_min <= norm_sq_max < 1, got [{norm_sq_min}, {norm_sq_max}]"
                    )));
                }
                if !(0.0..1.0).contains(&jitter) {
                    return Err(Error::Domain { what: "jitter", value: jitter, domain: "[0, 1)" });
                }
                Ok(())
            }
            Self::RayFraction { lo, hi } => {
                if !(0.0 <= lo && lo <= hi && hi < 1.0) {
                    return Err(Error::Precondition(format!(
                        "ray fraction needs 0 <= lo <= hi < 1, got [{lo}, {hi}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Start `index` inside `[-1, 1]^n`.
    pub fn sample_cube(&self, n: usize, seed_value: u64, index: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = trajectory_rng(seed_value, index);
        match *self {
            Self::Origin => Ok(vec![0.0; n]),
            Self::UniformBox { a } => Ok((0..n).map(|_| rng.random_range(-1.0..=1.0) * a).collect()),
            Self::Shell { norm_sq_min, norm_sq_max, jitter } => {
                let q = if norm_sq_max > norm_sq_min {
                    rng.random_range(norm_sq_min..norm_sq_max)
                } else {
                    norm_sq_min
                };
                let mut x: Vec<f64> = (0..n)
                    .map(|_| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * (1.0 + jitter * rng.random_range(-1.0..=1.0))
                    })
                    .collect();
                let scale = (q / geom::norm_sq(&x)).sqrt();
                x.iter_mut().for_each(|v| *v *= scale);
                if let Some(big) = x.iter().position(|v| v.abs() > 1.0) {
                    return Err(Error::PointOutside { constraint: big, violation: x[big].abs() - 1.0 });
                }
                Ok(x)
            }
            Self::RayFraction { .. } => Err(Error::Precondition(
                "ray_fraction starts need a polytope".into(),
            )),
        }
    }

    /// Start `index` inside `p`. Box and shell starts must land inside `p`.
    pub fn sample_polytope(&self, p: &PolytopeH, seed_value: u64, index: usize) -> Result<Vec<f64>> {
        let n = p.n();
        let x = match *self {
            Self::RayFraction { lo, hi } => {
                self.validate()?;
                let mut rng = trajectory_rng(seed_value, index);
                let d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let f = if hi > lo { rng.random_range(lo..hi) } else { lo };
                let t = p.ray_clip(&vec![0.0; n], &d)?;
                d.iter().map(|di| f * t * di).collect()
            }
            _ => self.sample_cube(n, seed_value, index)?,
        };
        if let Some((j, violation)) = p.worst_violation(&x) {
            if violation > 0.0 {
                return Err(Error::PointOutside { constraint: j, violation });
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_hits_the_requested_norm() {
        let d = StartDistribution::Shell { norm_sq_min: 0.45, norm_sq_max: 0.55, jitter: 0.2 };
        for i in 0..20 {
            let x = d.sample_cube(200, 7, i).unwrap();
            let q = geom::norm_sq(&x);
            assert!((0.45..=0.55).contains(&q), "{q}");
            assert!(x.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn starts_are_keyed_by_index() {
        let d = StartDistribution::UniformBox { a: 0.5 };
        assert_eq!(d.sample_cube(10, 3, 4).unwrap(), d.sample_cube(10, 3, 4).unwrap());
        assert_ne!(d.sample_cube(10, 3, 4).unwrap(), d.sample_cube(10, 3, 5).unwrap());
        assert_eq!(StartDistribution::Origin.sample_cube(3, 0, 0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(StartDistribution::UniformBox { a: 1.5 }.sample_cube(4, 0, 0).is_err());
        assert!(StartDistribution::RayFraction { lo: 0.2, hi: 0.5 }.sample_cube(4, 0, 0).is_err());
        let s = StartDistribution::Shell { norm_sq_min: 0.6, norm_sq_max: 0.5, jitter: 0.0 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn ray_fraction_starts_are_interior() {
        let p = PolytopeH::product_of_simplices(10, 2).unwrap();
        let d = StartDistribution::RayFraction { lo: 0.3, hi: 0.6 };
        for i in 0..10 {
            let x = d.sample_polytope(&p, 1, i).unwrap();
            assert!(p.contains(&x, 0.0));
            assert!(p.active_set(&x, 1e-8).unwrap().is_empty());
        }
    }
}
