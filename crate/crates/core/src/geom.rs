//! Normalized geometry: `<x, y> = (1/N) sum_i x_i y_i` and `|x|_2^2 = <x, x>`.

use crate::tensor::dot;

pub fn inner(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / x.len() as f64
}

pub fn norm_sq(x: &[f64]) -> f64 {
    inner(x, x)
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// `|x - y|_2^2`.
pub fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_have_unit_norm() {
        assert_eq!(norm_sq(&[1.0, -1.0, 1.0, -1.0]), 1.0);
        assert_eq!(norm_sq(&[1.0, 0.5, -1.0, 0.0]), 0.5625);
        assert_eq!(dist_sq(&[1.0, 1.0], &[-1.0, 1.0]), 2.0);
    }
}
