//! Contraction kernels for dense row-major order-`p` tensors of side `n`.
//!
//! Everything the Hamiltonian needs (energy, gradient, Hessian, Hessian-vector
//! products and the restriction of `H` to a line) is a contraction of the
//! coupling tensor against `x` or against the affine line `x + s v`.

use crate::exec;

/// Work below this many multiply-adds stays on the calling thread.
const PAR_MIN_WORK: usize = 1 << 16;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contracts `axis` of a tensor with shape `[n; order]` against `x`.
pub(crate) fn contract_axis(src: &[f64], n: usize, order: usize, axis: usize, x: &[f64]) -> Vec<f64> {
    debug_assert!(axis < order);
    debug_assert_eq!(src.len(), n.pow(order as u32));
    let outer = n.pow(axis as u32);
    let inner = n.pow((order - axis - 1) as u32);
    let mut out = vec![0.0; outer * inner];
    let parallel = src.len() >= PAR_MIN_WORK && exec::current_num_threads() > 1;

    if inner == 1 {
        let rows = |offset: usize, chunk: &mut [f64]| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let r = offset + k;
                *o = dot(&src[r * n..(r + 1) * n], x);
            }
        };
        if parallel {
            let chunk = (outer / (4 * exec::current_num_threads())).max(16);
            exec::for_each_chunk_mut(&mut out, chunk, |ci, c| rows(ci * chunk, c));
        } else {
            rows(0, &mut out);
        }
    } else if outer > 1 {
        let blocks = |first: usize, chunk: &mut [f64]| {
            for (b, dst) in chunk.chunks_mut(inner).enumerate() {
                let o = first + b;
                let base = o * n * inner;
                for (j, &xj) in x.iter().enumerate() {
                    let row = &src[base + j * inner..base + (j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(row) {
                        *d += xj * s;
                    }
                }
            }
        };
        if parallel {
            let per = (outer / (4 * exec::current_num_threads())).max(1);
            exec::for_each_chunk_mut(&mut out, per * inner, |ci, c| blocks(ci * per, c));
        } else {
            blocks(0, &mut out);
        }
    } else {
        let cols = |start: usize, dst: &mut [f64]| {
            let len = dst.len();
            for (j, &xj) in x.iter().enumerate() {
                let row = &src[j * inner + start..j * inner + start + len];
                for (d, s) in dst.iter_mut().zip(row) {
                    *d += xj * s;
                }
            }
        };
        if parallel {
            let chunk = (inner / (4 * exec::current_num_threads())).max(1024);
            exec::for_each_chunk_mut(&mut out, chunk, |ci, c| cols(ci * chunk, c));
        } else {
            cols(0, &mut out);
        }
    }
    out
}

/// Contracts every axis not listed in `keep` against the line `base + s dir`.
///
/// Returns the coefficient tensors of `s^0, s^1, ..., s^k` (with `k` capped
/// at `max_power`), each of shape `[n; keep.len()]` with the kept axes in
/// ascending order. With `dir == None` only the `s^0` plane is produced.
pub(crate) fn contract_line(
    tensor: &[f64],
    n: usize,
    order: usize,
    keep: &[usize],
    base: &[f64],
    dir: Option<&[f64]>,
    max_power: usize,
) -> Vec<Vec<f64>> {
    let mut planes: Vec<Vec<f64>> = Vec::new();
    let mut current_order = order;
    let mut first = true;
    for axis in (0..order).rev() {
        if keep.contains(&axis) {
            continue;
        }
        // Axes are contracted from the back, so `axis` is still at its
        // original position among the remaining axes.
        let src_planes: Vec<&[f64]> = if first {
            vec![tensor]
        } else {
            planes.iter().map(Vec::as_slice).collect()
        };
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(src_planes.len() + 1);
        for (power, plane) in src_planes.iter().enumerate() {
            let with_base = contract_axis(plane, n, current_order, axis, base);
            add_plane(&mut next, power, with_base);
            if let Some(d) = dir {
                if power < max_power {
                    let with_dir = contract_axis(plane, n, current_order, axis, d);
                    add_plane(&mut next, power + 1, with_dir);
                }
            }
        }
        planes = next;
        current_order -= 1;
        first = false;
    }
    if first {
        planes.push(tensor.to_vec());
    }
    planes
}

fn add_plane(planes: &mut Vec<Vec<f64>>, power: usize, plane: Vec<f64>) {
    if planes.len() == power {
        planes.push(plane);
    } else {
        for (a, b) in planes[power].iter_mut().zip(&plane) {
            *a += b;
        }
    }
}
