//! Mixed p-spin glass Hamiltonians on the cube and on polytopes, the
//! restricted-Hessian eigenvector ascent that drives interior points to
//! (near-)corners, and Monte Carlo checks of the random-matrix laws behind it.
//!
//! All geometry uses the normalized inner product `<x, y> = (1/N) sum x_i y_i`,
//! so `|x|_2 = 1` at every corner of `[-1, 1]^N`.

pub mod ascent;
pub mod error;
pub mod exec;
pub mod geom;
pub mod goe;
pub mod hamiltonian;
pub mod mixture;
pub mod polytope;
pub mod quadrature;
pub mod seed;
pub mod starts;
pub mod stats;
pub mod subspace;
mod tensor;

pub use error::{Error, Result};
pub use hamiltonian::{Disorder, Hamiltonian};
pub use mixture::{Mixture, MixtureTerm};
