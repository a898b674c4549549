//! Grids, nodal fields, discrete calculus and the elliptic solvers shared by
//! every other module.

mod calculus;
mod field;
mod grid;
pub mod io;
pub mod linalg;
mod poisson;
pub mod stencil;

pub use calculus::{
    divergence, gradient, h1_seminorm, inner, inner_vector, integrate, laplacian5, mean,
    norm_l2, norm_l4, norm_l4_vector, partial, partial_transpose_add,
};
pub use field::{BoundaryTrace, ScalarField, VectorField};
pub use grid::Grid;
pub use poisson::{
    poisson_dirichlet, poisson_dirichlet_dual, poisson_neumann, poisson_neumann_from,
    subtract_mean,
};
