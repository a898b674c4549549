use super::linalg::{conjugate_gradient, LinearOperator};
use super::stencil::{natural_stiffness_apply, DirichletLaplacian};
use super::{Grid, ScalarField};
use crate::error::Result;
use crate::tolerances::{CG_ITER_PER_NODE, CG_REL_TOL};

/// Solves `-Δu = rhs` with `u = 0` on the boundary.
pub fn poisson_dirichlet(rhs: &ScalarField) -> Result<ScalarField> {
    let grid = rhs.grid();
    let h2 = grid.h() * grid.h();
    let b: Vec<f64> = rhs.values().iter().map(|v| h2 * v).collect();
    poisson_dirichlet_dual(grid, &b)
}

/// Solves `K u = b` with the five-point stiffness `K` and an assembled dual
/// right-hand side `b` (entries on boundary nodes are ignored).
pub fn poisson_dirichlet_dual(grid: Grid, b: &[f64]) -> Result<ScalarField> {
    let op = DirichletLaplacian::full(grid);
    let (u, _) = op.solve(b)?;
    Ok(ScalarField::from_raw(grid, u))
}

struct Natural(Grid);

impl LinearOperator for Natural {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        natural_stiffness_apply(self.0, x, y)
    }
}

/// Solves `Δf = rhs` with homogeneous Neumann data; the weighted mean of
/// `rhs` is removed first and the result has zero weighted mean.
pub fn poisson_neumann(rhs: &ScalarField) -> Result<ScalarField> {
    poisson_neumann_from(rhs, &ScalarField::zeros(rhs.grid()))
}

/// As [`poisson_neumann`], starting the iteration from `initial`.
pub fn poisson_neumann_from(rhs: &ScalarField, initial: &ScalarField) -> Result<ScalarField> {
    let grid = rhs.grid();
    let w = grid.weights();
    let m = super::calculus::mean(rhs);
    let b: Vec<f64> = rhs
        .values()
        .iter()
        .zip(&w)
        .map(|(r, wk)| -wk * (r - m))
        .collect();
    let mut x = initial.values().to_vec();
    conjugate_gradient(
        &Natural(grid),
        &b,
        &mut x,
        None,
        CG_REL_TOL,
        CG_ITER_PER_NODE * grid.n(),
    )?;
    let mut f = ScalarField::from_raw(grid, x);
    subtract_mean(&mut f);
    Ok(f)
}

pub fn subtract_mean(f: &mut ScalarField) {
    let m = super::calculus::mean(f);
    f.values_mut().iter_mut().for_each(|v| *v -= m);
}
