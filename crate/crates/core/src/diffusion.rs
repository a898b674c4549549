//! Diffuse optical forward model: `-Δφ + a φ = 0` in the unit square with
//! the Robin condition `l ∂νφ + φ = g` (Dirichlet when `l = 0`), its
//! linearization in `a` and the adjoint solve.

use crate::error::{Error, Result};
use crate::fields::linalg::{conjugate_gradient, BandCholesky, CgReport, LinearOperator, Preconditioner};
use crate::fields::stencil::{natural_stiffness_apply, natural_stiffness_entries};
use crate::fields::{BoundaryTrace, Grid, ScalarField};
use crate::tolerances::{CG_ITER_PER_NODE, CG_REL_TOL};

/// Symmetric system matrix `K + diag(ω a) + (1/l) diag(β)` where `K` is the
/// natural five-point stiffness, `ω` the trapezoid weights and `β = h` on
/// boundary nodes. With `l = 0` boundary rows become identity rows and the
/// boundary columns are eliminated.
#[derive(Debug, Clone)]
pub struct RobinOperator {
    grid: Grid,
    l: f64,
    mass: Vec<f64>,
    boundary: Vec<bool>,
}

impl RobinOperator {
    pub fn new(a: &ScalarField, l: f64) -> Result<Self> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::validation(format!("Robin length must be >= 0, got {l}")));
        }
        if let Some(k) = a.values().iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::validation(format!(
                "absorption must be non-negative, got {} at node {k}",
                a.values()[k]
            )));
        }
        let grid = a.grid();
        let w = grid.weights();
        let mass = a.values().iter().zip(&w).map(|(a, w)| a * w).collect();
        let boundary = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                grid.is_boundary(i, j)
            })
            .collect();
        Ok(RobinOperator {
            grid,
            l,
            mass,
            boundary,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    fn dirichlet(&self) -> bool {
        self.l == 0.0
    }

    fn band_entry(&self, k: usize, d: usize) -> f64 {
        let n = self.grid.n();
        if self.dirichlet() {
            if self.boundary[k] {
                return if d == 0 { 1.0 } else { 0.0 };
            }
            return match d {
                0 => 4.0 + self.mass[k],
                1 if !self.boundary[k - 1] => -1.0,
                dd if dd == n && !self.boundary[k - n] => -1.0,
                _ => 0.0,
            };
        }
        let (diag, left, down) = natural_stiffness_entries(self.grid, k);
        match d {
            0 => {
                let robin = if self.boundary[k] {
                    self.grid.h() / self.l
                } else {
                    0.0
                };
                diag + self.mass[k] + robin
            }
            1 => left,
            dd if dd == n => down,
            _ => 0.0,
        }
    }

    pub fn factorize(&self) -> Result<BandCholesky> {
        BandCholesky::factor(self.grid.len(), self.grid.n(), |k, d| self.band_entry(k, d))
    }

    /// Right-hand side for boundary data `g`.
    pub fn boundary_rhs(&self, g: &BoundaryTrace) -> Vec<f64> {
        let grid = self.grid;
        let n = grid.n();
        let mut b = vec![0.0; grid.len()];
        let nodes = grid.boundary_nodes();
        if self.dirichlet() {
            for ((i, j), &gv) in nodes.iter().zip(g.values()) {
                b[grid.idx(*i, *j)] = gv;
            }
            // move known boundary values to the interior rows
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let k = grid.idx(i, j);
                    for nb in [k - 1, k + 1, k - n, k + n] {
                        if self.boundary[nb] {
                            b[k] += b[nb];
                        }
                    }
                }
            }
        } else {
            let c = grid.h() / self.l;
            for ((i, j), &gv) in nodes.iter().zip(g.values()) {
                b[grid.idx(*i, *j)] = c * gv;
            }
        }
        b
    }

    /// Dual vector `ω ⊙ s` of a volume source; zero on boundary rows in the
    /// Dirichlet case.
    pub fn source_rhs(&self, s: &[f64]) -> Vec<f64> {
        let w = self.grid.weights();
        s.iter()
            .zip(&w)
            .zip(&self.boundary)
            .map(|((sv, wv), &bd)| if bd && self.dirichlet() { 0.0 } else { sv * wv })
            .collect()
    }
}

impl LinearOperator for RobinOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let grid = self.grid;
        let n = grid.n();
        if self.dirichlet() {
            for k in 0..grid.len() {
                if self.boundary[k] {
                    y[k] = x[k];
                    continue;
                }
                let mut s = (4.0 + self.mass[k]) * x[k];
                for nb in [k - 1, k + 1, k - n, k + n] {
                    if !self.boundary[nb] {
                        s -= x[nb];
                    }
                }
                y[k] = s;
            }
            return;
        }
        natural_stiffness_apply(grid, x, y);
        let c = grid.h() / self.l;
        for k in 0..grid.len() {
            y[k] += self.mass[k] * x[k];
            if self.boundary[k] {
                y[k] += c * x[k];
            }
        }
    }
}

/// The operator plus a sparse diagonal update `diag(ω δa)`.
struct Perturbed<'a> {
    base: &'a RobinOperator,
    extra: &'a [(usize, f64)],
}

impl LinearOperator for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        for &(k, d) in self.extra {
            y[k] += d * x[k];
        }
    }
}

/// Result of a forward solve.
#[derive(Debug, Clone)]
pub struct OpticalSolution {
    pub phi: ScalarField,
    /// Outward normal derivative on the boundary.
    pub flux: BoundaryTrace,
    /// Minimum and maximum of `phi` over the square.
    pub lambda: f64,
    pub big_lambda: f64,
    pub report: CgReport,
}

impl OpticalSolution {
    /// Minimum of `phi` over masked nodes.
    pub fn min_over(&self, mask: &[bool]) -> f64 {
        self.phi
            .values()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(f64::INFINITY, |acc, (v, _)| acc.min(*v))
    }
}

/// Factorized forward operator for one absorption coefficient.
#[derive(Debug, Clone)]
pub struct DiffusionSolver {
    op: RobinOperator,
    factor: BandCholesky,
}

impl DiffusionSolver {
    pub fn new(a: &ScalarField, l: f64) -> Result<Self> {
        let op = RobinOperator::new(a, l)?;
        let factor = op.factorize()?;
        Ok(DiffusionSolver { op, factor })
    }

    pub fn grid(&self) -> Grid {
        self.op.grid
    }

    pub fn l(&self) -> f64 {
        self.op.l
    }

    pub fn operator(&self) -> &RobinOperator {
        &self.op
    }

    fn max_iter(&self) -> usize {
        CG_ITER_PER_NODE * self.grid().n()
    }

    /// Solves `A x = b` for an assembled right-hand side.
    pub fn solve_dual(&self, b: &[f64]) -> Result<(Vec<f64>, CgReport)> {
        let mut x = b.to_vec();
        self.factor.solve_in_place(&mut x);
        let report = conjugate_gradient(
            &self.op,
            b,
            &mut x,
            Some(&self.factor as &dyn Preconditioner),
            CG_REL_TOL,
            self.max_iter(),
        )?;
        Ok((x, report))
    }

    pub fn solve_t(&self, g: &BoundaryTrace) -> Result<OpticalSolution> {
        let b = self.op.boundary_rhs(g);
        let (x, report) = self.solve_dual(&b)?;
        let phi = ScalarField::from_raw(self.grid(), x);
        let flux = self.flux(&phi, g);
        Ok(OpticalSolution {
            lambda: phi.min(),
            big_lambda: phi.max(),
            phi,
            flux,
            report,
        })
    }

    /// Outward normal derivative of a solution with boundary data `g`.
    pub fn flux(&self, phi: &ScalarField, g: &BoundaryTrace) -> BoundaryTrace {
        let grid = self.grid();
        if self.op.l > 0.0 {
            let values = phi
                .boundary_trace()
                .values()
                .iter()
                .zip(g.values())
                .map(|(p, gv)| (gv - p) / self.op.l)
                .collect();
            return BoundaryTrace::from_raw(grid, values);
        }
        normal_derivative(phi)
    }

    /// Linearization `φ' = T'[a](h)`: `A φ' = -h φ` with homogeneous data.
    pub fn solve_dt(&self, phi: &ScalarField, h: &ScalarField) -> Result<ScalarField> {
        let s: Vec<f64> = h
            .values()
            .iter()
            .zip(phi.values())
            .map(|(hv, p)| -hv * p)
            .collect();
        let b = self.op.source_rhs(&s);
        let (x, _) = self.solve_dual(&b)?;
        Ok(ScalarField::from_raw(self.grid(), x))
    }

    /// Adjoint solve `A z = s` with homogeneous data. The operator is self
    /// adjoint, so this is the same system with a volume source.
    pub fn solve_adjoint(&self, s: &ScalarField) -> Result<ScalarField> {
        let b = self.op.source_rhs(s.values());
        let (x, _) = self.solve_dual(&b)?;
        Ok(ScalarField::from_raw(self.grid(), x))
    }

    /// Solution for the coefficient `a + δa`, where `delta` lists `(node, δa)`
    /// pairs. Solved as a correction to the unperturbed `phi`.
    pub fn solve_perturbed(
        &self,
        delta: &[(usize, f64)],
        phi: &ScalarField,
    ) -> Result<(ScalarField, CgReport)> {
        let dirichlet = self.op.dirichlet();
        let w = self.grid().weights();
        let extra: Vec<(usize, f64)> = delta
            .iter()
            .filter(|(k, _)| !(dirichlet && self.op.boundary[*k]))
            .map(|&(k, d)| (k, w[k] * d))
            .collect();
        let mut b = vec![0.0; self.grid().len()];
        for &(k, d) in &extra {
            b[k] = -d * phi.values()[k];
        }
        let op = Perturbed {
            base: &self.op,
            extra: &extra,
        };
        let mut x = vec![0.0; b.len()];
        let report = conjugate_gradient(
            &op,
            &b,
            &mut x,
            Some(&self.factor as &dyn Preconditioner),
            CG_REL_TOL,
            self.max_iter(),
        )?;
        for (xv, p) in x.iter_mut().zip(phi.values()) {
            *xv += p;
        }
        Ok((ScalarField::from_raw(self.grid(), x), report))
    }
}

/// One-sided second-order outward normal derivative; corners average the two
/// adjacent sides.
pub fn normal_derivative(phi: &ScalarField) -> BoundaryTrace {
    let grid = phi.grid();
    let n = grid.n();
    let m = n - 1;
    let h = grid.h();
    let v = phi.values();
    let d = |k: usize, step: isize| {
        let k1 = (k as isize + step) as usize;
        let k2 = (k as isize + 2 * step) as usize;
        // derivative pointing out of the domain, i.e. against `step`
        (3.0 * v[k] - 4.0 * v[k1] + v[k2]) / (2.0 * h)
    };
    let ni = n as isize;
    let values = grid
        .boundary_nodes()
        .into_iter()
        .map(|(i, j)| {
            let k = grid.idx(i, j);
            let mut acc = 0.0;
            let mut cnt = 0.0;
            if i == 0 {
                acc += d(k, 1);
                cnt += 1.0;
            }
            if i == m {
                acc += d(k, -1);
                cnt += 1.0;
            }
            if j == 0 {
                acc += d(k, ni);
                cnt += 1.0;
            }
            if j == m {
                acc += d(k, -ni);
                cnt += 1.0;
            }
            acc / cnt
        })
        .collect();
    BoundaryTrace::from_raw(grid, values)
}

/// Forward solve for coefficient `a`, boundary data `g` and Robin length `l`.
pub fn solve_t(a: &ScalarField, g: &BoundaryTrace, l: f64) -> Result<OpticalSolution> {
    DiffusionSolver::new(a, l)?.solve_t(g)
}

pub fn solve_dt(a: &ScalarField, l: f64, phi: &ScalarField, h: &ScalarField) -> Result<ScalarField> {
    DiffusionSolver::new(a, l)?.solve_dt(phi, h)
}

pub fn solve_adjoint(a: &ScalarField, l: f64, source: &ScalarField) -> Result<ScalarField> {
    DiffusionSolver::new(a, l)?.solve_adjoint(source)
}
