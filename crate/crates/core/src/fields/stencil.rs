use super::linalg::{conjugate_gradient, BandCholesky, CgReport, LinearOperator, Preconditioner};
use super::Grid;
use crate::error::Result;
use crate::tolerances::{CG_ITER_PER_NODE, CG_REL_TOL};

/// `y = K x` for the five-point stiffness with natural boundary conditions.
/// Edges along the boundary carry weight one half, all others weight one.
pub fn natural_stiffness_apply(grid: Grid, x: &[f64], y: &mut [f64]) {
    let n = grid.n();
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if i + 1 < n {
                let c = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let d = c * (x[k] - x[k + 1]);
                y[k] += d;
                y[k + 1] -= d;
            }
            if j + 1 < n {
                let c = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let d = c * (x[k] - x[k + n]);
                y[k] += d;
                y[k + n] -= d;
            }
        }
    }
}

/// Diagonal and the two lower off-diagonals (`k - 1`, `k - n`) of the
/// natural stiffness.
pub fn natural_stiffness_entries(grid: Grid, k: usize) -> (f64, f64, f64) {
    let n = grid.n();
    let (i, j) = grid.ij(k);
    let horiz = |jj: usize| if jj == 0 || jj == n - 1 { 0.5 } else { 1.0 };
    let vert = |ii: usize| if ii == 0 || ii == n - 1 { 0.5 } else { 1.0 };
    let mut diag = 0.0;
    if i > 0 {
        diag += horiz(j);
    }
    if i + 1 < n {
        diag += horiz(j);
    }
    if j > 0 {
        diag += vert(i);
    }
    if j + 1 < n {
        diag += vert(i);
    }
    let left = if i > 0 { -horiz(j) } else { 0.0 };
    let down = if j > 0 { -vert(i) } else { 0.0 };
    (diag, left, down)
}

/// Five-point Dirichlet stiffness `4 u_k - sum of neighbours` restricted to
/// a set of free nodes. Non-free nodes are held at zero.
pub struct DirichletLaplacian {
    grid: Grid,
    free: Vec<usize>,
    slot: Vec<usize>,
    factor: Option<BandCholesky>,
}

const NONE: usize = usize::MAX;

impl DirichletLaplacian {
    /// Free nodes must be interior nodes of the square.
    pub fn new(grid: Grid, is_free: &[bool]) -> Self {
        let mut free = Vec::new();
        let mut slot = vec![NONE; grid.len()];
        for (k, &f) in is_free.iter().enumerate() {
            let (i, j) = grid.ij(k);
            if f && !grid.is_boundary(i, j) {
                slot[k] = free.len();
                free.push(k);
            }
        }
        DirichletLaplacian {
            grid,
            free,
            slot,
            factor: None,
        }
    }

    /// All interior nodes free.
    pub fn full(grid: Grid) -> Self {
        let mask: Vec<bool> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                !grid.is_boundary(i, j)
            })
            .collect();
        Self::new(grid, &mask)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, k: usize) -> bool {
        self.slot[k] != NONE
    }

    /// Builds a band Cholesky factor for repeated solves.
    pub fn factorize(&mut self) -> Result<()> {
        let n = self.grid.n();
        let nf = self.free.len();
        if nf == 0 {
            return Ok(());
        }
        let mut bw = 0;
        for (s, &k) in self.free.iter().enumerate() {
            for nb in [k - 1, k - n] {
                if self.slot[nb] != NONE {
                    bw = bw.max(s - self.slot[nb]);
                }
            }
        }
        let free = &self.free;
        let slot = &self.slot;
        let f = BandCholesky::factor(nf, bw, |s, d| {
            if d == 0 {
                return 4.0;
            }
            let k = free[s];
            let t = s - d;
            if slot[k - 1] == t || slot[k - n] == t {
                -1.0
            } else {
                0.0
            }
        })?;
        self.factor = Some(f);
        Ok(())
    }

    /// Solves `K u = b` where `b` is a full-length dual vector; entries of `b`
    /// on non-free nodes are ignored. Returns a full-length vector.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, CgReport)> {
        let rhs: Vec<f64> = self.free.iter().map(|&k| b[k]).collect();
        let mut x = vec![0.0; self.free.len()];
        let report = if let Some(f) = &self.factor {
            conjugate_gradient(
                self,
                &rhs,
                &mut x,
                Some(f as &dyn Preconditioner),
                CG_REL_TOL,
                CG_ITER_PER_NODE * self.grid.n(),
            )?
        } else {
            conjugate_gradient(
                self,
                &rhs,
                &mut x,
                None,
                CG_REL_TOL,
                CG_ITER_PER_NODE * self.grid.n(),
            )?
        };
        Ok((self.expand(&x), report))
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (s, &k) in self.free.iter().enumerate() {
            out[k] = x[s];
        }
        out
    }

    /// `u^T K v` for full-length vectors vanishing off the free set.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.grid.n();
        let mut s = 0.0;
        for &k in &self.free {
            let ku = 4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - n] - u[k + n];
            s += ku * v[k];
        }
        s
    }
}

impl LinearOperator for DirichletLaplacian {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.grid.n();
        let get = |k: usize| {
            let s = self.slot[k];
            if s == NONE {
                0.0
            } else {
                x[s]
            }
        };
        for (s, &k) in self.free.iter().enumerate() {
            y[s] = 4.0 * x[s] - get(k - 1) - get(k + 1) - get(k - n) - get(k + n);
        }
    }
}
