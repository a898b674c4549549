use crate::error::{Error, Result};

/// Uniform nodal grid on the unit square. Node `(i, j)` sits at `(i h, j h)`
/// and is stored at linear index `j n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub const MIN_NODES: usize = 17;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::validation(format!(
                "grid needs at least {} nodes per side, got {n}",
                Self::MIN_NODES
            )));
        }
        Ok(Grid { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.h();
        [i as f64 * h, j as f64 * h]
    }

    #[inline]
    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        self.coord(i, j)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// One-dimensional trapezoid weight along an axis.
    #[inline]
    pub fn axis_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    /// Tensor trapezoid quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.axis_weight(i) * self.axis_weight(j)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.ij(k);
                self.weight(i, j)
            })
            .collect()
    }

    /// Number of boundary nodes, `4 (n - 1)`.
    #[inline]
    pub fn boundary_len(&self) -> usize {
        4 * (self.n - 1)
    }

    /// Boundary nodes counterclockwise from the origin corner.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let m = self.n - 1;
        let mut out = Vec::with_capacity(4 * m);
        out.extend((0..m).map(|i| (i, 0)));
        out.extend((0..m).map(|j| (m, j)));
        out.extend((1..=m).rev().map(|i| (i, m)));
        out.extend((1..=m).rev().map(|j| (0, j)));
        out
    }

    /// Outward unit normals at boundary nodes. Corners get the normalized
    /// diagonal.
    pub fn boundary_normals(&self) -> Vec<[f64; 2]> {
        let m = self.n - 1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        self.boundary_nodes()
            .into_iter()
            .map(|(i, j)| {
                let nx = if i == 0 { -1.0 } else if i == m { 1.0 } else { 0.0 };
                let ny = if j == 0 { -1.0 } else if j == m { 1.0 } else { 0.0 };
                if nx != 0.0 && ny != 0.0 {
                    [nx * s, ny * s]
                } else {
                    [nx, ny]
                }
            })
            .collect()
    }

    /// Cell containing `(x, y)` and the local bilinear coordinates, or `None`
    /// outside the closed square.
    #[inline]
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let m = (self.n - 1) as f64;
        let fx = x * m;
        let fy = y * m;
        let i = (fx.floor() as usize).min(self.n - 2);
        let j = (fy.floor() as usize).min(self.n - 2);
        Some((i, j, fx - i as f64, fy - j as f64))
    }
}
