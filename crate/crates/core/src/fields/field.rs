use super::Grid;
use crate::error::{Error, Result};

/// Real values at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite value at node {k}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Wraps values the caller knows are finite and correctly sized.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                f(x, y)
            })
            .collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::from_raw(self.grid, values)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation; zero outside the closed square.
    #[inline]
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        match self.grid.locate(x, y) {
            None => 0.0,
            Some((i, j, tx, ty)) => {
                let n = self.grid.n();
                let k = j * n + i;
                let v = &self.values;
                (1.0 - ty) * ((1.0 - tx) * v[k] + tx * v[k + 1])
                    + ty * ((1.0 - tx) * v[k + n] + tx * v[k + n + 1])
            }
        }
    }

    /// Bilinear interpolation with the point clamped into the square.
    #[inline]
    pub fn interpolate_clamped(&self, x: f64, y: f64) -> f64 {
        self.interpolate(x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
    }

    pub fn boundary_trace(&self) -> BoundaryTrace {
        let values = self
            .grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| self.at(i, j))
            .collect();
        BoundaryTrace::from_raw(self.grid, values)
    }
}

/// Two components per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.len() || y.len() != grid.len() {
            return Err(Error::validation("vector field size does not match grid"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::validation("vector field has non-finite values"));
        }
        Ok(VectorField { grid, x, y })
    }

    pub(crate) fn from_raw(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Self {
        VectorField { grid, x, y }
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.len() {
            let [px, py] = grid.point(k);
            let [vx, vy] = f(px, py);
            out.x[k] = vx;
            out.y[k] = vy;
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub fn component(&self, c: usize) -> &[f64] {
        if c == 0 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect();
        let y = self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect();
        VectorField::from_raw(self.grid, x, y)
    }

    /// Pointwise scaling by a scalar field.
    pub fn scale_by(&self, s: &ScalarField) -> Self {
        let x = self.x.iter().zip(s.values()).map(|(a, b)| a * b).collect();
        let y = self.y.iter().zip(s.values()).map(|(a, b)| a * b).collect();
        VectorField::from_raw(self.grid, x, y)
    }

    pub fn max_norm(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// Node values on the boundary, counterclockwise from the origin corner:
/// bottom edge, right edge, top edge, left edge. Length `4 (n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    grid: Grid,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.boundary_len() {
            return Err(Error::validation(format!(
                "boundary trace has {} values, grid needs {}",
                values.len(),
                grid.boundary_len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("boundary trace has non-finite values"));
        }
        Ok(BoundaryTrace { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        BoundaryTrace { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        BoundaryTrace {
            grid,
            values: vec![c; grid.boundary_len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| {
                let [x, y] = grid.coord(i, j);
                f(x, y)
            })
            .collect();
        BoundaryTrace { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Boundary quadrature weight; every boundary node carries `h`.
    #[inline]
    pub fn weight(&self) -> f64 {
        self.grid.h()
    }

    pub fn integrate(&self) -> f64 {
        self.weight() * self.values.iter().sum::<f64>()
    }

    pub fn inner(&self, other: &BoundaryTrace) -> f64 {
        self.weight()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sub(&self, other: &BoundaryTrace) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        BoundaryTrace::from_raw(self.grid, values)
    }
}
