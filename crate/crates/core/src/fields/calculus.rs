use super::{Grid, ScalarField, VectorField};

/// Partial derivative along `axis` (0 for x, 1 for y). Central differences
/// inside, second-order one-sided differences on the boundary.
pub fn partial(grid: Grid, f: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let inv2h = 0.5 / grid.h();
    let stride = if axis == 0 { 1 } else { n };
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let pos = if axis == 0 { i } else { j };
            out[k] = if pos == 0 {
                (-3.0 * f[k] + 4.0 * f[k + stride] - f[k + 2 * stride]) * inv2h
            } else if pos == n - 1 {
                (3.0 * f[k] - 4.0 * f[k - stride] + f[k - 2 * stride]) * inv2h
            } else {
                (f[k + stride] - f[k - stride]) * inv2h
            };
        }
    }
}

/// Exact transpose of [`partial`], accumulated into `out`.
pub fn partial_transpose_add(grid: Grid, g: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let inv2h = 0.5 / grid.h();
    let stride = if axis == 0 { 1 } else { n };
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let gk = g[k] * inv2h;
            if gk == 0.0 {
                continue;
            }
            let pos = if axis == 0 { i } else { j };
            if pos == 0 {
                out[k] -= 3.0 * gk;
                out[k + stride] += 4.0 * gk;
                out[k + 2 * stride] -= gk;
            } else if pos == n - 1 {
                out[k] += 3.0 * gk;
                out[k - stride] -= 4.0 * gk;
                out[k - 2 * stride] += gk;
            } else {
                out[k + stride] += gk;
                out[k - stride] -= gk;
            }
        }
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let mut gx = vec![0.0; grid.len()];
    let mut gy = vec![0.0; grid.len()];
    partial(grid, f.values(), 0, &mut gx);
    partial(grid, f.values(), 1, &mut gy);
    VectorField::from_raw(grid, gx, gy)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let mut dx = vec![0.0; grid.len()];
    let mut dy = vec![0.0; grid.len()];
    partial(grid, v.x(), 0, &mut dx);
    partial(grid, v.y(), 1, &mut dy);
    for (a, b) in dx.iter_mut().zip(dy) {
        *a += b;
    }
    ScalarField::from_raw(grid, dx)
}

/// Five-point Laplacian at interior nodes; zero on the boundary.
pub fn laplacian5(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = j * n + i;
            out[k] = (v[k - 1] + v[k + 1] + v[k - n] + v[k + n] - 4.0 * v[k]) / h2;
        }
    }
    ScalarField::from_raw(grid, out)
}

/// Trapezoid integral, optionally restricted to masked nodes.
pub fn integrate(f: &ScalarField, mask: Option<&[bool]>) -> f64 {
    let grid = f.grid();
    let v = f.values();
    let mut s = 0.0;
    for k in 0..grid.len() {
        if mask.map_or(true, |m| m[k]) {
            let (i, j) = grid.ij(k);
            s += grid.weight(i, j) * v[k];
        }
    }
    s
}

/// Weighted mean (trapezoid) over the square.
pub fn mean(f: &ScalarField) -> f64 {
    integrate(f, None)
}

pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = f.grid();
    let (a, b) = (f.values(), g.values());
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            grid.weight(i, j) * a[k] * b[k]
        })
        .sum()
}

pub fn inner_vector(u: &VectorField, v: &VectorField) -> f64 {
    let grid = u.grid();
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            grid.weight(i, j) * (u.x()[k] * v.x()[k] + u.y()[k] * v.y()[k])
        })
        .sum()
}

pub fn norm_l2(f: &ScalarField) -> f64 {
    inner(f, f).sqrt()
}

pub fn norm_l4(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let v = f.values();
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            grid.weight(i, j) * v[k].powi(4)
        })
        .sum::<f64>()
        .powf(0.25)
}

/// `L^4` norm of the pointwise Euclidean length of a vector field over a mask.
pub fn norm_l4_vector(v: &VectorField, mask: Option<&[bool]>) -> f64 {
    let grid = v.grid();
    let mut s = 0.0;
    for k in 0..grid.len() {
        if mask.map_or(true, |m| m[k]) {
            let (i, j) = grid.ij(k);
            let q = v.x()[k] * v.x()[k] + v.y()[k] * v.y()[k];
            s += grid.weight(i, j) * q * q;
        }
    }
    s.powf(0.25)
}

pub fn h1_seminorm(f: &ScalarField) -> f64 {
    let g = gradient(f);
    inner_vector(&g, &g).sqrt()
}
