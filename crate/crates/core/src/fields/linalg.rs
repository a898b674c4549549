use crate::error::{Error, Result};

/// Symmetric linear operator acting on flat vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients from the initial guess in `x`.
/// Convergence is measured on the relative Euclidean residual.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    precond: Option<&dyn Preconditioner>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgReport> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    let apply_m = |r: &[f64], z: &mut [f64]| match precond {
        Some(p) => p.precondition(r, z),
        None => z.copy_from_slice(r),
    };
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > rel_tol {
        if it >= max_iter || !res.is_finite() {
            return Err(Error::NoConvergence {
                solver: "conjugate gradient",
                iterations: it,
                residual: res,
            });
        }
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::Numerical(format!(
                "operator is not positive definite (p^T A p = {pq:e})"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= rel_tol {
            break;
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgReport {
        iterations: it,
        relative_residual: res,
    })
}

/// Cholesky factor of a symmetric positive definite band matrix, stored by
/// rows: entry `(i, i - d)` for `d = 0..=bw` lives at `i * (bw + 1) + d`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factorizes the matrix whose lower band is given by `entry(i, d)` for
    /// the element `(i, i - d)`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for d in 0..=bw.min(i) {
                l[i * w + d] = entry(i, d);
            }
        }
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
                let kmin = jmin.max(j.saturating_sub(bw));
                let mut s = l[i * w + (i - j)];
                let ri = i * w;
                let rj = j * w;
                for k in kmin..j {
                    s -= l[ri + (i - k)] * l[rj + (j - k)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "band Cholesky: non-positive pivot {s:e} at row {i}"
                        )));
                    }
                    l[ri] = s.sqrt();
                } else {
                    l[ri + (i - j)] = s / l[rj];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            let ri = i * w;
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[ri + (i - k)] * x[k];
            }
            x[i] = s / self.l[ri];
        }
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * w];
            x[i] = xi;
            for k in i.saturating_sub(self.bw)..i {
                x[k] -= self.l[i * w + (i - k)] * xi;
            }
        }
    }
}

impl Preconditioner for BandCholesky {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}
