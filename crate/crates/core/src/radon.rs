//! Circular Radon transform over circles centered on the source circle, its
//! adjoint, the radial operators `p`, `p*`, `D_r` on the cylinder and the
//! regularized inversion.

use std::f64::consts::PI;

use crate::acousto::{AcousticConfig, Sinogram};
use crate::error::{Error, Result};
use crate::fields::stencil::natural_stiffness_apply;
use crate::fields::{Grid, ScalarField};
use crate::tolerances::{RADON_CG_MAX_ITER, RADON_CG_TOL, RADON_MIN_ANGLES};

fn angle_count(r: f64, h: f64) -> usize {
    ((2.0 * PI * r / h).ceil() as usize).max(RADON_MIN_ANGLES)
}

/// `∫_{S¹} f(y + r ξ) dξ` with bilinear interpolation and zero extension.
pub fn circular_mean(f: &ScalarField, y: [f64; 2], r: f64) -> f64 {
    let nt = angle_count(r, f.grid().h());
    let dt = 2.0 * PI / nt as f64;
    (0..nt)
        .map(|k| {
            let (s, c) = (k as f64 * dt).sin_cos();
            f.interpolate(y[0] + r * c, y[1] + r * s)
        })
        .sum::<f64>()
        * dt
}

/// Samples the transform on the cylinder; cells with `r <= r0` stay zero.
pub fn radon_forward(f: &ScalarField, config: &AcousticConfig, ny: usize, nr: usize) -> Result<Sinogram> {
    let mut s = Sinogram::zeros(*config, ny, nr)?;
    let q0 = s.first_active();
    for m in 0..ny {
        let y = s.source(m);
        for q in q0..nr {
            let v = circular_mean(f, y, s.r(q));
            s.set(m, q, v);
        }
    }
    Ok(s)
}

/// Adjoint by quadrature over the cylinder,
/// `ℛ*[s](x) = ∫_{S_μ} s(y, |x - y|) / |x - y| dy`, with linear
/// interpolation in `r`. Pairs with [`radon_forward`] up to quadrature error.
pub fn radon_adjoint(s: &Sinogram, grid: Grid) -> ScalarField {
    let wy = s.source_weight();
    let dr = s.dr();
    let nr = s.nr();
    let sources: Vec<[f64; 2]> = (0..s.ny()).map(|m| s.source(m)).collect();
    ScalarField::from_fn(grid, |x, y| {
        let mut acc = 0.0;
        for (m, src) in sources.iter().enumerate() {
            let d = (x - src[0]).hypot(y - src[1]);
            let t = d / dr;
            let q = t.floor() as usize;
            if q + 1 >= nr {
                continue;
            }
            let a = t - q as f64;
            let v = (1.0 - a) * s.get(m, q) + a * s.get(m, q + 1);
            acc += v / d;
        }
        wy * acc
    })
}

/// Exact adjoint of the discrete [`radon_forward`] with respect to the
/// trapezoid inner product on the square and the cylinder inner product.
pub fn radon_transpose(s: &Sinogram, grid: Grid) -> ScalarField {
    let n = grid.n();
    let mut acc = vec![0.0; grid.len()];
    let cw = s.source_weight() * s.dr();
    let q0 = s.first_active();
    for m in 0..s.ny() {
        let y = s.source(m);
        for q in q0..s.nr() {
            let val = s.get(m, q);
            if val == 0.0 {
                continue;
            }
            let r = s.r(q);
            let nt = angle_count(r, grid.h());
            let dt = 2.0 * PI / nt as f64;
            let c = cw * val * dt;
            for k in 0..nt {
                let (sn, cs) = (k as f64 * dt).sin_cos();
                if let Some((i, j, tx, ty)) = grid.locate(y[0] + r * cs, y[1] + r * sn) {
                    let b = j * n + i;
                    acc[b] += c * (1.0 - tx) * (1.0 - ty);
                    acc[b + 1] += c * tx * (1.0 - ty);
                    acc[b + n] += c * (1.0 - tx) * ty;
                    acc[b + n + 1] += c * tx * ty;
                }
            }
        }
    }
    for (k, v) in acc.iter_mut().enumerate() {
        let (i, j) = grid.ij(k);
        *v /= grid.weight(i, j);
    }
    ScalarField::from_raw(grid, acc)
}

/// Radial operators on one sinogram row, built for a fixed radius grid.
///
/// `p[φ](r) = -∫_0^r φ + ∫_0^{min(rR/r0, R)} φ` is discretized with the
/// right-endpoint rule and linear interpolation at the rescaled limit, so
/// `p[φ]` vanishes at `r = 0` and `r = R`. `p*` is the matrix transpose and
/// `D_r` its exact left inverse on rows supported beyond `r0`.
#[derive(Debug, Clone)]
pub struct RadialOperators {
    nr: usize,
    q0: usize,
    dr: f64,
    p: Vec<f64>,
}

impl RadialOperators {
    pub fn new(config: &AcousticConfig, nr: usize) -> Self {
        let q0 = (0..nr)
            .find(|&q| config.radius(q, nr) > config.r0() * (1.0 + 1e-12))
            .unwrap_or(nr);
        let dr = config.big_r() / (nr - 1) as f64;
        let big_r = config.big_r();
        let ratio = big_r / config.r0();
        let mut p = vec![0.0; nr * nr];
        // row q: coefficients of ∫_0^b φ minus those of ∫_0^{r_q} φ
        let cumulative = |b: f64, row: &mut [f64], sign: f64| {
            let t = b / dr;
            let kk = ((t + 1e-9).floor() as usize).min(nr - 1);
            for c in row.iter_mut().take(kk + 1).skip(1) {
                *c += sign * dr;
            }
            let part = b - kk as f64 * dr;
            if part > 1e-12 * dr && kk + 1 < nr {
                let a = part / dr;
                row[kk] += sign * part * (1.0 - a);
                row[kk + 1] += sign * part * a;
            }
        };
        for q in 0..nr {
            let r = q as f64 * dr;
            let b = (r * ratio).min(big_r);
            let row = &mut p[q * nr..(q + 1) * nr];
            cumulative(b, row, 1.0);
            cumulative(r, row, -1.0);
            if q == nr - 1 {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        RadialOperators { nr, q0, dr, p }
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// First radius index strictly beyond `r0`.
    pub fn first_active(&self) -> usize {
        self.q0
    }

    #[inline]
    fn entry(&self, q: usize, k: usize) -> f64 {
        self.p[q * self.nr + k]
    }

    pub fn apply_p_row(&self, phi: &[f64], out: &mut [f64]) {
        for q in 0..self.nr {
            out[q] = (0..self.nr).map(|k| self.entry(q, k) * phi[k]).sum();
        }
    }

    pub fn apply_p_star_row(&self, u: &[f64], out: &mut [f64]) {
        for k in 0..self.nr {
            out[k] = (0..self.nr).map(|q| self.entry(q, k) * u[q]).sum();
        }
    }

    /// Solves `p* g = f` for `g` supported on `[q0 - 1, nr - 2]` by forward
    /// substitution; entries of `f` below `q0` are ignored.
    pub fn d_r_row(&self, f: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.q0 == 0 || self.q0 >= self.nr {
            return;
        }
        let start = self.q0 - 1;
        for q in self.q0..self.nr {
            let mut s = f[q];
            for m in start..q - 1 {
                s -= self.entry(m, q) * out[m];
            }
            out[q - 1] = s / self.entry(q - 1, q);
        }
    }

    /// `‖u‖²` in the dual of `H¹₀(0, R)`: solves `(I - ∂²) z = u` with zero
    /// end values and returns `⟨u, z⟩`.
    pub fn g_inv_norm_sq_row(&self, u: &[f64]) -> f64 {
        let m = self.nr - 2;
        if m == 0 {
            return 0.0;
        }
        let h = self.dr;
        let diag = h + 2.0 / h;
        let off = -1.0 / h;
        let rhs: Vec<f64> = (1..=m).map(|q| h * u[q]).collect();
        let z = thomas(diag, off, &rhs);
        rhs.iter().zip(&z).map(|(a, b)| a * b).sum()
    }

    /// `‖z‖_L² ² + ‖∂_r z‖_L² ²` for a row vanishing at both ends.
    pub fn g_norm_sq_row(&self, z: &[f64]) -> f64 {
        let h = self.dr;
        let l2: f64 = z.iter().map(|v| v * v).sum::<f64>() * h;
        let d: f64 = z.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
        l2 + d
    }
}

/// Constant-coefficient symmetric tridiagonal solve.
fn thomas(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut beta = diag;
    c[0] = off / beta;
    d[0] = rhs[0] / beta;
    for i in 1..m {
        beta = diag - off * c[i - 1];
        c[i] = off / beta;
        d[i] = (rhs[i] - off * d[i - 1]) / beta;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn map_rows(s: &Sinogram, f: impl Fn(&RadialOperators, &[f64], &mut [f64])) -> Sinogram {
    let ops = RadialOperators::new(s.config(), s.nr());
    let mut out = s.clone();
    for m in 0..s.ny() {
        f(&ops, s.row(m), out.row_mut(m));
    }
    out
}

pub fn apply_p(s: &Sinogram) -> Sinogram {
    map_rows(s, |o, a, b| o.apply_p_row(a, b))
}

/// Transpose of [`apply_p`]. The input must vanish below `r0`; the one cell
/// straddling `r0` is allowed so that the range of [`d_r`] is accepted.
pub fn apply_p_star(s: &Sinogram) -> Result<Sinogram> {
    let q0 = s.first_active();
    let lim = q0.saturating_sub(1);
    for m in 0..s.ny() {
        if let Some(q) = s.row(m)[..lim].iter().position(|v| *v != 0.0) {
            return Err(Error::validation(format!(
                "p* needs data vanishing below r0, found {} at source {m}, r = {}",
                s.get(m, q),
                s.r(q)
            )));
        }
    }
    Ok(map_rows(s, |o, a, b| o.apply_p_star_row(a, b)))
}

/// Radial derivative paired with `p*`: `p*[D_r f] = f` whenever `f`
/// vanishes for `r <= r0`.
pub fn d_r(s: &Sinogram) -> Sinogram {
    map_rows(s, |o, a, b| o.d_r_row(a, b))
}

#[derive(Debug, Clone, Copy)]
pub struct CylinderNorms {
    pub l2: f64,
    /// Norm of `L²(S_μ; H¹₀(0, R))`; meaningful for rows vanishing at `0`, `R`.
    pub g: f64,
    /// Norm of the dual space `L²(S_μ; H⁻¹(0, R))`.
    pub g_inv: f64,
}

pub fn cylinder_norms(s: &Sinogram) -> CylinderNorms {
    let ops = RadialOperators::new(s.config(), s.nr());
    let wy = s.source_weight();
    let (mut g, mut gi) = (0.0, 0.0);
    for m in 0..s.ny() {
        g += ops.g_norm_sq_row(s.row(m));
        gi += ops.g_inv_norm_sq_row(s.row(m));
    }
    CylinderNorms {
        l2: s.norm_l2(),
        g: (wy * g).sqrt(),
        g_inv: (wy * gi).sqrt(),
    }
}

/// Circular Radon data of the potential from measurements:
/// `ℛ[ψ] = p*[M] / (r0 ‖w‖₁)`.
pub fn recover_rpsi(m: &Sinogram) -> Result<Sinogram> {
    let c = 1.0 / (m.config().r0() * m.config().w_l1());
    let mut out = apply_p_star(m)?.map(|v| v * c);
    out.enforce_support();
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct RadonInversionReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Minimizes `‖ℛf - s‖² + ε ‖f‖²` by conjugate gradients on the normal
/// equations. Stops at relative residual `1e-8` or 500 iterations; the
/// report says whether the tolerance was met.
pub fn invert_radon(s: &Sinogram, grid: Grid, eps: f64) -> Result<(ScalarField, RadonInversionReport)> {
    invert_radon_with(s, grid, eps, RADON_CG_TOL, RADON_CG_MAX_ITER)
}

pub fn invert_radon_with(
    s: &Sinogram,
    grid: Grid,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, RadonInversionReport)> {
    let w = grid.weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&w).map(|((x, y), z)| x * y * z).sum() };
    let (ny, nr) = (s.ny(), s.nr());
    let normal = |x: &[f64]| -> Result<Vec<f64>> {
        let f = ScalarField::from_raw(grid, x.to_vec());
        let fwd = radon_forward(&f, s.config(), ny, nr)?;
        let back = radon_transpose(&fwd, grid);
        Ok(back
            .values()
            .iter()
            .zip(x)
            .map(|(b, xv)| b + eps * xv)
            .collect())
    };
    let b = radon_transpose(s, grid).into_values();
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; grid.len()];
    if bnorm == 0.0 {
        return Ok((
            ScalarField::from_raw(grid, x),
            RadonInversionReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    let mut res = 1.0;
    while it < max_iter {
        let q = normal(&p)?;
        let alpha = rr / dot(&p, &q);
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        it += 1;
        let rr_new = dot(&r, &r);
        res = rr_new.sqrt() / bnorm;
        if res <= tol {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
    }
    Ok((
        ScalarField::from_raw(grid, x),
        RadonInversionReport {
            iterations: it,
            relative_residual: res,
            converged: res <= tol,
        },
    ))
}

/// Disk integrals `Q(y, r) = ∫_{B(y,r) ∩ Ω} Δf` of a potential `f` with
/// natural boundary conditions, sampled on the cylinder. Each node enters
/// through a linear ramp of width `h` in its distance to the source.
#[derive(Debug, Clone)]
pub struct DiskFluxOperator {
    grid: Grid,
    config: AcousticConfig,
    ny: usize,
    nr: usize,
    q0: usize,
    radii: Vec<f64>,
    cell: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl DiskFluxOperator {
    pub fn new(config: &AcousticConfig, grid: Grid, ny: usize, nr: usize) -> Result<Self> {
        let s = Sinogram::zeros(*config, ny, nr)?;
        let radii = (0..nr).map(|q| s.r(q)).collect();
        let rows = (0..ny)
            .map(|m| {
                let y = s.source(m);
                let mut row: Vec<(usize, f64)> = (0..grid.len())
                    .map(|k| {
                        let p = grid.point(k);
                        (k, (p[0] - y[0]).hypot(p[1] - y[1]))
                    })
                    .collect();
                row.sort_by(|a, b| a.1.total_cmp(&b.1));
                row
            })
            .collect();
        Ok(DiskFluxOperator {
            grid,
            config: *config,
            ny,
            nr,
            q0: s.first_active(),
            radii,
            cell: s.source_weight() * s.dr(),
            rows,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `σ ↦ Σ_k χ_k(y, r) σ_k` for a dual (already weighted) density `σ`.
    pub fn apply_density(&self, sigma: &[f64]) -> Sinogram {
        let h = self.grid.h();
        let mut out = Sinogram::zeros(self.config, self.ny, self.nr).expect("validated in new");
        for (m, row) in self.rows.iter().enumerate() {
            let mut s0 = Vec::with_capacity(row.len() + 1);
            let mut s1 = Vec::with_capacity(row.len() + 1);
            let (mut a0, mut a1) = (0.0, 0.0);
            s0.push(0.0);
            s1.push(0.0);
            for &(k, d) in row {
                a0 += sigma[k];
                a1 += sigma[k] * d;
                s0.push(a0);
                s1.push(a1);
            }
            for q in self.q0..self.nr {
                let r = self.radii[q];
                let a = row.partition_point(|e| e.1 <= r - 0.5 * h);
                let b = row.partition_point(|e| e.1 < r + 0.5 * h);
                let ramp = ((r + 0.5 * h) / h) * (s0[b] - s0[a]) - (s1[b] - s1[a]) / h;
                out.set(m, q, s0[a] + ramp);
            }
        }
        out
    }

    /// Transpose of [`apply_density`](Self::apply_density) with cells weighted
    /// by the cylinder measure.
    pub fn transpose_density(&self, s: &Sinogram) -> Vec<f64> {
        let h = self.grid.h();
        let mut out = vec![0.0; self.grid.len()];
        let mut suffix = vec![0.0; self.nr + 1];
        for (m, row) in self.rows.iter().enumerate() {
            for q in (0..self.nr).rev() {
                let c = if q >= self.q0 { s.get(m, q) * self.cell } else { 0.0 };
                suffix[q] = suffix[q + 1] + c;
            }
            for &(k, d) in row {
                let lo = self.radii.partition_point(|&r| r <= d - 0.5 * h);
                let hi = self.radii.partition_point(|&r| r < d + 0.5 * h);
                let mut t = suffix[hi];
                for q in lo.max(self.q0)..hi {
                    t += s.get(m, q) * self.cell * ((self.radii[q] - d) / h + 0.5);
                }
                out[k] += t;
            }
        }
        out
    }

    /// `f ↦ Q` through the dual Laplacian `-K f`.
    pub fn apply(&self, f: &[f64]) -> Sinogram {
        let mut kf = vec![0.0; f.len()];
        natural_stiffness_apply(self.grid, f, &mut kf);
        kf.iter_mut().for_each(|v| *v = -*v);
        self.apply_density(&kf)
    }

    pub fn transpose(&self, s: &Sinogram) -> Vec<f64> {
        let t = self.transpose_density(s);
        let mut out = vec![0.0; t.len()];
        natural_stiffness_apply(self.grid, &t, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        out
    }
}

/// Disk fluxes `Q = r M / (r0 ‖w‖₁)` of the potential from measurements.
pub fn flux_data(m: &Sinogram) -> Sinogram {
    let c = 1.0 / (m.config().r0() * m.config().w_l1());
    let mut out = m.clone();
    for row in 0..m.ny() {
        for q in 0..m.nr() {
            out.set(row, q, m.get(row, q) * m.r(q) * c);
        }
    }
    out.enforce_support();
    out
}

/// Potential whose disk fluxes match `q`, by conjugate gradients on
/// `AᵀA f + ε K f = Aᵀ q` in the mean-zero subspace. It differs from the
/// whole-plane potential by a harmonic function.
pub fn invert_disk_flux(
    op: &DiskFluxOperator,
    q: &Sinogram,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, RadonInversionReport)> {
    let grid = op.grid();
    let normal = |x: &[f64]| -> Result<Vec<f64>> {
        let mut out = op.transpose(&op.apply(x));
        let mut kx = vec![0.0; x.len()];
        natural_stiffness_apply(grid, x, &mut kx);
        for (o, k) in out.iter_mut().zip(&kx) {
            *o += eps * k;
        }
        Ok(out)
    };
    let b = op.transpose(q);
    let (mut x, report) = normal_cg(&b, normal, tol, max_iter)?;
    let w = grid.weights();
    let mean = x.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>();
    x.iter_mut().for_each(|v| *v -= mean);
    Ok((ScalarField::from_raw(grid, x), report))
}

fn normal_cg(
    b: &[f64],
    normal: impl Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, RadonInversionReport)> {
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok((
            x,
            RadonInversionReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    let mut res = 1.0;
    while it < max_iter {
        let q = normal(&p)?;
        let alpha = rr / dot(&p, &q);
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        it += 1;
        let rr_new = dot(&r, &r);
        res = rr_new.sqrt() / bnorm;
        if res <= tol {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
    }
    Ok((
        x,
        RadonInversionReport {
            iterations: it,
            relative_residual: res,
            converged: res <= tol,
        },
    ))
}
