use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{preimage, AcousticConfig, Sinogram};
use crate::diffusion::{DiffusionSolver, OpticalSolution};
use crate::error::{Error, Result};
use crate::fields::{divergence, BoundaryTrace, Grid, ScalarField, VectorField};
use crate::phantom::Phantom;

/// How the shell integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    /// Trapezoid on the field grid, with dual-cell supersampling of the
    /// perturbed coefficient near rims. Needs `n >= 4/η`.
    #[default]
    Grid,
    /// The same integrals written along rays from the source and integrated
    /// by parts onto the rims; the fields are interpolated bilinearly.
    Ray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measurement {
    MEta,
    MTilde,
}

const SUPERSAMPLE: usize = 8;
const BASE_SUPERSAMPLE: usize = 4;
const RIM_POINTS: usize = 16384;

const GL6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152_1, 0.171_324_492_379_170_4),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152_1, 0.171_324_492_379_170_4),
];

/// Forward data for one phantom: the unperturbed solve is factorized once
/// and reused by every cell.
pub struct MeasurementModel {
    phantom: Phantom,
    config: AcousticConfig,
    grid: Grid,
    g: BoundaryTrace,
    solver: DiffusionSolver,
    base: OpticalSolution,
    quadrature: Quadrature,
}

impl MeasurementModel {
    pub fn new(
        phantom: &Phantom,
        config: AcousticConfig,
        grid: Grid,
        l: f64,
        g: BoundaryTrace,
        quadrature: Quadrature,
    ) -> Result<Self> {
        phantom.validate()?;
        if quadrature == Quadrature::Grid {
            config.check_grid(grid)?;
        }
        if g.grid() != grid {
            return Err(Error::validation("boundary data lives on another grid"));
        }
        let a = phantom.sample_cell_average(grid, BASE_SUPERSAMPLE);
        let solver = DiffusionSolver::new(&a, l)?;
        let base = solver.solve_t(&g)?;
        Ok(MeasurementModel {
            phantom: phantom.clone(),
            config,
            grid,
            g,
            solver,
            base,
            quadrature,
        })
    }

    pub fn config(&self) -> &AcousticConfig {
        &self.config
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn phantom(&self) -> &Phantom {
        &self.phantom
    }

    pub fn optical(&self) -> &OpticalSolution {
        &self.base
    }

    pub fn solver(&self) -> &DiffusionSolver {
        &self.solver
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    /// True when the shell cannot reach any inclusion, so every measurement
    /// vanishes identically.
    pub fn shell_misses_inclusions(&self, y: [f64; 2], r: f64) -> bool {
        let pad = self.config.eta() + 2.0 * self.grid.h();
        self.phantom.inclusions.iter().all(|inc| {
            let c = inc.shape.center();
            let d = (c[0] - y[0]).hypot(c[1] - y[1]);
            let rb = inc.shape.bounding_radius();
            r + pad < d - rb || r - pad > d + rb
        })
    }

    /// Sparse coefficient change `a∘P⁻¹ - a` at grid nodes. Nodes whose dual
    /// cell may straddle a displaced rim are averaged over sub-cell samples.
    pub fn perturbation(&self, y: [f64; 2], r: f64) -> Result<Vec<(usize, f64)>> {
        let grid = self.grid;
        let h = grid.h();
        let eta = self.config.eta();
        let reach = self.config.max_shift(r) + 1.5 * h;
        let mut out = Vec::new();
        let n = grid.n();
        for k in 0..grid.len() {
            let [px, py] = grid.point(k);
            let s = (px - y[0]).hypot(py - y[1]);
            if (s - r).abs() >= eta + h {
                continue;
            }
            let (i, j) = grid.ij(k);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                continue;
            }
            let near_rim = self.phantom.inclusions.iter().any(|inc| {
                let q = inc.shape.level(px, py).sqrt();
                let scale = match inc.shape {
                    crate::phantom::Shape::Disk { radius, .. } => radius,
                    crate::phantom::Shape::Ellipse { a, b, .. } => a.min(b),
                };
                (q - 1.0).abs() * scale < reach
            });
            let d = if near_rim {
                let mut acc = 0.0;
                for b in 0..SUPERSAMPLE {
                    let qy = py + ((b as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) * h;
                    for a in 0..SUPERSAMPLE {
                        let qx = px + ((a as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) * h;
                        let pre = preimage(&self.config, y, r, [qx, qy])
                            .ok_or_else(|| self.config.root_error(y, r, k))?;
                        acc += self.phantom.value(pre[0], pre[1]) - self.phantom.value(qx, qy);
                    }
                }
                acc / (SUPERSAMPLE * SUPERSAMPLE) as f64
            } else {
                if (s - r).abs() >= eta {
                    continue;
                }
                let pre = preimage(&self.config, y, r, [px, py])
                    .ok_or_else(|| self.config.root_error(y, r, k))?;
                self.phantom.value(pre[0], pre[1]) - self.phantom.value(px, py)
            };
            if d != 0.0 {
                out.push((k, d));
            }
        }
        Ok(out)
    }

    /// Optical field for the perturbed coefficient.
    pub fn perturbed_field(&self, delta: &[(usize, f64)]) -> Result<ScalarField> {
        Ok(self.solver.solve_perturbed(delta, &self.base.phi)?.0)
    }

    /// `(1/η²) ∫ (a_u - a) Φ Φ_u`.
    pub fn m_eta(&self, y: [f64; 2], r: f64) -> Result<f64> {
        if self.phantom.inclusions.is_empty() || self.shell_misses_inclusions(y, r) {
            return Ok(0.0);
        }
        let delta = self.perturbation(y, r)?;
        if delta.is_empty() {
            return Ok(0.0);
        }
        let phi_u = self.perturbed_field(&delta)?;
        let eta2 = self.config.eta().powi(2);
        match self.quadrature {
            Quadrature::Grid => {
                let phi = self.base.phi.values();
                let s: f64 = delta
                    .iter()
                    .map(|&(k, d)| {
                        let (i, j) = self.grid.ij(k);
                        self.grid.weight(i, j) * d * phi[k] * phi_u.values()[k]
                    })
                    .sum();
                Ok(s / eta2)
            }
            Quadrature::Ray => {
                let phi = &self.base.phi;
                let val = self.ray_integral(y, r, |_p: [f64; 2], xi: [f64; 2], s: f64| {
                    let top = s + self.config.shift(r, s);
                    if top == s {
                        return 0.0;
                    }
                    let half = 0.5 * (top - s);
                    let mid = 0.5 * (top + s);
                    GL6.iter()
                        .map(|&(x, wgt)| {
                            let t = mid + half * x;
                            let q = [y[0] + t * xi[0], y[1] + t * xi[1]];
                            wgt * phi.interpolate(q[0], q[1]) * phi_u.interpolate(q[0], q[1]) * t
                        })
                        .sum::<f64>()
                        * half
                });
                Ok(val / eta2)
            }
        }
    }

    /// `(1/η²) ∫ (a - a0) ∇·(Φ² v)`.
    pub fn m_tilde(&self, y: [f64; 2], r: f64) -> f64 {
        if self.phantom.inclusions.is_empty() || self.shell_misses_inclusions(y, r) {
            return 0.0;
        }
        let eta2 = self.config.eta().powi(2);
        let phi = &self.base.phi;
        match self.quadrature {
            Quadrature::Grid => {
                let grid = self.grid;
                let a = self.phantom.sample_cell_average(grid, BASE_SUPERSAMPLE);
                let v = super::displacement_v(&self.config, y, r, grid);
                let p2 = phi.map(|p| p * p);
                let div = divergence(&v.scale_by(&p2));
                let mut s = 0.0;
                for k in 0..grid.len() {
                    let c = a.values()[k] - self.phantom.a0;
                    if c != 0.0 && div.values()[k] != 0.0 {
                        let (i, j) = grid.ij(k);
                        s += grid.weight(i, j) * c * div.values()[k];
                    }
                }
                s / eta2
            }
            Quadrature::Ray => {
                let val = self.ray_integral(y, r, |p: [f64; 2], _xi, s: f64| {
                    let ph = phi.interpolate(p[0], p[1]);
                    s * ph * ph * self.config.shift(r, s)
                });
                val / eta2
            }
        }
    }

    /// `Σ_i [(α_i - a0) ∮ (ξ·n) G/s dσ - ∫_{A_i} ∂_s a_i G ds dθ]` for a
    /// kernel `G(point, ξ, s)` that vanishes off the shell.
    fn ray_integral(
        &self,
        y: [f64; 2],
        r: f64,
        kernel: impl Fn([f64; 2], [f64; 2], f64) -> f64,
    ) -> f64 {
        let eta = self.config.eta();
        let (lo, hi) = (r - eta, r + eta);
        let mut total = 0.0;
        for inc in &self.phantom.inclusions {
            let c = inc.shape.center();
            let phase = (y[1] - c[1]).atan2(y[0] - c[0]);
            let t0 = inc.shape.rim_parameter_toward(phase);
            let mut rim = 0.0;
            let dt = 2.0 * PI / RIM_POINTS as f64;
            for k in 0..RIM_POINTS {
                let rp = inc.shape.rim(t0 + k as f64 * dt);
                let dx = rp.point[0] - y[0];
                let dy = rp.point[1] - y[1];
                let s = dx.hypot(dy);
                if s <= lo || s >= hi {
                    continue;
                }
                let xi = [dx / s, dy / s];
                let cos = xi[0] * rp.normal[0] + xi[1] * rp.normal[1];
                rim += cos * kernel(rp.point, xi, s) / s * rp.speed;
            }
            total += (inc.base - self.phantom.a0) * rim * dt;

            if inc.amplitude == 0.0 {
                continue;
            }
            let d = (c[0] - y[0]).hypot(c[1] - y[1]);
            let beta = (inc.shape.bounding_radius() / d).min(1.0).asin();
            let theta_c = (c[1] - y[1]).atan2(c[0] - y[0]);
            let n_theta = ((2.0 * beta * d * 8.0 / eta).ceil() as usize).max(256);
            let dth = 2.0 * beta / n_theta as f64;
            let mut interior = 0.0;
            for a in 0..n_theta {
                let th = theta_c - beta + (a as f64 + 0.5) * dth;
                let xi = [th.cos(), th.sin()];
                let Some((s_in, s_out)) = inc.shape.ray_interval(y, xi) else {
                    continue;
                };
                let (a0, b0) = (s_in.max(lo), s_out.min(hi));
                if b0 <= a0 {
                    continue;
                }
                let panels = 4;
                let pw = (b0 - a0) / panels as f64;
                let mut line = 0.0;
                for p in 0..panels {
                    let mid = a0 + (p as f64 + 0.5) * pw;
                    for &(x, wgt) in &GL6 {
                        let s = mid + 0.5 * pw * x;
                        let pt = [y[0] + s * xi[0], y[1] + s * xi[1]];
                        let g = inc.gradient(pt[0], pt[1]);
                        let ds_a = g[0] * xi[0] + g[1] * xi[1];
                        if ds_a != 0.0 {
                            line += wgt * 0.5 * pw * ds_a * kernel(pt, xi, s);
                        }
                    }
                }
                interior += line;
            }
            total -= interior * dth;
        }
        total
    }

    /// `(1/η²) ∫_{∂Ω} (f ∂νΦ^g_u - g ∂νΦ^f)`.
    pub fn cross_correlation(
        &self,
        y: [f64; 2],
        r: f64,
        f: &BoundaryTrace,
        g: &BoundaryTrace,
    ) -> Result<f64> {
        if f.values().iter().chain(g.values()).any(|&v| v < 0.0) {
            return Err(Error::validation("illuminations must be non-negative"));
        }
        let delta = if self.phantom.inclusions.is_empty() {
            Vec::new()
        } else {
            self.perturbation(y, r)?
        };
        let sol_f = self.solver.solve_t(f)?;
        let sol_g = self.solver.solve_t(g)?;
        let (phi_gu, _) = self.solver.solve_perturbed(&delta, &sol_g.phi)?;
        let flux_gu = self.solver.flux(&phi_gu, g);
        let h = f.weight();
        let s: f64 = f
            .values()
            .iter()
            .zip(g.values())
            .zip(flux_gu.values().iter().zip(sol_f.flux.values()))
            .map(|((fv, gv), (fu, ff))| fv * fu - gv * ff)
            .sum();
        Ok(h * s / self.config.eta().powi(2))
    }

    /// Boundary data the model was built with.
    pub fn illumination(&self) -> &BoundaryTrace {
        &self.g
    }

    pub fn cell(&self, which: Measurement, y: [f64; 2], r: f64) -> Result<f64> {
        match which {
            Measurement::MEta => self.m_eta(y, r),
            Measurement::MTilde => Ok(self.m_tilde(y, r)),
        }
    }
}

/// Dense sweep over all sources and radii. Cells with `r <= r0` are zero.
pub fn sample_sinogram(
    model: &MeasurementModel,
    ny: usize,
    nr: usize,
    which: Measurement,
) -> Result<Sinogram> {
    let mut sino = Sinogram::zeros(*model.config(), ny, nr)?;
    let q0 = sino.first_active();
    for m in 0..ny {
        let y = sino.source(m);
        for q in q0..nr {
            let r = sino.r(q);
            let v = model.cell(which, y, r).map_err(|e| match e {
                Error::RootSolve { .. } | Error::NoConvergence { .. } | Error::Numerical(_) => {
                    Error::Numerical(format!("cell ({m}, {q}): {e}"))
                }
                other => other,
            })?;
            sino.set(m, q, v);
        }
    }
    Ok(sino)
}

pub fn measure_m_eta(
    phantom: &Phantom,
    config: AcousticConfig,
    grid: Grid,
    l: f64,
    g: f64,
    y: [f64; 2],
    r: f64,
) -> Result<f64> {
    MeasurementModel::new(phantom, config, grid, l, BoundaryTrace::constant(grid, g), Quadrature::Grid)?
        .m_eta(y, r)
}

pub fn measure_mtilde(
    phantom: &Phantom,
    config: AcousticConfig,
    phi: &ScalarField,
    y: [f64; 2],
    r: f64,
) -> f64 {
    let grid = phi.grid();
    let a = phantom.sample_cell_average(grid, BASE_SUPERSAMPLE);
    let v: VectorField = super::displacement_v(&config, y, r, grid);
    let p2 = phi.map(|p| p * p);
    let div = divergence(&v.scale_by(&p2));
    let mut s = 0.0;
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        s += grid.weight(i, j) * (a.values()[k] - phantom.a0) * div.values()[k];
    }
    s / config.eta().powi(2)
}

pub fn measure_cross_correlation(
    phantom: &Phantom,
    config: AcousticConfig,
    grid: Grid,
    l: f64,
    y: [f64; 2],
    r: f64,
    f: &BoundaryTrace,
    g: &BoundaryTrace,
) -> Result<f64> {
    MeasurementModel::new(phantom, config, grid, l, g.clone(), Quadrature::Grid)?
        .cross_correlation(y, r, f, g)
}
