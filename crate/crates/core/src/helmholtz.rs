//! Weak Helmholtz decomposition of `U = Φ² ∇a` into `∇ψ` plus a
//! divergence-free remainder.

use crate::error::Result;
use crate::fields::stencil::DirichletLaplacian;
use crate::fields::{
    divergence, gradient, laplacian5, partial_transpose_add, subtract_mean, Grid, ScalarField,
    VectorField,
};
use crate::phantom::Phantom;

/// Sub-samples per axis when averaging the phantom over grid cells.
pub const CELL_SUBSAMPLES: usize = 4;

/// The distribution `U(v) = -∫ (a - a0) ∇·(Φ² v)`.
#[derive(Debug, Clone)]
pub struct WeakVectorFunctional {
    contrast: ScalarField,
    phi_sq: ScalarField,
}

impl WeakVectorFunctional {
    /// `a - a0` is the cell average of the phantom, so jumps are resolved at
    /// sub-cell accuracy.
    pub fn new(phantom: &Phantom, phi: &ScalarField) -> Self {
        let grid = phi.grid();
        let a0 = phantom.a0;
        let contrast = phantom.sample_cell_average(grid, CELL_SUBSAMPLES).map(|v| v - a0);
        Self::from_contrast(contrast, phi)
    }

    pub fn from_contrast(contrast: ScalarField, phi: &ScalarField) -> Self {
        WeakVectorFunctional {
            phi_sq: phi.map(|v| v * v),
            contrast,
        }
    }

    pub fn grid(&self) -> Grid {
        self.phi_sq.grid()
    }

    pub fn contrast(&self) -> &ScalarField {
        &self.contrast
    }

    /// Evaluates `U(v)` with trapezoid weights and the discrete divergence.
    pub fn eval(&self, v: &VectorField) -> f64 {
        let grid = self.grid();
        let w = grid.weights();
        let q = v.scale_by(&self.phi_sq);
        let div = divergence(&q);
        -div
            .values()
            .iter()
            .zip(self.contrast.values())
            .zip(&w)
            .map(|((d, c), w)| d * c * w)
            .sum::<f64>()
    }

    /// Dual vector of component `j`: entry `k` is `U(e_j δ_k)`.
    pub fn dual_component(&self, axis: usize) -> Vec<f64> {
        let grid = self.grid();
        let w = grid.weights();
        let wc: Vec<f64> = self.contrast.values().iter().zip(&w).map(|(c, w)| c * w).collect();
        let mut t = vec![0.0; grid.len()];
        partial_transpose_add(grid, &wc, axis, &mut t);
        t.iter()
            .zip(self.phi_sq.values())
            .map(|(t, p2)| -t * p2)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    GroundTruth,
    FromMeasurements,
}

#[derive(Debug, Clone)]
pub struct PsiField {
    pub psi: ScalarField,
    pub provenance: Provenance,
}

/// Riesz representative `u` with `-Δu_j = U_j`, zero on `∂Ω`, and the
/// potential `ψ = ∇·u` with zero mean.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u: VectorField,
    pub psi: PsiField,
}

pub fn decompose(functional: &WeakVectorFunctional) -> Result<Decomposition> {
    let grid = functional.grid();
    let mut lap = DirichletLaplacian::full(grid);
    lap.factorize()?;
    let (ux, _) = lap.solve(&functional.dual_component(0))?;
    let (uy, _) = lap.solve(&functional.dual_component(1))?;
    let u = VectorField::from_raw(grid, ux, uy);
    let mut psi = divergence(&u);
    subtract_mean(&mut psi);
    Ok(Decomposition {
        u,
        psi: PsiField {
            psi,
            provenance: Provenance::GroundTruth,
        },
    })
}

/// `ψ` of the exact forward model.
pub fn ground_truth_psi(phantom: &Phantom, phi: &ScalarField) -> Result<PsiField> {
    Ok(decompose(&WeakVectorFunctional::new(phantom, phi))?.psi)
}

/// `U(∇v) - ∫ ψ Δv` for a test function `v`; vanishes up to solver
/// tolerance when `v` and its Laplacian are supported away from `∂Ω`.
pub fn orthogonality_residual(functional: &WeakVectorFunctional, psi: &ScalarField, v: &ScalarField) -> f64 {
    let grid = functional.grid();
    let lhs = functional.eval(&gradient(v));
    let lap = laplacian5(v);
    let w = grid.weights();
    let rhs: f64 = psi
        .values()
        .iter()
        .zip(lap.values())
        .zip(&w)
        .map(|((p, l), w)| p * l * w)
        .sum();
    lhs - rhs
}

/// Whole-plane potential `ψ = div u` with `-Δu = U` in `R²`:
/// `ψ(x) = -(a - a0) Φ²(x) + (1/2π) ∫ (a - a0) ∇Φ²(z)·(x - z)/|x - z|² dz`.
///
/// Unlike [`decompose`] it needs no boundary condition on `∂Ω`, and its
/// circular means are available in closed form.
#[derive(Debug, Clone)]
pub struct FreeSpacePotential {
    local: ScalarField,
    sources: Vec<([f64; 2], [f64; 2])>,
    h: f64,
}

impl FreeSpacePotential {
    pub fn new(functional: &WeakVectorFunctional) -> Self {
        let grid = functional.grid();
        let local = functional
            .contrast
            .zip_map(&functional.phi_sq, |c, p2| -c * p2);
        let grad = gradient(&functional.phi_sq);
        let mut sources = Vec::new();
        for k in 0..grid.len() {
            let c = functional.contrast.values()[k];
            if c == 0.0 {
                continue;
            }
            let (i, j) = grid.ij(k);
            let w = grid.weight(i, j) * c / (2.0 * std::f64::consts::PI);
            sources.push((grid.point(k), [w * grad.x()[k], w * grad.y()[k]]));
        }
        FreeSpacePotential {
            local,
            sources,
            h: grid.h(),
        }
    }

    /// Point value; the source cell containing `x` is skipped.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let mut s = self.local.interpolate(x, y);
        for (z, g) in &self.sources {
            let dx = x - z[0];
            let dy = y - z[1];
            let d2 = dx * dx + dy * dy;
            if d2 > 0.25 * self.h * self.h {
                s += (g[0] * dx + g[1] * dy) / d2;
            }
        }
        s
    }

    /// `∫_{S¹} ψ(y + rξ) dξ` over the full circle. The kernel is a gradient
    /// of the logarithm, so a source contributes its value at the center
    /// when it lies outside the circle and nothing when inside; each source
    /// is smeared over one cell in `r`.
    pub fn circular_integral(&self, y: [f64; 2], r: f64) -> f64 {
        let mut s = crate::radon::circular_mean(&self.local, y, r);
        let two_pi = 2.0 * std::f64::consts::PI;
        for (z, g) in &self.sources {
            let dx = y[0] - z[0];
            let dy = y[1] - z[1];
            let d2 = dx * dx + dy * dy;
            let outside = ((d2.sqrt() - r) / self.h + 0.5).clamp(0.0, 1.0);
            if outside > 0.0 {
                s += outside * two_pi * (g[0] * dx + g[1] * dy) / d2;
            }
        }
        s
    }

    pub fn radon(
        &self,
        config: &crate::acousto::AcousticConfig,
        ny: usize,
        nr: usize,
    ) -> Result<crate::acousto::Sinogram> {
        let mut s = crate::acousto::Sinogram::zeros(*config, ny, nr)?;
        for m in 0..ny {
            let y = s.source(m);
            for q in s.first_active()..nr {
                let v = self.circular_integral(y, s.r(q));
                s.set(m, q, v);
            }
        }
        Ok(s)
    }
}
