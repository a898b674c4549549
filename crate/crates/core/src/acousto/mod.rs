//! Acoustic perturbation of the optical field and the synthetic boundary
//! measurements derived from it.

mod config;
mod measure;
pub mod profile;
mod sinogram;

pub use config::{AcousticConfig, CENTER};
pub use measure::{
    measure_cross_correlation, measure_m_eta, measure_mtilde, sample_sinogram, Measurement,
    MeasurementModel, Quadrature,
};
pub use sinogram::Sinogram;

use crate::error::Result;
use crate::fields::{Grid, VectorField};

/// Wavefront displacement `v(x) = V(|x - y|) (x - y)/|x - y|`.
pub fn displacement_v(config: &AcousticConfig, y: [f64; 2], r: f64, grid: Grid) -> VectorField {
    VectorField::from_fn(grid, |px, py| {
        let dx = px - y[0];
        let dy = py - y[1];
        let s = dx.hypot(dy);
        if s == 0.0 {
            return [0.0, 0.0];
        }
        let v = config.shift(r, s);
        [v * dx / s, v * dy / s]
    })
}

/// Inverse displacement `u(x) = P⁻¹(x) - x` with `P(z) = z + v(z)`.
pub fn displacement_u(
    config: &AcousticConfig,
    y: [f64; 2],
    r: f64,
    grid: Grid,
) -> Result<VectorField> {
    let mut u = VectorField::zeros(grid);
    for k in 0..grid.len() {
        let [px, py] = grid.point(k);
        let dx = px - y[0];
        let dy = py - y[1];
        let s = dx.hypot(dy);
        if s <= r - config.eta() || s >= r + config.eta() {
            continue;
        }
        let t = config
            .inverse_radius(r, s)
            .ok_or_else(|| config.root_error(y, r, k))?;
        u.x_mut()[k] = (t - s) * dx / s;
        u.y_mut()[k] = (t - s) * dy / s;
    }
    Ok(u)
}

/// Preimage of a point under `P`, or the point itself off the shell.
#[inline]
pub(crate) fn preimage(
    config: &AcousticConfig,
    y: [f64; 2],
    r: f64,
    p: [f64; 2],
) -> Option<[f64; 2]> {
    let dx = p[0] - y[0];
    let dy = p[1] - y[1];
    let s = dx.hypot(dy);
    if s <= r - config.eta() || s >= r + config.eta() {
        return Some(p);
    }
    let t = config.inverse_radius(r, s)?;
    Some([y[0] + t * dx / s, y[1] + t * dy / s])
}
