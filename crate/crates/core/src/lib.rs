//! Acousto-optic tomography in two dimensions.
//!
//! A diffuse optical field is perturbed by a thin acoustic shell; boundary
//! measurements of the perturbation are turned into circular Radon data of a
//! potential, which is inverted, segmented and fed to a reconstruction of the
//! absorption coefficient.

pub mod error;
pub mod fields;
pub mod tolerances;

pub use error::{Error, Result};
pub mod acousto;
pub mod diffusion;
pub mod harness;
pub mod helmholtz;
pub mod inversion;
pub mod phantom;
pub mod radon;
pub mod segmentation;
