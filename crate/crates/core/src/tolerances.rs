//! Numerical tolerances shared across modules.

/// Relative residual at which conjugate gradients stops.
pub const CG_REL_TOL: f64 = 1e-10;

/// Iteration cap for conjugate gradients, per grid node along one side.
pub const CG_ITER_PER_NODE: usize = 50;

/// Radial inverse of the acoustic map: absolute tolerance and iteration cap.
pub const ROOT_TOL: f64 = 1e-12;
pub const ROOT_MAX_ITER: usize = 50;

/// Quadrature accuracy for the profile integral.
pub const PROFILE_QUAD_TOL: f64 = 1e-14;

/// Radon inversion by regularized normal equations.
pub const RADON_CG_TOL: f64 = 1e-8;
pub const RADON_CG_MAX_ITER: usize = 500;
pub const RADON_TIKHONOV: f64 = 1e-6;

/// Minimum number of angular samples on a circle.
pub const RADON_MIN_ANGLES: usize = 64;

/// Sampled rim points for the transversality test.
pub const RIM_SAMPLES: usize = 4096;

/// Curvature comparison tolerance in the transversality test.
pub const CURVATURE_TOL: f64 = 1e-3;

/// Default angular margin (degrees) in the transversality test.
pub const TRANSVERSAL_ANGLE_DEG: f64 = 5.0;

/// Power iterations for the Landweber operator norm.
pub const POWER_ITERATIONS: usize = 20;

/// Landweber step safety factor and halving schedule.
pub const STEP_SAFETY: f64 = 0.9;
pub const INCREASES_BEFORE_HALVING: usize = 5;
pub const MAX_HALVINGS: usize = 3;

/// Coordinate descent passes for the piecewise-constant search.
pub const DESCENT_PASSES: usize = 3;

/// Largest number of inclusions searched exhaustively.
pub const EXHAUSTIVE_MAX_INCLUSIONS: usize = 3;

/// Potential recovery from disk fluxes: gradient penalty weight and solver
/// controls.
pub const FLUX_TIKHONOV: f64 = 0.1;
pub const FLUX_CG_TOL: f64 = 1e-10;
pub const FLUX_CG_MAX_ITER: usize = 1000;

/// Width of the rim band left out of the test space, in units of length.
pub const RIM_MARGIN: f64 = 0.04;

/// Default spacing of the piecewise-constant search lattice.
pub const PARTITION_STEP: f64 = 0.125;
