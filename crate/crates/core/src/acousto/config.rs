use serde::{Deserialize, Serialize};

use super::profile;
use crate::error::{Error, Point, Result};
use crate::fields::Grid;
use crate::tolerances::{ROOT_MAX_ITER, ROOT_TOL};

/// Acquisition geometry: sources on the circle of radius `mu` around the
/// center of the square, wave radii in `[0, big_r]`, data kept beyond `r0`,
/// wavefront half thickness `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFile", into = "GeometryFile")]
pub struct AcousticConfig {
    mu: f64,
    r0: f64,
    big_r: f64,
    eta: f64,
    w_l1: f64,
    w_prime_max: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GeometryFile {
    mu: f64,
    r0: f64,
    #[serde(rename = "R")]
    big_r: f64,
    eta: f64,
}

impl TryFrom<GeometryFile> for AcousticConfig {
    type Error = Error;
    fn try_from(g: GeometryFile) -> Result<Self> {
        AcousticConfig::new(g.mu, g.r0, g.big_r, g.eta)
    }
}

impl From<AcousticConfig> for GeometryFile {
    fn from(c: AcousticConfig) -> Self {
        GeometryFile {
            mu: c.mu,
            r0: c.r0,
            big_r: c.big_r,
            eta: c.eta,
        }
    }
}

pub const CENTER: [f64; 2] = [0.5, 0.5];
const HALF_DIAGONAL: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl AcousticConfig {
    pub fn new(mu: f64, r0: f64, big_r: f64, eta: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::Validation(m));
        if ![mu, r0, big_r, eta].iter().all(|v| v.is_finite()) {
            return bad("acoustic parameters must be finite".into());
        }
        if mu <= HALF_DIAGONAL {
            return bad(format!("source radius {mu} does not clear the square"));
        }
        if !(0.0 < r0 && r0 < big_r) {
            return bad(format!("need 0 < r0 < R, got r0 = {r0}, R = {big_r}"));
        }
        if r0 > mu - HALF_DIAGONAL + 1e-12 {
            return bad(format!("r0 = {r0} exceeds mu - sqrt(2)/2"));
        }
        if big_r < mu + HALF_DIAGONAL - 1e-12 {
            return bad(format!("R = {big_r} is below mu + sqrt(2)/2"));
        }
        if !(eta > 0.0 && eta < 0.5 * r0) {
            return bad(format!("eta must lie in (0, r0/2), got {eta}"));
        }
        Ok(AcousticConfig {
            mu,
            r0,
            big_r,
            eta,
            w_l1: profile::l1_norm(),
            w_prime_max: profile::w_prime_max(),
        })
    }

    pub fn default_geometry() -> Self {
        Self::new(1.0, 0.25, 1.75, 0.02).expect("default geometry is valid")
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.mu, self.r0, self.big_r, eta)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn big_r(&self) -> f64 {
        self.big_r
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn center(&self) -> [f64; 2] {
        CENTER
    }

    /// `∫ w` over `]-1, 1[`.
    pub fn w_l1(&self) -> f64 {
        self.w_l1
    }

    pub fn w_prime_max(&self) -> f64 {
        self.w_prime_max
    }

    /// Below this radius the radial map `s ↦ s + V(s)` may fail to be
    /// monotone.
    pub fn monotone_radius(&self) -> f64 {
        self.r0 * self.w_prime_max
    }

    /// The thin-shell trapezoid quadrature needs `n >= 4/η`.
    pub fn check_grid(&self, grid: Grid) -> Result<()> {
        let need = (4.0 / self.eta).ceil() as usize;
        if grid.n() < need {
            return Err(Error::validation(format!(
                "grid with {} nodes cannot resolve eta = {}; need n >= {need}",
                grid.n(),
                self.eta
            )));
        }
        Ok(())
    }

    /// Source `m` of `ny` equally spaced sources.
    pub fn source(&self, m: usize, ny: usize) -> [f64; 2] {
        let t = 2.0 * std::f64::consts::PI * m as f64 / ny as f64;
        [CENTER[0] + self.mu * t.cos(), CENTER[1] + self.mu * t.sin()]
    }

    /// Radius `q` of `nr` equally spaced radii on `[0, R]`.
    pub fn radius(&self, q: usize, nr: usize) -> f64 {
        q as f64 * self.big_r / (nr - 1) as f64
    }

    /// Largest radial displacement for wave radius `r`.
    pub fn max_shift(&self, r: f64) -> f64 {
        self.eta * self.r0 / r
    }

    /// Radial displacement `V(s) = η (r0/r) w((r - s)/η)` at distance `s`.
    #[inline]
    pub fn shift(&self, r: f64, s: f64) -> f64 {
        self.eta * self.r0 / r * profile::w((r - s) / self.eta)
    }

    #[inline]
    pub fn shift_prime(&self, r: f64, s: f64) -> f64 {
        -self.r0 / r * profile::w_prime((r - s) / self.eta)
    }

    /// Preimage distance under `s ↦ s + V(s)`: the largest `t <= rho` with
    /// `t + V(t) = rho`.
    pub fn inverse_radius(&self, r: f64, rho: f64) -> Option<f64> {
        let v_top = self.shift(r, rho);
        if v_top == 0.0 {
            return Some(rho);
        }
        let f = |t: f64| t + self.shift(r, t) - rho;
        let lo_limit = (rho - self.max_shift(r)).max(r - self.eta);
        let pieces = 16;
        let step = (rho - lo_limit) / pieces as f64;
        let mut hi = rho;
        let mut f_hi = v_top;
        for p in 1..=pieces {
            let lo = rho - p as f64 * step;
            let f_lo = f(lo);
            if f_lo <= 0.0 {
                return refine(f, |t| 1.0 + self.shift_prime(r, t), lo, hi, f_lo, f_hi);
            }
            hi = lo;
            f_hi = f_lo;
        }
        None
    }

    pub(crate) fn root_error(&self, y: [f64; 2], r: f64, node: usize) -> Error {
        Error::RootSolve {
            source_point: Point(y[0], y[1]),
            radius: r,
            node,
        }
    }
}

/// Safeguarded Newton on a bracket with `f(lo) <= 0 <= f(hi)`.
fn refine(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    f_lo: f64,
    f_hi: f64,
) -> Option<f64> {
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..ROOT_MAX_ITER {
        let ft = f(t);
        if ft == 0.0 {
            return Some(t);
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = df(t);
        let newton = t - ft / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= ROOT_TOL || hi - lo <= ROOT_TOL {
            return Some(next);
        }
        t = next;
    }
    None
}
