//! Piecewise-smooth absorption phantoms: a background value with disjoint
//! disk or ellipse inclusions, each carrying a constant base value plus a C²
//! bump that vanishes to second order on the rim.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::tolerances::{CURVATURE_TOL, RIM_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Semi-axes `a`, `b`, the first axis rotated by `angle` radians.
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        angle: f64,
    },
}

/// Point on a rim with its outward normal and curvature.
#[derive(Debug, Clone, Copy)]
pub struct RimPoint {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
    /// Arc-length element `|x'(t)|`.
    pub speed: f64,
}

impl Shape {
    pub fn center(&self) -> [f64; 2] {
        match *self {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => center,
        }
    }

    /// Radius of a disk around the center containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => radius,
            Shape::Ellipse { a, b, .. } => a.max(b),
        }
    }

    /// Axis-aligned half extents.
    pub fn half_extent(&self) -> [f64; 2] {
        match *self {
            Shape::Disk { radius, .. } => [radius, radius],
            Shape::Ellipse { a, b, angle, .. } => {
                let (s, c) = angle.sin_cos();
                [(a * c).hypot(b * s), (a * s).hypot(b * c)]
            }
        }
    }

    /// Squared normalized radius: `<= 1` inside the closed shape.
    #[inline]
    pub fn level(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Disk { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                (dx * dx + dy * dy) / (radius * radius)
            }
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let dx = x - center[0];
                let dy = y - center[1];
                let u = (c * dx + s * dy) / a;
                let v = (-s * dx + c * dy) / b;
                u * u + v * v
            }
        }
    }

    /// Gradient of [`Shape::level`].
    #[inline]
    pub fn level_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match *self {
            Shape::Disk { center, radius } => {
                let r2 = radius * radius;
                [2.0 * (x - center[0]) / r2, 2.0 * (y - center[1]) / r2]
            }
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let dx = x - center[0];
                let dy = y - center[1];
                let u = (c * dx + s * dy) / a;
                let v = (-s * dx + c * dy) / b;
                let gu = 2.0 * u / a;
                let gv = 2.0 * v / b;
                [c * gu - s * gv, s * gu + c * gv]
            }
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.level(x, y) <= 1.0
    }

    /// Rim point at parameter `t`; the parameter origin is the direction
    /// `phase` measured from the shape's first axis.
    pub fn rim(&self, t: f64) -> RimPoint {
        match *self {
            Shape::Disk { center, radius } => {
                let (s, c) = t.sin_cos();
                RimPoint {
                    point: [center[0] + radius * c, center[1] + radius * s],
                    normal: [c, s],
                    curvature: 1.0 / radius,
                    speed: radius,
                }
            }
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (st, ct) = t.sin_cos();
                let (sa, ca) = angle.sin_cos();
                let px = a * ct;
                let py = b * st;
                let nx = b * ct;
                let ny = a * st;
                let nn = nx.hypot(ny);
                let speed = (a * st).hypot(b * ct);
                RimPoint {
                    point: [center[0] + ca * px - sa * py, center[1] + sa * px + ca * py],
                    normal: [(ca * nx - sa * ny) / nn, (sa * nx + ca * ny) / nn],
                    curvature: a * b / speed.powi(3),
                    speed,
                }
            }
        }
    }

    /// Rim parameter whose point lies in direction `phi` from the center.
    pub fn rim_parameter_toward(&self, phi: f64) -> f64 {
        match *self {
            Shape::Disk { .. } => phi,
            Shape::Ellipse { a, b, angle, .. } => {
                let d = phi - angle;
                (a * d.sin()).atan2(b * d.cos())
            }
        }
    }

    /// Entry and exit distances of the ray `y + s ξ` (`s >= 0`) through the
    /// closed shape.
    pub fn ray_interval(&self, y: [f64; 2], xi: [f64; 2]) -> Option<(f64, f64)> {
        let (c, pa, pb, (sn, cs)) = match *self {
            Shape::Disk { center, radius } => (center, radius, radius, (0.0, 1.0)),
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => (center, a, b, angle.sin_cos()),
        };
        let dx = y[0] - c[0];
        let dy = y[1] - c[1];
        let ou = (cs * dx + sn * dy) / pa;
        let ov = (-sn * dx + cs * dy) / pb;
        let du = (cs * xi[0] + sn * xi[1]) / pa;
        let dv = (-sn * xi[0] + cs * xi[1]) / pb;
        let qa = du * du + dv * dv;
        let qb = 2.0 * (ou * du + ov * dv);
        let qc = ou * ou + ov * ov - 1.0;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let s0 = (-qb - sq) / (2.0 * qa);
        let s1 = (-qb + sq) / (2.0 * qa);
        if s1 <= 0.0 {
            return None;
        }
        Some((s0.max(0.0), s1))
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
        }
    }

    fn translated(&self, d: [f64; 2]) -> Shape {
        match *self {
            Shape::Disk { center, radius } => Shape::Disk {
                center: [center[0] + d[0], center[1] + d[1]],
                radius,
            },
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => Shape::Ellipse {
                center: [center[0] + d[0], center[1] + d[1]],
                a,
                b,
                angle,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub shape: Shape,
    pub base: f64,
    pub amplitude: f64,
}

impl Inclusion {
    /// Bump profile `(1 - s²)³` on the normalized radius.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> Option<f64> {
        let q = self.shape.level(x, y);
        if q <= 1.0 {
            let t = 1.0 - q;
            Some(self.base + self.amplitude * t * t * t)
        } else {
            None
        }
    }

    /// Gradient of the inclusion's own smooth extension inside the shape.
    #[inline]
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let q = self.shape.level(x, y);
        if q >= 1.0 {
            return [0.0, 0.0];
        }
        let t = 1.0 - q;
        let g = self.shape.level_gradient(x, y);
        let c = -3.0 * self.amplitude * t * t;
        [c * g[0], c * g[1]]
    }

    pub fn value_range(&self) -> (f64, f64) {
        let top = self.base + self.amplitude;
        (self.base.min(top), self.base.max(top))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub a0: f64,
    pub lower: f64,
    pub upper: f64,
    /// Margin of the square `D = [m, 1 - m]²` that holds every inclusion.
    pub d_margin: f64,
    pub inclusions: Vec<Inclusion>,
}

impl Phantom {
    pub fn new(
        a0: f64,
        lower: f64,
        upper: f64,
        d_margin: f64,
        inclusions: Vec<Inclusion>,
    ) -> Result<Self> {
        let p = Phantom {
            a0,
            lower,
            upper,
            d_margin,
            inclusions,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        let vals = [self.a0, self.lower, self.upper, self.d_margin];
        if vals.iter().any(|v| !v.is_finite()) {
            return bad("phantom parameters must be finite".into());
        }
        if self.lower <= 0.0 {
            return bad(format!("lower bound must be positive, got {}", self.lower));
        }
        if !(self.lower <= self.a0 && self.a0 <= self.upper) {
            return bad(format!(
                "background {} outside bounds [{}, {}]",
                self.a0, self.lower, self.upper
            ));
        }
        if !(0.1..0.5).contains(&self.d_margin) {
            return bad(format!(
                "margin of D must lie in [0.1, 0.5), got {}",
                self.d_margin
            ));
        }
        let lo = self.d_margin;
        let hi = 1.0 - self.d_margin;
        for (idx, inc) in self.inclusions.iter().enumerate() {
            let c = inc.shape.center();
            let e = inc.shape.half_extent();
            match inc.shape {
                Shape::Disk { radius, .. } if !(radius > 0.0) => {
                    return bad(format!("inclusion {idx}: radius must be positive"));
                }
                Shape::Ellipse { a, b, angle, .. } if !(a > 0.0 && b > 0.0 && angle.is_finite()) => {
                    return bad(format!("inclusion {idx}: semi-axes must be positive"));
                }
                _ => {}
            }
            if !(c[0] - e[0] > lo && c[0] + e[0] < hi && c[1] - e[1] > lo && c[1] + e[1] < hi) {
                return bad(format!("inclusion {idx} is not strictly inside D"));
            }
            let (vmin, vmax) = inc.value_range();
            if !(vmin >= self.lower && vmax <= self.upper) {
                return bad(format!(
                    "inclusion {idx}: values [{vmin}, {vmax}] leave [{}, {}]",
                    self.lower, self.upper
                ));
            }
        }
        for i in 0..self.inclusions.len() {
            for j in i + 1..self.inclusions.len() {
                if overlap(&self.inclusions[i].shape, &self.inclusions[j].shape) {
                    return bad(format!("inclusions {i} and {j} overlap"));
                }
            }
        }
        Ok(())
    }

    /// Coefficient at a point.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        for inc in &self.inclusions {
            if let Some(v) = inc.value(x, y) {
                return v;
            }
        }
        self.a0
    }

    /// Index of the inclusion containing the point.
    pub fn which(&self, x: f64, y: f64) -> Option<usize> {
        self.inclusions.iter().position(|i| i.shape.contains(x, y))
    }

    pub fn sample(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| self.value(x, y))
    }

    /// Coefficient at displaced nodes, `a(x + disp(x))`.
    pub fn sample_displaced(&self, grid: Grid, disp: &crate::fields::VectorField) -> ScalarField {
        let mut out = vec![0.0; grid.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let [x, y] = grid.point(k);
            *o = self.value(x + disp.x()[k], y + disp.y()[k]);
        }
        ScalarField::from_raw(grid, out)
    }

    /// Average over each node's dual cell with `sub × sub` midpoint samples,
    /// evaluated only where the cell can meet an inclusion.
    pub fn sample_cell_average(&self, grid: Grid, sub: usize) -> ScalarField {
        let h = grid.h();
        let mut out = vec![self.a0; grid.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let [x, y] = grid.point(k);
            let near = self.inclusions.iter().any(|inc| {
                let c = inc.shape.center();
                let e = inc.shape.half_extent();
                (x - c[0]).abs() <= e[0] + h && (y - c[1]).abs() <= e[1] + h
            });
            if near {
                *o = self.cell_average_at(grid, x, y, sub);
            }
        }
        ScalarField::from_raw(grid, out)
    }

    fn cell_average_at(&self, grid: Grid, x: f64, y: f64, sub: usize) -> f64 {
        let h = grid.h();
        let x0 = (x - 0.5 * h).max(0.0);
        let x1 = (x + 0.5 * h).min(1.0);
        let y0 = (y - 0.5 * h).max(0.0);
        let y1 = (y + 0.5 * h).min(1.0);
        let mut s = 0.0;
        for b in 0..sub {
            let py = y0 + (b as f64 + 0.5) * (y1 - y0) / sub as f64;
            for a in 0..sub {
                let px = x0 + (a as f64 + 0.5) * (x1 - x0) / sub as f64;
                s += self.value(px, py);
            }
        }
        s / (sub * sub) as f64
    }

    /// Nodal membership of every inclusion.
    pub fn inclusion_masks(&self, grid: Grid) -> Vec<Vec<bool>> {
        self.inclusions
            .iter()
            .map(|inc| {
                (0..grid.len())
                    .map(|k| {
                        let [x, y] = grid.point(k);
                        inc.shape.contains(x, y)
                    })
                    .collect()
            })
            .collect()
    }

    /// Nodes of the closed square `D`.
    pub fn d_mask(&self, grid: Grid) -> Vec<bool> {
        let lo = self.d_margin;
        let hi = 1.0 - self.d_margin;
        (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                x >= lo - 1e-12 && x <= hi + 1e-12 && y >= lo - 1e-12 && y <= hi + 1e-12
            })
            .collect()
    }

    pub fn translated(&self, d: [f64; 2]) -> Phantom {
        Phantom {
            inclusions: self
                .inclusions
                .iter()
                .map(|i| Inclusion {
                    shape: i.shape.translated(d),
                    ..*i
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Transversality test between the shell `r - η < |x - y| < r + η` and
    /// every rim. A rim point inside the shell fails when the ray from `y`
    /// is within `delta` radians of the rim normal (either orientation) and
    /// the rim curvature matches that of the circle through the point.
    pub fn check_h_condition(&self, y: [f64; 2], r: f64, eta: f64, delta: f64) -> bool {
        for inc in &self.inclusions {
            for s in 0..RIM_SAMPLES {
                let t = 2.0 * PI * s as f64 / RIM_SAMPLES as f64;
                let p = inc.shape.rim(t);
                let dx = p.point[0] - y[0];
                let dy = p.point[1] - y[1];
                let d = dx.hypot(dy);
                if d <= r - eta || d >= r + eta || d == 0.0 {
                    continue;
                }
                let cos = ((dx * p.normal[0] + dy * p.normal[1]) / d).abs().min(1.0);
                let angle = cos.acos();
                if angle <= delta && (p.curvature - 1.0 / d).abs() <= CURVATURE_TOL {
                    return false;
                }
            }
        }
        true
    }

    pub fn from_json_str(s: &str) -> Result<Phantom> {
        let file: PhantomFile = serde_json::from_str(s)?;
        file.into_phantom()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PhantomFile::from(self))?)
    }

    pub fn load(path: &Path) -> Result<Phantom> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

fn overlap(a: &Shape, b: &Shape) -> bool {
    if let (Shape::Disk { center: c1, radius: r1 }, Shape::Disk { center: c2, radius: r2 }) = (a, b) {
        return (c1[0] - c2[0]).hypot(c1[1] - c2[1]) <= r1 + r2;
    }
    let ca = a.center();
    let cb = b.center();
    if (ca[0] - cb[0]).hypot(ca[1] - cb[1]) > a.bounding_radius() + b.bounding_radius() {
        return false;
    }
    if a.contains(cb[0], cb[1]) || b.contains(ca[0], ca[1]) {
        return true;
    }
    (0..RIM_SAMPLES).any(|s| {
        let t = 2.0 * PI * s as f64 / RIM_SAMPLES as f64;
        let p = a.rim(t).point;
        let q = b.rim(t).point;
        b.contains(p[0], p[1]) || a.contains(q[0], q[1])
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct InclusionFile {
    shape: String,
    params: Vec<f64>,
    base: f64,
    amplitude: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PhantomFile {
    a0: f64,
    lower: f64,
    upper: f64,
    #[serde(rename = "D_margin")]
    d_margin: f64,
    inclusions: Vec<InclusionFile>,
}

impl PhantomFile {
    fn into_phantom(self) -> Result<Phantom> {
        let mut inclusions = Vec::with_capacity(self.inclusions.len());
        for (idx, inc) in self.inclusions.into_iter().enumerate() {
            let p = &inc.params;
            let shape = match (inc.shape.as_str(), p.len()) {
                ("disk", 3) => Shape::Disk {
                    center: [p[0], p[1]],
                    radius: p[2],
                },
                ("ellipse", 5) => Shape::Ellipse {
                    center: [p[0], p[1]],
                    a: p[2],
                    b: p[3],
                    angle: p[4],
                },
                (s, len) => {
                    return Err(Error::validation(format!(
                        "inclusion {idx}: unknown shape '{s}' with {len} parameters"
                    )))
                }
            };
            inclusions.push(Inclusion {
                shape,
                base: inc.base,
                amplitude: inc.amplitude,
            });
        }
        Phantom::new(self.a0, self.lower, self.upper, self.d_margin, inclusions)
    }
}

impl From<&Phantom> for PhantomFile {
    fn from(p: &Phantom) -> Self {
        PhantomFile {
            a0: p.a0,
            lower: p.lower,
            upper: p.upper,
            d_margin: p.d_margin,
            inclusions: p
                .inclusions
                .iter()
                .map(|inc| {
                    let (shape, params) = match inc.shape {
                        Shape::Disk { center, radius } => {
                            ("disk", vec![center[0], center[1], radius])
                        }
                        Shape::Ellipse {
                            center,
                            a,
                            b,
                            angle,
                        } => ("ellipse", vec![center[0], center[1], a, b, angle]),
                    };
                    InclusionFile {
                        shape: shape.into(),
                        params,
                        base: inc.base,
                        amplitude: inc.amplitude,
                    }
                })
                .collect(),
        }
    }
}

/// Reference phantoms used by tests, examples and the command-line driver.
pub mod presets {
    use super::*;

    /// One off-center disk.
    pub fn single_disk() -> Phantom {
        Phantom::new(
            1.0,
            0.5,
            2.0,
            0.15,
            vec![Inclusion {
                shape: Shape::Disk {
                    center: [0.45, 0.55],
                    radius: 0.2,
                },
                base: 1.5,
                amplitude: 0.3,
            }],
        )
        .expect("preset is valid")
    }

    pub fn two_disks() -> Phantom {
        Phantom::new(
            1.0,
            0.5,
            2.0,
            0.15,
            vec![
                Inclusion {
                    shape: Shape::Disk {
                        center: [0.34, 0.36],
                        radius: 0.13,
                    },
                    base: 1.5,
                    amplitude: 0.2,
                },
                Inclusion {
                    shape: Shape::Disk {
                        center: [0.64, 0.64],
                        radius: 0.14,
                    },
                    base: 0.7,
                    amplitude: 0.15,
                },
            ],
        )
        .expect("preset is valid")
    }

    pub fn ellipse() -> Phantom {
        Phantom::new(
            1.0,
            0.5,
            2.0,
            0.15,
            vec![Inclusion {
                shape: Shape::Ellipse {
                    center: [0.5, 0.48],
                    a: 0.24,
                    b: 0.14,
                    angle: 0.4,
                },
                base: 1.6,
                amplitude: 0.25,
            }],
        )
        .expect("preset is valid")
    }

    /// Background only, with the bounds and margin of the other presets.
    pub fn empty() -> Phantom {
        Phantom::new(1.0, 0.5, 2.0, 0.15, vec![]).expect("preset is valid")
    }

    pub fn by_name(name: &str) -> Option<Phantom> {
        match name {
            "empty" => Some(empty()),
            "disk" => Some(single_disk()),
            "two-disks" => Some(two_disks()),
            "ellipse" => Some(ellipse()),
            _ => None,
        }
    }
}
