//! Inclusion boundaries as the jump set of the potential, closed into
//! connected masks.

use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fields::{gradient, Grid, ScalarField};
use crate::phantom::Phantom;

/// Components smaller than this many nodes are dropped as ringing.
pub const MIN_COMPONENT_AREA: usize = 9;

const OTSU_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    Otsu,
    Absolute(f64),
}

/// Nodal edge map with the threshold that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub grid: Grid,
    pub edges: Vec<bool>,
    pub threshold: f64,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionMask {
    pub grid: Grid,
    pub label: usize,
    pub nodes: Vec<bool>,
}

impl InclusionMask {
    pub fn area(&self) -> usize {
        self.nodes.iter().filter(|&&m| m).count()
    }

    /// Mask nodes with a four-neighbour outside the mask or on `∂Ω`.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let n = self.grid.n();
        (0..self.grid.len())
            .filter(|&k| {
                if !self.nodes[k] {
                    return false;
                }
                let (i, j) = self.grid.ij(k);
                self.grid.is_boundary(i, j)
                    || !self.nodes[k - 1]
                    || !self.nodes[k + 1]
                    || !self.nodes[k - n]
                    || !self.nodes[k + n]
            })
            .collect()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let mut c = [0.0, 0.0];
        let mut count = 0.0;
        for k in (0..self.grid.len()).filter(|&k| self.nodes[k]) {
            let p = self.grid.point(k);
            c[0] += p[0];
            c[1] += p[1];
            count += 1.0;
        }
        [c[0] / count, c[1] / count]
    }

    /// Physical area `h² · #nodes`.
    pub fn measure(&self) -> f64 {
        self.area() as f64 * self.grid.h().powi(2)
    }
}

/// `|∇ψ| h` at every node.
pub fn edge_strength(psi: &ScalarField) -> ScalarField {
    let h = psi.grid().h();
    let g = gradient(psi);
    let v = g
        .x()
        .iter()
        .zip(g.y())
        .map(|(x, y)| x.hypot(*y) * h)
        .collect();
    ScalarField::new(psi.grid(), v).expect("same grid")
}

/// Otsu's threshold of a sample on a fixed-width histogram. Returns `None`
/// when all values coincide.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / OTSU_BINS as f64;
    let mut hist = [0usize; OTSU_BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(OTSU_BINS - 1);
        hist[b] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| b as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0);
    for (b, &c) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += c as f64;
        sum0 += b as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best.0 {
            best = (between, b);
        }
    }
    Some(lo + (best.1 + 1) as f64 * width)
}

/// Nodes whose `|∇ψ| h` exceeds the threshold.
pub fn detect_edges(psi: &ScalarField, mode: ThresholdMode) -> Result<EdgeMap> {
    let grid = psi.grid();
    if psi.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("potential has non-finite values"));
    }
    let s = edge_strength(psi);
    let threshold = match mode {
        ThresholdMode::Absolute(t) => t,
        ThresholdMode::Otsu => match otsu_threshold(s.values()) {
            Some(t) => t,
            None => {
                return Ok(EdgeMap {
                    grid,
                    edges: vec![false; grid.len()],
                    threshold: f64::INFINITY,
                })
            }
        },
    };
    Ok(EdgeMap {
        grid,
        edges: s.values().iter().map(|&v| v > threshold).collect(),
        threshold,
    })
}

fn neighbours(grid: Grid, k: usize) -> impl Iterator<Item = usize> {
    let n = grid.n();
    let (i, j) = grid.ij(k);
    [
        (i > 0).then(|| k - 1),
        (i + 1 < n).then(|| k + 1),
        (j > 0).then(|| k - n),
        (j + 1 < n).then(|| k + n),
    ]
    .into_iter()
    .flatten()
}

/// Maximum (dilation) or minimum (erosion) over the 3×3 neighbourhood.
fn morph(grid: Grid, m: &[bool], dilate: bool) -> Vec<bool> {
    let n = grid.n() as isize;
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let mut acc = !dilate;
            for dj in -1..=1isize {
                for di in -1..=1isize {
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    let v = if ii < 0 || jj < 0 || ii >= n || jj >= n {
                        false
                    } else {
                        m[(jj * n + ii) as usize]
                    };
                    if dilate {
                        acc |= v;
                    } else {
                        acc &= v;
                    }
                }
            }
            acc
        })
        .collect()
}

fn closing(grid: Grid, m: &[bool]) -> Vec<bool> {
    morph(grid, &morph(grid, m, true), false)
}

/// Connected components (four-neighbour) of the nodes where `inside` holds.
fn components(grid: Grid, inside: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            comp.push(k);
            for nb in neighbours(grid, k) {
                if inside[nb] && !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Closes the edge map, takes the regions it encloses, fills their holes
/// and splits the edge band between each region and the exterior by
/// breadth-first distance, so mask boundaries sit on the band's midline.
pub fn extract_inclusions(map: &EdgeMap) -> Vec<InclusionMask> {
    let grid = map.grid;
    let closed = closing(grid, &map.edges);
    let free: Vec<bool> = closed.iter().map(|&e| !e).collect();
    let regions = components(grid, &free);
    let touches = |c: &[usize]| {
        c.iter().any(|&k| {
            let (i, j) = grid.ij(k);
            grid.is_boundary(i, j)
        })
    };
    let mut label = vec![usize::MAX; grid.len()];
    let mut seeds: Vec<Vec<usize>> = Vec::new();
    let exterior = usize::MAX - 1;
    for c in &regions {
        let id = if touches(c) {
            exterior
        } else if c.len() >= MIN_COMPONENT_AREA {
            seeds.push(c.clone());
            seeds.len() - 1
        } else {
            continue;
        };
        for &k in c {
            label[k] = id;
        }
    }
    // Multi-source breadth-first growth through the band; ties keep the
    // label reached first, exterior included.
    let mut queue: VecDeque<usize> = (0..grid.len()).filter(|&k| label[k] != usize::MAX).collect();
    while let Some(k) = queue.pop_front() {
        for nb in neighbours(grid, k) {
            if label[nb] == usize::MAX {
                label[nb] = label[k];
                queue.push_back(nb);
            }
        }
    }
    let mut masks = Vec::new();
    for (id, _) in seeds.iter().enumerate() {
        let region: Vec<bool> = label.iter().map(|&l| l == id).collect();
        let filled = fill_holes(grid, &region);
        let area = filled.iter().filter(|&&m| m).count();
        if area >= MIN_COMPONENT_AREA {
            masks.push(InclusionMask {
                grid,
                label: masks.len(),
                nodes: filled,
            });
        }
    }
    masks
}

/// Adds every node not reachable from `∂Ω` through the complement.
pub fn fill_holes(grid: Grid, m: &[bool]) -> Vec<bool> {
    let mut outside = vec![false; grid.len()];
    let mut queue = VecDeque::new();
    for (i, j) in grid.boundary_nodes() {
        let k = grid.idx(i, j);
        if !m[k] && !outside[k] {
            outside[k] = true;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        for nb in neighbours(grid, k) {
            if !m[nb] && !outside[nb] {
                outside[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    outside.iter().map(|&o| !o).collect()
}

/// A mask that had to be cut back to `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipEvent {
    pub label: usize,
    pub removed_nodes: usize,
}

/// Intersects every mask with the interior of `D`, keeping one node of
/// clearance from its edge, and reports the masks that lost nodes. Masks
/// left below the minimum area are dropped; overlapping masks keep the
/// node for the lower label.
pub fn clip_to_d(masks: Vec<InclusionMask>, phantom: &Phantom) -> (Vec<InclusionMask>, Vec<ClipEvent>) {
    let mut events = Vec::new();
    let mut out: Vec<InclusionMask> = Vec::new();
    let Some(first) = masks.first() else {
        return (out, events);
    };
    let grid = first.grid;
    let d = phantom.d_mask(grid);
    let inner = morph(grid, &d, false);
    let mut taken = vec![false; grid.len()];
    for m in masks {
        let mut removed = 0;
        let nodes: Vec<bool> = (0..grid.len())
            .map(|k| {
                if m.nodes[k] && (!inner[k] || taken[k]) {
                    removed += 1;
                }
                m.nodes[k] && inner[k] && !taken[k]
            })
            .collect();
        if removed > 0 {
            events.push(ClipEvent {
                label: m.label,
                removed_nodes: removed,
            });
        }
        let area = nodes.iter().filter(|&&v| v).count();
        if area >= MIN_COMPONENT_AREA {
            for (t, &v) in taken.iter_mut().zip(&nodes) {
                *t |= v;
            }
            out.push(InclusionMask {
                grid,
                label: out.len(),
                nodes,
            });
        }
    }
    (out, events)
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x[0] - y[0]).hypot(x[1] - y[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Points of a mask boundary.
pub fn boundary_points(mask: &InclusionMask) -> Vec<[f64; 2]> {
    mask.boundary_nodes()
        .into_iter()
        .map(|k| mask.grid.point(k))
        .collect()
}

/// Writes a field as an 8-bit binary PGM, min to 0 and max to 255, top row
/// first (largest `y`).
pub fn write_pgm<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    let n = grid.n();
    let lo = field.min();
    let hi = field.max();
    let span = hi - lo;
    write!(w, "P5\n{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(grid.len());
    for j in (0..n).rev() {
        for i in 0..n {
            let v = field.at(i, j);
            let b = if span > 0.0 {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            bytes.push(b);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_mask_pgm<W: Write>(w: W, mask: &InclusionMask) -> Result<()> {
    let v = mask.nodes.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    write_pgm(w, &ScalarField::new(mask.grid, v)?)
}

/// Reads a square binary PGM; bytes are returned as `[0, 255]` values on
/// the matching grid.
pub fn read_pgm<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut pos = 0;
    if pgm_token(&data, &mut pos)? != "P5" {
        return Err(Error::Format("not a binary PGM".into()));
    }
    let parse = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad PGM header value {s:?}")))
    };
    let w = parse(pgm_token(&data, &mut pos)?)?;
    let h = parse(pgm_token(&data, &mut pos)?)?;
    let maxval = parse(pgm_token(&data, &mut pos)?)?;
    if w != h || maxval != 255 {
        return Err(Error::Format(format!(
            "expected a square 8-bit image, got {w}x{h} with max {maxval}"
        )));
    }
    let body = data.get(pos + 1..).unwrap_or(&[]);
    if body.len() < w * h {
        return Err(Error::Format("truncated PGM data".into()));
    }
    let grid = Grid::new(w)?;
    let mut v = vec![0.0; grid.len()];
    for (row, j) in (0..w).rev().enumerate() {
        for i in 0..w {
            v[grid.idx(i, j)] = body[row * w + i] as f64;
        }
    }
    ScalarField::new(grid, v)
}

fn pgm_token(data: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

/// Mask from a PGM: nodes with value above 127.
pub fn read_mask_pgm<R: Read>(r: R, label: usize) -> Result<InclusionMask> {
    let f = read_pgm(r)?;
    Ok(InclusionMask {
        grid: f.grid(),
        label,
        nodes: f.values().iter().map(|&v| v > 127.0).collect(),
    })
}
