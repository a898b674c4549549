use std::io::{Read, Write};

use super::AcousticConfig;
use crate::error::{Error, Result};

/// Values on the cylinder of sources × radii. Row `m` holds source `m`,
/// column `q` radius `r_q = q R/(nr - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    config: AcousticConfig,
    ny: usize,
    nr: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(config: AcousticConfig, ny: usize, nr: usize) -> Result<Self> {
        if ny < 8 || nr < 16 {
            return Err(Error::validation(format!(
                "sinogram needs ny >= 8 and nr >= 16, got {ny} x {nr}"
            )));
        }
        Ok(Sinogram {
            config,
            ny,
            nr,
            values: vec![0.0; ny * nr],
        })
    }

    /// Wraps values, zeroing every cell with `r <= r0`.
    pub fn from_values(config: AcousticConfig, ny: usize, nr: usize, values: Vec<f64>) -> Result<Self> {
        let mut s = Self::zeros(config, ny, nr)?;
        if values.len() != ny * nr {
            return Err(Error::validation(format!(
                "sinogram needs {} values, got {}",
                ny * nr,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("sinogram has non-finite values"));
        }
        s.values = values;
        s.enforce_support();
        Ok(s)
    }

    pub fn enforce_support(&mut self) {
        let q0 = self.first_active();
        for m in 0..self.ny {
            for q in 0..q0 {
                self.values[m * self.nr + q] = 0.0;
            }
        }
    }

    /// Index of the first radius strictly above `r0`.
    pub fn first_active(&self) -> usize {
        (0..self.nr)
            .find(|&q| self.r(q) > self.config.r0() * (1.0 + 1e-12))
            .unwrap_or(self.nr)
    }

    pub fn config(&self) -> &AcousticConfig {
        &self.config
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dr(&self) -> f64 {
        self.config.big_r() / (self.nr - 1) as f64
    }

    pub fn r(&self, q: usize) -> f64 {
        self.config.radius(q, self.nr)
    }

    pub fn source(&self, m: usize) -> [f64; 2] {
        self.config.source(m, self.ny)
    }

    /// Arc length carried by one source.
    pub fn source_weight(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.config.mu() / self.ny as f64
    }

    #[inline]
    pub fn get(&self, m: usize, q: usize) -> f64 {
        self.values[m * self.nr + q]
    }

    #[inline]
    pub fn set(&mut self, m: usize, q: usize, v: f64) {
        self.values[m * self.nr + q] = v;
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.nr..(m + 1) * self.nr]
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.values[m * self.nr..(m + 1) * self.nr]
    }

    /// `L²` inner product on the cylinder: source arc length times `dr`.
    pub fn inner(&self, other: &Sinogram) -> f64 {
        let w = self.source_weight() * self.dr();
        w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Sinogram {
        Sinogram {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["y_index", "r", "value"])?;
        for m in 0..self.ny {
            for q in 0..self.nr {
                wr.write_record([
                    m.to_string(),
                    format!("{:.16e}", self.r(q)),
                    format!("{:.16e}", self.get(m, q)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads cells written by [`Sinogram::write_csv`]. The radius grid must
    /// match `config` and `nr`.
    pub fn read_csv<R: Read>(config: AcousticConfig, ny: usize, nr: usize, r: R) -> Result<Self> {
        let mut s = Self::zeros(config, ny, nr)?;
        let mut seen = vec![false; ny * nr];
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["y_index", "r", "value"] {
            return Err(Error::Format(format!("unexpected sinogram header {headers:?}")));
        }
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Format("short sinogram row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number: {e}")))
            };
            let m = parse(0)? as usize;
            let r = parse(1)?;
            let v = parse(2)?;
            let q = (r / s.dr()).round() as usize;
            if m >= ny || q >= nr || (s.r(q) - r).abs() > 1e-9 * s.config.big_r() {
                return Err(Error::Format(format!(
                    "cell ({m}, r = {r}) does not lie on the {ny} x {nr} grid"
                )));
            }
            s.set(m, q, v);
            seen[m * nr + q] = true;
        }
        if let Some(k) = seen.iter().position(|&b| !b) {
            return Err(Error::Format(format!(
                "missing cell ({}, {})",
                k / nr,
                k % nr
            )));
        }
        s.enforce_support();
        Ok(s)
    }
}
