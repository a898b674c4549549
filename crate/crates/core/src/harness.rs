//! Experiment configuration, file layout and the end-to-end pipeline:
//! forward solve, sinogram, potential recovery, segmentation,
//! reconstruction and evaluation.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acousto::{sample_sinogram, AcousticConfig, Measurement, MeasurementModel, Quadrature, Sinogram};
use crate::error::{Error, Result};
use crate::fields::io::{load, save, StoredField};
use crate::fields::{norm_l2, BoundaryTrace, Grid, ScalarField};
use crate::helmholtz::{Provenance, PsiField};
use crate::inversion::{
    delta_psi_functional, initial_guess_exhaustion, landweber_run, theta_auto, ForwardContext,
    Iterate, KProjectionConfig, LandweberConfig, Linearization, MaskSet, PiecewiseConstantGuess,
    ReconstructionState, StepSize, SweepMode,
};
use crate::phantom::{presets, Phantom};
use crate::radon::{flux_data, invert_disk_flux, DiskFluxOperator, RadonInversionReport};
use crate::segmentation::{
    boundary_points, clip_to_d, detect_edges, extract_inclusions, hausdorff, read_mask_pgm,
    write_mask_pgm, ClipEvent, InclusionMask, ThresholdMode,
};
use crate::tolerances::{
    FLUX_CG_MAX_ITER, FLUX_CG_TOL, FLUX_TIKHONOV, PARTITION_STEP,
};

/// Version of the configuration and output layout.
pub const SCHEMA_VERSION: &str = "1";

/// Cell subsamples when the phantom is averaged onto the grid as the truth.
const TRUTH_SUBSAMPLES: usize = 4;

/// Rim samples per inclusion for the boundary distance.
const RIM_SAMPLES: usize = 2000;

pub mod files {
    pub const PHI: &str = "phi.aorf";
    pub const FLUX: &str = "flux.aorf";
    pub const SINOGRAM: &str = "sinogram.csv";
    pub const PSI: &str = "psi.aorf";
    pub const SEGMENTATION: &str = "segmentation.json";
    pub const COEFFICIENT: &str = "coefficient.aorf";
    pub const LOG: &str = "reconstruction_log.csv";
    pub const RECONSTRUCTION: &str = "reconstruction.json";
    pub const METRICS: &str = "metrics.json";

    pub fn mask(label: usize) -> String {
        format!("mask_{label}.pgm")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticSection {
    pub mu: f64,
    pub r0: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub eta: f64,
    pub ny: usize,
    pub nr: usize,
    #[serde(default = "ray")]
    pub quadrature: Quadrature,
}

fn ray() -> Quadrature {
    Quadrature::Ray
}

/// Boundary illumination `g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Illumination {
    Constant { value: f64 },
    /// `g = c + gx x + gy y`.
    Linear { c: f64, gx: f64, gy: f64 },
}

impl Illumination {
    pub fn trace(&self, grid: Grid) -> BoundaryTrace {
        match *self {
            Illumination::Constant { value } => BoundaryTrace::constant(grid, value),
            Illumination::Linear { c, gx, gy } => BoundaryTrace::from_fn(grid, |x, y| c + gx * x + gy * y),
        }
    }

    fn validate(&self) -> Result<()> {
        let min = match *self {
            Illumination::Constant { value } => value,
            Illumination::Linear { c, gx, gy } => c + gx.min(0.0) + gy.min(0.0),
        };
        if !(min > 0.0) {
            return Err(Error::validation("optics.g must be positive on the boundary"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSection {
    pub l: f64,
    pub g: Illumination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaMode {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSetting {
    Exhaustive,
    CoordinateDescent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSection {
    #[serde(default = "theta_auto_mode")]
    pub theta: ThetaMode,
    #[serde(default = "tau_auto_mode")]
    pub tau: TauMode,
    pub max_iter: usize,
    pub stop_tol: f64,
    #[serde(default = "partition_step")]
    pub partition_step: f64,
    #[serde(default = "exhaustive")]
    pub sweep: SweepSetting,
    /// Gradient penalty of the potential recovery.
    #[serde(default = "flux_eps")]
    pub psi_regularization: f64,
}

fn theta_auto_mode() -> ThetaMode {
    ThetaMode::Auto
}
fn tau_auto_mode() -> TauMode {
    TauMode::Auto
}
fn partition_step() -> f64 {
    PARTITION_STEP
}
fn exhaustive() -> SweepSetting {
    SweepSetting::Exhaustive
}
fn flux_eps() -> f64 {
    FLUX_TIKHONOV
}

/// Everything one experiment needs. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub acoustic: AcousticSection,
    pub optics: OpticsSection,
    /// Phantom JSON file, or `preset:<name>`.
    pub phantom: String,
    pub reconstruction: ReconstructionSection,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(s)
            .map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, &base)
    }

    /// Checks every module precondition that does not need a solve.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let acoustic = self.acoustic_config()?;
        let ac = &self.acoustic;
        if ac.ny < 4 || ac.nr < 4 {
            return Err(Error::validation(format!(
                "acoustic.ny and acoustic.nr must be at least 4, got {} and {}",
                ac.ny, ac.nr
            )));
        }
        if ac.quadrature == Quadrature::Grid {
            acoustic.check_grid(grid)?;
        }
        if !(self.optics.l >= 0.0) || !self.optics.l.is_finite() {
            return Err(Error::validation("optics.l must be finite and non-negative"));
        }
        self.optics.g.validate()?;
        let r = &self.reconstruction;
        if !(r.stop_tol >= 0.0) {
            return Err(Error::validation("reconstruction.stop_tol must be non-negative"));
        }
        if !(r.partition_step > 0.0) {
            return Err(Error::validation("reconstruction.partition_step must be positive"));
        }
        if !(r.psi_regularization > 0.0) {
            return Err(Error::validation("reconstruction.psi_regularization must be positive"));
        }
        if let ThetaMode::Fixed(t) = r.theta {
            if !(t > 0.0) {
                return Err(Error::validation("reconstruction.theta must be positive"));
            }
        }
        if let TauMode::Fixed(t) = r.tau {
            if !(t > 0.0) {
                return Err(Error::validation("reconstruction.tau must be positive"));
            }
        }
        if self.phantom.is_empty() {
            return Err(Error::validation("phantom must name a file or a preset"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n).map_err(|e| Error::validation(format!("n: {e}")))
    }

    pub fn acoustic_config(&self) -> Result<AcousticConfig> {
        let a = &self.acoustic;
        AcousticConfig::new(a.mu, a.r0, a.big_r, a.eta)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir().join(name)
    }

    pub fn phantom(&self) -> Result<Phantom> {
        if let Some(name) = self.phantom.strip_prefix("preset:") {
            return presets::by_name(name)
                .ok_or_else(|| Error::validation(format!("phantom: unknown preset {name:?}")));
        }
        let path = self.base_dir.join(&self.phantom);
        if !path.exists() {
            return Err(Error::validation(format!("phantom: no file at {}", path.display())));
        }
        Phantom::load(&path)
    }

    pub fn illumination(&self) -> Result<BoundaryTrace> {
        Ok(self.optics.g.trace(self.grid()?))
    }

    pub fn forward_context(&self, phantom: &Phantom) -> Result<ForwardContext> {
        ForwardContext::new(
            phantom.a0,
            phantom.lower,
            phantom.upper,
            self.optics.l,
            self.illumination()?,
        )
    }

    pub fn measurement_model(&self, phantom: &Phantom) -> Result<MeasurementModel> {
        let grid = self.grid()?;
        MeasurementModel::new(
            phantom,
            self.acoustic_config()?,
            grid,
            self.optics.l,
            self.illumination()?,
            self.acoustic.quadrature,
        )
    }

    fn prepare_output(&self) -> Result<()> {
        std::fs::create_dir_all(self.output_dir())?;
        Ok(())
    }
}

/// Unperturbed optical field and its boundary flux.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub phi: ScalarField,
    pub flux: BoundaryTrace,
}

pub fn forward(cfg: &ExperimentConfig, phantom: &Phantom) -> Result<ForwardOutput> {
    let grid = cfg.grid()?;
    let ctx = cfg.forward_context(phantom)?;
    let lin = Linearization::new(&ctx, phantom.sample_cell_average(grid, TRUTH_SUBSAMPLES))?;
    Ok(ForwardOutput {
        flux: lin.flux(&ctx),
        phi: lin.phi,
    })
}

pub fn sinogram(cfg: &ExperimentConfig, phantom: &Phantom) -> Result<Sinogram> {
    let model = cfg.measurement_model(phantom)?;
    sample_sinogram(&model, cfg.acoustic.ny, cfg.acoustic.nr, Measurement::MEta)
}

/// Potential from measurements through its disk fluxes. The result agrees
/// with the true potential up to a harmonic function on the square.
pub fn recover_psi(cfg: &ExperimentConfig, m: &Sinogram) -> Result<(PsiField, RadonInversionReport)> {
    let grid = cfg.grid()?;
    let op = DiskFluxOperator::new(m.config(), grid, m.ny(), m.nr())?;
    let (psi, report) = invert_disk_flux(
        &op,
        &flux_data(m),
        cfg.reconstruction.psi_regularization,
        FLUX_CG_TOL,
        FLUX_CG_MAX_ITER,
    )?;
    if psi.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("potential recovery produced non-finite values".into()));
    }
    Ok((
        PsiField {
            psi,
            provenance: Provenance::FromMeasurements,
        },
        report,
    ))
}

#[derive(Debug, Clone)]
pub struct SegmentationOutput {
    pub masks: Vec<InclusionMask>,
    pub clip_events: Vec<ClipEvent>,
    pub threshold: f64,
}

/// Otsu edges of the potential, closed into masks and clipped to `D`.
pub fn segment(psi: &ScalarField, phantom: &Phantom) -> Result<SegmentationOutput> {
    let map = detect_edges(psi, ThresholdMode::Otsu)?;
    let (masks, clip_events) = clip_to_d(extract_inclusions(&map), phantom);
    Ok(SegmentationOutput {
        masks,
        clip_events,
        threshold: map.threshold,
    })
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub guess: PiecewiseConstantGuess,
    pub theta: f64,
    pub state: ReconstructionState,
    pub coefficient: ScalarField,
}

/// Exhaustion guess from the boundary flux, then projected Landweber on the
/// data functional of `ψ` over the rim-eroded masks.
pub fn reconstruct(
    cfg: &ExperimentConfig,
    phantom: &Phantom,
    masks: &[InclusionMask],
    psi: &ScalarField,
    measured_flux: &BoundaryTrace,
    truth: Option<&ScalarField>,
) -> Result<Reconstruction> {
    let grid = cfg.grid()?;
    let ctx = cfg.forward_context(phantom)?;
    let set = MaskSet::with_rim_margin(grid, masks.iter().map(|m| m.nodes.clone()).collect())?;
    let r = &cfg.reconstruction;
    let mode = match r.sweep {
        SweepSetting::Exhaustive => SweepMode::Exhaustive,
        SweepSetting::CoordinateDescent => SweepMode::CoordinateDescent,
    };
    let guess = initial_guess_exhaustion(&ctx, &set, measured_flux, r.partition_step, mode)?;
    let start = Iterate::constant(&set, guess.alpha.clone());
    let theta = match r.theta {
        ThetaMode::Fixed(t) => t,
        ThetaMode::Auto if set.free_nodes().is_empty() => 1.0,
        ThetaMode::Auto => theta_auto(&Linearization::at(&ctx, &set, &start)?, &set)?,
    };
    let config = LandweberConfig {
        projection: KProjectionConfig::new(ctx.lower, ctx.upper, theta)?,
        step: match r.tau {
            TauMode::Auto => StepSize::Auto,
            TauMode::Fixed(t) => StepSize::Fixed(t),
        },
        max_iter: r.max_iter,
        stop_tol: r.stop_tol,
    };
    let data = delta_psi_functional(psi, &set)?;
    let state = landweber_run(&ctx, &set, start, &data, &config, truth)?;
    let coefficient = state.iterate.coefficient(&ctx, &set);
    Ok(Reconstruction {
        guess,
        theta,
        state,
        coefficient,
    })
}

/// Metrics written by `evaluate`. Missing quantities are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub l2_rel_error: f64,
    pub hausdorff_boundary: Option<f64>,
    pub residual_final: Option<f64>,
    pub monotone_fraction: Option<f64>,
}

/// Phantom averaged over grid cells.
pub fn truth(phantom: &Phantom, grid: Grid) -> ScalarField {
    phantom.sample_cell_average(grid, TRUTH_SUBSAMPLES)
}

/// Largest Hausdorff distance between each true rim and the mask whose
/// centroid lies nearest its center. `None` when the counts differ.
pub fn boundary_distance(phantom: &Phantom, masks: &[InclusionMask]) -> Option<f64> {
    if masks.len() != phantom.inclusions.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for inc in &phantom.inclusions {
        let c = inc.shape.center();
        let m = masks.iter().min_by(|a, b| {
            let da = a.centroid();
            let db = b.centroid();
            (da[0] - c[0]).hypot(da[1] - c[1]).total_cmp(&(db[0] - c[0]).hypot(db[1] - c[1]))
        })?;
        let rim: Vec<[f64; 2]> = (0..RIM_SAMPLES)
            .map(|i| inc.shape.rim(i as f64 * std::f64::consts::TAU / RIM_SAMPLES as f64).point)
            .collect();
        worst = worst.max(hausdorff(&boundary_points(m), &rim));
    }
    Some(worst)
}

pub fn evaluate(
    phantom: &Phantom,
    coefficient: &ScalarField,
    masks: &[InclusionMask],
    state: Option<&ReconstructionState>,
) -> Metrics {
    let t = truth(phantom, coefficient.grid());
    Metrics {
        l2_rel_error: norm_l2(&coefficient.sub(&t)) / norm_l2(&t),
        hausdorff_boundary: boundary_distance(phantom, masks),
        residual_final: state.and_then(|s| s.log.last().map(|e| e.residual)),
        monotone_fraction: state.and_then(ReconstructionState::monotone_fraction),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationSummary {
    pub threshold: f64,
    pub masks: Vec<String>,
    pub clip_events: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub alpha: Vec<f64>,
    pub misfit: f64,
    pub theta: f64,
    pub tau: f64,
    pub iterations: usize,
    pub stop: String,
    pub halvings: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| missing(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn missing(path: &Path, e: std::io::Error) -> Error {
    Error::validation(format!("cannot open {}: {e}", path.display()))
}

fn load_scalar_input(path: &Path) -> Result<ScalarField> {
    if !path.exists() {
        return Err(Error::validation(format!("missing input {}", path.display())));
    }
    match load(path)? {
        StoredField::Scalar(f) => Ok(f),
        _ => Err(Error::Format(format!("{} is not a scalar field", path.display()))),
    }
}

fn load_trace_input(path: &Path) -> Result<BoundaryTrace> {
    if !path.exists() {
        return Err(Error::validation(format!("missing input {}", path.display())));
    }
    match load(path)? {
        StoredField::Trace(f) => Ok(f),
        _ => Err(Error::Format(format!("{} is not a boundary trace", path.display()))),
    }
}

fn check_grid(cfg: &ExperimentConfig, grid: Grid, what: &str) -> Result<()> {
    if grid.n() != cfg.n {
        return Err(Error::validation(format!(
            "{what} has n = {}, config says n = {}",
            grid.n(),
            cfg.n
        )));
    }
    Ok(())
}

/// File-level stages used by the command-line driver. Each reads the
/// outputs of the previous stage from the output directory.
pub mod stages {
    use super::*;

    pub fn forward(cfg: &ExperimentConfig) -> Result<ForwardOutput> {
        let phantom = cfg.phantom()?;
        cfg.prepare_output()?;
        let out = super::forward(cfg, &phantom)?;
        save(&cfg.output(files::PHI), &StoredField::Scalar(out.phi.clone()))?;
        save(&cfg.output(files::FLUX), &StoredField::Trace(out.flux.clone()))?;
        Ok(out)
    }

    pub fn sinogram(cfg: &ExperimentConfig) -> Result<Sinogram> {
        let phantom = cfg.phantom()?;
        cfg.prepare_output()?;
        let s = super::sinogram(cfg, &phantom)?;
        s.write_csv(BufWriter::new(File::create(cfg.output(files::SINOGRAM))?))?;
        Ok(s)
    }

    pub fn read_sinogram(cfg: &ExperimentConfig, path: &Path) -> Result<Sinogram> {
        let f = File::open(path).map_err(|e| missing(path, e))?;
        Sinogram::read_csv(cfg.acoustic_config()?, cfg.acoustic.ny, cfg.acoustic.nr, BufReader::new(f))
    }

    pub fn recover_psi(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<(PsiField, RadonInversionReport)> {
        let path = input.map_or_else(|| cfg.output(files::SINOGRAM), Path::to_path_buf);
        let s = read_sinogram(cfg, &path)?;
        cfg.prepare_output()?;
        let out = super::recover_psi(cfg, &s)?;
        save(&cfg.output(files::PSI), &StoredField::Scalar(out.0.psi.clone()))?;
        Ok(out)
    }

    pub fn segment(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<SegmentationOutput> {
        let phantom = cfg.phantom()?;
        let path = input.map_or_else(|| cfg.output(files::PSI), Path::to_path_buf);
        let psi = load_scalar_input(&path)?;
        check_grid(cfg, psi.grid(), "potential")?;
        cfg.prepare_output()?;
        let out = super::segment(&psi, &phantom)?;
        let mut names = Vec::new();
        for m in &out.masks {
            let name = files::mask(m.label);
            write_mask_pgm(BufWriter::new(File::create(cfg.output(&name))?), m)?;
            names.push(name);
        }
        let summary = SegmentationSummary {
            threshold: out.threshold,
            masks: names,
            clip_events: out.clip_events.iter().map(|e| (e.label, e.removed_nodes)).collect(),
        };
        write_json(&cfg.output(files::SEGMENTATION), &summary)?;
        Ok(out)
    }

    pub fn read_masks(cfg: &ExperimentConfig) -> Result<Vec<InclusionMask>> {
        let summary: SegmentationSummary = read_json(&cfg.output(files::SEGMENTATION))?;
        summary
            .masks
            .iter()
            .enumerate()
            .map(|(label, name)| {
                let path = cfg.output(name);
                let f = File::open(&path).map_err(|e| missing(&path, e))?;
                let m = read_mask_pgm(BufReader::new(f), label)?;
                check_grid(cfg, m.grid, "mask")?;
                Ok(m)
            })
            .collect()
    }

    pub fn reconstruct(cfg: &ExperimentConfig, with_truth: bool) -> Result<Reconstruction> {
        let phantom = cfg.phantom()?;
        let masks = read_masks(cfg)?;
        let psi = load_scalar_input(&cfg.output(files::PSI))?;
        let flux = load_trace_input(&cfg.output(files::FLUX))?;
        check_grid(cfg, psi.grid(), "potential")?;
        check_grid(cfg, flux.grid(), "flux")?;
        let t = with_truth.then(|| truth(&phantom, psi.grid()));
        let rec = super::reconstruct(cfg, &phantom, &masks, &psi, &flux, t.as_ref())?;
        save(&cfg.output(files::COEFFICIENT), &StoredField::Scalar(rec.coefficient.clone()))?;
        rec.state.write_log(BufWriter::new(File::create(cfg.output(files::LOG))?))?;
        let summary = ReconstructionSummary {
            alpha: rec.guess.alpha.clone(),
            misfit: rec.guess.misfit,
            theta: rec.theta,
            tau: rec.state.tau,
            iterations: rec.state.log.len().saturating_sub(1),
            stop: format!("{:?}", rec.state.stop),
            halvings: rec.state.halvings,
        };
        write_json(&cfg.output(files::RECONSTRUCTION), &summary)?;
        Ok(rec)
    }

    /// Metrics from the stored coefficient, masks and log.
    pub fn evaluate(cfg: &ExperimentConfig) -> Result<Metrics> {
        let phantom = cfg.phantom()?;
        let coefficient = load_scalar_input(&cfg.output(files::COEFFICIENT))?;
        check_grid(cfg, coefficient.grid(), "coefficient")?;
        let masks = read_masks(cfg)?;
        let log = read_log(&cfg.output(files::LOG))?;
        let mut m = super::evaluate(&phantom, &coefficient, &masks, None);
        m.residual_final = log.last().map(|r| r.0);
        let d: Vec<f64> = log.iter().filter_map(|r| r.1).collect();
        if d.len() >= 2 {
            let dec = d.windows(2).filter(|w| w[1] < w[0]).count();
            m.monotone_fraction = Some(dec as f64 / (d.len() - 1) as f64);
        }
        write_json(&cfg.output(files::METRICS), &m)?;
        Ok(m)
    }

    fn read_log(path: &Path) -> Result<Vec<(f64, Option<f64>)>> {
        let f = File::open(path).map_err(|e| missing(path, e))?;
        let mut rd = csv::Reader::from_reader(BufReader::new(f));
        let mut out = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<Option<f64>> {
                match rec.get(i).map(str::trim) {
                    None | Some("") => Ok(None),
                    Some(s) => s
                        .parse()
                        .map(Some)
                        .map_err(|e| Error::Format(format!("bad log value {s:?}: {e}"))),
                }
            };
            let res = num(1)?.ok_or_else(|| Error::Format("log row without residual".into()))?;
            out.push((res, num(2)?));
        }
        Ok(out)
    }

    /// All stages in order.
    pub fn run(cfg: &ExperimentConfig) -> Result<Metrics> {
        forward(cfg)?;
        sinogram(cfg)?;
        recover_psi(cfg, None)?;
        segment(cfg, None)?;
        reconstruct(cfg, true)?;
        evaluate(cfg)
    }
}
