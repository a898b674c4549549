//! Reconstruction of the absorption coefficient on detected inclusions:
//! exhaustion over piecewise constants, the internal data map and its
//! derivative, projection onto the admissible set and projected Landweber.

use std::io::Write;

use crate::diffusion::DiffusionSolver;
use crate::error::{Error, Result};
use crate::fields::stencil::DirichletLaplacian;
use crate::fields::{gradient, norm_l4_vector, BoundaryTrace, Grid, ScalarField};
use crate::tolerances::{
    DESCENT_PASSES, EXHAUSTIVE_MAX_INCLUSIONS, INCREASES_BEFORE_HALVING, MAX_HALVINGS,
    POWER_ITERATIONS, RIM_MARGIN, STEP_SAFETY,
};

/// Inclusion masks with their zero-trace node sets and the edges that carry
/// the `H` inner product.
pub struct MaskSet {
    grid: Grid,
    masks: Vec<Vec<bool>>,
    owner: Vec<Option<usize>>,
    edges: Vec<(usize, usize)>,
    lap: DirichletLaplacian,
}

impl std::fmt::Debug for MaskSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaskSet")
            .field("grid", &self.grid)
            .field("masks", &self.masks.len())
            .field("free", &self.lap.free_nodes().len())
            .finish()
    }
}

impl MaskSet {
    /// Masks must be pairwise disjoint and stay off the boundary of the
    /// square. A node is free when it and its four neighbours lie in the mask.
    pub fn new(grid: Grid, masks: Vec<Vec<bool>>) -> Result<Self> {
        Self::with_margin(grid, masks, 0)
    }

    /// Masks eroded by [`RIM_MARGIN`] rounded up to whole grid layers.
    pub fn with_rim_margin(grid: Grid, masks: Vec<Vec<bool>>) -> Result<Self> {
        let layers = (RIM_MARGIN / grid.h() - 1e-9).ceil() as usize;
        Self::with_margin(grid, masks, layers)
    }

    /// As [`MaskSet::new`], with each mask first eroded by `margin` layers
    /// for the free set, so the test functions stay clear of the rims.
    pub fn with_margin(grid: Grid, masks: Vec<Vec<bool>>, margin: usize) -> Result<Self> {
        let n = grid.n();
        let mut owner = vec![None; grid.len()];
        for (j, m) in masks.iter().enumerate() {
            if m.len() != grid.len() {
                return Err(Error::validation(format!("mask {j} does not match the grid")));
            }
            for k in 0..grid.len() {
                if !m[k] {
                    continue;
                }
                let (i, jj) = grid.ij(k);
                if grid.is_boundary(i, jj) {
                    return Err(Error::validation(format!("mask {j} touches the boundary")));
                }
                if let Some(other) = owner[k] {
                    return Err(Error::validation(format!("masks {other} and {j} overlap")));
                }
                owner[k] = Some(j);
            }
        }
        let mut inner: Vec<bool> = owner.iter().map(Option::is_some).collect();
        for _ in 0..=margin {
            inner = (0..grid.len())
                .map(|k| {
                    let (i, j) = grid.ij(k);
                    inner[k]
                        && !grid.is_boundary(i, j)
                        && [k - 1, k + 1, k - n, k + n].iter().all(|&nb| inner[nb])
                })
                .collect();
        }
        let free = inner;
        let mut edges = Vec::new();
        for k in 0..grid.len() {
            let (i, j) = grid.ij(k);
            if i + 1 < n && (free[k] || free[k + 1]) {
                edges.push((k, k + 1));
            }
            if j + 1 < n && (free[k] || free[k + n]) {
                edges.push((k, k + n));
            }
        }
        let mut lap = DirichletLaplacian::new(grid, &free);
        lap.factorize()?;
        Ok(MaskSet {
            grid,
            masks,
            owner,
            edges,
            lap,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn mask(&self, j: usize) -> &[bool] {
        &self.masks[j]
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    /// Mask index owning node `k`.
    pub fn owner(&self, k: usize) -> Option<usize> {
        self.owner[k]
    }

    pub fn is_free(&self, k: usize) -> bool {
        self.lap.is_free(k)
    }

    pub fn free_nodes(&self) -> &[usize] {
        self.lap.free_nodes()
    }

    /// Edges with at least one free endpoint.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `Σ_e (f_k' - f_k)(g_k' - g_k)`, the discrete `∫ ∇f·∇g` over the masks.
    pub fn edge_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(k, kp)| (f[kp] - f[k]) * (g[kp] - g[k]))
            .sum()
    }

    /// Dual vector of `v ↦ Σ_e c_e (v_k' - v_k)`.
    fn assemble(&self, coeff: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut b = vec![0.0; self.grid.len()];
        for &(k, kp) in &self.edges {
            let c = coeff(k, kp);
            b[kp] += c;
            b[k] -= c;
        }
        b
    }

    /// Riesz representer in `H` of a dual vector.
    pub fn riesz(&self, b: &[f64]) -> Result<HElement> {
        let (x, _) = self.lap.solve(b)?;
        Ok(self.split(&x))
    }

    /// Splits a full-grid vector vanishing off the free nodes into parts.
    pub fn split(&self, x: &[f64]) -> HElement {
        let mut parts = vec![vec![0.0; self.grid.len()]; self.len()];
        for &k in self.free_nodes() {
            if let Some(j) = self.owner[k] {
                parts[j][k] = x[k];
            }
        }
        HElement {
            parts: parts
                .into_iter()
                .map(|p| ScalarField::from_raw(self.grid, p))
                .collect(),
        }
    }
}

/// Member of `H = ∏ H¹₀(A_j)`: one field per mask, zero off its free nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HElement {
    pub parts: Vec<ScalarField>,
}

impl HElement {
    pub fn zeros(masks: &MaskSet) -> Self {
        HElement {
            parts: vec![ScalarField::zeros(masks.grid()); masks.len()],
        }
    }

    /// Restricts a field to the free nodes of each mask.
    pub fn from_field(masks: &MaskSet, f: &ScalarField) -> Self {
        let mut x = vec![0.0; masks.grid().len()];
        for &k in masks.free_nodes() {
            x[k] = f.values()[k];
        }
        masks.split(&x)
    }

    /// Sum of the parts as one field.
    pub fn combined(&self, grid: Grid) -> ScalarField {
        let mut out = vec![0.0; grid.len()];
        for p in &self.parts {
            for (o, v) in out.iter_mut().zip(p.values()) {
                *o += v;
            }
        }
        ScalarField::from_raw(grid, out)
    }

    pub fn inner(&self, other: &HElement, masks: &MaskSet) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| masks.edge_inner(a.values(), b.values()))
            .sum()
    }

    pub fn norm(&self, masks: &MaskSet) -> f64 {
        self.inner(self, masks).max(0.0).sqrt()
    }

    pub fn axpy(&self, c: f64, other: &HElement) -> HElement {
        HElement {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.zip_map(b, |x, y| x + c * y))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> HElement {
        HElement {
            parts: self.parts.iter().map(|p| p.scale(c)).collect(),
        }
    }
}

/// Element of `H*` held through its Riesz representer.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunctional {
    pub representer: HElement,
}

impl HFunctional {
    pub fn from_dual(masks: &MaskSet, b: &[f64]) -> Result<Self> {
        Ok(HFunctional {
            representer: masks.riesz(b)?,
        })
    }

    pub fn norm(&self, masks: &MaskSet) -> f64 {
        self.representer.norm(masks)
    }

    /// Pairing with an element of `H`.
    pub fn apply(&self, v: &HElement, masks: &MaskSet) -> f64 {
        self.representer.inner(v, masks)
    }

    pub fn sub(&self, other: &HFunctional) -> HFunctional {
        HFunctional {
            representer: self.representer.axpy(-1.0, &other.representer),
        }
    }
}

/// Admissible bounds, background and illumination shared by every solve.
#[derive(Debug, Clone)]
pub struct ForwardContext {
    pub a0: f64,
    pub lower: f64,
    pub upper: f64,
    pub l: f64,
    pub g: BoundaryTrace,
}

impl ForwardContext {
    pub fn new(a0: f64, lower: f64, upper: f64, l: f64, g: BoundaryTrace) -> Result<Self> {
        if !(0.0 < lower && lower <= a0 && a0 <= upper) {
            return Err(Error::validation(format!(
                "need 0 < lower <= a0 <= upper, got {lower}, {a0}, {upper}"
            )));
        }
        Ok(ForwardContext {
            a0,
            lower,
            upper,
            l,
            g,
        })
    }

    pub fn grid(&self) -> Grid {
        self.g.grid()
    }
}

/// Coefficient `a0` off the masks and `α_j` on mask `j`.
pub fn piecewise_constant(ctx: &ForwardContext, masks: &MaskSet, alpha: &[f64]) -> ScalarField {
    let grid = masks.grid();
    let v = (0..grid.len())
        .map(|k| masks.owner(k).map_or(ctx.a0, |j| alpha[j]))
        .collect();
    ScalarField::from_raw(grid, v)
}

/// Iterate `a = α + h` with constants `α_j` and a zero-trace correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub alpha: Vec<f64>,
    pub correction: HElement,
}

impl Iterate {
    pub fn constant(masks: &MaskSet, alpha: Vec<f64>) -> Self {
        Iterate {
            alpha,
            correction: HElement::zeros(masks),
        }
    }

    pub fn coefficient(&self, ctx: &ForwardContext, masks: &MaskSet) -> ScalarField {
        let base = piecewise_constant(ctx, masks, &self.alpha);
        base.add(&self.correction.combined(masks.grid()))
    }
}

/// Constants found by the exhaustion sweep together with the misfit.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantGuess {
    pub alpha: Vec<f64>,
    pub misfit: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Exhaustive,
    CoordinateDescent,
}

/// Boundary-flux misfit `J(α) = ½ ‖∂νΦ[a_α] - ∂νΦ_*‖²` with a background
/// factorization reused for every `α`.
pub struct FluxMisfit<'a> {
    ctx: &'a ForwardContext,
    masks: &'a MaskSet,
    measured: &'a BoundaryTrace,
    base: DiffusionSolver,
    phi0: ScalarField,
}

impl<'a> FluxMisfit<'a> {
    pub fn new(ctx: &'a ForwardContext, masks: &'a MaskSet, measured: &'a BoundaryTrace) -> Result<Self> {
        let grid = masks.grid();
        let base = DiffusionSolver::new(&ScalarField::constant(grid, ctx.a0), ctx.l)?;
        let phi0 = base.solve_t(&ctx.g)?.phi;
        Ok(FluxMisfit {
            ctx,
            masks,
            measured,
            base,
            phi0,
        })
    }

    pub fn flux(&self, alpha: &[f64]) -> Result<BoundaryTrace> {
        let delta: Vec<(usize, f64)> = (0..self.masks.grid().len())
            .filter_map(|k| {
                self.masks
                    .owner(k)
                    .map(|j| (k, alpha[j] - self.ctx.a0))
                    .filter(|(_, d)| *d != 0.0)
            })
            .collect();
        let (phi, _) = self.base.solve_perturbed(&delta, &self.phi0)?;
        Ok(self.base.flux(&phi, &self.ctx.g))
    }

    pub fn eval(&self, alpha: &[f64]) -> Result<f64> {
        let f = self.flux(alpha)?;
        Ok(0.5 * f.sub(self.measured).norm_l2().powi(2))
    }
}

/// Values `lower, lower + step, …` not exceeding `upper`.
pub fn lattice(lower: f64, upper: f64, step: f64) -> Vec<f64> {
    let count = ((upper - lower) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lower + i as f64 * step).collect()
}

/// Grid search over the constant lattice minimizing the flux misfit. Ties go
/// to the lexicographically smallest tuple. The exhaustive mode refuses
/// more than three inclusions; coordinate descent sweeps each constant in
/// turn, three passes, starting from the lattice value nearest `a0`.
pub fn initial_guess_exhaustion(
    ctx: &ForwardContext,
    masks: &MaskSet,
    measured: &BoundaryTrace,
    step: f64,
    mode: SweepMode,
) -> Result<PiecewiseConstantGuess> {
    if !(step > 0.0) {
        return Err(Error::validation("partition step must be positive"));
    }
    let k = masks.len();
    if mode == SweepMode::Exhaustive && k > EXHAUSTIVE_MAX_INCLUSIONS {
        return Err(Error::validation(format!(
            "exhaustive sweep over {k} inclusions is too large; use coordinate descent"
        )));
    }
    let objective = FluxMisfit::new(ctx, masks, measured)?;
    let values = lattice(ctx.lower, ctx.upper, step);
    if k == 0 {
        return Ok(PiecewiseConstantGuess {
            alpha: vec![],
            misfit: objective.eval(&[])?,
            evaluations: 1,
        });
    }
    let mut evaluations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |alpha: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| -> Result<()> {
        let j = objective.eval(&alpha)?;
        evaluations += 1;
        if best.as_ref().map_or(true, |(_, b)| j < *b) {
            *best = Some((alpha, j));
        }
        Ok(())
    };
    match mode {
        SweepMode::Exhaustive => {
            let total = values.len().pow(k as u32);
            for code in 0..total {
                let mut rest = code;
                let mut alpha = vec![0.0; k];
                for d in (0..k).rev() {
                    alpha[d] = values[rest % values.len()];
                    rest /= values.len();
                }
                consider(alpha, &mut best)?;
            }
        }
        SweepMode::CoordinateDescent => {
            let start = values
                .iter()
                .copied()
                .min_by(|a, b| (a - ctx.a0).abs().total_cmp(&(b - ctx.a0).abs()))
                .expect("lattice is not empty");
            let mut current = vec![start; k];
            for _ in 0..DESCENT_PASSES {
                for j in 0..k {
                    let mut local: Option<(Vec<f64>, f64)> = None;
                    for &v in &values {
                        let mut alpha = current.clone();
                        alpha[j] = v;
                        consider(alpha, &mut local)?;
                    }
                    let (alpha, jv) = local.expect("lattice is not empty");
                    if best.as_ref().map_or(true, |(_, b)| jv < *b) {
                        best = Some((alpha.clone(), jv));
                    }
                    current = alpha;
                }
            }
        }
    }
    let (alpha, misfit) = best.expect("at least one evaluation");
    Ok(PiecewiseConstantGuess {
        alpha,
        misfit,
        evaluations,
    })
}

/// Forward state at one coefficient: the optical field and the solver for
/// linearized and adjoint solves.
#[derive(Debug)]
pub struct Linearization {
    pub coefficient: ScalarField,
    pub phi: ScalarField,
    solver: DiffusionSolver,
}

impl Linearization {
    pub fn new(ctx: &ForwardContext, coefficient: ScalarField) -> Result<Self> {
        let solver = DiffusionSolver::new(&coefficient, ctx.l)?;
        let phi = solver.solve_t(&ctx.g)?.phi;
        Ok(Linearization {
            coefficient,
            phi,
            solver,
        })
    }

    pub fn at(ctx: &ForwardContext, masks: &MaskSet, it: &Iterate) -> Result<Self> {
        Self::new(ctx, it.coefficient(ctx, masks))
    }

    /// Outward flux of the forward field.
    pub fn flux(&self, ctx: &ForwardContext) -> BoundaryTrace {
        self.solver.flux(&self.phi, &ctx.g)
    }

    fn phi_sq_edge(&self, k: usize, kp: usize) -> f64 {
        let p = self.phi.values();
        0.5 * (p[k] * p[k] + p[kp] * p[kp])
    }

    /// `F[a]`: `v ↦ Σ_j ∫_{A_j} Φ² ∇a·∇v_j`.
    pub fn f_apply(&self, masks: &MaskSet) -> Result<HFunctional> {
        let a = self.coefficient.values();
        let b = masks.assemble(|k, kp| self.phi_sq_edge(k, kp) * (a[kp] - a[k]));
        HFunctional::from_dual(masks, &b)
    }

    /// `DF[a](h)`: `v ↦ Σ_j ∫ (2Φ Φ' ∇a + Φ² ∇h)·∇v_j` with `Φ' = DT[a](h)`.
    pub fn df_apply(&self, masks: &MaskSet, h: &HElement) -> Result<HFunctional> {
        let grid = masks.grid();
        let hf = h.combined(grid);
        let dphi = self.solver.solve_dt(&self.phi, &hf)?;
        let (a, p, dp, hv) = (
            self.coefficient.values(),
            self.phi.values(),
            dphi.values(),
            hf.values(),
        );
        let b = masks.assemble(|k, kp| {
            (p[k] * dp[k] + p[kp] * dp[kp]) * (a[kp] - a[k])
                + self.phi_sq_edge(k, kp) * (hv[kp] - hv[k])
        });
        HFunctional::from_dual(masks, &b)
    }

    /// `g ∈ H` with `⟨g, h⟩_H = DF[a](h)(ρ)` for every `h`.
    pub fn df_adjoint(&self, masks: &MaskSet, rho: &HFunctional) -> Result<HElement> {
        let grid = masks.grid();
        let r = rho.representer.combined(grid);
        let (a, p, rv) = (self.coefficient.values(), self.phi.values(), r.values());
        let mut s = vec![0.0; grid.len()];
        for &(k, kp) in masks.edges() {
            let c = (a[kp] - a[k]) * (rv[kp] - rv[k]);
            s[k] += p[k] * c;
            s[kp] += p[kp] * c;
        }
        let (z, _) = self.solver.solve_dual(&s)?;
        let w = self.solver.operator().source_rhs(&vec![1.0; grid.len()]);
        let mut b = masks.assemble(|k, kp| self.phi_sq_edge(k, kp) * (rv[kp] - rv[k]));
        for k in 0..grid.len() {
            b[k] -= z[k] * w[k] * p[k];
        }
        masks.riesz(&b)
    }

    pub fn min_phi_over(&self, mask: &[bool]) -> f64 {
        self.phi
            .values()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(f64::INFINITY, |acc, (v, _)| acc.min(*v))
    }

    pub fn max_phi_over(&self, mask: &[bool]) -> f64 {
        self.phi
            .values()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(f64::NEG_INFINITY, |acc, (v, _)| acc.max(*v))
    }
}

/// The data functional `v ↦ -Σ_j ∫_{A_j} ∇ψ·∇v_j`. With `ψ = ∇·u` and
/// `-Δu = Φ²∇a` this equals `F[a_*]` on `H`.
pub fn delta_psi_functional(psi: &ScalarField, masks: &MaskSet) -> Result<HFunctional> {
    let v = psi.values();
    let b = masks.assemble(|k, kp| -(v[kp] - v[k]));
    HFunctional::from_dual(masks, &b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KProjectionConfig {
    pub lower: f64,
    pub upper: f64,
    /// Budget for `‖∇h_j‖_{L⁴(A_j)}`.
    pub theta: f64,
}

impl KProjectionConfig {
    pub fn new(lower: f64, upper: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !(lower < upper) {
            return Err(Error::validation(format!(
                "need lower < upper and theta > 0, got [{lower}, {upper}], theta = {theta}"
            )));
        }
        Ok(KProjectionConfig {
            lower,
            upper,
            theta,
        })
    }
}

/// `‖∇h_j‖_{L⁴(A_j)}` for every part.
pub fn gradient_l4_norms(h: &HElement, masks: &MaskSet) -> Vec<f64> {
    h.parts
        .iter()
        .enumerate()
        .map(|(j, p)| norm_l4_vector(&gradient(p), Some(masks.mask(j))))
        .collect()
}

const SCALE_SLACK: f64 = 1e-12;

/// Clamps `α_j + h_j` into the bounds, then scales each part back onto the
/// `L⁴` gradient budget. Not the metric projection, but it lands in `K` and
/// leaves members of `K` unchanged.
pub fn project_k(it: &Iterate, config: &KProjectionConfig, masks: &MaskSet) -> Iterate {
    let alpha: Vec<f64> = it
        .alpha
        .iter()
        .map(|a| a.clamp(config.lower, config.upper))
        .collect();
    let mut parts = Vec::with_capacity(it.correction.parts.len());
    for (j, p) in it.correction.parts.iter().enumerate() {
        let aj = alpha[j];
        let clamped = p.map(|h| {
            let v = aj + h;
            if v < config.lower {
                config.lower - aj
            } else if v > config.upper {
                config.upper - aj
            } else {
                h
            }
        });
        let norm = norm_l4_vector(&gradient(&clamped), Some(masks.mask(j)));
        let part = if norm > config.theta * (1.0 + SCALE_SLACK) {
            clamped.scale(config.theta / norm)
        } else {
            clamped
        };
        parts.push(part);
    }
    Iterate {
        alpha,
        correction: HElement { parts },
    }
}

/// Estimate of `‖DF[a]‖` by power iteration on `DF* DF`.
pub fn operator_norm(lin: &Linearization, masks: &MaskSet, iterations: usize) -> Result<f64> {
    if masks.free_nodes().is_empty() {
        return Ok(0.0);
    }
    let mut b = vec![0.0; masks.grid().len()];
    for &k in masks.free_nodes() {
        b[k] = 1.0;
    }
    let mut x = masks.riesz(&b)?;
    let mut est = 0.0;
    for _ in 0..iterations {
        let nx = x.norm(masks);
        if nx == 0.0 {
            return Ok(0.0);
        }
        x = x.scale(1.0 / nx);
        let y = lin.df_adjoint(masks, &lin.df_apply(masks, &x)?)?;
        est = y.norm(masks);
        x = y;
    }
    Ok(est.sqrt())
}

/// Constant of the discrete embedding `‖f‖_{L⁴} <= C ‖f‖_H` on the masks,
/// by nonlinear power iteration `f ← R(f³)` with `R` the Riesz map.
pub fn embedding_constant(masks: &MaskSet, iterations: usize) -> Result<f64> {
    let grid = masks.grid();
    if masks.free_nodes().is_empty() {
        return Ok(0.0);
    }
    let w = grid.weights();
    let l4 = |f: &HElement| -> f64 {
        let c = f.combined(grid);
        c.values()
            .iter()
            .zip(&w)
            .map(|(v, w)| w * v.powi(4))
            .sum::<f64>()
            .powf(0.25)
    };
    let mut b = vec![0.0; grid.len()];
    for &k in masks.free_nodes() {
        b[k] = w[k];
    }
    let mut f = masks.riesz(&b)?;
    let mut c = 0.0;
    for _ in 0..iterations {
        f = f.scale(1.0 / f.norm(masks));
        c = l4(&f);
        let cf = f.combined(grid);
        let b: Vec<f64> = cf.values().iter().zip(&w).map(|(v, w)| w * v.powi(3)).collect();
        f = masks.riesz(&b)?;
    }
    Ok(c)
}

/// `θ = ½ λ̂² / (Ĉ Λ̂²)` from the field bounds on the masks and the
/// embedding constant.
pub fn theta_auto(lin: &Linearization, masks: &MaskSet) -> Result<f64> {
    let union: Vec<bool> = (0..masks.grid().len()).map(|k| masks.owner(k).is_some()).collect();
    let lam = lin.min_phi_over(&union);
    let big = lin.max_phi_over(&union);
    let c = embedding_constant(masks, POWER_ITERATIONS)?;
    if !(c > 0.0) || !(lam > 0.0) {
        return Err(Error::Numerical(format!(
            "cannot form theta: lambda = {lam}, embedding constant = {c}"
        )));
    }
    Ok(0.5 * lam * lam / (c * big * big))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `0.9 / L̂²` with `L̂` from power iteration at the initial guess.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct LandweberConfig {
    pub projection: KProjectionConfig,
    pub step: StepSize,
    pub max_iter: usize,
    pub stop_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iter: usize,
    pub residual: f64,
    pub dist_to_truth: Option<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    StepCollapsed,
}

#[derive(Debug, Clone)]
pub struct ReconstructionState {
    pub iterate: Iterate,
    pub tau: f64,
    pub log: Vec<LogEntry>,
    pub stop: StopReason,
    pub halvings: usize,
}

impl ReconstructionState {
    pub fn residuals(&self) -> Vec<f64> {
        self.log.iter().map(|e| e.residual).collect()
    }

    /// Fraction of steps after which the distance to the truth shrank.
    pub fn monotone_fraction(&self) -> Option<f64> {
        let d: Vec<f64> = self.log.iter().filter_map(|e| e.dist_to_truth).collect();
        if d.len() < 2 {
            return None;
        }
        let dec = d.windows(2).filter(|w| w[1] < w[0]).count();
        Some(dec as f64 / (d.len() - 1) as f64)
    }

    pub fn write_log<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iter", "residual_Hstar", "dist_to_truth_H", "tau"])?;
        for e in &self.log {
            wr.write_record([
                e.iter.to_string(),
                format!("{:.16e}", e.residual),
                e.dist_to_truth.map_or(String::new(), |d| format!("{d:.16e}")),
                format!("{:.16e}", e.tau),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `H` distance between a coefficient and the truth over the mask edges.
pub fn h_distance(masks: &MaskSet, a: &ScalarField, truth: &ScalarField) -> f64 {
    let d = a.sub(truth);
    masks.edge_inner(d.values(), d.values()).sqrt()
}

/// Projected Landweber iteration
/// `a ← P(a) - τ DF[P(a)]*(F[P(a)] - Δψ)` from a piecewise constant guess.
pub fn landweber_run(
    ctx: &ForwardContext,
    masks: &MaskSet,
    initial: Iterate,
    data: &HFunctional,
    config: &LandweberConfig,
    truth: Option<&ScalarField>,
) -> Result<ReconstructionState> {
    let mut current = project_k(&initial, &config.projection, masks);
    let mut tau = match config.step {
        StepSize::Fixed(t) => t,
        StepSize::Auto => {
            let lin = Linearization::at(ctx, masks, &current)?;
            let l = operator_norm(&lin, masks, POWER_ITERATIONS)?;
            if l > 0.0 {
                STEP_SAFETY / (l * l)
            } else {
                1.0
            }
        }
    };
    let mut log = Vec::new();
    let mut increases = 0;
    let mut halvings = 0;
    let mut first = None;
    let mut stop = StopReason::MaxIterations;
    for iter in 0..=config.max_iter {
        let lin = Linearization::at(ctx, masks, &current)?;
        let residual_fn = lin.f_apply(masks)?.sub(data);
        let res = residual_fn.norm(masks);
        if !res.is_finite() {
            return Err(Error::Numerical(format!("residual became {res} at iteration {iter}")));
        }
        let dist = truth.map(|t| h_distance(masks, &lin.coefficient, t));
        if let Some(prev) = log.last().map(|e: &LogEntry| e.residual) {
            if res > prev {
                increases += 1;
            } else {
                increases = 0;
            }
        }
        log.push(LogEntry {
            iter,
            residual: res,
            dist_to_truth: dist,
            tau,
        });
        let r0 = *first.get_or_insert(res);
        if res <= config.stop_tol * r0 || res == 0.0 {
            stop = StopReason::Converged;
            break;
        }
        if iter == config.max_iter {
            break;
        }
        if increases >= INCREASES_BEFORE_HALVING {
            halvings += 1;
            increases = 0;
            if halvings > MAX_HALVINGS {
                stop = StopReason::StepCollapsed;
                break;
            }
            tau *= 0.5;
        }
        let grad = lin.df_adjoint(masks, &residual_fn)?;
        let next = Iterate {
            alpha: current.alpha.clone(),
            correction: current.correction.axpy(-tau, &grad),
        };
        current = project_k(&next, &config.projection, masks);
    }
    Ok(ReconstructionState {
        iterate: current,
        tau,
        log,
        stop,
        halvings,
    })
}
