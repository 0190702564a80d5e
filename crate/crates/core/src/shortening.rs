//! The free-boundary Birkhoff shortening map `Ψ`.
//!
//! Given a curve with endpoints on `N` and the grid `x_j = j/(2L)`:
//!
//! 1. the boundary even pieces `[0, x_2]`, `[x_{2L−2}, 1]` become minimizing
//!    geodesics from `γ(x_2)`, `γ(x_{2L−2})` to `N`, and every inner even piece
//!    `[x_{2j}, x_{2j+2}]` the fixed-endpoint geodesic (`γ_e`);
//! 2. `γ_e` is reparametrised to constant speed (`γ̃_e`), carrying `x_j` to `x̃_j`;
//! 3. each odd piece `[x̃_{2j−1}, x̃_{2j+1}]` is replaced by the fixed-endpoint
//!    geodesic (`γ_o`);
//! 4. `γ_o` is reparametrised to constant speed, giving `Ψ(γ)`.
//!
//! Curves carry `K = 2L·m` segments so every `x_j` is a sample; the moved
//! points `x̃_j` snap to the nearest sample.

use crate::curve::{reparametrize_constant_speed, tangential_turning_angles, w12_distance, DiscreteCurve};
use crate::geodesic::{minimizing_geodesic, minimizing_geodesic_to_submanifold, GeodesicError, SolverOptions};
use crate::manifold::{ensure_on, Embedding, ON_MANIFOLD_TOL};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakGrid {
    l: usize,
}

impl BreakGrid {
    pub fn new(l: usize) -> Result<Self, ShorteningError> {
        if l < 2 {
            return Err(ShorteningError::InvalidGrid(l));
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// The `2L + 1` points `x_0 = 0, …, x_{2L} = 1`.
    pub fn points(&self) -> Vec<f64> {
        let n = 2 * self.l;
        (0..=n).map(|j| j as f64 / n as f64).collect()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (2 * self.l) as f64
    }

    /// Segment count for a curve with `samples_per_interval` segments per even interval.
    pub fn curve_segments(&self, samples_per_interval: usize) -> usize {
        self.l * samples_per_interval
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiConfig {
    pub grid: BreakGrid,
    pub solver: SolverOptions,
    /// Angle defect (rad) accepted at the free endpoints.
    pub orthogonality_tol: f64,
}

impl PsiConfig {
    pub fn new(l: usize) -> Result<Self, ShorteningError> {
        Ok(Self { grid: BreakGrid::new(l)?, solver: SolverOptions::default(), orthogonality_tol: 1e-3 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFailure {
    pub interval: usize,
    pub error: GeodesicError,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShorteningError {
    #[error("break grid needs L >= 2, got {0}")]
    InvalidGrid(usize),
    #[error("curve has {segments} segments, not a multiple of 2L = {}", 2 * l)]
    GridMisaligned { segments: usize, l: usize },
    #[error("curve endpoint is off the constraint submanifold (residual {residual:e})")]
    EndpointOffConstraint { residual: f64 },
    #[error("{} {step:?}-step segment solve(s) failed, first at interval {}: {}",
        failures.len(), failures[0].interval, failures[0].error)]
    Segments { step: Step, failures: Vec<SegmentFailure> },
}

/// One geodesic replacement inside `Ψ`, for convexity audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplacementRecord {
    pub step: Step,
    pub interval: usize,
    pub boundary: bool,
    /// Squared `W^{1,2}` distance between the old and new piece on its sub-interval.
    pub dist_sq: f64,
    pub energy_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub energy: f64,
    pub length: f64,
}

/// The curves `γ, γ_e, γ̃_e, γ_o, γ̃_o` and their diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTrace {
    pub curves: Vec<DiscreteCurve>,
    pub stages: Vec<StageRecord>,
    /// `W^{1,2}` distances between consecutive stages.
    pub steps: Vec<f64>,
    /// `x̃_j` for `j = 0..=2L`.
    pub break_images: Vec<f64>,
    pub replacements: Vec<ReplacementRecord>,
}

pub const STAGE_NAMES: [&str; 5] = ["gamma", "gamma_e", "gamma_e_tilde", "gamma_o", "gamma_o_tilde"];

impl PsiTrace {
    pub fn energies(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.energy).collect()
    }

    /// Largest increase along the energy chain relative to `E(γ)`; ≤ 0 when monotone.
    pub fn worst_energy_increase(&self) -> f64 {
        let e0 = self.stages[0].energy.max(f64::MIN_POSITIVE);
        self.stages.windows(2).map(|w| (w[1].energy - w[0].energy) / e0).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_alignment(c: &DiscreteCurve, grid: &BreakGrid) -> Result<usize, ShorteningError> {
    let k = c.segments();
    if !k.is_multiple_of(2 * grid.l) {
        return Err(ShorteningError::GridMisaligned { segments: k, l: grid.l });
    }
    Ok(k / grid.l)
}

fn w12_sq_between(a: &DiscreteCurve, b: &DiscreteCurve, lo: usize, hi: usize) -> f64 {
    let k = a.segments() as f64;
    let dt = 1.0 / k;
    let (pa, pb) = (a.samples(), b.samples());
    (lo..hi)
        .map(|i| {
            let d0 = pa[i] - pb[i];
            let d1 = pa[i + 1] - pb[i + 1];
            dt * (d0.norm_squared() + d0.dot(&d1) + d1.norm_squared()) / 3.0 + k * (d1 - d0).norm_squared()
        })
        .sum()
}

fn record(
    step: Step,
    interval: usize,
    boundary: bool,
    old: &DiscreteCurve,
    new: &DiscreteCurve,
    lo: usize,
    hi: usize,
) -> ReplacementRecord {
    ReplacementRecord {
        step,
        interval,
        boundary,
        dist_sq: w12_sq_between(old, new, lo, hi),
        energy_drop: old.energy_between(lo, hi) - new.energy_between(lo, hi),
    }
}

fn even_step(
    c: &DiscreteCurve,
    s: &Scenario,
    cfg: &PsiConfig,
) -> Result<(DiscreteCurve, Vec<ReplacementRecord>), ShorteningError> {
    let span = check_alignment(c, &cfg.grid)?;
    let l = cfg.grid.l;
    let k = c.segments();
    let src = c.samples();
    let mut out = src.to_vec();
    let mut failures = Vec::new();
    for j in 0..l {
        let (a, b) = (j * span, (j + 1) * span);
        let piece = if j == 0 {
            minimizing_geodesic_to_submanifold(&s.surface, &s.constraint, &src[b], span, &cfg.solver).map(|g| g.reversed())
        } else if j == l - 1 {
            minimizing_geodesic_to_submanifold(&s.surface, &s.constraint, &src[a], span, &cfg.solver)
        } else {
            minimizing_geodesic(&s.surface, &src[a], &src[b], span, &cfg.solver)
        };
        match piece {
            Ok(g) => out[a..=b].copy_from_slice(g.samples()),
            Err(error) => failures.push(SegmentFailure { interval: j, error }),
        }
    }
    if !failures.is_empty() {
        return Err(ShorteningError::Segments { step: Step::Even, failures });
    }
    debug_assert_eq!(out.len(), k + 1);
    let out = DiscreteCurve::from_samples_unchecked(out, true);
    let records = (0..l).map(|j| record(Step::Even, j, j == 0 || j == l - 1, c, &out, j * span, (j + 1) * span)).collect();
    Ok((out, records))
}

/// Sample indices of the odd intervals `[x̃_{2j−1}, x̃_{2j+1}]`, `j = 1..L−1`.
fn odd_intervals(k: usize, l: usize, images: &[f64]) -> Vec<(usize, usize, usize)> {
    let snap = |x: f64| ((x * k as f64).round() as usize).min(k);
    (1..l).map(|j| (j, snap(images[2 * j - 1]), snap(images[2 * j + 1]))).collect()
}

fn odd_step(
    c: &DiscreteCurve,
    s: &Scenario,
    cfg: &PsiConfig,
    images: &[f64],
) -> Result<(DiscreteCurve, Vec<ReplacementRecord>), ShorteningError> {
    check_alignment(c, &cfg.grid)?;
    let l = cfg.grid.l;
    assert_eq!(images.len(), 2 * l + 1, "break images must cover x_0..x_2L");
    let src = c.samples();
    let mut out = src.to_vec();
    let mut failures = Vec::new();
    let intervals = odd_intervals(c.segments(), l, images);
    for &(j, a, b) in &intervals {
        if b <= a + 1 {
            continue;
        }
        match minimizing_geodesic(&s.surface, &src[a], &src[b], b - a, &cfg.solver) {
            Ok(g) => out[a..=b].copy_from_slice(g.samples()),
            Err(error) => failures.push(SegmentFailure { interval: j, error }),
        }
    }
    if !failures.is_empty() {
        return Err(ShorteningError::Segments { step: Step::Odd, failures });
    }
    let out = DiscreteCurve::from_samples_unchecked(out, c.endpoints_on_constraint());
    let records =
        intervals.iter().filter(|(_, a, b)| b > a).map(|&(j, a, b)| record(Step::Odd, j, false, c, &out, a, b)).collect();
    Ok((out, records))
}

/// Step 1 of `Ψ`.
pub fn even_replacement(c: &DiscreteCurve, s: &Scenario, cfg: &PsiConfig) -> Result<DiscreteCurve, ShorteningError> {
    check_endpoints(c, s)?;
    even_step(c, s, cfg).map(|(c, _)| c)
}

/// Step 3 of `Ψ` on a constant-speed curve; `images` are `x̃_0..x̃_{2L}`.
pub fn odd_replacement(
    c: &DiscreteCurve,
    s: &Scenario,
    cfg: &PsiConfig,
    images: &[f64],
) -> Result<DiscreteCurve, ShorteningError> {
    odd_step(c, s, cfg, images).map(|(c, _)| c)
}

fn check_endpoints(c: &DiscreteCurve, s: &Scenario) -> Result<(), ShorteningError> {
    for p in [c.first(), c.last()] {
        if ensure_on(&s.constraint, &p, ON_MANIFOLD_TOL).is_err() {
            return Err(ShorteningError::EndpointOffConstraint { residual: s.constraint.residual(&p) });
        }
    }
    Ok(())
}

/// Applies `Ψ` and returns the trace of all intermediate stages.
pub fn psi(c: &DiscreteCurve, s: &Scenario, cfg: &PsiConfig) -> Result<(DiscreteCurve, PsiTrace), ShorteningError> {
    check_endpoints(c, s)?;
    check_alignment(c, &cfg.grid)?;
    let l = cfg.grid.l as f64;
    if c.energy() > l * l {
        log::debug!("curve energy {:.3} exceeds L² = {:.0}", c.energy(), l * l);
    }
    let (gamma_e, mut replacements) = even_step(c, s, cfg)?;
    let (gamma_e_tilde, map) = reparametrize_constant_speed(&gamma_e, &s.surface);
    let break_images: Vec<f64> = cfg.grid.points().iter().map(|&x| map.eval(x)).collect();
    let (gamma_o, odd) = odd_step(&gamma_e_tilde, s, cfg, &break_images)?;
    replacements.extend(odd);
    let (out, _) = reparametrize_constant_speed(&gamma_o, &s.surface);
    let out = out.with_endpoint_flag(true);

    let curves = vec![c.clone(), gamma_e, gamma_e_tilde, gamma_o, out.clone()];
    let stages = curves
        .iter()
        .zip(STAGE_NAMES)
        .map(|(c, name)| StageRecord { name: name.to_string(), energy: c.energy(), length: c.length() })
        .collect();
    let steps = curves.windows(2).map(|w| w12_distance(&w[0], &w[1]).expect("common grid")).collect();
    Ok((out, PsiTrace { curves, stages, steps, break_images, replacements }))
}

/// Discrete free-boundary geodesic certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCertificate {
    /// Max tangential second difference scaled by `K²` (acceleration units).
    pub interior_residual: f64,
    /// Max angle (rad) between an endpoint velocity and the normal space of `N`.
    pub boundary_orthogonality: f64,
    /// Max tangential turning angle (rad) at any interior node.
    pub break_defect: f64,
    /// Point curves get zero residuals but are flagged here.
    pub trivial: bool,
}

impl GeodesicCertificate {
    pub fn passes(&self, interior_tol: f64, orthogonality_tol: f64) -> bool {
        !self.trivial && self.interior_residual < interior_tol && self.boundary_orthogonality < orthogonality_tol
    }
}

pub fn geodesic_residual(c: &DiscreteCurve, s: &Scenario) -> GeodesicCertificate {
    let scale = c.samples().iter().map(|p| p.norm()).fold(1.0, f64::max);
    if c.length() <= 1e-12 * scale || c.segments() < 2 {
        return GeodesicCertificate { interior_residual: 0.0, boundary_orthogonality: 0.0, break_defect: 0.0, trivial: true };
    }
    let k = c.segments() as f64;
    let p = c.samples();
    let interior_residual = p
        .windows(3)
        .map(|w| s.surface.tangent_basis(&w[1]).project(&(w[0] - w[1] * 2.0 + w[2])).norm() * k * k)
        .fold(0.0, f64::max);
    let defect = |end: usize, next: usize| {
        let v = s.surface.tangent_basis(&p[end]).project(&(p[next] - p[end]));
        let len = v.norm();
        if len == 0.0 {
            return 0.0;
        }
        let along = s.constraint.tangent_basis(&p[end]).project(&v).norm();
        (along / len).min(1.0).asin()
    };
    let last = p.len() - 1;
    let boundary_orthogonality = defect(0, 1).max(defect(last, last - 1));
    let break_defect = tangential_turning_angles(c, &s.surface).into_iter().fold(0.0, f64::max);
    GeodesicCertificate { interior_residual, boundary_orthogonality, break_defect, trivial: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Defaults to `1e-8·Length(c₀)`.
    pub min_length_drop: Option<f64>,
    pub fixed_point_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 200, min_length_drop: None, fixed_point_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub length: f64,
    pub energy: f64,
    pub w12_step: f64,
    pub interior_residual: f64,
    pub orthogonality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IterationOutcome {
    Converged { iterations: usize },
    MaxIterations { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
    pub outcome: IterationOutcome,
}

impl IterationLog {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, IterationOutcome::Converged { .. })
    }
}

fn iteration_record(iter: usize, c: &DiscreteCurve, s: &Scenario, w12_step: f64) -> IterationRecord {
    let cert = geodesic_residual(c, s);
    IterationRecord {
        iter,
        length: c.length(),
        energy: c.energy(),
        w12_step,
        interior_residual: cert.interior_residual,
        orthogonality: cert.boundary_orthogonality,
    }
}

/// Iterates `Ψ` until the length drop and the step are both below their thresholds.
pub fn iterate_psi(
    c: &DiscreteCurve,
    s: &Scenario,
    cfg: &PsiConfig,
    stop: &StopRule,
) -> Result<(DiscreteCurve, IterationLog), ShorteningError> {
    let delta = stop.min_length_drop.unwrap_or(1e-8 * c.length());
    let mut current = c.clone();
    let mut records = vec![iteration_record(0, &current, s, 0.0)];
    for iter in 1..=stop.max_iters {
        let (next, _) = psi(&current, s, cfg)?;
        let step = w12_distance(&current, &next).expect("common grid");
        let drop = current.length() - next.length();
        records.push(iteration_record(iter, &next, s, step));
        current = next;
        if drop <= delta && step <= stop.fixed_point_tol {
            return Ok((current, IterationLog { records, outcome: IterationOutcome::Converged { iterations: iter } }));
        }
    }
    Ok((current, IterationLog { records, outcome: IterationOutcome::MaxIterations { iterations: stop.max_iters } }))
}
