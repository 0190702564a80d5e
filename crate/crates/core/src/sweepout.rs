//! Sweepouts, their width, and the min-max tightening loop.

use crate::curve::{reparametrize_constant_speed, w12_distance, DiscreteCurve};
use crate::exec::{map_indexed, ExecMode};
use crate::manifold::{Constraint, Point, Surface};
use crate::scenario::{GeodesicFamily, Scenario, ScenarioDescriptor, SweepoutKind};
use crate::shortening::{even_replacement, geodesic_residual, psi, GeodesicCertificate, PsiConfig, ShorteningError};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub const DEFAULT_SLICES: usize = 64;
pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 16;
pub const MIN_GRID: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepoutError {
    #[error("a sweepout needs at least 2 slices, got {0}")]
    TooFewSlices(usize),
    #[error("sweepout family {kind:?} does not fit this scenario")]
    Incompatible { kind: SweepoutKind },
    #[error("slice {index} is {reason}")]
    InvalidSlice { index: usize, reason: String },
    #[error("slice {index}: {source}")]
    Slice { index: usize, source: ShorteningError },
    #[error("sweep {sweep}: {failed} of {total} slices failed; first at slice {first}: {error}")]
    TooManyFailures { sweep: usize, failed: usize, total: usize, first: usize, error: ShorteningError },
}

/// Slices at `t_i = i/S`, `i = 0..=S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweepout {
    pub slices: Vec<DiscreteCurve>,
    pub scenario: ScenarioDescriptor,
}

impl Sweepout {
    pub fn new(slices: Vec<DiscreteCurve>, scenario: ScenarioDescriptor) -> Result<Self, SweepoutError> {
        if slices.len() < 3 {
            return Err(SweepoutError::TooFewSlices(slices.len().saturating_sub(1)));
        }
        let k = slices[0].segments();
        if let Some(index) = slices.iter().position(|c| c.segments() != k) {
            return Err(SweepoutError::InvalidSlice { index, reason: format!("not on the common {k}-segment grid") });
        }
        Ok(Self { slices, scenario })
    }

    /// Number of parameter intervals `S`.
    pub fn intervals(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn segments(&self) -> usize {
        self.slices[0].segments()
    }

    pub fn param(&self, i: usize) -> f64 {
        i as f64 / self.intervals() as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        self.slices.iter().map(DiscreteCurve::energy).collect()
    }

    /// Largest `W^{1,2}` step between neighbouring slices.
    pub fn continuity_modulus(&self) -> f64 {
        self.slices.windows(2).map(|w| w12_distance(&w[0], &w[1]).expect("common grid")).fold(0.0, f64::max)
    }

    /// End slices constant, every slice on `M` with endpoints on `N`.
    pub fn validate(&self, s: &Scenario) -> Result<(), SweepoutError> {
        for index in [0, self.intervals()] {
            if !self.slices[index].is_point_curve(0.0) {
                return Err(SweepoutError::InvalidSlice { index, reason: "an end slice but not constant".into() });
            }
        }
        for (index, c) in self.slices.iter().enumerate() {
            if !s.endpoints_on_constraint(c) {
                return Err(SweepoutError::InvalidSlice { index, reason: "not ending on the constraint".into() });
            }
            s.check_curve(c).map_err(|e| SweepoutError::InvalidSlice { index, reason: e.to_string() })?;
        }
        Ok(())
    }
}

fn hemisphere_slice(r: f64, t: f64, k: usize) -> DiscreteCurve {
    let c = r * (2.0 * t - 1.0);
    let rho = (r * r - c * c).max(0.0).sqrt();
    if rho == 0.0 {
        return DiscreteCurve::constant(Point::new(c.signum() * r, 0.0, 0.0), k, true);
    }
    DiscreteCurve::from_fn(k, true, |s| {
        let (sa, ca) = (PI * s).sin_cos();
        Point::new(c, -rho * ca, rho * sa)
    })
}

fn disk_slice(center: Point, r: f64, t: f64, k: usize) -> DiscreteCurve {
    let c = r * (2.0 * t - 1.0);
    let w = (r * r - c * c).max(0.0).sqrt();
    let a = center + Point::new(-w, c, 0.0);
    let b = center + Point::new(w, c, 0.0);
    if w == 0.0 {
        return DiscreteCurve::constant(a, k, true);
    }
    DiscreteCurve::from_fn(k, true, |s| a + (b - a) * s)
}

fn loop_slice(r: f64, t: f64, k: usize) -> DiscreteCurve {
    let base = Point::new(0.0, 0.0, r);
    let alpha = PI * t;
    let (sa, ca) = alpha.sin_cos();
    let n = Point::new(sa, 0.0, ca);
    let rho = r * sa.abs();
    if rho <= 1e-12 * r {
        return DiscreteCurve::constant(base, k, true);
    }
    let center = n * (r * ca);
    let u = Point::new(-ca, 0.0, sa);
    let v = Point::y();
    let c = DiscreteCurve::from_fn(k, true, |s| {
        let (ss, cs) = (TAU * s).sin_cos();
        center + (u * cs + v * ss) * rho
    });
    // Pin both ends exactly on the base point.
    let mut p = c.into_samples();
    p[0] = base;
    p[k] = base;
    DiscreteCurve::new(p, true).expect("finite samples")
}

/// Builds the built-in family `kind` with `slices` intervals and `segments` segments per curve.
pub fn generate_scenario_sweepout(
    kind: SweepoutKind,
    s: &Scenario,
    slices: usize,
    segments: usize,
) -> Result<Sweepout, SweepoutError> {
    if slices < 2 {
        return Err(SweepoutError::TooFewSlices(slices));
    }
    let k = segments.max(1);
    let ts = (0..=slices).map(|i| i as f64 / slices as f64);
    let out: Vec<DiscreteCurve> = match (kind, s.surface, s.constraint) {
        (SweepoutKind::Hemisphere, Surface::Sphere { radius }, Constraint::Circle { center, radius: rc })
            if center.norm() <= 1e-12 * radius && (rc - radius).abs() <= 1e-12 * radius =>
        {
            ts.map(|t| hemisphere_slice(radius, t, k)).collect()
        }
        (SweepoutKind::Disk, Surface::Plane, Constraint::Circle { center, radius }) => {
            ts.map(|t| disk_slice(center, radius, t, k)).collect()
        }
        (SweepoutKind::Loop, Surface::Sphere { radius }, Constraint::Point(p))
            if (p - Point::new(0.0, 0.0, radius)).norm() <= 1e-12 * radius =>
        {
            ts.map(|t| loop_slice(radius, t, k)).collect()
        }
        (SweepoutKind::Point, _, Constraint::Circle { center, radius }) => {
            ts.map(|_| DiscreteCurve::constant(center + Point::new(radius, 0.0, 0.0), k, true)).collect()
        }
        (SweepoutKind::Point, _, Constraint::Point(p)) => ts.map(|_| DiscreteCurve::constant(p, k, true)).collect(),
        _ => return Err(SweepoutError::Incompatible { kind }),
    };
    Sweepout::new(out, s.descriptor.clone())
}

/// Smallest partition for which every `1/N` piece of a constant-speed slice has length ≤ 2.
pub fn partition_size(sw: &Sweepout) -> usize {
    let max_len = sw.slices.iter().map(DiscreteCurve::length).fold(0.0, f64::max);
    (max_len / 2.0).ceil().max(1.0) as usize
}

/// Grid size `max(N, ⌈√W₀⌉, 16)`.
pub fn default_grid(sw: &Sweepout) -> usize {
    let w0 = width_estimate(sw).value;
    partition_size(sw).max(w0.sqrt().ceil() as usize).max(MIN_GRID)
}

/// Steps 1 and 2 of `Ψ` on every slice.
pub fn precondition_sweepout(sw: &Sweepout, s: &Scenario, cfg: &PsiConfig, mode: ExecMode) -> Result<Sweepout, SweepoutError> {
    let last = sw.intervals();
    let results = map_indexed(&sw.slices, mode, |i, c| {
        if i == 0 || i == last || c.is_point_curve(0.0) {
            return Ok(c.clone());
        }
        even_replacement(c, s, cfg).map(|g| reparametrize_constant_speed(&g, &s.surface).0.with_endpoint_flag(true))
    });
    let mut slices = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        slices.push(r.map_err(|source| SweepoutError::Slice { index, source })?);
    }
    Ok(Sweepout { slices, scenario: sw.scenario.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub argmax_index: usize,
    /// Max-slice energy after each sweep, starting with the input.
    pub history: Vec<f64>,
}

/// Max slice energy, ties to the lowest index.
pub fn width_estimate(sw: &Sweepout) -> WidthEstimate {
    let (argmax_index, value) =
        sw.energies().into_iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    WidthEstimate { value, argmax_index, history: vec![value] }
}

/// Indices with `E ≥ W − δ`; `δ = 0` gives the argmax ties.
pub fn almost_maximal_slices(sw: &Sweepout, delta: f64) -> Vec<usize> {
    let w = width_estimate(sw);
    let energies = sw.energies();
    let mut out: Vec<usize> = (0..energies.len()).filter(|&i| energies[i] >= w.value - delta).collect();
    if out.is_empty() {
        out.push(w.argmax_index);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDistance {
    pub distance: f64,
    pub phi: f64,
    pub branch: usize,
    pub reversed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicDistance {
    pub certificate: GeodesicCertificate,
    pub analytic: Option<AnalyticDistance>,
}

const ALIGN_GRID: usize = 72;
const GOLDEN_ITERS: usize = 60;

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum `W^{1,2}` distance from `c` to the members of `family`, over rotation and orientation.
pub fn analytic_distance(c: &DiscreteCurve, family: &GeodesicFamily) -> AnalyticDistance {
    let k = c.segments();
    let mut best = AnalyticDistance { distance: f64::INFINITY, phi: 0.0, branch: 0, reversed: false };
    for branch in 0..family.branches() {
        for reversed in [false, true] {
            let target = if reversed { c.reversed() } else { c.clone() };
            let f = |phi: f64| w12_distance(&target, &family.member(phi, branch, k)).expect("common grid");
            let h = TAU / ALIGN_GRID as f64;
            let (j, _) = (0..ALIGN_GRID)
                .map(|j| (j, f(j as f64 * h)))
                .fold((0, f64::INFINITY), |b, (j, v)| if v < b.1 { (j, v) } else { b });
            let centre = j as f64 * h;
            let (phi, distance) = golden_min(f, centre - h, centre + h);
            if distance < best.distance {
                best = AnalyticDistance { distance, phi: phi.rem_euclid(TAU), branch, reversed };
            }
        }
    }
    best
}

pub fn distance_to_geodesic_set(c: &DiscreteCurve, s: &Scenario) -> GeodesicDistance {
    GeodesicDistance { certificate: geodesic_residual(c, s), analytic: s.family.as_ref().map(|f| analytic_distance(c, f)) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightenConfig {
    pub psi: PsiConfig,
    pub max_sweeps: usize,
    /// Width drop, relative to `W₀`, below which a sweep counts as stalled.
    pub width_tol: f64,
    pub stall_sweeps: usize,
    /// `δ/W` for the almost-maximal set that must be certified before stopping.
    pub certify_delta: f64,
    pub interior_tol: f64,
    pub orthogonality_tol: f64,
    pub max_failure_fraction: f64,
    /// Declared bound on the slice-continuity modulus, as a multiple of the input's.
    pub continuity_factor: f64,
    pub mode: ExecMode,
}

impl TightenConfig {
    pub fn new(psi: PsiConfig) -> Self {
        Self {
            psi,
            max_sweeps: 2000,
            width_tol: 1e-6,
            stall_sweeps: 3,
            certify_delta: 1e-2,
            interior_tol: 1e-2,
            orthogonality_tol: 1e-2,
            max_failure_fraction: 0.01,
            continuity_factor: 1.5,
            mode: ExecMode::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub width: f64,
    pub argmax_t: f64,
    /// Largest interior residual over the almost-maximal slices.
    pub max_residual: f64,
    pub max_orthogonality: f64,
    pub almost_maximal: usize,
    pub continuity_modulus: f64,
    /// Largest per-slice energy increase relative to `W₀`.
    pub max_energy_increase: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StopReason {
    AllPointCurves,
    Converged {
        sweeps: usize,
    },
    MaxSweeps {
        sweeps: usize,
    },
    /// Sweep `sweep` would have exceeded the continuity bound; the report describes the sweepout before it.
    ContinuityLost {
        sweep: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub index: usize,
    pub t: f64,
    pub energy: f64,
    pub length: f64,
    pub certificate: GeodesicCertificate,
    pub analytic_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLevel {
    pub delta_rel: f64,
    pub slices: usize,
    pub max_analytic_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxReport {
    pub scenario: ScenarioDescriptor,
    pub slices: usize,
    pub segments: usize,
    pub grid: usize,
    pub width: WidthEstimate,
    pub analytic_width: Option<f64>,
    pub delta: f64,
    pub almost_maximal: Vec<SliceReport>,
    pub best: Option<SliceReport>,
    pub delta_profile: Vec<DeltaLevel>,
    /// Bound on consecutive-slice `W^{1,2}` distances enforced while tightening.
    pub continuity_limit: f64,
    pub sweeps: Vec<SweepRecord>,
    pub stop: StopReason,
}

impl MinMaxReport {
    /// True when the best almost-maximal slice is a non-trivial certified geodesic.
    pub fn nontrivial(&self) -> bool {
        self.best.as_ref().is_some_and(|b| !b.certificate.trivial)
    }
}

pub const DELTA_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];

fn slice_report(sw: &Sweepout, s: &Scenario, index: usize) -> SliceReport {
    let c = &sw.slices[index];
    let d = distance_to_geodesic_set(c, s);
    SliceReport {
        index,
        t: sw.param(index),
        energy: c.energy(),
        length: c.length(),
        certificate: d.certificate,
        analytic_distance: d.analytic.map(|a| a.distance),
    }
}

/// Builds the report for a (tightened) sweepout at almost-maximal level `delta_rel·W`.
pub fn minmax_report(
    sw: &Sweepout,
    s: &Scenario,
    cfg: &TightenConfig,
    history: Vec<f64>,
    sweeps: Vec<SweepRecord>,
    stop: StopReason,
    continuity_limit: f64,
) -> MinMaxReport {
    let width = WidthEstimate { history, ..width_estimate(sw) };
    let levels: Vec<Vec<usize>> = DELTA_GRID.iter().map(|d| almost_maximal_slices(sw, d * width.value)).collect();
    let widest = &levels[0];
    let reports = map_indexed(widest, cfg.mode, |_, &i| slice_report(sw, s, i));
    let lookup = |i: usize| reports.iter().find(|r| r.index == i).expect("nested levels").clone();
    let delta = cfg.certify_delta * width.value;
    let almost_maximal: Vec<SliceReport> = almost_maximal_slices(sw, delta).into_iter().map(lookup).collect();
    let score = |r: &SliceReport| {
        if r.certificate.trivial {
            f64::INFINITY
        } else {
            r.certificate.interior_residual.max(r.certificate.boundary_orthogonality)
        }
    };
    let best = almost_maximal.iter().fold(None::<&SliceReport>, |b, r| match b {
        Some(b) if score(b) <= score(r) => Some(b),
        _ => Some(r),
    });
    let delta_profile = DELTA_GRID
        .iter()
        .zip(&levels)
        .map(|(&delta_rel, idx)| DeltaLevel {
            delta_rel,
            slices: idx.len(),
            max_analytic_distance: s
                .family
                .map(|_| idx.iter().map(|&i| lookup(i).analytic_distance.unwrap_or(f64::NAN)).fold(0.0, f64::max)),
        })
        .collect();
    MinMaxReport {
        scenario: s.descriptor.clone(),
        slices: sw.intervals(),
        segments: sw.segments(),
        grid: cfg.psi.grid.l(),
        analytic_width: s.family.map(|f| f.member_length().powi(2)),
        best: best.cloned(),
        width,
        delta,
        almost_maximal,
        delta_profile,
        continuity_limit,
        sweeps,
        stop,
    }
}

fn certify(sw: &Sweepout, s: &Scenario, cfg: &TightenConfig, w: f64) -> (usize, f64, f64) {
    let idx = almost_maximal_slices(sw, cfg.certify_delta * w);
    let certs = map_indexed(&idx, cfg.mode, |_, &i| geodesic_residual(&sw.slices[i], s));
    let interior = certs.iter().map(|c| c.interior_residual).fold(0.0, f64::max);
    let orth = certs.iter().map(|c| c.boundary_orthogonality).fold(0.0, f64::max);
    (idx.len(), interior, orth)
}

/// Applies `Ψ` to every slice until the width stalls and the almost-maximal slices are certified.
pub fn tighten_sweepout(sw: &Sweepout, s: &Scenario, cfg: &TightenConfig) -> Result<(Sweepout, MinMaxReport), SweepoutError> {
    let w0 = width_estimate(sw).value;
    let limit = cfg.continuity_factor * sw.continuity_modulus();
    let mut current = sw.clone();
    let mut history = vec![w0];
    let mut records = Vec::new();
    if sw.slices.iter().all(|c| c.is_point_curve(0.0)) {
        let report = minmax_report(&current, s, cfg, history, records, StopReason::AllPointCurves, limit);
        return Ok((current, report));
    }
    let last = sw.intervals();
    let mut stalled = 0;
    let mut stop = StopReason::MaxSweeps { sweeps: cfg.max_sweeps };
    for sweep in 1..=cfg.max_sweeps {
        let results = map_indexed(&current.slices, cfg.mode, |i, c| {
            if i == 0 || i == last {
                return Ok(c.clone());
            }
            psi(c, s, &cfg.psi).map(|(out, _)| out)
        });
        let mut slices = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(c) => slices.push(c),
                Err(e) => {
                    log::warn!("sweep {sweep}: slice {i} kept unchanged: {e}");
                    failures.push((i, e));
                    slices.push(current.slices[i].clone());
                }
            }
        }
        let interior = last - 1;
        if failures.len() as f64 > cfg.max_failure_fraction * interior as f64 {
            let (first, error) = failures.swap_remove(0);
            return Err(SweepoutError::TooManyFailures { sweep, failed: failures.len() + 1, total: interior, first, error });
        }
        let max_energy_increase =
            slices.iter().zip(&current.slices).map(|(n, o)| (n.energy() - o.energy()) / w0).fold(f64::NEG_INFINITY, f64::max);
        let prev = *history.last().expect("non-empty");
        let next = Sweepout { slices, scenario: current.scenario.clone() };
        let modulus = next.continuity_modulus();
        if modulus > limit {
            log::warn!("sweep {sweep}: continuity modulus {modulus:.3} exceeds the declared bound {limit:.3}; stopping");
            stop = StopReason::ContinuityLost { sweep };
            break;
        }
        current = next;
        let w = width_estimate(&current);
        history.push(w.value);
        let (almost_maximal, max_residual, max_orthogonality) = certify(&current, s, cfg, w.value);
        records.push(SweepRecord {
            sweep,
            width: w.value,
            argmax_t: current.param(w.argmax_index),
            max_residual,
            max_orthogonality,
            almost_maximal,
            continuity_modulus: modulus,
            max_energy_increase,
            failures: failures.len(),
        });
        if sweep % 100 == 0 {
            log::info!("sweep {sweep}: width {:.6} residual {max_residual:.3e} near-max {almost_maximal}", w.value);
        }
        stalled = if prev - w.value < cfg.width_tol * w0 { stalled + 1 } else { 0 };
        let certified = max_residual < cfg.interior_tol && max_orthogonality < cfg.orthogonality_tol;
        if stalled >= cfg.stall_sweeps && certified {
            stop = StopReason::Converged { sweeps: sweep };
            break;
        }
    }
    let report = minmax_report(&current, s, cfg, history, records, stop, limit);
    Ok((current, report))
}
