//! Executable suites for the inequalities behind the shortening map.
//!
//! Every suite is deterministic in its seed: trial `i` draws from its own
//! ChaCha stream and results are folded in trial order.

use crate::corpus::{perturbed_geodesic, random_curve, trial_rng, CorpusConfig};
use crate::curve::{holder_bound_check, w12_distance, DiscreteCurve};
use crate::exec::{map_range, ExecMode};
use crate::geodesic::{minimizing_geodesic, minimizing_geodesic_to_submanifold, GeodesicError, SolverOptions};
use crate::manifold::{normal_component, Constraint, Embedding, Point, Surface};
use crate::normalization::{sample_constraint, sample_surface};
use crate::scenario::Scenario;
use crate::shortening::{geodesic_residual, psi, PsiConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Failures kept verbatim in a report; the rest are only counted.
pub const MAX_LISTED_FAILURES: usize = 50;
/// Denominators below this count as degenerate in ratio suites.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;
pub const DEGENERATE_NUMERATOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub case: usize,
    pub check: String,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub degenerate: usize,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    pub worst_ratio: f64,
    pub constants: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Vec<[f64; 2]>>,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64) -> Self {
        Self {
            suite: suite.to_string(),
            seed,
            cases: 0,
            degenerate: 0,
            failure_count: 0,
            failures: Vec::new(),
            worst_ratio: 0.0,
            constants: BTreeMap::new(),
            tables: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn fail(&mut self, case: usize, check: &str, value: f64, limit: f64) {
        self.failure_count += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(Failure { case, check: check.to_string(), value, limit });
        }
    }

    fn absorb(&mut self, case: usize, t: Trial) {
        self.cases += 1;
        self.degenerate += t.degenerate;
        self.worst_ratio = self.worst_ratio.max(t.ratio);
        for (check, value, limit) in t.failures {
            self.fail(case, &check, value, limit);
        }
    }

    fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }
}

#[derive(Debug, Default)]
struct Trial {
    ratio: f64,
    degenerate: usize,
    failures: Vec<(String, f64, f64)>,
}

impl Trial {
    fn fail(&mut self, check: &str, value: f64, limit: f64) {
        self.failures.push((check.to_string(), value, limit));
    }
}

/// `(∫f², ∫f′²)` for the piecewise-linear function with `values` on a uniform grid of `[0, len]`.
pub fn pl_integrals(values: &[f64], len: f64) -> (f64, f64) {
    let h = len / (values.len() - 1) as f64;
    values.windows(2).fold((0.0, 0.0), |(l2, h1), w| {
        (l2 + h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0, h1 + (w[1] - w[0]).powi(2) / h)
    })
}

fn ratio(values: &[f64], len: f64) -> f64 {
    let (l2, h1) = pl_integrals(values, len);
    if h1 == 0.0 {
        0.0
    } else {
        l2 / h1
    }
}

/// Wirtinger inequalities for random piecewise-linear functions: both ends
/// zero against `L²/π²`, one end zero against `L²/2`. Ratios are reported
/// normalised by their bound.
pub fn wirtinger_suite(trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    let mut report = SuiteReport::new("wirtinger", seed);
    let witness_len = 2.0;
    let witness: Vec<f64> = (0..=256).map(|j| (PI * j as f64 / 256.0).sin()).collect();
    let sine = ratio(&witness, witness_len) * PI * PI / (witness_len * witness_len);
    let line: Vec<f64> = (0..=64).map(|j| j as f64 / 64.0 * 3.0).collect();
    let linear = ratio(&line, 3.0) * 2.0 / 9.0;

    let outcomes = map_range(trials, mode, |i| {
        let mut rng = trial_rng(seed, i);
        let len = rng.gen_range(0.5..4.0);
        let n = rng.gen_range(2..=64usize);
        let mut f: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        f[0] = 0.0;
        let one = ratio(&f, len) * 2.0 / (len * len);
        f[n] = 0.0;
        let both = ratio(&f, len) * PI * PI / (len * len);
        (both, one)
    });
    let mut worst_both = sine;
    let mut worst_one = linear;
    for (i, (both, one)) in outcomes.into_iter().enumerate() {
        let mut t = Trial { ratio: both.max(one), ..Default::default() };
        if both > 1.0 + 1e-12 {
            t.fail("both_ends", both, 1.0);
        }
        if one > 1.0 + 1e-12 {
            t.fail("one_end", one, 1.0);
        }
        worst_both = worst_both.max(both);
        worst_one = worst_one.max(one);
        report.absorb(i, t);
    }
    if sine < 0.999 {
        report.fail(usize::MAX, "sine_witness", sine, 0.999);
    }
    if !(0.5..=1.0 + 1e-12).contains(&worst_both) {
        report.fail(usize::MAX, "both_ends_sharpness", worst_both, 0.5);
    }
    report.worst_ratio = report.worst_ratio.max(sine);
    report.constant("sine_witness", sine);
    report.constant("linear_witness", linear);
    report.constant("worst_both_ends", worst_both);
    report.constant("worst_one_end", worst_one);
    report
}

fn random_unit(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A point of `surface` at chord distance `d` from `y` (capped by the diameter).
fn surface_point_at(surface: &Surface, y: &Point, d: f64, rng: &mut ChaCha8Rng) -> Point {
    let e = loop {
        let t = surface.tangent_basis(y).project(&random_unit(rng));
        if t.norm() > 1e-3 {
            break t.normalize();
        }
    };
    match *surface {
        Surface::Plane => y + e * d,
        Surface::Sphere { radius } => {
            let theta = 2.0 * (d / (2.0 * radius)).min(1.0).asin();
            y * theta.cos() + e * (radius * theta.sin())
        }
    }
}

fn constraint_point_at(constraint: &Constraint, y: &Point, d: f64, rng: &mut ChaCha8Rng) -> Point {
    match *constraint {
        Constraint::Point(p) => p,
        Constraint::Circle { center, radius } => {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let theta = sign * 2.0 * (d / (2.0 * radius)).min(1.0).asin();
            let r = y - center;
            let (s, c) = theta.sin_cos();
            center + Point::new(c * r.x - s * r.y, s * r.x + c * r.y, 0.0)
        }
    }
}

fn perp_case<E: Embedding + ?Sized>(t: &mut Trial, m: &E, x: &Point, y: &Point, label: &str) {
    let v = x - y;
    let d = v.norm();
    let perp = normal_component(m, y, &v).norm();
    let bound = d * d / 8.0;
    if d > 0.0 {
        t.ratio = t.ratio.max(perp / bound);
    }
    if perp > bound * (1.0 + 1e-9) + 1e-13 {
        t.fail(label, perp, bound);
    }
}

/// `|(x − y)^⊥| ≤ |x − y|²/8` for pairs with `|x − y| ≤ 8`, on `M` and on `N`.
pub fn perp_bound_suite(s: &Scenario, trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    let mut report = SuiteReport::new("perp", seed);
    let outcomes = map_range(trials, mode, |i| {
        let mut rng = trial_rng(seed, i);
        let mut t = Trial::default();
        let d = if i == 0 { 0.0 } else { rng.gen_range(0.0..8.0) };
        let y = sample_surface(s, &mut rng);
        let x = surface_point_at(&s.surface, &y, d, &mut rng);
        perp_case(&mut t, &s.surface, &x, &y, "surface");
        let yn = sample_constraint(s, &mut rng);
        let xn = constraint_point_at(&s.constraint, &yn, d, &mut rng);
        perp_case(&mut t, &s.constraint, &xn, &yn, "constraint");
        t
    });
    for (i, t) in outcomes.into_iter().enumerate() {
        report.absorb(i, t);
    }
    report
}

/// `|c(x) − c(y)|² ≤ |x − y|·E(c)` for random polylines and parameter pairs.
pub fn holder_suite(trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    let mut report = SuiteReport::new("holder", seed);
    let outcomes = map_range(trials, mode, |i| {
        let mut rng = trial_rng(seed, i);
        let k = rng.gen_range(1..=64usize);
        let scale = rng.gen_range(0.1..10.0);
        let samples = (0..=k).map(|_| random_unit(&mut rng) * scale * rng.gen::<f64>()).collect();
        let c = DiscreteCurve::new(samples, false).expect("finite");
        let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
        let h = holder_bound_check(&c, a.min(b), a.max(b));
        let mut t = Trial { ratio: if h.rhs > 0.0 { h.lhs / h.rhs } else { 0.0 }, ..Default::default() };
        if !h.ok {
            t.fail("holder", h.lhs, h.rhs);
        }
        t
    });
    for (i, t) in outcomes.into_iter().enumerate() {
        report.absorb(i, t);
    }
    report
}

/// Squared `W^{1,2}` distance and energies of two curves on a parameter interval of length `h`.
fn interval_metrics(a: &DiscreteCurve, b: &DiscreteCurve, h: f64) -> (f64, f64, f64) {
    let dt = h / a.segments() as f64;
    let (pa, pb) = (a.samples(), b.samples());
    let mut dist_sq = 0.0;
    for i in 0..a.segments() {
        let d0 = pa[i] - pb[i];
        let d1 = pa[i + 1] - pb[i + 1];
        dist_sq += dt * (d0.norm_squared() + d0.dot(&d1) + d1.norm_squared()) / 3.0 + (d1 - d0).norm_squared() / dt;
    }
    let energy = |c: &DiscreteCurve| c.chords().map(|x| x * x / dt).sum::<f64>();
    (dist_sq, energy(a), energy(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConvexityCase {
    Inner,
    Boundary,
}

fn lipschitz_curve(s: &Scenario, start: Point, l: usize, m: usize, rng: &mut ChaCha8Rng, wiggle: bool) -> DiscreteCurve {
    let h = 1.0 / l as f64;
    let mut reach = rng.gen_range(0.2..0.9);
    let mut amp = if wiggle { rng.gen_range(0.02..0.3) } else { 0.0 };
    let coeffs: Vec<Point> = (0..4).map(|_| random_unit(rng)).collect();
    let end_dir = surface_point_at(&s.surface, &start, 1.0, rng);
    loop {
        let q = s.surface.project(&(start + (end_dir - start) * reach));
        let c = DiscreteCurve::from_fn(m, false, |tau| {
            if tau == 0.0 {
                return start;
            }
            let mut v = start + (q - start) * tau;
            for (n, a) in coeffs.iter().enumerate() {
                v += a * (amp * ((n + 1) as f64 * PI * tau).sin() / (n + 1) as f64);
            }
            s.surface.project(&v)
        });
        let lipschitz = c.chords().fold(0.0, f64::max) * m as f64 / h;
        if lipschitz <= l as f64 {
            return c;
        }
        reach *= 0.8;
        amp *= 0.8;
    }
}

fn convexity_trial(
    s: &Scenario,
    case: ConvexityCase,
    l: usize,
    rng: &mut ChaCha8Rng,
    geodesic: bool,
) -> Result<(f64, f64, f64), GeodesicError> {
    const M: usize = 16;
    let opts = SolverOptions::default();
    let h = 1.0 / l as f64;
    let start = match case {
        ConvexityCase::Boundary => sample_constraint(s, rng),
        ConvexityCase::Inner => {
            let base = sample_constraint(s, rng);
            surface_point_at(&s.surface, &base, rng.gen_range(0.0..2.0), rng)
        }
    };
    let mut sigma1 = lipschitz_curve(s, start, l, M, rng, !geodesic);
    let solve = |c: &DiscreteCurve| match case {
        ConvexityCase::Inner => minimizing_geodesic(&s.surface, &c.first(), &c.last(), M, &opts),
        ConvexityCase::Boundary => {
            minimizing_geodesic_to_submanifold(&s.surface, &s.constraint, &c.last(), M, &opts).map(|g| g.reversed())
        }
    };
    if geodesic {
        sigma1 = solve(&sigma1)?;
    }
    let sigma2 = solve(&sigma1)?;
    Ok(interval_metrics(&sigma1, &sigma2, h))
}

/// Measures `Ĉ = sup dist²/(E(σ₁) − E(σ₂))` for fixed-endpoint replacements
/// and `Ĉ′` for replacements by the minimizing geodesic to `N`.
pub fn convexity_suite(s: &Scenario, l: usize, trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    let mut report = SuiteReport::new("convexity", seed);
    let outcomes = map_range(trials, mode, |i| {
        let mut rng = trial_rng(seed, i);
        let case = if i % 2 == 0 { ConvexityCase::Inner } else { ConvexityCase::Boundary };
        (case, convexity_trial(s, case, l, &mut rng, i < 2))
    });
    let (mut c_inner, mut c_boundary) = (0.0f64, 0.0f64);
    for (i, (case, r)) in outcomes.into_iter().enumerate() {
        let mut t = Trial::default();
        match r {
            Err(e) => t.fail(&format!("solver: {e}"), f64::NAN, 0.0),
            Ok((dist_sq, e1, e2)) => {
                let drop = e1 - e2;
                if drop < -1e-9 * e1.max(1.0) {
                    t.fail("energy_increase", drop, 0.0);
                } else if drop < DEGENERATE_DENOMINATOR {
                    t.degenerate = 1;
                    if dist_sq >= DEGENERATE_NUMERATOR {
                        t.fail("degenerate_distance", dist_sq, DEGENERATE_NUMERATOR);
                    }
                } else {
                    t.ratio = dist_sq / drop;
                    if !t.ratio.is_finite() {
                        t.fail("ratio_not_finite", t.ratio, f64::MAX);
                    }
                    match case {
                        ConvexityCase::Inner => c_inner = c_inner.max(t.ratio),
                        ConvexityCase::Boundary => c_boundary = c_boundary.max(t.ratio),
                    }
                }
            }
        }
        report.absorb(i, t);
    }
    report.constant("C_hat", c_inner);
    report.constant("C_hat_prime", c_boundary);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    /// `W^{1,2}` distance between the two point-to-`N` geodesics.
    pub dist: f64,
    pub d_m: f64,
    /// `(1 + 1/(8L))·d² + 4d` at `d = d_M(x₁, x₂)`.
    pub phi: f64,
}

pub fn continuity_phi(d: f64, l: usize) -> f64 {
    (1.0 + 1.0 / (8.0 * l as f64)) * d * d + 4.0 * d
}

pub fn boundary_continuity_probe(
    s: &Scenario,
    x1: &Point,
    x2: &Point,
    l: usize,
    segments: usize,
) -> Result<ContinuityProbe, GeodesicError> {
    let opts = SolverOptions::default();
    let g1 = minimizing_geodesic_to_submanifold(&s.surface, &s.constraint, x1, segments, &opts)?;
    let g2 = minimizing_geodesic_to_submanifold(&s.surface, &s.constraint, x2, segments, &opts)?;
    let dist = w12_distance(&g1, &g2).expect("same segments");
    let d_m = s.surface.intrinsic_distance(x1, x2).unwrap_or_else(|| (x1 - x2).norm());
    Ok(ContinuityProbe { dist, d_m, phi: continuity_phi(d_m, l) })
}

/// Probes `x` against `x + 2^{-i}·dir` (projected) for `i = 1..=steps`.
pub fn boundary_continuity_sequence(
    s: &Scenario,
    x: &Point,
    dir: &Point,
    steps: usize,
    l: usize,
    segments: usize,
) -> Result<Vec<ContinuityProbe>, GeodesicError> {
    (1..=steps)
        .map(|i| {
            let x2 = s.surface.project(&(x + dir * 0.5f64.powi(i as i32)));
            boundary_continuity_probe(s, x, &x2, l, segments)
        })
        .collect()
}

/// Shrinking-sequence probes from random points within distance 2 of `N`.
pub fn continuity_suite(s: &Scenario, l: usize, trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    const STEPS: usize = 10;
    let mut report = SuiteReport::new("continuity", seed);
    let outcomes = map_range(trials, mode, |i| {
        let mut rng = trial_rng(seed, i);
        let base = sample_constraint(s, &mut rng);
        let x = surface_point_at(&s.surface, &base, rng.gen_range(0.2..1.8), &mut rng);
        let dir = s.surface.tangent_basis(&x).project(&random_unit(&mut rng));
        boundary_continuity_sequence(s, &x, &dir, STEPS, l, 32)
    });
    let mut worst = [0.0f64; STEPS];
    for (i, r) in outcomes.into_iter().enumerate() {
        let mut t = Trial::default();
        match r {
            Err(e) => t.fail(&format!("solver: {e}"), f64::NAN, 0.0),
            Ok(seq) => {
                for (j, w) in seq.windows(2).enumerate() {
                    if w[1].dist > w[0].dist * (1.0 + 1e-6) + 1e-12 {
                        t.fail(&format!("not_decreasing_at_{}", j + 1), w[1].dist, w[0].dist);
                    }
                }
                for (j, p) in seq.iter().enumerate() {
                    worst[j] = worst[j].max(p.dist);
                    if p.d_m > 0.0 {
                        t.ratio = t.ratio.max(p.dist / p.phi);
                    }
                }
                let last = seq.last().expect("steps > 0");
                if last.dist > 1e-2 {
                    t.fail("limit", last.dist, 1e-2);
                }
            }
        }
        report.absorb(i, t);
    }
    let table = worst.iter().enumerate().map(|(j, &d)| [0.5f64.powi(j as i32 + 1), d]).collect();
    report.tables.insert("dist_vs_step".into(), table);
    report
}

/// Decade bins for the measured `Φ̂` curve.
const PHI_BINS: [f64; 8] = [1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, f64::INFINITY];
const CONTINUITY_EVERY: usize = 25;
const CONTINUITY_HALVINGS: usize = 12;
/// Required shrink factor of `dist(Ψa, Ψb)` from the first to the last halving.
const CONTINUITY_DECAY: f64 = 0.05;

#[derive(Debug, Default)]
struct PsiTrial {
    trial: Trial,
    length_sq_drop: f64,
    step_sq: f64,
    inner: Vec<(f64, f64)>,
    boundary: Vec<(f64, f64)>,
    drop_away_from_g: Option<f64>,
    continuity: Option<Vec<f64>>,
    worst_chain: f64,
}

fn perturb(s: &Scenario, c: &DiscreteCurve, dir: &Point, h: f64) -> DiscreteCurve {
    let k = c.segments();
    let samples = c
        .samples()
        .iter()
        .enumerate()
        .map(|(j, p)| if j == 0 || j == k { *p } else { s.surface.project(&(p + dir * (h * (PI * j as f64 / k as f64).sin()))) })
        .collect();
    DiscreteCurve::new(samples, true).expect("finite")
}

fn psi_trial(s: &Scenario, cfg: &CorpusConfig, psi_cfg: &PsiConfig, seed: u64, i: usize) -> PsiTrial {
    let mut out = PsiTrial::default();
    let mut rng = trial_rng(seed, i);
    let Some(c) = random_curve(s, cfg, &mut rng) else {
        out.trial.fail("corpus", f64::NAN, 0.0);
        return out;
    };
    let (next, trace) = match psi(&c, s, psi_cfg) {
        Ok(r) => r,
        Err(e) => {
            out.trial.fail(&format!("psi: {e}"), f64::NAN, 0.0);
            return out;
        }
    };
    out.worst_chain = trace.worst_energy_increase();
    if out.worst_chain > 1e-9 {
        out.trial.fail("energy_chain", out.worst_chain, 1e-9);
    }
    let (l0, l1) = (c.length(), next.length());
    let w = w12_distance(&c, &next).expect("grid");
    out.length_sq_drop = if l1 > 0.0 { (l0 * l0 - l1 * l1) / (l1 * l1) } else { 0.0 };
    out.step_sq = w * w;
    if out.length_sq_drop < 1e-6 && l1 >= 0.1 && w >= 1e-2 {
        out.trial.fail("length_drop_continuity", w, 1e-2);
    }
    let cert = geodesic_residual(&c, s);
    if w < 1e-6 * l0.max(1.0) && (cert.interior_residual >= 1e-2 || cert.boundary_orthogonality >= 1e-2) {
        out.trial.fail("fixed_point_not_geodesic", cert.interior_residual.max(cert.boundary_orthogonality), 1e-2);
    }
    if cert.interior_residual.max(cert.boundary_orthogonality) >= 0.1 {
        out.drop_away_from_g = Some(l0 - l1);
    }
    for r in &trace.replacements {
        let bucket = if r.boundary { &mut out.boundary } else { &mut out.inner };
        bucket.push((r.dist_sq, r.energy_drop));
    }
    if i.is_multiple_of(CONTINUITY_EVERY) {
        let dir = random_unit(&mut rng);
        let mut seq = Vec::with_capacity(CONTINUITY_HALVINGS);
        for j in 1..=CONTINUITY_HALVINGS {
            let b = perturb(s, &c, &dir, 0.5f64.powi(j as i32));
            match psi(&b, s, psi_cfg) {
                Ok((pb, _)) => seq.push(w12_distance(&next, &pb).expect("grid")),
                Err(e) => {
                    out.trial.fail(&format!("psi_perturbed: {e}"), f64::NAN, 0.0);
                    break;
                }
            }
        }
        out.continuity = Some(seq);
    }
    if i == 0 {
        match psi(&c, s, psi_cfg) {
            Ok((again, _)) if again == next => {}
            _ => out.trial.fail("determinism", 1.0, 0.0),
        }
    }
    out
}

/// Ψ properties over a random corpus plus the scenario's analytic geodesics.
pub fn psi_property_suite(s: &Scenario, cfg: &CorpusConfig, trials: usize, seed: u64, mode: ExecMode) -> SuiteReport {
    let mut report = SuiteReport::new("psi", seed);
    let psi_cfg = PsiConfig::new(cfg.l).expect("l >= 2");
    let outcomes = map_range(trials, mode, |i| psi_trial(s, cfg, &psi_cfg, seed, i));

    let mut c_inner = 0.0f64;
    let mut c_boundary = 0.0f64;
    let mut phi_table = vec![0.0f64; PHI_BINS.len()];
    let mut min_drop = f64::INFINITY;
    let mut worst_chain = f64::NEG_INFINITY;
    let mut continuity_worst = [0.0f64; CONTINUITY_HALVINGS];
    for (i, mut t) in outcomes.into_iter().enumerate() {
        worst_chain = worst_chain.max(t.worst_chain);
        for (list, c_hat) in [(&t.inner, &mut c_inner), (&t.boundary, &mut c_boundary)] {
            for &(dist_sq, drop) in list {
                if drop < DEGENERATE_DENOMINATOR {
                    t.trial.degenerate += 1;
                    if dist_sq >= DEGENERATE_NUMERATOR {
                        t.trial.fail("degenerate_replacement", dist_sq, DEGENERATE_NUMERATOR);
                    }
                } else {
                    *c_hat = c_hat.max(dist_sq / drop);
                }
            }
        }
        let bin = PHI_BINS.iter().position(|&b| t.length_sq_drop.max(0.0) <= b).unwrap_or(PHI_BINS.len() - 1);
        phi_table[bin] = phi_table[bin].max(t.step_sq);
        if let Some(d) = t.drop_away_from_g {
            min_drop = min_drop.min(d);
            if d <= 0.0 {
                t.trial.fail("no_drop_away_from_geodesics", d, 0.0);
            }
        }
        if let Some(seq) = &t.continuity {
            for (j, v) in seq.iter().enumerate() {
                continuity_worst[j] = continuity_worst[j].max(*v);
            }
            if let (Some(first), Some(last)) = (seq.first(), seq.last()) {
                if *last > CONTINUITY_DECAY * first {
                    t.trial.fail("psi_continuity", *last, CONTINUITY_DECAY * first);
                }
            }
        }
        t.trial.ratio = c_inner.max(c_boundary);
        report.absorb(i, t.trial);
    }

    if let Some(family) = s.family {
        let k = cfg.segments();
        for (j, phi) in [0.0, 0.7, 2.1, 4.0].into_iter().enumerate() {
            for branch in 0..family.branches() {
                let g = family.member(phi, branch, k);
                let case = trials + 2 * j + branch;
                let mut t = Trial::default();
                match psi(&g, s, &psi_cfg) {
                    Ok((next, _)) => {
                        let w = w12_distance(&g, &next).expect("grid");
                        if w >= 1e-6 * g.length().max(1.0) {
                            t.fail("analytic_geodesic_moved", w, 1e-6 * g.length().max(1.0));
                        }
                    }
                    Err(e) => t.fail(&format!("psi: {e}"), f64::NAN, 0.0),
                }
                report.absorb(case, t);
            }
        }
        let mut drops = Vec::new();
        for e in 0..7 {
            let eps = 0.5f64.powi(e);
            let c = perturbed_geodesic(s, &family, 0.3, eps, k);
            match psi(&c, s, &psi_cfg) {
                Ok((next, _)) => drops.push([eps, c.length() - next.length()]),
                Err(e) => report.fail(usize::MAX, &format!("psi_perturbed_geodesic: {e}"), f64::NAN, 0.0),
            }
        }
        for w in drops.windows(2) {
            if w[1][1] > w[0][1] + 1e-12 {
                report.fail(usize::MAX, "drop_not_scaling_with_eps", w[1][1], w[0][1]);
            }
        }
        report.tables.insert("length_drop_vs_eps".into(), drops);
    }

    report.constant("C_hat", c_inner);
    report.constant("C_hat_prime", c_boundary);
    report.constant("worst_energy_chain", worst_chain);
    if min_drop.is_finite() {
        report.constant("min_drop_away_from_geodesics", min_drop);
    }
    let phi_rows = PHI_BINS.iter().zip(&phi_table).filter(|(b, _)| b.is_finite()).map(|(&b, &v)| [b, v]).collect();
    report.tables.insert("phi_hat".into(), phi_rows);
    let cont = continuity_worst.iter().enumerate().map(|(j, &v)| [0.5f64.powi(j as i32 + 1), v]).collect();
    report.tables.insert("psi_continuity".into(), cont);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pl_integrals_match_closed_forms() {
        // f = x on [0, 3]: ∫f² = 9, ∫f′² = 3.
        let f: Vec<f64> = (0..=10).map(|j| 0.3 * j as f64).collect();
        let (l2, h1) = pl_integrals(&f, 3.0);
        assert_relative_eq!(l2, 9.0, epsilon = 1e-12);
        assert_relative_eq!(h1, 3.0, epsilon = 1e-12);
        assert_eq!(ratio(&[0.0, 0.0, 0.0], 1.0), 0.0);
    }

    #[test]
    fn wirtinger_suite_passes_with_sharp_witness() {
        let r = wirtinger_suite(2000, 7, ExecMode::Parallel);
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.constants["sine_witness"] >= 0.999);
        assert_relative_eq!(r.constants["linear_witness"], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perp_ratio_is_a_quarter_on_sphere_16() {
        let r = perp_bound_suite(&Scenario::sphere_equator(), 500, 1, ExecMode::Sequential);
        assert!(r.passed());
        assert!(r.worst_ratio <= 0.25 + 1e-9 && r.worst_ratio > 0.24, "{}", r.worst_ratio);
        assert!(perp_bound_suite(&Scenario::disk_circle(), 200, 1, ExecMode::Sequential).passed());
        assert!(!perp_bound_suite(&Scenario::unit_sphere(), 50, 1, ExecMode::Sequential).passed());
    }

    #[test]
    fn holder_suite_passes() {
        assert!(holder_suite(1000, 3, ExecMode::Parallel).passed());
    }

    #[test]
    fn plane_arc_versus_chord_has_closed_form_ratio() {
        // Circular arc of radius ρ over angle 2β, on an interval of length h, against its chord.
        let (rho, beta, h, m) = (2.0f64, 0.2f64, 1.0 / 16.0, 512usize);
        let arc = DiscreteCurve::from_fn(m, false, |t| {
            let a = -beta + 2.0 * beta * t;
            Point::new(rho * a.sin(), rho * (a.cos() - beta.cos()), 0.0)
        });
        let chord = DiscreteCurve::from_fn(m, false, |t| Point::new(rho * beta.sin() * (2.0 * t - 1.0), 0.0, 0.0));
        let (dist_sq, e1, e2) = interval_metrics(&arc, &chord, h);
        assert_relative_eq!(e1, (2.0 * beta * rho).powi(2) / h, max_relative = 1e-4);
        assert_relative_eq!(e2, (2.0 * rho * beta.sin()).powi(2) / h, max_relative = 1e-9);
        let ratio = dist_sq / (e1 - e2);
        assert!(ratio.is_finite() && ratio > 0.0);
    }

    #[test]
    fn convexity_constants_are_finite() {
        for s in [Scenario::disk_circle(), Scenario::sphere_equator()] {
            let r = convexity_suite(&s, 16, 200, 5, ExecMode::Parallel);
            assert!(r.passed(), "{:?}", r.failures);
            assert!(r.degenerate >= 2);
            assert!(r.constants["C_hat"].is_finite() && r.constants["C_hat"] > 0.0);
            assert!(r.constants["C_hat_prime"].is_finite() && r.constants["C_hat_prime"] > 0.0);
        }
    }

    #[test]
    fn continuity_probe_examples() {
        let s = Scenario::disk_circle();
        let x = Point::new(20.0, 0.0, 0.0);
        let same = boundary_continuity_probe(&s, &x, &x, 16, 32).unwrap();
        assert_eq!(same.dist, 0.0);
        let near = boundary_continuity_probe(&s, &x, &Point::new(20.0, 1e-3, 0.0), 16, 32).unwrap();
        assert!(near.dist < 1e-2);
        let seq = boundary_continuity_sequence(&s, &Point::new(17.0, 0.0, 0.0), &Point::y(), 8, 16, 32).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].dist < w[0].dist);
        }
        assert_relative_eq!(continuity_phi(1.0, 16), 1.0 + 1.0 / 128.0 + 4.0);
    }

    #[test]
    fn psi_suite_small_corpus() {
        let r = psi_property_suite(&Scenario::disk_circle(), &CorpusConfig::default(), 30, 2, ExecMode::Parallel);
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.constants["worst_energy_chain"] <= 1e-9);
    }
}
