//! Uniformly parametrised sampled curves `[0,1] → M ⊂ ℝ³`.
//!
//! A [`DiscreteCurve`] with `K` segments stores samples at `t_j = j/K`; all
//! calculus is that of the chord-interpolated curve, so the discrete energy
//! `K·Σ|p_{j+1} − p_j|²` is exactly the continuum energy of the polyline.

use crate::manifold::{tangent_projection, Embedding, Point, Surface};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative spread of chord lengths tolerated by the constant-speed test.
pub const CONSTANT_SPEED_TOL: f64 = 1e-3;

/// Tangential turning angle (rad) above which a node counts as a break point.
pub const BREAK_ANGLE_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("a curve needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("parameter grids differ ({left} vs {right} segments); resample first")]
    GridMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    samples: Vec<Point>,
    endpoints_on_constraint: bool,
}

impl DiscreteCurve {
    pub fn new(samples: Vec<Point>, endpoints_on_constraint: bool) -> Result<Self, CurveError> {
        if samples.len() < 2 {
            return Err(CurveError::TooFewSamples(samples.len()));
        }
        if let Some(index) = samples.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(CurveError::NonFinite { index });
        }
        Ok(Self { samples, endpoints_on_constraint })
    }

    /// Constant curve at `p` with `segments` segments.
    pub fn constant(p: Point, segments: usize, endpoints_on_constraint: bool) -> Self {
        Self { samples: vec![p; segments.max(1) + 1], endpoints_on_constraint }
    }

    pub(crate) fn from_samples_unchecked(samples: Vec<Point>, endpoints_on_constraint: bool) -> Self {
        debug_assert!(samples.len() >= 2);
        Self { samples, endpoints_on_constraint }
    }

    /// Builds a curve by sampling `f` at `t_j = j/segments`.
    pub fn from_fn(segments: usize, endpoints_on_constraint: bool, f: impl Fn(f64) -> Point) -> Self {
        let k = segments.max(1);
        let samples = (0..=k).map(|j| f(j as f64 / k as f64)).collect();
        Self { samples, endpoints_on_constraint }
    }

    pub fn segments(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Point> {
        self.samples
    }

    pub fn endpoints_on_constraint(&self) -> bool {
        self.endpoints_on_constraint
    }

    pub fn with_endpoint_flag(mut self, flag: bool) -> Self {
        self.endpoints_on_constraint = flag;
        self
    }

    pub fn first(&self) -> Point {
        self.samples[0]
    }

    pub fn last(&self) -> Point {
        self.samples[self.samples.len() - 1]
    }

    pub fn param(&self, j: usize) -> f64 {
        j as f64 / self.segments() as f64
    }

    pub fn params(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|j| self.param(j)).collect()
    }

    pub fn chords(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.windows(2).map(|w| (w[1] - w[0]).norm())
    }

    /// Discrete Dirichlet energy `K·Σ|p_{j+1} − p_j|²`.
    pub fn energy(&self) -> f64 {
        self.energy_between(0, self.segments())
    }

    /// Energy contribution of the samples `a..=b`, in the full curve's parametrisation.
    pub fn energy_between(&self, a: usize, b: usize) -> f64 {
        let k = self.segments() as f64;
        k * self.samples[a..=b].windows(2).map(|w| (w[1] - w[0]).norm_squared()).sum::<f64>()
    }

    pub fn length(&self) -> f64 {
        self.chords().sum()
    }

    /// Evaluates the chord interpolant at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Point {
        let k = self.segments();
        let s = t.clamp(0.0, 1.0) * k as f64;
        let i = (s.floor() as usize).min(k - 1);
        let lambda = s - i as f64;
        self.samples[i] * (1.0 - lambda) + self.samples[i + 1] * lambda
    }

    /// True when every sample coincides with the first one up to `tol`.
    pub fn is_point_curve(&self, tol: f64) -> bool {
        let p0 = self.samples[0];
        self.samples.iter().all(|p| (p - p0).norm() <= tol)
    }

    /// Max relative deviation of chord lengths from their mean; zero-length curves give 0.
    pub fn speed_spread(&self) -> f64 {
        let k = self.segments() as f64;
        let mean = self.length() / k;
        if mean <= f64::MIN_POSITIVE {
            return 0.0;
        }
        self.chords().map(|c| ((c - mean) / mean).abs()).fold(0.0, f64::max)
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { samples, endpoints_on_constraint: self.endpoints_on_constraint }
    }
}

/// `W^{1,2}` norm of the difference of two curves sampled on the same grid.
///
/// Both terms are exact integrals of the chord interpolants: the derivative
/// term is the forward-difference energy of the difference and the `L²` term
/// integrates the piecewise-linear difference exactly.
pub fn w12_distance(a: &DiscreteCurve, b: &DiscreteCurve) -> Result<f64, CurveError> {
    if a.segments() != b.segments() {
        return Err(CurveError::GridMismatch { left: a.segments(), right: b.segments() });
    }
    let k = a.segments() as f64;
    let dt = 1.0 / k;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let diffs = a.samples.iter().zip(&b.samples).map(|(p, q)| p - q);
    let mut prev: Option<Point> = None;
    for d in diffs {
        if let Some(p) = prev {
            l2 += dt * (p.norm_squared() + p.dot(&d) + d.norm_squared()) / 3.0;
            h1 += k * (d - p).norm_squared();
        }
        prev = Some(d);
    }
    Ok((l2 + h1).sqrt())
}

/// Monotone piecewise-linear map `P: [0,1] → [0,1]` with `input = output ∘ P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamMap {
    knots: Vec<(f64, f64)>,
}

impl ReparamMap {
    pub fn identity() -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.knots.iter().all(|(s, p)| (s - p).abs() <= tol)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let i = self.knots.partition_point(|(x, _)| *x <= s).clamp(1, self.knots.len() - 1);
        let (x0, y0) = self.knots[i - 1];
        let (x1, y1) = self.knots[i];
        if x1 <= x0 {
            return y1;
        }
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }
}

/// Reparametrises `c` proportionally to arc length.
///
/// Samples are placed at equal cumulative chord length along the polyline and
/// re-projected onto `m`; endpoints are kept exactly. Zero-length curves are
/// returned unchanged with `P = id`.
pub fn reparametrize_constant_speed(c: &DiscreteCurve, m: &Surface) -> (DiscreteCurve, ReparamMap) {
    let k = c.segments();
    let mut cumulative = Vec::with_capacity(k + 1);
    cumulative.push(0.0);
    let mut total = 0.0;
    for chord in c.chords() {
        total += chord;
        cumulative.push(total);
    }
    let scale = c.samples.iter().map(|p| p.norm()).fold(1.0, f64::max);
    if total <= 1e-14 * scale {
        return (c.clone(), ReparamMap::identity());
    }

    let knots = (0..=k).map(|j| (c.param(j), cumulative[j] / total)).collect();

    let mut samples = Vec::with_capacity(k + 1);
    samples.push(c.samples[0]);
    let mut seg = 0usize;
    for j in 1..k {
        let target = total * j as f64 / k as f64;
        while seg + 1 < k && cumulative[seg + 1] < target {
            seg += 1;
        }
        let (c0, c1) = (cumulative[seg], cumulative[seg + 1]);
        let lambda = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 1.0 };
        let p = if lambda <= 1e-13 {
            c.samples[seg]
        } else if lambda >= 1.0 - 1e-13 {
            c.samples[seg + 1]
        } else {
            m.project(&(c.samples[seg] * (1.0 - lambda) + c.samples[seg + 1] * lambda))
        };
        samples.push(p);
    }
    samples.push(c.samples[k]);
    (DiscreteCurve { samples, endpoints_on_constraint: c.endpoints_on_constraint }, ReparamMap { knots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `|c(x) − c(y)|² ≤ |x − y|·E(c)` at the parameters `x < y`.
pub fn holder_bound_check(c: &DiscreteCurve, x: f64, y: f64) -> HolderCheck {
    let lhs = (c.eval(x) - c.eval(y)).norm_squared();
    let rhs = (y - x).abs() * c.energy();
    HolderCheck { lhs, rhs, ok: lhs <= rhs * (1.0 + 1e-12) + 1e-300 }
}

/// Turning angle at each interior node, measured between the tangential parts
/// of the incoming and outgoing chords. Entry `j − 1` belongs to node `j`.
pub fn tangential_turning_angles(c: &DiscreteCurve, m: &Surface) -> Vec<f64> {
    c.samples
        .windows(3)
        .map(|w| {
            let a = tangent_projection(m, &w[1], &(w[1] - w[0]));
            let b = tangent_projection(m, &w[1], &(w[2] - w[1]));
            if a.norm() == 0.0 || b.norm() == 0.0 {
                0.0
            } else {
                a.cross(&b).norm().atan2(a.dot(&b))
            }
        })
        .collect()
}

/// Structural checks defining the space of admissible piecewise geodesics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMembership {
    pub l: usize,
    pub break_count: usize,
    pub max_segment_length: f64,
    pub lipschitz: f64,
    pub constant_speed: bool,
    pub endpoints_on_constraint: bool,
    pub verdict: bool,
}

pub fn lambda_membership(c: &DiscreteCurve, l: usize, scenario: &Scenario) -> LambdaMembership {
    let angles = tangential_turning_angles(c, &scenario.surface);
    let breaks: Vec<usize> = angles.iter().enumerate().filter(|(_, a)| **a > BREAK_ANGLE_TOL).map(|(i, _)| i + 1).collect();

    // Geodesic pieces run between consecutive break nodes; chords touching a
    // break node cut its corner and are excluded from the speed test.
    let mut cuts = vec![0];
    cuts.extend(&breaks);
    cuts.push(c.segments());
    let max_segment_length =
        cuts.windows(2).map(|w| c.samples[w[0]..=w[1]].windows(2).map(|s| (s[1] - s[0]).norm()).sum::<f64>()).fold(0.0, f64::max);

    let k = c.segments() as f64;
    let chords: Vec<f64> = c.chords().collect();
    let lipschitz = chords.iter().fold(0.0f64, |m, ch| m.max(ch * k));
    let mean = c.length() / k;
    let is_break = |j: usize| breaks.binary_search(&j).is_ok();
    let constant_speed = mean <= f64::MIN_POSITIVE
        || chords
            .iter()
            .enumerate()
            .filter(|(i, _)| !is_break(*i) && !is_break(i + 1))
            .all(|(_, ch)| ((ch - mean) / mean).abs() <= CONSTANT_SPEED_TOL);

    let endpoints_on_constraint = scenario.endpoints_on_constraint(c);
    let verdict = breaks.len() < l
        && max_segment_length <= 1.0 + 1e-9
        && lipschitz <= l as f64
        && constant_speed
        && endpoints_on_constraint;
    LambdaMembership {
        l,
        break_count: breaks.len(),
        max_segment_length,
        lipschitz,
        constant_speed,
        endpoints_on_constraint,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn segment(k: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(k, false, |t| Point::new(3.0 * t, 0.0, 0.0))
    }

    /// Two straight pieces over [0,½] and [½,1] with lengths 1 and 3.
    fn bent(k: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(k, false, |t| {
            if t <= 0.5 {
                Point::new(2.0 * t, 0.0, 0.0)
            } else {
                Point::new(1.0, 6.0 * (t - 0.5), 0.0)
            }
        })
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(DiscreteCurve::new(vec![Point::zeros()], false), Err(CurveError::TooFewSamples(1)));
        let bad = vec![Point::zeros(), Point::new(f64::NAN, 0.0, 0.0)];
        assert_eq!(DiscreteCurve::new(bad, false), Err(CurveError::NonFinite { index: 1 }));
    }

    #[test]
    fn energy_and_length_of_segment() {
        let c = segment(10);
        assert_relative_eq!(c.energy(), 9.0, max_relative = 1e-14);
        assert_relative_eq!(c.length(), 3.0, max_relative = 1e-14);
        let p = DiscreteCurve::constant(Point::new(1.0, 2.0, 0.0), 8, false);
        assert_eq!(p.energy(), 0.0);
        assert_eq!(p.length(), 0.0);
    }

    #[test]
    fn meridian_energy_matches_analytic_value() {
        let r = 16.0;
        let c = DiscreteCurve::from_fn(512, true, |t| {
            let a = 0.5 * PI * t;
            Point::new(r * a.sin(), 0.0, r * a.cos())
        });
        assert_relative_eq!(c.energy(), 64.0 * PI * PI, max_relative = 1e-3);
    }

    #[test]
    fn non_constant_speed_polyline() {
        let c = bent(8);
        assert_relative_eq!(c.length(), 4.0, max_relative = 1e-14);
        assert_relative_eq!(c.energy(), 20.0, max_relative = 1e-14);
        assert!(c.length().powi(2) < c.energy());
    }

    #[test]
    fn reparametrization_moves_break_to_quarter() {
        let c = bent(8);
        let (out, map) = reparametrize_constant_speed(&c, &Surface::Plane);
        assert_relative_eq!(out.energy(), 16.0, max_relative = 1e-12);
        assert_relative_eq!(map.eval(0.5), 0.25, epsilon = 1e-14);
        assert_relative_eq!(out.eval(0.25), Point::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_eq!(out.first(), c.first());
        assert_eq!(out.last(), c.last());
        for (s, p) in map.knots() {
            assert_relative_eq!((c.eval(*s) - out.eval(*p)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reparametrization_of_uniform_and_point_curves_is_identity() {
        let c = segment(16);
        let (out, map) = reparametrize_constant_speed(&c, &Surface::Plane);
        assert_relative_eq!(w12_distance(&c, &out).unwrap(), 0.0, epsilon = 1e-13);
        assert!(map.is_identity(1e-14));

        let p = DiscreteCurve::constant(Point::new(16.0, 0.0, 0.0), 4, true);
        let (out, map) = reparametrize_constant_speed(&p, &Surface::Sphere { radius: 16.0 });
        assert_eq!(out, p);
        assert_eq!(map, ReparamMap::identity());
    }

    #[test]
    fn w12_distance_closed_form() {
        let zero = DiscreteCurve::constant(Point::zeros(), 7, false);
        let line = DiscreteCurve::from_fn(7, false, |t| Point::new(t, 0.0, 0.0));
        assert_relative_eq!(w12_distance(&zero, &line).unwrap(), 2.0 / 3f64.sqrt(), max_relative = 1e-14);
        assert_eq!(w12_distance(&line, &line).unwrap(), 0.0);
        let other = segment(8);
        assert_eq!(w12_distance(&line, &other), Err(CurveError::GridMismatch { left: 7, right: 8 }));
    }

    #[test]
    fn holder_examples() {
        let c = segment(4);
        let h = holder_bound_check(&c, 0.0, 1.0);
        assert_relative_eq!(h.lhs, 9.0, max_relative = 1e-14);
        assert_relative_eq!(h.rhs, 9.0, max_relative = 1e-14);
        assert!(h.ok);
        let p = DiscreteCurve::constant(Point::zeros(), 4, false);
        let h = holder_bound_check(&p, 0.2, 0.7);
        assert_eq!((h.lhs, h.rhs, h.ok), (0.0, 0.0, true));
    }

    #[test]
    fn lambda_membership_examples() {
        let disk = Scenario::disk_circle();
        // Radial piece of length ½ leaving the circle r = 16 orthogonally.
        let line = DiscreteCurve::from_fn(16, true, |t| Point::new(16.0 - 0.5 * t, 0.0, 0.0));
        let m = lambda_membership(&line, 8, &disk);
        assert_eq!(m.break_count, 0);
        assert!(m.constant_speed);
        assert_relative_eq!(m.max_segment_length, 0.5, max_relative = 1e-12);
        assert_relative_eq!(m.lipschitz, 0.5, max_relative = 1e-12);
        // Only one endpoint sits on N.
        assert!(!m.endpoints_on_constraint);
        assert!(!m.verdict);

        // Short arc of N itself: endpoints on N, curved in the plane.
        let arc = DiscreteCurve::from_fn(16, true, |t| {
            let a = 0.25 * (2.0 * t - 1.0) / 16.0;
            Point::new(16.0 * a.cos(), 16.0 * a.sin(), 0.0)
        });
        let m = lambda_membership(&arc, 8, &disk);
        assert!(m.endpoints_on_constraint);
        assert!(m.break_count > 0);

        let fast = DiscreteCurve::from_fn(16, true, |t| Point::new(16.0 - 10.0 * t, 0.0, 0.0));
        let m = lambda_membership(&fast, 8, &disk);
        assert_relative_eq!(m.lipschitz, 10.0, max_relative = 1e-12);
        assert!(!m.verdict);
    }
}
