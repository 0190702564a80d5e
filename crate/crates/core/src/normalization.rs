//! Measured geometry bounds against the normalisation thresholds the
//! shortening estimates rely on.

use crate::manifold::{Constraint, Embedding, Point, Surface};
use crate::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MAX_SECOND_FUNDAMENTAL_FORM: f64 = 1.0 / 16.0;
pub const MAX_CURVATURE: f64 = 1.0 / 64.0;
pub const MIN_INJECTIVITY_RADIUS_M: f64 = 8.0;
pub const MIN_INJECTIVITY_RADIUS_N: f64 = 4.0;
pub const MIN_FOCAL_RADIUS_N: f64 = 4.0;
pub const MAX_CHORD_FACTOR: f64 = 2.0;
/// Chords up to this length are tested against the distance/chord factor.
pub const CHORD_WINDOW: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn at_most(measured: f64, threshold: f64) -> Self {
        Self { measured, threshold, pass: measured <= threshold * (1.0 + 1e-12) }
    }

    fn at_least(measured: f64, threshold: f64) -> Self {
        Self { measured, threshold, pass: measured >= threshold * (1.0 - 1e-12) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryBudget {
    pub sup_am: BoundCheck,
    pub sup_an: BoundCheck,
    pub curvature: BoundCheck,
    pub inj_radius_m: BoundCheck,
    pub inj_radius_n: BoundCheck,
    pub focal_radius_n: BoundCheck,
    pub chord_factor_m: BoundCheck,
    pub chord_factor_n: BoundCheck,
    pub samples: usize,
    pub conforming: bool,
}

/// Distance along normal geodesics of `N` to the first focal point.
pub fn focal_radius(surface: &Surface, constraint: &Constraint) -> f64 {
    match (surface, constraint) {
        (_, Constraint::Point(_)) => surface.injectivity_radius(),
        (Surface::Plane, Constraint::Circle { radius, .. }) => *radius,
        (Surface::Sphere { radius: r }, Constraint::Circle { center, .. }) => {
            // Meridians leaving a latitude circle focus at the nearer pole.
            let latitude = (center.z / r).clamp(-1.0, 1.0).asin();
            r * (std::f64::consts::FRAC_PI_2 - latitude.abs())
        }
    }
}

pub(crate) fn sample_surface(s: &Scenario, rng: &mut ChaCha8Rng) -> Point {
    match s.surface {
        Surface::Plane => {
            let r = s.working_radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            Point::new(r * a.cos(), r * a.sin(), 0.0)
        }
        Surface::Sphere { .. } => {
            let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            s.surface.project(&v)
        }
    }
}

pub(crate) fn sample_constraint(s: &Scenario, rng: &mut ChaCha8Rng) -> Point {
    match s.constraint {
        Constraint::Circle { center, radius } => {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            center + Point::new(radius * a.cos(), radius * a.sin(), 0.0)
        }
        Constraint::Point(p) => p,
    }
}

/// Samples `sample_budget` point pairs on `M` and on `N` and reports each bound.
pub fn check_normalization(s: &Scenario, sample_budget: usize, seed: u64) -> GeometryBudget {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup_am = 0.0f64;
    let mut sup_k = 0.0f64;
    let mut sup_an = 0.0f64;
    let mut chord_m = 1.0f64;
    let mut chord_n = 1.0f64;
    let samples = sample_budget.max(1);
    for _ in 0..samples {
        let y = sample_surface(s, &mut rng);
        sup_am = sup_am.max(s.surface.second_fundamental_form_norm(&y));
        sup_k = sup_k.max(s.surface.curvature(&y));
        let x = sample_surface(s, &mut rng);
        let chord = (x - y).norm();
        if chord > 0.0 && chord <= CHORD_WINDOW {
            if let Some(d) = s.surface.intrinsic_distance(&x, &y) {
                chord_m = chord_m.max(d / chord);
            }
        }
        let yn = sample_constraint(s, &mut rng);
        sup_an = sup_an.max(s.constraint.second_fundamental_form_norm(&yn));
        let xn = sample_constraint(s, &mut rng);
        let chord = (xn - yn).norm();
        if chord > 0.0 && chord <= CHORD_WINDOW {
            if let Some(d) = s.constraint.intrinsic_distance(&xn, &yn) {
                chord_n = chord_n.max(d / chord);
            }
        }
    }
    let budget = GeometryBudget {
        sup_am: BoundCheck::at_most(sup_am, MAX_SECOND_FUNDAMENTAL_FORM),
        sup_an: BoundCheck::at_most(sup_an, MAX_SECOND_FUNDAMENTAL_FORM),
        curvature: BoundCheck::at_most(sup_k, MAX_CURVATURE),
        inj_radius_m: BoundCheck::at_least(s.surface.injectivity_radius(), MIN_INJECTIVITY_RADIUS_M),
        inj_radius_n: BoundCheck::at_least(s.constraint.injectivity_radius(), MIN_INJECTIVITY_RADIUS_N),
        focal_radius_n: BoundCheck::at_least(focal_radius(&s.surface, &s.constraint), MIN_FOCAL_RADIUS_N),
        chord_factor_m: BoundCheck::at_most(chord_m, MAX_CHORD_FACTOR),
        chord_factor_n: BoundCheck::at_most(chord_n, MAX_CHORD_FACTOR),
        samples,
        conforming: false,
    };
    let conforming = [
        &budget.sup_am,
        &budget.sup_an,
        &budget.curvature,
        &budget.inj_radius_m,
        &budget.inj_radius_n,
        &budget.focal_radius_n,
        &budget.chord_factor_m,
        &budget.chord_factor_n,
    ]
    .iter()
    .all(|b| b.pass);
    GeometryBudget { conforming, ..budget }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_of_radius_16_conforms() {
        let b = check_normalization(&Scenario::sphere_equator(), 500, 1);
        assert_eq!(b.sup_am.measured, 1.0 / 16.0);
        assert_eq!(b.curvature.measured, 1.0 / 256.0);
        assert!(b.chord_factor_m.measured < 1.02);
        assert!(b.conforming, "{b:?}");
    }

    #[test]
    fn plane_with_circle_conforms() {
        let b = check_normalization(&Scenario::disk_circle(), 500, 1);
        assert_eq!(b.sup_am.measured, 0.0);
        assert_eq!(b.focal_radius_n.measured, 16.0);
        assert!(b.conforming);
    }

    #[test]
    fn unit_sphere_fails() {
        let b = check_normalization(&Scenario::unit_sphere(), 100, 1);
        assert_eq!(b.sup_am.measured, 1.0);
        assert!(!b.sup_am.pass);
        assert!(!b.conforming);
    }
}
