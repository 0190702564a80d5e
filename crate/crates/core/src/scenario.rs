//! Scenario descriptors: which surface, which constraint, and (when symmetry
//! makes it known) the analytic family of free-boundary geodesics.

use crate::curve::DiscreteCurve;
use crate::manifold::{ensure_on, Constraint, Embedding, Point, Surface, ON_MANIFOLD_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintDescriptor {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Equator,
    /// Circle of latitude at `angle` radians above the equator.
    Latitude {
        angle: f64,
    },
    /// A single point; defaults to the north pole of a sphere or the origin of the plane.
    Point {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<[f64; 3]>,
    },
}

/// JSON form: `{"kind": "sphere", "radius": 16.0, "constraint": {"kind": "equator"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioDescriptor {
    Plane {
        constraint: ConstraintDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_radius: Option<f64>,
    },
    Sphere {
        radius: f64,
        constraint: ConstraintDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_radius: Option<f64>,
    },
}

/// Analytic free-boundary geodesics with multiplicity one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeodesicFamily {
    /// Half great circles through either pole, ending on the equator.
    Meridians { radius: f64 },
    /// Diameters of a circle in the plane.
    Diameters { center: [f64; 3], radius: f64 },
    /// Great circles through a point of the sphere, as loops based there.
    Loops { radius: f64, base: [f64; 3] },
}

impl GeodesicFamily {
    /// Member with rotation parameter `phi` and branch `branch` (0 or 1), sampled on `segments`.
    pub fn member(&self, phi: f64, branch: usize, segments: usize) -> DiscreteCurve {
        match *self {
            GeodesicFamily::Meridians { radius } => {
                let sign = if branch == 0 { 1.0 } else { -1.0 };
                DiscreteCurve::from_fn(segments, true, |s| {
                    let (sa, ca) = (PI * s).sin_cos();
                    Point::new(radius * ca * phi.cos(), radius * ca * phi.sin(), sign * radius * sa)
                })
            }
            GeodesicFamily::Diameters { center, radius } => {
                let c = Point::from(center);
                let u = Point::new(phi.cos(), phi.sin(), 0.0);
                DiscreteCurve::from_fn(segments, true, |s| c + u * (radius * (1.0 - 2.0 * s)))
            }
            GeodesicFamily::Loops { radius, base } => {
                let b = Point::from(base).normalize();
                let helper = if b.z.abs() < 0.9 { Point::z() } else { Point::x() };
                let e1 = (helper - b * b.dot(&helper)).normalize();
                let e2 = b.cross(&e1);
                let dir = e1 * phi.cos() + e2 * phi.sin();
                DiscreteCurve::from_fn(segments, true, |s| {
                    let (sa, ca) = (2.0 * PI * s).sin_cos();
                    (b * ca + dir * sa) * radius
                })
            }
        }
    }

    pub fn branches(&self) -> usize {
        match self {
            GeodesicFamily::Meridians { .. } => 2,
            _ => 1,
        }
    }

    /// Length of every member.
    pub fn member_length(&self) -> f64 {
        match *self {
            GeodesicFamily::Meridians { radius } => PI * radius,
            GeodesicFamily::Diameters { radius, .. } => 2.0 * radius,
            GeodesicFamily::Loops { radius, .. } => 2.0 * PI * radius,
        }
    }
}

/// A built surface/constraint pair ready for computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub descriptor: ScenarioDescriptor,
    pub surface: Surface,
    pub constraint: Constraint,
    /// Radius of the ambient ball (about the origin) inside which the normalisation holds.
    pub working_radius: f64,
    pub family: Option<GeodesicFamily>,
}

impl Scenario {
    pub fn from_descriptor(descriptor: &ScenarioDescriptor) -> Result<Self, ScenarioError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(ScenarioError::Invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match descriptor {
            ScenarioDescriptor::Plane { constraint, working_radius } => {
                let (constraint, family, extent) = match constraint {
                    ConstraintDescriptor::Circle { radius, center } => {
                        let radius = positive("circle radius", *radius)?;
                        let c = [center[0], center[1], 0.0];
                        (
                            Constraint::Circle { center: Point::from(c), radius },
                            Some(GeodesicFamily::Diameters { center: c, radius }),
                            Point::from(c).norm() + radius,
                        )
                    }
                    ConstraintDescriptor::Point { position } => {
                        let p = position.unwrap_or([0.0; 3]);
                        if p[2] != 0.0 {
                            return Err(ScenarioError::Invalid("point constraint must lie in the plane".into()));
                        }
                        (Constraint::Point(Point::from(p)), None, Point::from(p).norm())
                    }
                    other => return Err(ScenarioError::Invalid(format!("{other:?} is only defined on a sphere"))),
                };
                let working_radius = positive("working radius", working_radius.unwrap_or(2.0 * extent.max(1.0)))?;
                Ok(Self { descriptor: descriptor.clone(), surface: Surface::Plane, constraint, working_radius, family })
            }
            ScenarioDescriptor::Sphere { radius, constraint, working_radius } => {
                let r = positive("sphere radius", *radius)?;
                let (constraint, family) = match constraint {
                    ConstraintDescriptor::Equator => {
                        (Constraint::Circle { center: Point::zeros(), radius: r }, Some(GeodesicFamily::Meridians { radius: r }))
                    }
                    ConstraintDescriptor::Latitude { angle } => {
                        if angle.is_nan() || angle.abs() >= PI / 2.0 {
                            return Err(ScenarioError::Invalid(format!("latitude angle {angle} out of range")));
                        }
                        let constraint =
                            Constraint::Circle { center: Point::new(0.0, 0.0, r * angle.sin()), radius: r * angle.cos() };
                        let family = (*angle == 0.0).then_some(GeodesicFamily::Meridians { radius: r });
                        (constraint, family)
                    }
                    ConstraintDescriptor::Point { position } => {
                        let p = Point::from(position.unwrap_or([0.0, 0.0, r]));
                        ensure_on(&Surface::Sphere { radius: r }, &p, 1e-9)
                            .map_err(|e| ScenarioError::Invalid(format!("point constraint: {e}")))?;
                        (Constraint::Point(p), Some(GeodesicFamily::Loops { radius: r, base: p.into() }))
                    }
                    ConstraintDescriptor::Circle { .. } => {
                        return Err(ScenarioError::Invalid("use `equator` or `latitude` for circles on a sphere".into()))
                    }
                };
                let working_radius = positive("working radius", working_radius.unwrap_or(2.0 * r))?;
                Ok(Self {
                    descriptor: descriptor.clone(),
                    surface: Surface::Sphere { radius: r },
                    constraint,
                    working_radius,
                    family,
                })
            }
        }
    }

    pub fn sphere_equator() -> Self {
        Self::from_descriptor(&ScenarioDescriptor::Sphere {
            radius: 16.0,
            constraint: ConstraintDescriptor::Equator,
            working_radius: None,
        })
        .expect("built-in scenario")
    }

    pub fn disk_circle() -> Self {
        Self::from_descriptor(&ScenarioDescriptor::Plane {
            constraint: ConstraintDescriptor::Circle { radius: 16.0, center: [0.0, 0.0] },
            working_radius: None,
        })
        .expect("built-in scenario")
    }

    pub fn sphere_point() -> Self {
        Self::from_descriptor(&ScenarioDescriptor::Sphere {
            radius: 16.0,
            constraint: ConstraintDescriptor::Point { position: None },
            working_radius: None,
        })
        .expect("built-in scenario")
    }

    pub fn unit_sphere() -> Self {
        Self::from_descriptor(&ScenarioDescriptor::Sphere {
            radius: 1.0,
            constraint: ConstraintDescriptor::Equator,
            working_radius: None,
        })
        .expect("built-in scenario")
    }

    /// True when both endpoints lie on `N` within [`ON_MANIFOLD_TOL`].
    pub fn endpoints_on_constraint(&self, c: &DiscreteCurve) -> bool {
        ensure_on(&self.constraint, &c.first(), ON_MANIFOLD_TOL).is_ok()
            && ensure_on(&self.constraint, &c.last(), ON_MANIFOLD_TOL).is_ok()
    }

    /// First sample leaving `M` or the working ball, if any.
    pub fn check_curve(&self, c: &DiscreteCurve) -> Result<(), CurveCheckError> {
        for (index, p) in c.samples().iter().enumerate() {
            let residual = self.surface.residual(p);
            if residual > ON_MANIFOLD_TOL * (1.0 + p.norm()) {
                return Err(CurveCheckError::OffSurface { index, residual });
            }
            if p.norm() > self.working_radius {
                return Err(CurveCheckError::OutsideWorkingDomain { index, radius: p.norm() });
            }
        }
        if c.endpoints_on_constraint() && !self.endpoints_on_constraint(c) {
            let residual = self.constraint.residual(&c.first()).max(self.constraint.residual(&c.last()));
            return Err(CurveCheckError::EndpointOffConstraint { residual });
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveCheckError {
    #[error("sample {index} is off the surface (residual {residual:e})")]
    OffSurface { index: usize, residual: f64 },
    #[error("sample {index} at radius {radius} leaves the working domain")]
    OutsideWorkingDomain { index: usize, radius: f64 },
    #[error("an endpoint is off the constraint submanifold (residual {residual:e})")]
    EndpointOffConstraint { residual: f64 },
}

/// Which built-in sweepout family a named preset generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepoutKind {
    Hemisphere,
    Disk,
    Loop,
    Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub descriptor: ScenarioDescriptor,
    pub sweepout: Option<SweepoutKind>,
}

pub const PRESET_NAMES: &[&str] = &["sphere-equator", "disk-circle", "sphere-point", "point-sweepout", "unit-sphere"];

pub fn preset(name: &str) -> Result<Preset, ScenarioError> {
    let (name, scenario, sweepout) = match name {
        "sphere-equator" => ("sphere-equator", Scenario::sphere_equator(), Some(SweepoutKind::Hemisphere)),
        "disk-circle" => ("disk-circle", Scenario::disk_circle(), Some(SweepoutKind::Disk)),
        "sphere-point" => ("sphere-point", Scenario::sphere_point(), Some(SweepoutKind::Loop)),
        "point-sweepout" => ("point-sweepout", Scenario::disk_circle(), Some(SweepoutKind::Point)),
        "unit-sphere" => ("unit-sphere", Scenario::unit_sphere(), None),
        other => return Err(ScenarioError::Unknown(other.to_string())),
    };
    Ok(Preset { name, descriptor: scenario.descriptor, sweepout })
}
