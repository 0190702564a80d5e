//! Embedded surfaces `M ⊂ ℝ³` and closed constraint submanifolds `N ⊂ M`.
//!
//! Every built-in object is described by a level-set constraint with an exact
//! nearest-point projection and an analytic orthonormal tangent basis, so
//! tangent/normal splittings carry no mesh error.

use nalgebra::Vector3;
use thiserror::Error;

/// A vector of the ambient Euclidean space.
pub type Point = Vector3<f64>;

/// Constraint residual accepted as "on the manifold".
pub const ON_MANIFOLD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("projection failed after {iterations} iteration(s): residual {residual:e}")]
    ProjectionFailed { iterations: usize, residual: f64 },
    #[error("point is not on the manifold: residual {residual:e} exceeds {tol:e}")]
    OffManifold { residual: f64, tol: f64 },
}

/// Orthonormal basis of a tangent space of dimension 0, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    len: usize,
    vectors: [Point; 2],
}

impl TangentBasis {
    pub fn empty() -> Self {
        Self { len: 0, vectors: [Point::zeros(); 2] }
    }

    pub fn line(e: Point) -> Self {
        Self { len: 1, vectors: [e, Point::zeros()] }
    }

    pub fn plane(e1: Point, e2: Point) -> Self {
        Self { len: 2, vectors: [e1, e2] }
    }

    pub fn dim(&self) -> usize {
        self.len
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors[..self.len]
    }

    pub fn project(&self, v: &Point) -> Point {
        self.vectors().iter().fold(Point::zeros(), |acc, e| acc + e * e.dot(v))
    }
}

/// Common interface of embedded surfaces and constraint submanifolds.
pub trait Embedding {
    fn intrinsic_dim(&self) -> usize;

    /// Level-set residual; zero exactly on the embedded set.
    fn residual(&self, x: &Point) -> f64;

    /// Ambient nearest-point projection. Ties (the centre of a sphere, the
    /// axis of a circle) resolve to a fixed reference direction.
    fn project(&self, x: &Point) -> Point;

    /// Orthonormal tangent basis at a point of the embedded set.
    fn tangent_basis(&self, p: &Point) -> TangentBasis;

    /// Norm of the second fundamental form of the embedding in ℝ³.
    fn second_fundamental_form_norm(&self, p: &Point) -> f64;

    /// Injectivity radius of the intrinsic metric.
    fn injectivity_radius(&self) -> f64;

    /// Closed-form intrinsic distance, where the geometry admits one.
    fn intrinsic_distance(&self, x: &Point, y: &Point) -> Option<f64>;
}

/// Ambient surfaces. Both are embedded in ℝ³; the plane is `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Plane,
    Sphere { radius: f64 },
}

/// Closed constraint submanifolds of a [`Surface`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// Circle in the horizontal plane through `center`.
    Circle {
        center: Point,
        radius: f64,
    },
    Point(Point),
}

fn orthonormal_complement(n: &Point) -> (Point, Point) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Point::x()
    } else if n.y.abs() <= n.z.abs() {
        Point::y()
    } else {
        Point::z()
    };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

impl Surface {
    /// Sectional curvature at `p`.
    pub fn curvature(&self, _p: &Point) -> f64 {
        match self {
            Surface::Plane => 0.0,
            Surface::Sphere { radius } => 1.0 / (radius * radius),
        }
    }
}

impl Embedding for Surface {
    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn residual(&self, x: &Point) -> f64 {
        match self {
            Surface::Plane => x.z.abs(),
            Surface::Sphere { radius } => (x.norm() - radius).abs(),
        }
    }

    fn project(&self, x: &Point) -> Point {
        match self {
            Surface::Plane => Point::new(x.x, x.y, 0.0),
            Surface::Sphere { radius } => {
                let r = x.norm();
                if r == 0.0 {
                    Point::new(*radius, 0.0, 0.0)
                } else {
                    x * (radius / r)
                }
            }
        }
    }

    fn tangent_basis(&self, p: &Point) -> TangentBasis {
        match self {
            Surface::Plane => TangentBasis::plane(Point::x(), Point::y()),
            Surface::Sphere { .. } => {
                let n = p.normalize();
                let (e1, e2) = orthonormal_complement(&n);
                TangentBasis::plane(e1, e2)
            }
        }
    }

    fn second_fundamental_form_norm(&self, _p: &Point) -> f64 {
        match self {
            Surface::Plane => 0.0,
            Surface::Sphere { radius } => 1.0 / radius,
        }
    }

    fn injectivity_radius(&self) -> f64 {
        match self {
            Surface::Plane => f64::INFINITY,
            Surface::Sphere { radius } => std::f64::consts::PI * radius,
        }
    }

    fn intrinsic_distance(&self, x: &Point, y: &Point) -> Option<f64> {
        match self {
            Surface::Plane => Some((x - y).norm()),
            Surface::Sphere { radius } => Some(radius * x.angle(y)),
        }
    }
}

impl Embedding for Constraint {
    fn intrinsic_dim(&self) -> usize {
        match self {
            Constraint::Circle { .. } => 1,
            Constraint::Point(_) => 0,
        }
    }

    fn residual(&self, x: &Point) -> f64 {
        match self {
            Constraint::Circle { center, radius } => {
                let d = x - center;
                let planar = (d.x * d.x + d.y * d.y).sqrt();
                (d.z * d.z + (planar - radius).powi(2)).sqrt()
            }
            Constraint::Point(p) => (x - p).norm(),
        }
    }

    fn project(&self, x: &Point) -> Point {
        match self {
            Constraint::Circle { center, radius } => {
                let d = x - center;
                let planar = (d.x * d.x + d.y * d.y).sqrt();
                if planar == 0.0 {
                    center + Point::new(*radius, 0.0, 0.0)
                } else {
                    center + Point::new(d.x, d.y, 0.0) * (radius / planar)
                }
            }
            Constraint::Point(p) => *p,
        }
    }

    fn tangent_basis(&self, p: &Point) -> TangentBasis {
        match self {
            Constraint::Circle { center, .. } => {
                let d = p - center;
                TangentBasis::line(Point::new(-d.y, d.x, 0.0).normalize())
            }
            Constraint::Point(_) => TangentBasis::empty(),
        }
    }

    fn second_fundamental_form_norm(&self, _p: &Point) -> f64 {
        match self {
            Constraint::Circle { radius, .. } => 1.0 / radius,
            Constraint::Point(_) => 0.0,
        }
    }

    fn injectivity_radius(&self) -> f64 {
        match self {
            Constraint::Circle { radius, .. } => std::f64::consts::PI * radius,
            Constraint::Point(_) => f64::INFINITY,
        }
    }

    fn intrinsic_distance(&self, x: &Point, y: &Point) -> Option<f64> {
        match self {
            Constraint::Circle { center, radius } => Some(radius * (x - center).angle(&(y - center))),
            Constraint::Point(_) => Some(0.0),
        }
    }
}

/// Nearest-point projection of `v` onto `m`, checked against [`ON_MANIFOLD_TOL`].
pub fn project_point<E: Embedding + ?Sized>(m: &E, v: &Point) -> Result<Point, ManifoldError> {
    let p = m.project(v);
    let residual = m.residual(&p);
    let scale = 1.0 + p.norm();
    if !p.iter().all(|c| c.is_finite()) || residual > ON_MANIFOLD_TOL * scale {
        return Err(ManifoldError::ProjectionFailed { iterations: 1, residual });
    }
    Ok(p)
}

/// Tangential part of `v` at `p`.
pub fn tangent_projection<E: Embedding + ?Sized>(m: &E, p: &Point, v: &Point) -> Point {
    m.tangent_basis(p).project(v)
}

/// Normal part of `v` at `p`; `tangent_projection + normal_component == v`.
pub fn normal_component<E: Embedding + ?Sized>(m: &E, p: &Point, v: &Point) -> Point {
    v - tangent_projection(m, p, v)
}

/// Rejects points whose residual exceeds `tol` (scaled by `1 + |p|`).
pub fn ensure_on<E: Embedding + ?Sized>(m: &E, p: &Point, tol: f64) -> Result<(), ManifoldError> {
    let residual = m.residual(p);
    let tol = tol * (1.0 + p.norm());
    if residual > tol || !residual.is_finite() {
        Err(ManifoldError::OffManifold { residual, tol })
    } else {
        Ok(())
    }
}
