//! Free-boundary curve shortening and min-max sweepouts on explicitly
//! embedded Riemannian manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: built-in embedded surfaces `M ⊂ ℝ³` and constraint
//!   submanifolds `N ⊂ M` with exact projections and tangent splittings.
//! * [`geodesic`]: discrete geodesic boundary-value solvers (point to point,
//!   and point to `N` with a free endpoint).
//! * [`curve`]: sampled curves `[0,1] → M`, their energy, length, `W^{1,2}`
//!   distance and constant-speed reparametrization.
//! * [`shortening`]: the free-boundary Birkhoff map `Ψ`, its iteration and
//!   geodesic certificates.
//! * [`sweepout`]: one-parameter families of curves, preconditioning, width
//!   estimation and the min-max tightening driver.
//! * [`validation`]: executable inequality suites with measured constants.
//! * [`io`]: JSON / CSV / SVG formats shared with the command-line front end.

pub mod corpus;
pub mod curve;
pub mod exec;
pub mod geodesic;
pub mod io;
pub mod manifold;
pub mod normalization;
pub mod scenario;
pub mod shortening;
pub mod sweepout;
pub mod validation;

pub use curve::{DiscreteCurve, ReparamMap};
pub use exec::ExecMode;
pub use manifold::{Constraint, Embedding, Point, Surface};
pub use scenario::{Scenario, ScenarioDescriptor};
pub use shortening::{BreakGrid, PsiConfig};
pub use sweepout::Sweepout;
