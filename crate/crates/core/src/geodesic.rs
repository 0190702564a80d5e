//! Discrete geodesic boundary-value problems on a [`Surface`].
//!
//! Both solvers minimise the discrete Dirichlet energy `k·Σ|x_{i+1} − x_i|²`
//! of a `k`-segment polyline whose nodes are constrained to `M`. One endpoint
//! is always pinned; the other is either pinned too or free to slide on `N`.
//!
//! Each iteration takes the tangential gradient (the free endpoint uses the
//! tangent space of `N`), preconditions it with the inverse of the flat
//! Dirichlet Laplacian (Neumann row at a free end), retracts by projection
//! and backtracks. In flat space a single full step is exact; on curved
//! surfaces convergence is linear with a ratio of order `(chord/R)²`.

use crate::curve::DiscreteCurve;
use crate::manifold::{
    ensure_on, project_point, Constraint, Embedding, ManifoldError, Point, Surface, TangentBasis, ON_MANIFOLD_TOL,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the largest tangential second difference, relative to the mean
    /// chord, falls below this. The free endpoint uses the chord's angle defect.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 200 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("geodesic solver did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, best: DiscreteCurve },
    #[error("at least one segment is required")]
    NoSegments,
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// Distance from `p` to `N` beyond which uniqueness of the foot point is not guaranteed.
pub const FREE_BOUNDARY_REGIME: f64 = 2.0;

/// Discrete minimizing geodesic from `p` to `q` with `segments` segments.
pub fn minimizing_geodesic(
    m: &Surface,
    p: &Point,
    q: &Point,
    segments: usize,
    opts: &SolverOptions,
) -> Result<DiscreteCurve, GeodesicError> {
    if segments == 0 {
        return Err(GeodesicError::NoSegments);
    }
    ensure_on(m, p, ON_MANIFOLD_TOL)?;
    ensure_on(m, q, ON_MANIFOLD_TOL)?;
    let scale = 1.0 + p.norm().max(q.norm());
    if (p - q).norm() <= 1e-14 * scale {
        return Ok(DiscreteCurve::constant(*p, segments, false));
    }
    let k = segments as f64;
    let mut nodes = Vec::with_capacity(segments + 1);
    nodes.push(*p);
    for i in 1..segments {
        let t = i as f64 / k;
        nodes.push(project_point(m, &(p * (1.0 - t) + q * t))?);
    }
    nodes.push(*q);
    let nodes = descend(m, None, nodes, opts)?;
    Ok(DiscreteCurve::from_samples_unchecked(nodes, false))
}

/// Discrete minimizing geodesic from `p` to the constraint `n`; the last sample lies on `n`.
///
/// Initialised with the chord from `p` to the ambient-nearest point of `n`,
/// projected to `M`. A point constraint reduces to [`minimizing_geodesic`].
pub fn minimizing_geodesic_to_submanifold(
    m: &Surface,
    n: &Constraint,
    p: &Point,
    segments: usize,
    opts: &SolverOptions,
) -> Result<DiscreteCurve, GeodesicError> {
    if segments == 0 {
        return Err(GeodesicError::NoSegments);
    }
    ensure_on(m, p, ON_MANIFOLD_TOL)?;
    let foot = project_point(n, p)?;
    if let Constraint::Point(_) = n {
        return minimizing_geodesic(m, p, &foot, segments, opts).map(|c| c.with_endpoint_flag(true));
    }
    let scale = 1.0 + p.norm();
    if n.residual(p) <= 1e-14 * scale {
        return Ok(DiscreteCurve::constant(*p, segments, true));
    }
    if (p - foot).norm() > FREE_BOUNDARY_REGIME {
        log::debug!("point at ambient distance {:.3} from N is outside the guaranteed free-boundary regime", (p - foot).norm());
    }
    let k = segments as f64;
    let mut nodes = Vec::with_capacity(segments + 1);
    nodes.push(*p);
    for i in 1..segments {
        let t = i as f64 / k;
        nodes.push(project_point(m, &(p * (1.0 - t) + foot * t))?);
    }
    nodes.push(foot);
    let nodes = descend(m, Some(n), nodes, opts)?;
    Ok(DiscreteCurve::from_samples_unchecked(nodes, true))
}

/// Length of the discrete minimizing geodesic with `segments` segments.
pub fn geodesic_distance(m: &Surface, p: &Point, q: &Point, segments: usize, opts: &SolverOptions) -> Result<f64, GeodesicError> {
    minimizing_geodesic(m, p, q, segments, opts).map(|c| c.length())
}

/// Length of the discrete minimizing geodesic from `p` to `n`.
pub fn dist_to_submanifold(
    m: &Surface,
    n: &Constraint,
    p: &Point,
    segments: usize,
    opts: &SolverOptions,
) -> Result<f64, GeodesicError> {
    minimizing_geodesic_to_submanifold(m, n, p, segments, opts).map(|c| c.length())
}

fn energy(nodes: &[Point]) -> f64 {
    let k = (nodes.len() - 1) as f64;
    k * nodes.windows(2).map(|w| (w[1] - w[0]).norm_squared()).sum::<f64>()
}

/// Tangential "force" per free node (`P(x_{i−1} − 2x_i + x_{i+1})`, or
/// `P_N(x_{k−1} − x_k)` at a free end) and the dimensionless residual.
fn forces(m: &Surface, free_end: Option<&Constraint>, nodes: &[Point], out: &mut Vec<Point>) -> f64 {
    let k = nodes.len() - 1;
    out.clear();
    let mean_chord = nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>() / k as f64;
    if mean_chord == 0.0 {
        out.resize(k - 1 + usize::from(free_end.is_some()), Point::zeros());
        return 0.0;
    }
    let mut residual = 0.0f64;
    for i in 1..k {
        let lap = nodes[i - 1] - nodes[i] * 2.0 + nodes[i + 1];
        let f = m.tangent_basis(&nodes[i]).project(&lap);
        residual = residual.max(f.norm() / mean_chord);
        out.push(f);
    }
    if let Some(n) = free_end {
        let chord = nodes[k - 1] - nodes[k];
        let f = n.tangent_basis(&nodes[k]).project(&chord);
        let len = chord.norm();
        if len > 0.0 {
            residual = residual.max(f.norm() / len);
        }
        out.push(f);
    }
    residual
}

/// Solves `A d = f` for the flat Dirichlet Laplacian `A = tridiag(−1, 2, −1)`;
/// with `neumann_last` the final row is `(−1, 1)`.
fn solve_laplacian(f: &[Point], neumann_last: bool, out: &mut Vec<Point>) {
    let n = f.len();
    out.clear();
    if n == 0 {
        return;
    }
    let mut c_prime = vec![0.0; n];
    out.resize(n, Point::zeros());
    let diag = |i: usize| if neumann_last && i == n - 1 { 1.0 } else { 2.0 };
    let mut denom = diag(0);
    c_prime[0] = -1.0 / denom;
    out[0] = f[0] / denom;
    for i in 1..n {
        denom = diag(i) + c_prime[i - 1];
        c_prime[i] = -1.0 / denom;
        out[i] = (f[i] + out[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = out[i + 1];
        out[i] -= next * c_prime[i];
    }
}

/// Flat Laplacian preconditioner. With a free end the step splits into the
/// part along `T_N` at the end (Neumann) and the part across it (Dirichlet).
fn precondition(f: &[Point], end_tangent: Option<&TangentBasis>, out: &mut Vec<Point>, scratch: &mut Vec<Point>) {
    let Some(t) = end_tangent else {
        solve_laplacian(f, false, out);
        return;
    };
    let n = f.len();
    scratch.clear();
    scratch.extend(f.iter().map(|v| t.project(v)));
    let across: Vec<Point> = f[..n - 1].iter().zip(scratch.iter()).map(|(v, a)| v - a).collect();
    solve_laplacian(scratch, true, out);
    solve_laplacian(&across, false, scratch);
    for (o, d) in out.iter_mut().zip(scratch.iter()) {
        *o += d;
    }
}

fn descend(
    m: &Surface,
    free_end: Option<&Constraint>,
    mut nodes: Vec<Point>,
    opts: &SolverOptions,
) -> Result<Vec<Point>, GeodesicError> {
    let k = nodes.len() - 1;
    if k < 2 && free_end.is_none() {
        return Ok(nodes);
    }
    let mut force = Vec::with_capacity(k);
    let mut step = Vec::with_capacity(k);
    let mut trial = nodes.clone();
    let mut trial_force = Vec::with_capacity(k);
    let mut scratch = Vec::with_capacity(k);

    let mut e = energy(&nodes);
    let mut residual = forces(m, free_end, &nodes, &mut force);
    for _ in 0..opts.max_iters {
        if residual < opts.tol {
            return Ok(nodes);
        }
        let end_tangent = free_end.map(|n| n.tangent_basis(&nodes[k]));
        precondition(&force, end_tangent.as_ref(), &mut step, &mut scratch);
        // dE = −2k Σ force·step along the step (force is the negative half-gradient per k).
        let slope = -2.0 * k as f64 * force.iter().zip(&step).map(|(f, d)| f.dot(d)).sum::<f64>();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for (i, d) in step.iter().enumerate() {
                let idx = i + 1;
                let moved = nodes[idx] + d * alpha;
                trial[idx] = match free_end {
                    Some(n) if idx == k => n.project(&moved),
                    _ => m.project(&moved),
                };
            }
            let e_trial = energy(&trial);
            let armijo = e_trial <= e + 1e-4 * alpha * slope;
            let noise = (e_trial - e).abs() <= 1e-13 * e.max(f64::MIN_POSITIVE);
            if armijo || noise {
                let r_trial = forces(m, free_end, &trial, &mut trial_force);
                if armijo || r_trial < residual {
                    std::mem::swap(&mut nodes, &mut trial);
                    std::mem::swap(&mut force, &mut trial_force);
                    trial.copy_from_slice(&nodes);
                    e = e_trial;
                    residual = r_trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual < opts.tol {
        return Ok(nodes);
    }
    Err(GeodesicError::NonConvergence {
        iterations: opts.max_iters,
        residual,
        best: DiscreteCurve::from_samples_unchecked(nodes, free_end.is_some()),
    })
}
