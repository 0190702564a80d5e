//! Random test curves with endpoints on `N`.
//!
//! Each curve is a lifted chord between two points of `N` plus a truncated
//! random Fourier series, projected to `M`. The perturbation is shrunk until
//! the energy is at most `L²`.

use crate::curve::DiscreteCurve;
use crate::manifold::{Embedding, Point};
use crate::normalization::sample_constraint;
use crate::scenario::{GeodesicFamily, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub l: usize,
    pub samples_per_segment: usize,
    pub modes: usize,
    /// Perturbation amplitude before shrinking, in ambient units.
    pub amplitude: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { l: 16, samples_per_segment: 16, modes: 6, amplitude: 2.0 }
    }
}

impl CorpusConfig {
    pub fn segments(&self) -> usize {
        self.l * self.samples_per_segment
    }
}

/// Deterministic per-trial generator.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn random_vector(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn build(s: &Scenario, k: usize, a: &Point, b: &Point, lift: &Point, coeffs: &[Point], scale: f64) -> Option<DiscreteCurve> {
    let mut samples = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let t = j as f64 / k as f64;
        let p = if j == 0 {
            *a
        } else if j == k {
            *b
        } else {
            let mut v = a + (b - a) * t + lift * (PI * t).sin();
            for (n, c) in coeffs.iter().enumerate() {
                v += c * (scale * ((n + 1) as f64 * PI * t).sin() / (n + 1) as f64);
            }
            s.surface.project(&v)
        };
        samples.push(p);
    }
    DiscreteCurve::new(samples, true).ok().filter(|c| s.check_curve(c).is_ok())
}

/// One random curve; `None` when no admissible curve is found in a bounded number of draws.
pub fn random_curve(s: &Scenario, cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> Option<DiscreteCurve> {
    let k = cfg.segments();
    let cap = (cfg.l * cfg.l) as f64;
    for _ in 0..64 {
        let a = sample_constraint(s, rng);
        let b = sample_constraint(s, rng);
        let lift = random_vector(rng) * rng.gen_range(0.0..cfg.amplitude);
        let coeffs: Vec<Point> = (0..cfg.modes).map(|_| random_vector(rng) * cfg.amplitude).collect();
        let mut scale = 1.0;
        while scale > 1e-3 {
            match build(s, k, &a, &b, &lift, &coeffs, scale) {
                Some(c) if c.energy() <= cap && !c.is_point_curve(0.0) => return Some(c),
                _ => scale *= 0.5,
            }
        }
    }
    None
}

/// `count` curves; curve `i` depends only on `(seed, i)`.
pub fn random_corpus(s: &Scenario, cfg: &CorpusConfig, count: usize, seed: u64) -> Vec<DiscreteCurve> {
    (0..count).filter_map(|i| random_curve(s, cfg, &mut trial_rng(seed, i))).collect()
}

/// Unit normal to the plane containing a family member.
fn member_normal(family: &GeodesicFamily, phi: f64) -> Point {
    match *family {
        GeodesicFamily::Meridians { .. } | GeodesicFamily::Diameters { .. } => Point::new(-phi.sin(), phi.cos(), 0.0),
        GeodesicFamily::Loops { .. } => {
            let m = family.member(phi, 0, 4);
            let b = m.first().normalize();
            let dir = m.samples()[1].normalize();
            b.cross(&dir).normalize()
        }
    }
}

/// Family member at `phi` pushed sideways by `eps·sin(2πs)` and projected to `M`.
pub fn perturbed_geodesic(s: &Scenario, family: &GeodesicFamily, phi: f64, eps: f64, segments: usize) -> DiscreteCurve {
    let base = family.member(phi, 0, segments);
    let n = member_normal(family, phi);
    let k = base.segments();
    let samples = base
        .samples()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if j == 0 || j == k {
                *p
            } else {
                let t = j as f64 / k as f64;
                s.surface.project(&(p + n * (eps * (2.0 * PI * t).sin())))
            }
        })
        .collect();
    DiscreteCurve::new(samples, true).expect("finite samples")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::w12_distance;

    #[test]
    fn corpus_respects_constraints_and_cap() {
        for s in [Scenario::sphere_equator(), Scenario::disk_circle(), Scenario::sphere_point()] {
            let cfg = CorpusConfig::default();
            let c = random_corpus(&s, &cfg, 20, 3);
            assert_eq!(c.len(), 20);
            for curve in &c {
                assert!(s.endpoints_on_constraint(curve));
                assert!(curve.energy() <= 256.0);
                s.check_curve(curve).unwrap();
            }
        }
    }

    #[test]
    fn trials_are_independent_of_count() {
        let s = Scenario::disk_circle();
        let cfg = CorpusConfig::default();
        let a = random_corpus(&s, &cfg, 5, 11);
        let b = random_corpus(&s, &cfg, 3, 11);
        assert_eq!(&a[..3], &b[..]);
    }

    #[test]
    fn zero_perturbation_is_the_member() {
        let s = Scenario::sphere_equator();
        let fam = s.family.unwrap();
        let c = perturbed_geodesic(&s, &fam, 0.4, 0.0, 64);
        assert!(w12_distance(&c, &fam.member(0.4, 0, 64)).unwrap() < 1e-12);
        let p = perturbed_geodesic(&s, &fam, 0.4, 0.5, 64);
        assert!(s.endpoints_on_constraint(&p));
        assert!(p.length() > c.length());
    }
}
