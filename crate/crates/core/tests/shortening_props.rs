use freebdy::corpus::{perturbed_geodesic, random_curve, trial_rng, CorpusConfig};
use freebdy::curve::w12_distance;
use freebdy::shortening::{geodesic_residual, iterate_psi, psi, ShorteningError, StopRule};
use freebdy::{DiscreteCurve, Point, PsiConfig, Scenario};
use proptest::prelude::*;

fn scenarios() -> [Scenario; 2] {
    [Scenario::sphere_equator(), Scenario::disk_circle()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stage_energies_never_increase(seed in 0u64..1_000_000) {
        let cfg = CorpusConfig::default();
        let psi_cfg = PsiConfig::new(cfg.l).unwrap();
        for s in scenarios() {
            let Some(c) = random_curve(&s, &cfg, &mut trial_rng(seed, 0)) else { continue };
            let (out, trace) = psi(&c, &s, &psi_cfg).unwrap();
            let e = trace.energies();
            prop_assert_eq!(e.len(), 5);
            for w in e.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * e[0], "chain {:?}", e);
            }
            prop_assert!(s.endpoints_on_constraint(&out));
            prop_assert_eq!(out.segments(), c.segments());
            prop_assert!(out.length() <= c.length() + 1e-9 * c.length().max(1.0));
        }
    }

    #[test]
    fn psi_is_deterministic(seed in 0u64..1_000_000) {
        let cfg = CorpusConfig::default();
        let s = Scenario::sphere_equator();
        if let Some(c) = random_curve(&s, &cfg, &mut trial_rng(seed, 3)) {
            let psi_cfg = PsiConfig::new(cfg.l).unwrap();
            let a = psi(&c, &s, &psi_cfg).unwrap().0;
            let b = psi(&c.clone(), &s, &psi_cfg).unwrap().0;
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn family_members_are_fixed_points(phi in 0.0..std::f64::consts::TAU) {
        let psi_cfg = PsiConfig::new(16).unwrap();
        for s in scenarios() {
            let g = s.family.unwrap().member(phi, 0, 256);
            let (out, _) = psi(&g, &s, &psi_cfg).unwrap();
            prop_assert!(w12_distance(&g, &out).unwrap() < 1e-6 * g.length());
            let cert = geodesic_residual(&out, &s);
            prop_assert!(cert.interior_residual < 1e-2 && cert.boundary_orthogonality < 1e-2 && !cert.trivial);
        }
    }
}

#[test]
fn perturbations_shrink_and_converge_back_to_the_family() {
    let s = Scenario::disk_circle();
    let family = s.family.unwrap();
    let psi_cfg = PsiConfig::new(16).unwrap();
    let c = perturbed_geodesic(&s, &family, 0.4, 0.5, 256);
    let (out, log) = iterate_psi(&c, &s, &psi_cfg, &StopRule::default()).unwrap();
    assert!(log.converged());
    // A chord of the circle through the perturbed endpoints, orthogonal to N, is a diameter.
    assert!((out.length() - 32.0).abs() < 1e-6, "{}", out.length());
    let lengths: Vec<f64> = log.records.iter().map(|r| r.length).collect();
    assert!(lengths.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn misaligned_grid_is_rejected() {
    let s = Scenario::disk_circle();
    let g = s.family.unwrap().member(0.0, 0, 100);
    let err = psi(&g, &s, &PsiConfig::new(16).unwrap()).unwrap_err();
    assert!(matches!(err, ShorteningError::GridMisaligned { .. }), "{err:?}");
}

#[test]
fn endpoint_off_the_constraint_is_rejected() {
    let s = Scenario::disk_circle();
    let c = DiscreteCurve::from_fn(64, true, |t| Point::new(-16.0 + 31.0 * t, 0.0, 0.0));
    let err = psi(&c, &s, &PsiConfig::new(16).unwrap()).unwrap_err();
    assert!(matches!(err, ShorteningError::EndpointOffConstraint { .. }), "{err:?}");
}
