//! Property tests for the geometric and dynamical invariants.

use hypwave::dynamics::{
    apply, jacobian_along, linearized_flow, riccati_evolve, splitting_at, PhasePoint, RiccatiOutcome, WavefrontShape,
};
use hypwave::experiment::StateSpec;
use hypwave::geometry::{exp_map, DeckGroup, DiskPoint, MobiusMap, TangentVector};
use hypwave::lagrangian::{finite_difference_jet, BusemannTerm, HorocyclicPhase, Phase, PhaseJet, RadialPhase};
use hypwave::quad::gauss_legendre;
use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};
use std::sync::OnceLock;

fn point(r: f64, angle: f64) -> DiskPoint {
    DiskPoint::polar(r, angle).unwrap()
}

fn shape_at(u0: f64, t: f64, lambda: f64) -> f64 {
    match riccati_evolve(WavefrontShape(u0), t, lambda) {
        RiccatiOutcome::Regular(u) => u.0,
        RiccatiOutcome::BlowUp { time } => panic!("focal point at {time}"),
    }
}

fn deck_ball() -> &'static Vec<(MobiusMap, hypwave::geometry::DeckWord)> {
    static BALL: OnceLock<Vec<(MobiusMap, hypwave::geometry::DeckWord)>> = OnceLock::new();
    BALL.get_or_init(|| DeckGroup::bolza().enumerate_deck(5.0).unwrap())
}

/// `X'' = s^2 X` on the hyperboloid, RK4 over `[0, 1]`.
fn hyperboloid_geodesic(base: DiskPoint, y: [f64; 2]) -> DiskPoint {
    let z = base.z();
    let d = 1.0 - z.norm_sqr();
    let x0 = [(1.0 + z.norm_sqr()) / d, 2.0 * z.re / d, 2.0 * z.im / d];
    // Differential of `z -> ((1 + |z|^2), 2x, 2y) / (1 - |z|^2)` applied to the
    // chart vector of the frame components `v`.
    let e = |v: [f64; 2]| -> [f64; 3] {
        let w = num_complex::Complex64::new(v[0], v[1]) * (0.5 * d);
        let q = z.re * w.re + z.im * w.im;
        [
            4.0 * q / (d * d),
            2.0 * w.re / d + 4.0 * z.re * q / (d * d),
            2.0 * w.im / d + 4.0 * z.im * q / (d * d),
        ]
    };
    let v0 = e(y);
    let s2 = y[0] * y[0] + y[1] * y[1];
    let (mut x, mut v) = (x0, v0);
    let steps = 8000;
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        let acc = |x: [f64; 3]| x.map(|c| s2 * c);
        let k1x = v;
        let k1v = acc(x);
        let k2x = std::array::from_fn::<f64, 3, _>(|i| v[i] + 0.5 * h * k1v[i]);
        let k2v = acc(std::array::from_fn(|i| x[i] + 0.5 * h * k1x[i]));
        let k3x = std::array::from_fn::<f64, 3, _>(|i| v[i] + 0.5 * h * k2v[i]);
        let k3v = acc(std::array::from_fn(|i| x[i] + 0.5 * h * k2x[i]));
        let k4x = std::array::from_fn::<f64, 3, _>(|i| v[i] + h * k3v[i]);
        let k4v = acc(std::array::from_fn(|i| x[i] + h * k3x[i]));
        for i in 0..3 {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    DiskPoint::from_xy(x[1] / (1.0 + x[0]), x[2] / (1.0 + x[0])).unwrap()
}

fn jets_close(analytic: &PhaseJet, fd_grad: &PhaseJet, fd_hess: &PhaseJet, tol: f64) -> bool {
    let gscale = analytic.speed().max(1.0);
    let hscale = analytic.hess.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..2).all(|i| {
        (analytic.grad[i] - fd_grad.grad[i]).abs() <= tol * gscale
            && (0..2).all(|j| (analytic.hess[i][j] - fd_hess.hess[i][j]).abs() <= tol * hscale)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_maps_are_isometries(
        r1 in 0.0..3.0f64, a1 in 0.0..6.3f64, r2 in 0.0..3.0f64, a2 in 0.0..6.3f64,
        rc in 0.0..2.0f64, ac in 0.0..6.3f64, rot in 0.0..6.3f64,
    ) {
        let (p, q) = (point(r1, a1), point(r2, a2));
        let g = MobiusMap::frame(point(rc, ac), rot).compose(&MobiusMap::translation(0.7));
        let d = p.distance(&q);
        let moved = g.apply(p).unwrap().distance(&g.apply(q).unwrap());
        prop_assert!((moved - d).abs() <= 1e-10 * d.max(1.0));
    }

    #[test]
    fn reduction_is_well_defined_on_the_quotient(r in 0.0..3.0f64, a in 0.0..6.3f64, k in 0usize..10_000) {
        let group = DeckGroup::bolza();
        let p = point(r, a);
        let (q, _) = group.reduce_to_domain(p).unwrap();
        // Points on the octagon boundary have two valid representatives.
        prop_assume!(group.contains(q, -1e-6));
        let ball = deck_ball();
        let (gamma, _) = &ball[k % ball.len()];
        let (q2, _) = group.reduce_to_domain(gamma.apply(p).unwrap()).unwrap();
        prop_assert!(q.distance(&q2) < 1e-9, "{} vs {}", q.z(), q2.z());
    }

    #[test]
    fn exp_map_matches_hyperboloid_ode(r in 0.0..1.5f64, a in 0.0..6.3f64, s in 0.01..10.0f64, dir in 0.0..6.3f64) {
        let base = point(r, a);
        let y = [s * dir.cos(), s * dir.sin()];
        let closed = exp_map(&TangentVector::from_frame(base, y)).unwrap();
        let ode = hyperboloid_geodesic(base, y);
        prop_assert!(closed.distance(&ode) < 1e-9, "s = {s}: {}", closed.distance(&ode));
    }

    #[test]
    fn log_jacobian_integrates_the_shape(u0 in -0.9..3.0f64, t in 0.0..5.0f64, lambda in 0.5..2.0f64) {
        let integral: f64 = gauss_legendre(64, 0.0, t).iter().map(|&(s, w)| w * shape_at(u0, s, lambda)).sum();
        let j = jacobian_along(WavefrontShape(u0), t, lambda).unwrap();
        prop_assert!((j.ln() - lambda * integral).abs() < 1e-8);
    }

    #[test]
    fn jacobian_is_a_cocycle(u0 in -0.9..3.0f64, t1 in 0.0..3.0f64, t2 in 0.0..3.0f64, lambda in 0.5..2.0f64) {
        let whole = jacobian_along(WavefrontShape(u0), t1 + t2, lambda).unwrap();
        let first = jacobian_along(WavefrontShape(u0), t1, lambda).unwrap();
        let second = jacobian_along(WavefrontShape(shape_at(u0, t1, lambda)), t2, lambda).unwrap();
        prop_assert!((whole - first * second).abs() <= 1e-9 * whole);
    }

    #[test]
    fn speed_rescales_time(u0 in -0.9..3.0f64, t in 0.0..5.0f64, lambda in 0.5..2.0f64) {
        prop_assert!(riccati_evolve(WavefrontShape(u0), t, lambda) == riccati_evolve(WavefrontShape(u0), lambda * t, 1.0));
        prop_assert!(
            jacobian_along(WavefrontShape(u0), t, lambda).unwrap()
                == jacobian_along(WavefrontShape(u0), lambda * t, 1.0).unwrap()
        );
    }

    #[test]
    fn splitting_is_flow_invariant(r in 0.0..2.0f64, a in 0.0..6.3f64, speed in 0.5..2.0f64, dir in 0.0..6.3f64, t in 0.0..6.0f64) {
        let rho = PhasePoint::new(TangentVector::from_frame(point(r, a), [speed * dir.cos(), speed * dir.sin()])).unwrap();
        let here = splitting_at(&rho);
        let there = splitting_at(&rho.flow(t));
        let m = linearized_flow(rho.speed, t);
        for (v, w) in [(here.unstable, there.unstable), (here.stable, there.stable)] {
            let image = apply(&m, &v);
            let dot: f64 = image.iter().zip(&w).map(|(x, y)| x * y).sum();
            let norm = |x: &[f64; 4]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let cos = (dot / (norm(&image) * norm(&w))).abs().min(1.0);
            prop_assert!(cos.acos() < 1e-5);
        }
    }

    #[test]
    fn radial_phase_jets_match_finite_differences(r in 0.0..0.3f64, a in 0.0..6.3f64) {
        let phase = RadialPhase::with_speed_range(point(1.2, 2.0), 1.0, 0.4, 0.8, 1.2).unwrap();
        let p = point(r, a);
        let jet = phase.jet(&p).unwrap();
        let fd_grad = finite_difference_jet(&phase, &p, 1e-5).unwrap();
        let fd_hess = finite_difference_jet(&phase, &p, 1e-4).unwrap();
        prop_assert!(jets_close(&jet, &fd_grad, &fd_hess, 1e-6));
    }

    #[test]
    fn horocyclic_phase_jets_match_finite_differences(r in 0.0..1.0f64, a in 0.0..6.3f64, w in 0.2..1.0f64) {
        let phase = HorocyclicPhase {
            terms: vec![BusemannTerm { weight: w, angle: 0.3 }, BusemannTerm { weight: 1.0 - w, angle: 0.9 }],
        };
        let p = point(r, a);
        let jet = phase.jet(&p).unwrap();
        let fd_grad = finite_difference_jet(&phase, &p, 1e-5).unwrap();
        let fd_hess = finite_difference_jet(&phase, &p, 1e-4).unwrap();
        prop_assert!(jets_close(&jet, &fd_grad, &fd_hess, 1e-6));
    }

    #[test]
    fn eikonal_hessian_follows_the_riccati_law(fs in 0.05..0.95f64, ft in -0.9..0.9f64) {
        let state = StateSpec::default().build().unwrap();
        let eik = state.eikonal().unwrap();
        let (s, tau) = (fs * eik.data.length, ft * eik.half_width);
        let p = eik.characteristic(s, tau).origin_image().unwrap();
        let fd = finite_difference_jet(eik, &p, 1e-4).unwrap();
        let (_, _, ll) = fd.ray_hessian();
        let expected = shape_at(eik.data.initial_shape(s).0, tau, 1.0);
        prop_assert!((ll - expected).abs() < 1e-7, "{ll} vs {expected}");
    }
}
