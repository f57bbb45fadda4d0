use approx::assert_relative_eq;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dynamics::{jacobian_along, WavefrontShape};
use crate::error::Error;
use crate::experiment::{AmplitudeSpec, StateSpec};
use crate::geometry::{octagon_quadrature, DeckGroup, DiskPoint, Frame, MobiusMap};
use crate::lagrangian::{CurveKind, LagrangianState, NormalSide, Phase, Profile};

fn eikonal(curve: CurveKind, profile: Profile, normal: NormalSide) -> LagrangianState {
    StateSpec::Eikonal {
        curve,
        midpoint: [0.0, 0.0],
        direction: 0.2,
        length: 1.4,
        normal,
        profile,
        collar: 0.3,
        amplitude: AmplitudeSpec {
            center: None,
            radius: 0.25,
            peak: 1.0,
        },
    }
    .build()
    .unwrap()
}

fn planar() -> LagrangianState {
    eikonal(CurveKind::Geodesic, Profile::Constant { value: 0.0 }, NormalSide::Left)
}

fn radial() -> LagrangianState {
    StateSpec::Radial {
        offset: 1.0,
        bearing: 0.3,
        lambda: [0.8, 1.2],
        amplitude: AmplitudeSpec {
            center: Some([0.05, -0.02]),
            radius: 0.25,
            peak: 1.0,
        },
    }
    .build()
    .unwrap()
}

/// Normal coordinates of `b(0)` seen from the frame `a`.
fn relative(a: &MobiusMap, b: &MobiusMap) -> [f64; 2] {
    let m = a.inverse().compose(b);
    let d = m.displacement();
    let th = m.hyperboloid().bearing();
    [d * th.cos(), d * th.sin()]
}

#[test]
fn rays_at_time_zero_reproduce_initial_data() {
    let group = DeckGroup::bolza();
    for state in [StateSpec::default().build().unwrap(), radial()] {
        let prop = Propagator::new(&state, &group, PropagatorConfig::default());
        for (_, _, q) in prop.source_grid(7).unwrap() {
            let src = prop.source(q).unwrap();
            let ray = prop.ray(q, 0.0).unwrap().unwrap();
            let base = src.base().unwrap();
            let jet = state.phase.jet(&base).unwrap();
            assert!(ray.lifted.frame.projective_distance(&src.frame) < 1e-14);
            assert_relative_eq!(ray.action, jet.value, epsilon = 1e-9);
            assert_relative_eq!(ray.jacobian, 1.0, epsilon = 1e-15);
            assert_relative_eq!(ray.shape.0, src.shape(), epsilon = 1e-15);
            assert_relative_eq!(ray.lifted.speed, jet.speed(), epsilon = 1e-9);
        }
    }
}

#[test]
fn planar_data_jacobian_is_cosh() {
    let state = planar();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let expected = jacobian_along(WavefrontShape(0.0), 2.0, 1.0).unwrap();
    assert_relative_eq!(expected, 2.0f64.cosh(), max_relative = 1e-12);
    assert_relative_eq!(
        prop.ray([0.7, 0.0], 2.0).unwrap().unwrap().jacobian,
        expected,
        max_relative = 1e-12
    );
    // Off the curve the front has already bent: shape tanh τ at distance τ.
    let rays = prop.propagate_bundle(2.0, 100).unwrap();
    assert!(rays.len() >= 64);
    for ray in rays {
        let ray = ray.unwrap();
        let tau = ray.source[1];
        let off = jacobian_along(WavefrontShape(tau.tanh()), 2.0, 1.0).unwrap();
        assert_relative_eq!(off, (2.0 + tau).cosh() / tau.cosh(), max_relative = 1e-12);
        assert_relative_eq!(ray.jacobian, off, max_relative = 1e-9);
    }
}

#[test]
fn action_differences_follow_arrival_momentum() {
    let group = DeckGroup::bolza();
    for state in [StateSpec::default().build().unwrap(), radial()] {
        let prop = Propagator::new(&state, &group, PropagatorConfig::default());
        let t = 3.0;
        let delta = 1e-4;
        for (_, _, q) in prop.source_grid(5).unwrap().into_iter().step_by(3) {
            let centre = prop.ray(q, t).unwrap().unwrap();
            for k in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[k] += delta;
                qm[k] -= delta;
                let (Ok(Ok(rp)), Ok(Ok(rm))) = (prop.ray(qp, t), prop.ray(qm, t)) else {
                    continue;
                };
                let kp = relative(&centre.lifted.frame, &rp.lifted.frame);
                let km = relative(&centre.lifted.frame, &rm.lifted.frame);
                let moved = (kp[0] - km[0]).hypot(kp[1] - km[1]);
                let ds = rp.action - rm.action;
                let predicted = centre.lifted.speed * (kp[0] - km[0]);
                assert!((ds - predicted).abs() < 1e-5 * moved, "{ds} vs {predicted}");
            }
        }
    }
}

#[test]
fn single_sheet_at_small_time() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let t = 0.2;
    let q = [0.72, 0.05];
    let src = prop.source(q).unwrap();
    let x0 = src.arrival(t).origin_image().unwrap();
    let bundle = prop.bundle(t).unwrap();
    let table = prop.find_branches(&bundle, x0, 0.0).unwrap();
    assert_eq!(table.count, 1);
    let b = &table.branches[0];
    assert_eq!(b.deck_word, "e");
    assert!((b.source_param[0] - q[0]).abs() < 1e-7 && (b.source_param[1] - q[1]).abs() < 1e-7);
    assert_relative_eq!(b.amplitude, src.amplitude / src.jacobian(t).sqrt(), max_relative = 1e-7);
    assert_relative_eq!(b.phase, src.action(t), epsilon = 1e-8);
}

#[test]
fn branch_speeds_match_initial_gradient() {
    let state = radial();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let bundle = prop.bundle(6.0).unwrap();
    let mut seen = 0;
    for node in octagon_quadrature(3) {
        let table = prop.find_branches(&bundle, node.point, 0.4).unwrap();
        for b in &table.branches {
            let speed = state.phase.jet(&b.source).unwrap().speed();
            assert!((b.xi[0].hypot(b.xi[1]) - speed).abs() < 1e-9);
            assert!((0.8 - 1e-9..=1.2 + 1e-9).contains(&speed));
            assert!(b.amplitude >= 0.0 && b.jacobian > 0.0);
            seen += 1;
        }
    }
    assert!(seen > 10, "only {seen} branches");
}

#[test]
fn branches_are_unique_and_sorted() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let bundle = prop.bundle(8.0).unwrap();
    let table = prop
        .find_branches(&bundle, DiskPoint::from_xy(0.3, 0.1).unwrap(), 0.0)
        .unwrap();
    assert!(table.count > 3);
    for w in table.branches.windows(2) {
        assert!(w[0].deck_word <= w[1].deck_word);
        let same_word = w[0].deck_word == w[1].deck_word;
        let gap = (w[0].source_param[0] - w[1].source_param[0]).hypot(w[0].source_param[1] - w[1].source_param[1]);
        assert!(!same_word || gap > 1e-6);
    }
}

#[test]
fn branch_phase_gradient_is_the_arrival_covector() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let t = 8.0;
    let x0 = DiskPoint::from_xy(0.3, 0.1).unwrap();
    let frame = Frame { base: x0, angle: 0.0 };
    let bundle = prop.bundle(t).unwrap();
    let table = prop.find_branches(&bundle, x0, 0.0).unwrap();
    let delta = 1e-5;
    for b in table.branches.iter().take(8) {
        let (s0, b0, xi0) = prop.continue_branch(b, t, x0, 0.0).unwrap();
        assert_relative_eq!(s0, b.phase, epsilon = 1e-8);
        assert_relative_eq!(b0, b.amplitude, max_relative = 1e-6);
        assert!((xi0[0] - b.xi[0]).abs() < 1e-8 && (xi0[1] - b.xi[1]).abs() < 1e-8);
        for k in 0..2 {
            let mut e = [0.0; 2];
            e[k] = delta;
            let xp = frame.exp(e).unwrap();
            let xm = frame.exp([-e[0], -e[1]]).unwrap();
            let sp = prop.continue_branch(b, t, xp, 0.0).unwrap().0;
            let sm = prop.continue_branch(b, t, xm, 0.0).unwrap().0;
            assert!(((sp - sm) / (2.0 * delta) - b.xi[k]).abs() < 1e-4);
        }
    }
}

#[test]
fn planar_front_expands_from_the_first_grid_time() {
    let state = planar();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let grid: Vec<f64> = (1..=8).map(f64::from).collect();
    assert_eq!(prop.detect_t0(&grid, 100).unwrap(), 1.0);
}

#[test]
fn stable_front_never_expands() {
    let state = eikonal(CurveKind::Horocycle, Profile::Constant { value: 0.0 }, NormalSide::Left);
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let grid: Vec<f64> = (1..=8).map(f64::from).collect();
    assert!(matches!(prop.detect_t0(&grid, 100), Err(Error::NoExpansionTime { .. })));
}

#[test]
fn expansion_time_shrinks_as_margin_grows() {
    let group = DeckGroup::bolza();
    let grid: Vec<f64> = (1..=24).map(|k| 0.25 * k as f64).collect();
    let mut last = f64::INFINITY;
    for curvature in [-0.8, -0.5, -0.2, 0.0, 0.5] {
        let profile = Profile::Quadratic {
            value: 0.0,
            slope: 0.0,
            curvature,
            center: 0.7,
        };
        let state = eikonal(CurveKind::Geodesic, profile, NormalSide::Left);
        let prop = Propagator::new(&state, &group, PropagatorConfig::default());
        let t0 = prop.detect_t0(&grid, 150).unwrap();
        assert!(t0 <= last, "T0 {t0} after {last} at curvature {curvature}");
        last = t0;
    }
}

#[test]
fn mass_survey_is_complete_at_t10() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let bundle = prop.bundle(10.0).unwrap();
    let mut total = 0.0;
    for node in octagon_quadrature(8) {
        let table = prop.find_branches(&bundle, node.point, 0.0).unwrap();
        assert_eq!(table.diagnostics.newton_failures, 0);
        total += node.weight * table.diagnostics.local_mass;
    }
    assert!(
        (total / state.mass() - 1.0).abs() < 0.01,
        "ratio {}",
        total / state.mass()
    );
}

#[test]
fn window_covariance_of_one_class_is_a_plane_wave() {
    let table = table_of(vec![record(0.7, 0.2, 0.6)]);
    let model = group_branches(&table, 1e-3, 1e-6).unwrap();
    let y = [0.4, -1.2];
    let c = model.window_covariance(0.75, &[y])[0];
    let expected = Complex64::from_polar(0.36, -(0.7f64.cos() * y[0] + 0.7f64.sin() * y[1]));
    assert!((c - expected).norm() < 1e-12);
}

fn record(angle: f64, phase: f64, amplitude: f64) -> BranchRecord {
    BranchRecord {
        xi: [angle.cos(), angle.sin()],
        phase,
        amplitude,
        source: DiskPoint::from_xy(0.0, 0.0).unwrap(),
        source_param: [angle, phase],
        deck_word: "e".into(),
        jacobian: 1.0,
        deck: MobiusMap::IDENTITY,
    }
}

fn table_of(branches: Vec<BranchRecord>) -> BranchTable {
    BranchTable {
        x0: DiskPoint::from_xy(0.0, 0.0).unwrap(),
        frame: 0.0,
        t: 1.0,
        count: branches.len(),
        branches,
        diagnostics: BranchDiagnostics::default(),
    }
}

#[test]
fn distinct_directions_give_singletons() {
    let table = table_of(vec![
        record(0.1, 0.3, 0.5),
        record(1.2, 0.7, 0.25),
        record(-2.0, 0.1, 0.125),
    ]);
    let model = group_branches(&table, 1e-2, 1e-6).unwrap();
    assert_eq!(model.len(), 3);
    for (class, beta) in model.classes.iter().zip(&model.beta) {
        assert_eq!(class.len(), 1);
        assert_relative_eq!(*beta, table.branches[class[0]].amplitude, max_relative = 1e-15);
    }
}

#[test]
fn coinciding_directions_add_coherently() {
    let h = 0.01;
    let aligned = table_of(vec![
        record(0.4, 0.3, 0.5),
        record(0.4 + 1e-9, 0.3 + h * std::f64::consts::TAU, 0.25),
    ]);
    let model = group_branches(&aligned, h, 1e-6).unwrap();
    assert_eq!(model.len(), 1);
    assert_relative_eq!(model.beta[0], 0.75, max_relative = 1e-9);
    let opposed = table_of(vec![
        record(0.4, 0.3, 0.5),
        record(0.4 + 1e-9, 0.3 + h * std::f64::consts::PI, 0.25),
    ]);
    let model = group_branches(&opposed, h, 1e-6).unwrap();
    assert_relative_eq!(model.beta[0], 0.25, max_relative = 1e-9);
}

#[test]
fn chained_links_are_ambiguous() {
    let tol = 1e-6;
    let table = table_of(vec![
        record(0.0, 0.0, 1.0),
        record(0.6 * tol, 0.0, 1.0),
        record(1.2 * tol, 0.0, 1.0),
    ]);
    assert!(matches!(
        group_branches(&table, 1e-2, tol),
        Err(Error::AmbiguousClustering(_))
    ));
}

#[test]
fn class_energy_is_bounded_by_class_size() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let bundle = prop.bundle(8.0).unwrap();
    let table = prop
        .find_branches(&bundle, DiskPoint::from_xy(-0.2, 0.35).unwrap(), 0.0)
        .unwrap();
    let model = group_branches(&table, 1e-3, DEFAULT_DIR_TOL).unwrap();
    assert!(model.len() <= table.count);
    let total: f64 = table.branches.iter().map(|b| b.amplitude * b.amplitude).sum();
    let energy: f64 = model.beta.iter().map(|b| b * b).sum();
    assert!(energy <= model.max_class_size() as f64 * total * (1.0 + 1e-12));
    for (class, beta) in model.classes.iter().zip(&model.beta) {
        let sum: f64 = class.iter().map(|&j| table.branches[j].amplitude).sum();
        assert!(*beta <= sum * (1.0 + 1e-12));
    }
}

#[test]
fn single_class_has_constant_modulus() {
    let table = table_of(vec![record(0.7, 0.2, 0.6)]);
    let model = group_branches(&table, 1e-3, 1e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = [[0.0, 0.0], [0.3, -1.0], [2.0, 0.5]];
    let s = sample_local_limit(&model, 0.75, &pts, 1000, &mut rng).unwrap();
    for v in &s.values {
        assert_relative_eq!(v.norm(), 0.6, max_relative = 1e-12);
    }
    assert!(sample_local_limit(&model, 0.5, &pts, 10, &mut rng).is_err());
    assert!(sample_local_limit(&model, 1.0, &pts, 10, &mut rng).is_err());
}

#[test]
fn frozen_model_matches_exact_resolve_at_small_scale() {
    let state = StateSpec::default().build().unwrap();
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let t = 3.0;
    let x0 = prop.source([0.7, 0.02]).unwrap().arrival(t).origin_image().unwrap();
    let bundle = prop.bundle(t).unwrap();
    let table = prop.find_branches(&bundle, x0, 0.0).unwrap();
    assert!(table.count >= 1);
    let (h, alpha) = (1e-6, 0.75);
    let model = group_branches(&table, h, DEFAULT_DIR_TOL).unwrap();
    let pts = [[0.0, 0.0], [1.0, 0.5]];
    let frozen = sample_local_limit(&model, alpha, &pts, 40, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let exact = sample_local_exact(&prop, &table, h, alpha, &pts, 40, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let scale: f64 = model.beta.iter().sum();
    for (a, b) in frozen.values.iter().zip(&exact.values) {
        assert!((a - b).norm() < 2e-2 * scale, "{a} vs {b}");
    }
    assert!(frozen.values.iter().any(|v| *v != Complex64::new(0.0, 0.0)));
}
