use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use elastic_networks::admissibility::{det_m, junction_angles, rho_hat};
use elastic_networks::export::monitor_csv;
use elastic_networks::geometry::{length, GeometryFields};
use elastic_networks::scene::{builtin, parse_scene, BuiltinArgs, BUILTIN_SCENES};
use elastic_networks::solver::{assemble, run, RunOptions};
use elastic_networks::theta::{build_theta, MIN_SLOPE};
use elastic_networks::{build_state, NetworkState, NetworkTopology, Primitive, Vec2};

fn state(name: &str, n: usize) -> NetworkState {
    let s = builtin(name, &BuiltinArgs::default()).unwrap();
    build_state(s.topology, &s.curves, n).unwrap()
}

fn arc_state(radius: f64, sweep: f64, n: usize) -> NetworkState {
    let arc = Primitive::Arc {
        center: Vec2::new(0.3, -0.2),
        radius,
        start_angle: 0.4,
        sweep,
    };
    let pts = arc.sample(n);
    let topo = NetworkTopology::segment(pts[0], pts[n]);
    NetworkState::from_samples(Arc::new(topo), vec![pts]).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn geometry_is_invariant_under_rigid_motions(angle in -PI..PI, dx in -5.0..5.0f64, dy in -5.0..5.0f64, mu in 0.1..10.0f64) {
        let s = state("perturbed_triod", 32);
        let shift = Vec2::new(dx, dy);
        let moved = s.with_nodes(s.nodes().iter().map(|p| p.rotate(angle) + shift).collect());
        let (f, g) = (GeometryFields::compute(&s, mu), GeometryFields::compute(&moved, mu));
        prop_assert!((f.energy() - g.energy()).abs() <= 1e-10 * f.energy());
        for (a, b) in f.curves.iter().zip(&g.curves) {
            prop_assert!(max_gap(&a.k, &b.k) <= 1e-10 * a.k.iter().map(|v| v.abs()).fold(1.0, f64::max));
            prop_assert!(max_gap(&a.a, &b.a) <= 1e-8 * a.a.iter().map(|v| v.abs()).fold(1.0, f64::max));
            prop_assert!(max_gap(&a.ds, &b.ds) <= 1e-12);
        }
    }

    #[test]
    fn det_m_dominates_the_angle_bound(a in 0.0..2.0 * PI, b in 0.0..2.0 * PI, c in 0.0..2.0 * PI) {
        let tangents = [Vec2::from_angle(a), Vec2::from_angle(b), Vec2::from_angle(c)];
        let rho = rho_hat(&junction_angles(&tangents));
        prop_assert!(det_m(&tangents) >= 1.0 - (1.0 - rho * rho).sqrt() - 1e-12);
    }

    #[test]
    fn scenes_round_trip_through_json(idx in 0..BUILTIN_SCENES.len(), mu in 0.01..100.0f64, n in 8usize..200, eps in 0.01..0.5f64) {
        let mut s = builtin(BUILTIN_SCENES[idx], &BuiltinArgs { eps, ..Default::default() }).unwrap();
        s.params.mu = mu;
        s.params.grid_n = n;
        prop_assert_eq!(parse_scene(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn states_round_trip_through_json(idx in 0..BUILTIN_SCENES.len(), n in 8usize..64) {
        let s = state(BUILTIN_SCENES[idx], n);
        let back: NetworkState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn frames_are_orthonormal_and_weights_sum_to_length(radius in 0.2..5.0f64, sweep in 0.2..4.0f64) {
        let s = arc_state(radius, sweep, 64);
        let f = GeometryFields::compute(&s, 1.0);
        let c = &f.curves[0];
        for (t, n) in c.tangent.iter().zip(&c.normal) {
            prop_assert!((t.norm() - 1.0).abs() < 1e-14 && (n.norm() - 1.0).abs() < 1e-14);
            prop_assert!(t.dot(*n).abs() < 1e-15);
            prop_assert!((t.cross(*n) - 1.0).abs() < 1e-14);
        }
        let sum: f64 = c.ds.iter().sum();
        prop_assert!((sum - length(&s, 0)).abs() <= 1e-13 * sum);
        prop_assert!((sum - radius * sweep).abs() <= 1e-5 * radius * sweep);
    }

    #[test]
    fn theta_keeps_its_slope_bound(a in -200.0..200.0f64, b in -200.0..200.0f64) {
        let theta = build_theta(a, b);
        prop_assert!(theta.min_slope() >= MIN_SLOPE);
        prop_assert!(theta.eval(0.0).abs() < 1e-12 && (theta.eval(1.0) - 1.0).abs() < 1e-12);
        prop_assert!((theta.derivative(0.0) - 1.0).abs() < 1e-9 && (theta.derivative(1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_systems_are_square(idx in 0..BUILTIN_SCENES.len(), n in 8usize..96, dt in 1e-6..1e-1f64) {
        let s = state(BUILTIN_SCENES[idx], n);
        let system = assemble(&s, 1.0, dt).unwrap();
        prop_assert_eq!(system.row_counts().total_rows(), system.unknowns);
        prop_assert_eq!(system.rhs.len(), system.unknowns);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn runs_are_deterministic(mu in 0.5..4.0f64) {
        let mut s = builtin("perturbed_triod", &BuiltinArgs::default()).unwrap();
        s.params.mu = mu;
        s.params.grid_n = 24;
        s.params.t_end = 10.0 * s.params.dt;
        let a = run(&s, &RunOptions::default()).unwrap();
        let b = run(&s, &RunOptions::default()).unwrap();
        prop_assert_eq!(monitor_csv(&a.reports), monitor_csv(&b.reports));
        prop_assert_eq!(a.final_state, b.final_state);
    }
}

#[test]
fn circle_stays_round() {
    let mut s = builtin("circle", &BuiltinArgs { radius: 1.0, ..Default::default() }).unwrap();
    s.params.grid_n = 64;
    s.params.t_end = 0.05;
    s.params.dt = 1e-3;
    let out = run(&s, &RunOptions::default()).unwrap();
    let last = &out.frames.last().unwrap().1;
    let pts = last.curve_points(0);
    let centroid = pts[..pts.len() - 1].iter().fold(Vec2::ZERO, |acc, p| acc + *p) / (pts.len() - 1) as f64;
    let radii: Vec<f64> = pts.iter().map(|p| p.distance(centroid)).collect();
    let spread = radii.iter().cloned().fold(f64::MIN, f64::max) - radii.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 1e-6, "{spread:e}");
}
