//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use elastic_networks::admissibility::{det_m, junction_angles, junction_tangential_solve, rho_hat};
use elastic_networks::geometry::GeometryFields;
use elastic_networks::monitors::{check_bounds, check_energy_series};
use elastic_networks::scene::{builtin, BuiltinArgs, Scene, BUILTIN_SCENES};
use elastic_networks::solver::{run, RunOptions, RunOutput, Termination};
use elastic_networks::{build_state, NetworkState, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scene(name: &str) -> Scene {
    builtin(name, &BuiltinArgs::default()).expect("built-in scene")
}

fn timed_run(scene: &Scene) -> (RunOutput, Duration) {
    let start = Instant::now();
    let out = run(scene, &RunOptions::default()).expect("run");
    (out, start.elapsed())
}

/// Default-config runs of every built-in scene, shared by several criteria.
fn default_runs() -> &'static BTreeMap<&'static str, RunOutput> {
    static RUNS: OnceLock<BTreeMap<&'static str, RunOutput>> = OnceLock::new();
    RUNS.get_or_init(|| BUILTIN_SCENES.iter().map(|&name| (name, timed_run(&scene(name)).0)).collect())
}

fn max_node_distance(a: &NetworkState, b: &NetworkState) -> f64 {
    a.nodes().iter().zip(b.nodes()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max)
}

// 1
fn stationary_steiner() -> Outcome {
    const DISPLACEMENT: f64 = 1e-8;
    const ENERGY: f64 = 1e-10;
    const RUNTIME: Duration = Duration::from_secs(10);
    let mut s = scene("steiner_triod");
    s.params.grid_n = 64;
    s.params.dt = 1e-3;
    s.params.t_end = 1.0;
    let initial = build_state(s.topology.clone(), &s.curves, 64).unwrap();
    let (out, elapsed) = timed_run(&s);
    let last = out.final_state.as_ref().unwrap();
    let displacement = max_node_distance(&initial, last);
    let e0 = out.reports[0].energy;
    let drift = out.reports.iter().map(|r| (r.energy - e0).abs() / e0).fold(0.0, f64::max);
    let reached = out.termination == Termination::ReachedEnd && (last.time - 1.0).abs() < 1e-12;
    outcome(
        reached && displacement <= DISPLACEMENT && drift <= ENERGY && elapsed < RUNTIME,
        format!("displacement {displacement:.2e}, energy drift {drift:.2e}, runtime {elapsed:.2?}, reached end {reached}"),
    )
}

/// `r' = 1/r^3 - mu/r`, integrated with an embedded Runge-Kutta 4(5) pair
/// (Dormand-Prince) under a tight local error tolerance.
fn circle_radius_oracle(r0: f64, mu: f64, times: &[f64]) -> Vec<f64> {
    let f = |r: f64| 1.0 / (r * r * r) - mu / r;
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut t, mut r, mut h) = (0.0f64, r0, 1e-4f64);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let mut k = [0.0; 7];
            k[0] = f(r);
            for i in 0..6 {
                let ri = r + step * (0..=i).map(|j| A[i][j] * k[j]).sum::<f64>();
                k[i + 1] = f(ri);
            }
            let r5 = r + step * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
            let r4 = r + step * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
            let err = (r5 - r4).abs() / (1e-13 + 1e-12 * r5.abs());
            if err <= 1.0 {
                t += step;
                r = r5;
            }
            h = step * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        }
        out.push(r);
    }
    out
}

// 2
fn circle_equilibrium() -> Outcome {
    const TRAJECTORY: f64 = 1e-2;
    const FINAL: f64 = 5e-3;
    const RUNTIME: Duration = Duration::from_secs(60);
    let s = builtin("circle", &BuiltinArgs { radius: 2.0, ..Default::default() }).unwrap();
    assert_eq!((s.params.mu, s.params.grid_n), (4.0, 128));
    let (out, elapsed) = timed_run(&s);
    let times: Vec<f64> = out.reports.iter().map(|r| r.time).collect();
    let oracle = circle_radius_oracle(2.0, 4.0, &times);
    let worst = out
        .reports
        .iter()
        .zip(&oracle)
        .map(|(r, o)| (r.total_length / (2.0 * PI) - o).abs() / o)
        .fold(0.0, f64::max);
    let final_r = out.reports.last().unwrap().total_length / (2.0 * PI);
    let target = 4f64.powf(-0.5);
    let final_err = (final_r - target).abs() / target;
    outcome(
        out.termination == Termination::ReachedEnd && worst <= TRAJECTORY && final_err <= FINAL && elapsed < RUNTIME,
        format!(
            "max trajectory error {worst:.2e} over {} times, final radius {final_r:.6} (error {final_err:.2e}), runtime {elapsed:.2?}",
            times.len()
        ),
    )
}

// 3
fn energy_monotonicity() -> Outcome {
    const INCREASE: f64 = 1e-10;
    const RATE: f64 = 5e-2;
    let mut worst = (0.0f64, "");
    let mut violations = Vec::new();
    for (&name, out) in default_runs() {
        let verdict = check_energy_series(&out.reports, INCREASE);
        if !verdict.monotone {
            violations.push(name);
        }
        let e0 = out.reports.first().map_or(1.0, |r| r.energy);
        for r in out.reports.iter().skip(1) {
            if r.energy_change / e0 > worst.0 {
                worst = (r.energy_change / e0, name);
            }
        }
    }
    let mut s = scene("circle");
    s.params.dt = 1e-4;
    s.params.t_end = 0.5;
    let (out, _) = timed_run(&s);
    let rate = check_energy_series(&out.reports, INCREASE).max_rate_discrepancy;
    outcome(
        violations.is_empty() && rate <= RATE,
        format!(
            "largest relative increase {:.2e} ({}), violations {violations:?}, circle rate discrepancy {rate:.2e} at dt = 1e-4",
            worst.0, worst.1
        ),
    )
}

// 4
fn a_priori_bounds() -> Outcome {
    const SLACK: f64 = 1e-2;
    let mut failures = Vec::new();
    let mut checked = 0;
    for (&name, out) in default_runs() {
        let Some(first) = out.reports.first() else { continue };
        let mu = scene(name).params.mu;
        for r in &out.reports {
            checked += 1;
            if !check_bounds(r, first.energy, mu, SLACK).ok() {
                failures.push((name, r.step));
                break;
            }
        }
    }
    outcome(failures.is_empty(), format!("{checked} reports checked, failures {failures:?}"))
}

fn last_residual(out: &RunOutput) -> f64 {
    out.reports
        .iter()
        .rev()
        .find_map(|r| r.curvature_evolution_residual)
        .expect("a step without reparametrization")
}

// 5
fn curvature_evolution() -> Outcome {
    const FACTOR: f64 = 1.8;
    const FORMS: f64 = 1e-10;
    let mut details = Vec::new();
    let mut pass = true;
    let mut forms: f64 = 0.0;
    // (scene, coarse grid, coarse dt, end time); no reparametrization so that
    // every step carries a residual
    for (name, n, dt, t_end) in [("circle", 32, 5e-4, 0.05), ("perturbed_triod", 32, 1e-4, 0.02)] {
        let residual = |level: u32| {
            let mut s = scene(name);
            s.params.grid_n = n << level;
            s.params.dt = dt / f64::from(1 << level);
            s.params.t_end = t_end;
            s.params.reparam_cadence = usize::MAX;
            let (out, _) = timed_run(&s);
            assert_eq!(out.termination, Termination::ReachedEnd, "{name}");
            let forms = out.reports.iter().map(|r| r.kt_form_discrepancy).fold(0.0, f64::max);
            (last_residual(&out), forms)
        };
        let (coarse, f0) = residual(0);
        let (fine, f1) = residual(1);
        forms = forms.max(f0).max(f1);
        let factor = coarse / fine;
        pass &= factor >= FACTOR;
        details.push(format!("{name}: {coarse:.3e} -> {fine:.3e} (factor {factor:.2})"));
    }
    pass &= forms <= FORMS;
    outcome(pass, format!("{}, form discrepancy {forms:.2e}", details.join(", ")))
}

// 6
fn junction_residuals() -> Outcome {
    const CURVATURE: f64 = 1e-6;
    const THIRD: f64 = 1e-5;
    let (mut gap, mut k, mut third) = (0.0f64, 0.0f64, 0.0f64);
    let mut steps = 0;
    for out in default_runs().values() {
        for r in out.reports.iter().skip(1) {
            steps += 1;
            gap = gap.max(r.concurrency_gap);
            k = k.max(r.max_boundary_k);
            third = third.max(r.max_third_order);
        }
    }
    outcome(
        gap == 0.0 && k <= CURVATURE && third <= THIRD,
        format!("{steps} accepted steps: concurrency gap {gap:e}, max boundary |k| {k:.2e}, max third-order residual {third:.2e}"),
    )
}

// 7
fn det_m_bound() -> Outcome {
    const SLACK: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let tangents = [(); 3].map(|_| Vec2::from_angle(rng.gen_range(0.0..2.0 * PI)));
        let rho = rho_hat(&junction_angles(&tangents));
        worst = worst.min(det_m(&tangents) - (1.0 - (1.0 - rho * rho).sqrt()));
    }
    let mut logged = 0;
    for out in default_runs().values() {
        for j in out.reports.iter().flat_map(|r| &r.junctions) {
            logged += 1;
            worst = worst.min(j.det_m - (1.0 - (1.0 - j.rho_hat * j.rho_hat).sqrt()));
        }
    }
    let tangents = [0, 1, 2].map(|i| Vec2::from_angle(0.3 + 2.0 * PI * f64::from(i) / 3.0));
    let normals = tangents.map(|t| t.perp());
    let a = 1.3;
    let solve = junction_tangential_solve(&tangents, &normals, &[a; 3], 1e-6).unwrap();
    let sym_det = (solve.det_m - 9.0 / 8.0).abs();
    let sym_t = solve.t.iter().map(|t| (t - a / 3f64.sqrt()).abs()).fold(0.0, f64::max);
    outcome(
        worst >= -SLACK && sym_det <= 1e-12 && sym_t <= 1e-12,
        format!("min slack {worst:.3e} over 10000 random and {logged} logged junctions, symmetric case det error {sym_det:.1e}, T error {sym_t:.1e}"),
    )
}

// 8
fn degenerate_theta() -> Outcome {
    const ENERGY: f64 = 1e-4;
    let mut worst: f64 = 0.0;
    for eps in [0.2, 0.1, 0.05] {
        let s = builtin("theta_eps", &BuiltinArgs { eps, ..Default::default() }).unwrap();
        let mu = s.params.mu;
        let state = build_state(s.topology.clone(), &s.curves, 128).unwrap();
        let energy = GeometryFields::compute(&state, mu).energy();
        let exact = 2.0 * eps + mu * (2.0 * eps + 2f64.sqrt() * (1.0 - eps.cos()).sqrt());
        worst = worst.max((energy - exact).abs() / exact);
    }
    let out = &default_runs()["theta_eps"];
    let degenerated = matches!(&out.termination, Termination::Singularity { verdict } if verdict.angle_degeneracy);
    let last = out.reports.last().unwrap();
    let rho = last.junctions.iter().map(|j| j.rho_hat).fold(f64::INFINITY, f64::min);
    outcome(
        worst <= ENERGY && degenerated,
        format!(
            "initial energy error {worst:.2e}, termination {:?} at t = {:.3e} with min rho {rho:.4}",
            out.termination, last.time
        ),
    )
}

// 9
fn symmetry() -> Outcome {
    const SYMMETRY: f64 = 1e-10;
    let mut s = scene("symmetric_triod");
    s.params.t_end = 100.0 * s.params.dt;
    let (out, _) = timed_run(&s);
    let state = out.final_state.as_ref().unwrap();
    let steps = out.reports.len() - 1;
    let mut worst: f64 = 0.0;
    for c in 0..3 {
        let rotated: Vec<Vec2> = state.curve_points(c).iter().map(|p| p.rotate(2.0 * PI / 3.0)).collect();
        let next = state.curve_points((c + 1) % 3);
        for (p, q) in rotated.iter().zip(&next) {
            worst = worst.max(p.distance(*q));
        }
    }
    outcome(steps == 100 && worst <= SYMMETRY, format!("asymmetry {worst:.2e} after {steps} steps"))
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sq() > 0.0 { ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * t)
}

/// Hausdorff distance between two polylines, using vertices against segments.
fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let one_way = |from: &[Vec2], to: &[Vec2]| {
        from.iter()
            .map(|&p| to.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

// 10
fn tangential_robustness() -> Outcome {
    const HAUSDORFF: f64 = 5e-2;
    let evolve = |cadence: usize| {
        let mut s = scene("perturbed_triod");
        s.params.grid_n = 128;
        s.params.dt = 1e-4;
        s.params.t_end = 0.1;
        s.params.reparam_cadence = cadence;
        let (out, _) = timed_run(&s);
        assert_eq!(out.termination, Termination::ReachedEnd);
        out.final_state.unwrap()
    };
    let (a, b) = (evolve(1), evolve(50));
    let worst = (0..3).map(|c| hausdorff(&a.curve_points(c), &b.curve_points(c))).fold(0.0, f64::max);
    outcome(worst <= HAUSDORFF, format!("Hausdorff distance {worst:.3e} at t = {}", a.time))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("stationary Steiner triod", stationary_steiner),
        ("circle equilibrium", circle_equilibrium),
        ("energy monotonicity", energy_monotonicity),
        ("a priori bounds", a_priori_bounds),
        ("curvature evolution consistency", curvature_evolution),
        ("junction residual suite", junction_residuals),
        ("det M bound", det_m_bound),
        ("degenerate Theta", degenerate_theta),
        ("symmetry preservation", symmetry),
        ("tangential-choice robustness", tangential_robustness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1?}]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
