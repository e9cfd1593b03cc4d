use crate::error::{Error, Result};
use crate::geometry::GeometryFields;
use crate::model::{NetworkState, Tolerances};
use crate::vec2::Vec2;

use super::step::project_boundary;

/// Ceiling constants `C` in `dt ≤ C (min |γ_x| / n)^4`, for finite-difference
/// and spectral (closed) curves. Derived from the largest eigenvalue of the
/// fourth-derivative operator and the real-axis stability interval of RK4,
/// with a safety margin for the one-sided boundary stencils.
const CEILING_FD: f64 = 0.02;
const CEILING_SPECTRAL: f64 = 0.01;

/// Largest step accepted by [`step_explicit`].
pub fn explicit_stability_limit(state: &NetworkState) -> f64 {
    let n = state.grid_n() as f64;
    (0..state.curve_count())
        .map(|c| {
            let d1 = state.stencils(c).differentiate(1, &state.curve_points(c));
            let h = d1.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min) / n;
            let k = if state.topology().is_closed(c) {
                CEILING_SPECTRAL
            } else {
                CEILING_FD
            };
            k * h.powi(4)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Velocity `-A ν - T τ` on the node pool; shared junction nodes take the
/// mean over their incident curves.
fn pool_velocity(state: &NetworkState, mu: f64) -> Vec<Vec2> {
    let fields = GeometryFields::compute(state, mu);
    let mut v = vec![Vec2::ZERO; state.nodes().len()];
    let mut count = vec![0u32; v.len()];
    for (c, f) in fields.curves.iter().enumerate() {
        let idx = state.curve_node_indices(c);
        for (j, vel) in f.velocity.iter().enumerate() {
            v[idx[j]] += *vel;
            count[idx[j]] += 1;
        }
    }
    for (x, k) in v.iter_mut().zip(count) {
        *x = *x / k as f64;
    }
    v
}

fn axpy(state: &NetworkState, base: &[Vec2], dir: &[Vec2], h: f64) -> NetworkState {
    state.with_nodes(base.iter().zip(dir).map(|(p, d)| *p + *d * h).collect())
}

/// Smallest distance between consecutive samples of any curve.
fn min_spacing(state: &NetworkState) -> f64 {
    (0..state.curve_count())
        .flat_map(|c| {
            let pts = state.curve_points(c);
            pts.windows(2).map(|w| w[0].distance(w[1])).collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn step_explicit_with(
    state: &NetworkState,
    mu: f64,
    dt: f64,
    tol: &Tolerances,
    check_ceiling: bool,
) -> Result<NetworkState> {
    if check_ceiling {
        let limit = explicit_stability_limit(state);
        if dt > limit {
            return Err(Error::Unstable(format!("dt = {dt:e} exceeds the stability ceiling {limit:e}")));
        }
    }
    let base = state.nodes().to_vec();
    let spacing = min_spacing(state);
    let guard = |s: &NetworkState, v: &[Vec2]| -> Result<()> {
        let vmax = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if !vmax.is_finite() || vmax * dt > 0.25 * spacing || s.nodes().iter().any(|p| !p.is_finite()) {
            return Err(Error::Unstable(format!("velocity {vmax:e} moves nodes by more than a quarter spacing")));
        }
        Ok(())
    };
    let project = |s: NetworkState| project_boundary(&s, mu, tol);

    let k1 = pool_velocity(state, mu);
    guard(state, &k1)?;
    let s1 = project(axpy(state, &base, &k1, 0.5 * dt))?;
    let k2 = pool_velocity(&s1, mu);
    guard(&s1, &k2)?;
    let s2 = project(axpy(state, &base, &k2, 0.5 * dt))?;
    let k3 = pool_velocity(&s2, mu);
    guard(&s2, &k3)?;
    let s3 = project(axpy(state, &base, &k3, dt))?;
    let k4 = pool_velocity(&s3, mu);
    guard(&s3, &k4)?;
    let dir: Vec<Vec2> = (0..base.len())
        .map(|i| (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) / 6.0)
        .collect();
    let mut next = project(axpy(state, &base, &dir, dt))?;
    next.time = state.time + dt;
    Ok(next)
}

/// One classical Runge–Kutta step of `γ_t = -A ν - T τ`, with the boundary
/// conditions re-imposed after every stage. Rejects `dt` above
/// [`explicit_stability_limit`].
pub fn step_explicit(state: &NetworkState, mu: f64, dt: f64) -> Result<NetworkState> {
    step_explicit_with(state, mu, dt, &Tolerances::default(), true)
}

/// As [`step_explicit`] without the ceiling check; blow-up is still
/// detected.
pub fn step_explicit_unchecked(state: &NetworkState, mu: f64, dt: f64) -> Result<NetworkState> {
    step_explicit_with(state, mu, dt, &Tolerances::default(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_state;
    use crate::monitors::Thresholds;
    use crate::scene::{builtin, BuiltinArgs};
    use crate::solver::{step, StepConfig};

    fn state(name: &str, args: &BuiltinArgs, n: usize) -> NetworkState {
        let s = builtin(name, args).unwrap();
        build_state(s.topology, &s.curves, n).unwrap()
    }

    #[test]
    fn fixed_segment_is_unchanged() {
        let s = state("segment", &BuiltinArgs::default(), 16);
        let dt = 0.5 * explicit_stability_limit(&s);
        let out = step_explicit(&s, 1.0, dt).unwrap();
        let moved = s.nodes().iter().zip(out.nodes()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max);
        assert!(moved < 1e-12);
    }

    #[test]
    fn agrees_with_the_implicit_step_on_a_circle() {
        let mu = 4.0;
        let s0 = state("circle", &BuiltinArgs { radius: 1.0, ..Default::default() }, 32);
        let dt = 0.5 * explicit_stability_limit(&s0);
        let cfg = StepConfig::new(dt, Tolerances::default(), Thresholds { min_length: 1e-6, min_sin_angle: 1e-2 });
        let (mut a, mut b) = (s0.clone(), s0.clone());
        for _ in 0..10 {
            a = step_explicit(&a, mu, dt).unwrap();
            b = step(&b, mu, &cfg).unwrap().state;
        }
        let moved = s0.nodes().iter().zip(a.nodes()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max);
        let gap = a.nodes().iter().zip(b.nodes()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max);
        // both move by 10 dt |v| ~ 30 dt; their gap is second order in dt
        assert!(moved > 10.0 * dt);
        assert!(gap < 1e-2 * moved, "gap {gap:e}, moved {moved:e}");
    }

    #[test]
    fn step_above_the_ceiling_is_rejected() {
        let s = state("perturbed_triod", &BuiltinArgs::default(), 32);
        let dt = 2.0 * explicit_stability_limit(&s);
        assert!(matches!(step_explicit(&s, 1.0, dt), Err(Error::Unstable(_))));
    }
}
