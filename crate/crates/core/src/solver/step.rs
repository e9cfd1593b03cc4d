use crate::admissibility::{det_m, third_order_vector, EndFrame};
use crate::error::{Error, Result};
use crate::geometry::GeometryFields;
use crate::model::{NetworkState, Tolerances};
use crate::monitors::MonitorReport;
use crate::vec2::Vec2;

use super::assemble::{assemble_with_frames, end_frames, FrozenEnd};
use super::{Scheme, StepConfig};

/// An accepted step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: NetworkState,
    pub report: MonitorReport,
    /// Step size actually taken.
    pub dt: f64,
    pub halvings: usize,
}

/// Stop re-freezing once the frozen frames move less than this.
const REFREEZE_TOL: f64 = 1e-14;

/// Solves one linearly-implicit step of size `dt` (no acceptance checks).
/// The third-order rows are re-frozen at the latest iterate until the
/// frames settle.
pub(crate) fn implicit_solve(
    state: &NetworkState,
    fields: &GeometryFields,
    mu: f64,
    dt: f64,
    max_refreeze: usize,
) -> Result<NetworkState> {
    let topo = state.topology();
    let mut frames = end_frames(state, state.nodes());
    let mut nodes: Vec<Vec2> = state.nodes().to_vec();
    for _ in 0..=max_refreeze {
        let system = assemble_with_frames(state, fields, &frames, mu, dt)?;
        let delta = system.solve()?;
        nodes = state
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| *p + Vec2::new(delta[2 * i], delta[2 * i + 1]))
            .collect();
        for ep in &topo.endpoints {
            let idx = state.curve_node_indices(ep.curve)[state.end_index(ep.end)];
            nodes[idx] = ep.position;
        }
        if topo.junctions.is_empty() {
            break;
        }
        let next = end_frames(state, &nodes);
        let change = frame_change(&frames, &next);
        frames = next;
        if change < REFREEZE_TOL {
            break;
        }
    }
    let mut next = state.with_nodes(nodes);
    next.time = state.time + dt;
    Ok(next)
}

fn frame_change(a: &[[FrozenEnd; 3]], b: &[[FrozenEnd; 3]]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x.normal - y.normal).norm() + (x.speed - y.speed).abs() / x.speed)
        .fold(0.0, f64::max)
}

/// Imposes the boundary conditions without moving interior nodes (a step
/// of zero length).
pub fn project_boundary(state: &NetworkState, mu: f64, tol: &Tolerances) -> Result<NetworkState> {
    if state.topology().junctions.is_empty() && state.topology().endpoints.is_empty() {
        return Ok(state.clone());
    }
    let fields = GeometryFields::compute(state, mu);
    check_junctions(state, &fields, tol)?;
    let mut next = implicit_solve(state, &fields, mu, 0.0, 16)?;
    next.time = state.time;
    Ok(next)
}

/// Fails with `DegenerateJunction` when some junction's `det M` is below
/// the threshold.
pub(crate) fn check_junctions(state: &NetworkState, fields: &GeometryFields, tol: &Tolerances) -> Result<()> {
    for (j, junction) in state.topology().junctions.iter().enumerate() {
        let tangents = junction.ends.map(|ce| EndFrame::of(&fields.curves[ce.curve], state, ce).tangent);
        let d = det_m(&tangents);
        if !(d >= tol.det_m) {
            return Err(Error::DegenerateJunction { junction: j, det_m: d });
        }
    }
    Ok(())
}

/// Fails with `RegularityLoss` when some curve's slowest node drops below
/// `min_speed_ratio` times its length.
pub(crate) fn check_regularity(fields: &GeometryFields, tol: &Tolerances) -> Result<()> {
    for (c, f) in fields.curves.iter().enumerate() {
        let min = f.speed.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min >= tol.min_speed_ratio * f.length()) || f.speed.iter().any(|s| !s.is_finite()) {
            return Err(Error::RegularityLoss { curve: c, min_speed: min });
        }
    }
    Ok(())
}

/// Largest nonlinear third-order residual over all junctions.
pub(crate) fn third_order_residual(state: &NetworkState, fields: &GeometryFields, mu: f64) -> f64 {
    state
        .topology()
        .junctions
        .iter()
        .map(|junction| {
            let frames = junction.ends.map(|ce| EndFrame::of(&fields.curves[ce.curve], state, ce));
            third_order_vector(&frames, mu).norm()
        })
        .fold(0.0, f64::max)
}

/// Advances by one accepted step. On an energy increase above
/// `energy_increase · E`, or a third-order residual above tolerance, the
/// step is retried with half the step size, up to `max_halvings` times.
pub fn step(state: &NetworkState, mu: f64, config: &StepConfig) -> Result<StepOutcome> {
    let tol = &config.tolerances;
    let fields = GeometryFields::compute(state, mu);
    check_junctions(state, &fields, tol)?;
    let e_old = fields.energy();
    let mut dt = config.dt;
    let mut halvings = 0;
    loop {
        let attempt = match config.scheme {
            Scheme::Implicit => implicit_solve(state, &fields, mu, dt, config.max_refreeze),
            Scheme::ExplicitRk4 => super::explicit::step_explicit_with(state, mu, dt, tol, true),
        };
        let reason = match attempt {
            Ok(next) => {
                let next_fields = GeometryFields::compute(&next, mu);
                check_regularity(&next_fields, tol)?;
                let e_new = next_fields.energy();
                let third = third_order_residual(&next, &next_fields, mu);
                if !e_new.is_finite() || e_new - e_old > tol.energy_increase * e_old {
                    format!("energy increased from {e_old:e} to {e_new:e}")
                } else if !(third <= tol.step_third_order) {
                    format!("third-order residual {third:e}")
                } else {
                    let report = MonitorReport::evaluate(0, Some(state), &next, mu, dt, &config.thresholds);
                    return Ok(StepOutcome {
                        state: next,
                        report,
                        dt,
                        halvings,
                    });
                }
            }
            Err(e @ (Error::LinearSolve(_) | Error::Unstable(_))) => e.to_string(),
            Err(e) => return Err(e),
        };
        if halvings >= config.max_halvings {
            return Err(Error::StepFailure {
                time: state.time,
                halvings,
                reason,
            });
        }
        log::debug!("t = {}: halving dt = {dt:e} ({reason})", state.time);
        dt *= 0.5;
        halvings += 1;
    }
}
