use serde::{Deserialize, Serialize};

use crate::admissibility::{check_geometric, make_admissible, reparametrize_constant_speed, AdmissibilityReport};
use crate::error::{Error, Result};
use crate::geometry::total_length;
use crate::model::{build_state, NetworkState};
use crate::monitors::{singularity_verdict, MonitorReport, SingularityVerdict, Thresholds};
use crate::scene::{AdmissibilityMode, Scene};

use super::step::step;
use super::{Scheme, StepConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub max_halvings: usize,
    /// Keep a frame every this many steps (plus the first and last).
    pub frames_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            scheme: Scheme::Implicit,
            max_halvings: 8,
            frames_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    StepFailure,
    DegenerateJunction,
    RegularityLoss,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    Inadmissible { reasons: Vec<String> },
    Singularity { verdict: SingularityVerdict },
    Failure { failure: FailureKind, message: String },
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub admissibility: AdmissibilityReport,
    pub thresholds: Thresholds,
    /// One report per accepted state, starting with the initial state.
    pub reports: Vec<MonitorReport>,
    /// `(step, state)` pairs kept at the frame cadence.
    pub frames: Vec<(usize, NetworkState)>,
    pub termination: Termination,
    pub final_state: Option<NetworkState>,
}

/// Builds the scene, checks and repairs admissibility, then steps to
/// `t_end` or until a singularity verdict or solver failure. Constant-speed
/// reparametrization is applied every `reparam_cadence` accepted steps.
pub fn run(scene: &Scene, options: &RunOptions) -> Result<RunOutput> {
    let params = &scene.params;
    params.validate()?;
    let mu = params.mu;
    let tol = &params.tolerances;
    let state = build_state(scene.topology.clone(), &scene.curves, params.grid_n)?;
    let admissibility = check_geometric(&state, mu, tol);
    let thresholds = Thresholds {
        min_length: params.min_length_threshold.unwrap_or(1e-3 * total_length(&state)),
        min_sin_angle: params.min_sin_angle_threshold,
    };
    let mut out = RunOutput {
        admissibility,
        thresholds,
        reports: Vec::new(),
        frames: Vec::new(),
        termination: Termination::ReachedEnd,
        final_state: None,
    };
    let mut state = match scene.admissibility {
        AdmissibilityMode::Enforce => {
            if !out.admissibility.is_admissible() {
                out.termination = Termination::Inadmissible {
                    reasons: out.admissibility.reasons.clone(),
                };
                return Ok(out);
            }
            make_admissible(&state, mu, tol)?
        }
        AdmissibilityMode::Report => {
            if !out.admissibility.is_admissible() {
                log::warn!("continuing with an inadmissible network: {:?}", out.admissibility.reasons);
            }
            state
        }
    };

    let initial = MonitorReport::evaluate(0, None, &state, mu, 0.0, &thresholds);
    let verdict = singularity_verdict(&initial, &thresholds);
    out.reports.push(initial);
    out.frames.push((0, state.clone()));
    if verdict.any() {
        out.termination = Termination::Singularity { verdict };
        out.final_state = Some(state);
        return Ok(out);
    }

    let mut config = StepConfig::new(params.dt, tol.clone(), thresholds);
    config.scheme = options.scheme;
    config.max_halvings = options.max_halvings;
    let frames_every = options.frames_every.max(1);
    let t_end = params.t_end;
    let mut steps = 0usize;
    let mut dt = params.dt;
    while state.time < t_end * (1.0 - 1e-12) {
        config.dt = dt.min(t_end - state.time);
        let outcome = match step(&state, mu, &config) {
            Ok(o) => o,
            Err(e) => {
                log::info!("run stopped at t = {}: {e}", state.time);
                let failure = match e {
                    Error::StepFailure { .. } => FailureKind::StepFailure,
                    Error::DegenerateJunction { .. } => FailureKind::DegenerateJunction,
                    Error::RegularityLoss { .. } => FailureKind::RegularityLoss,
                    _ => FailureKind::Other,
                };
                out.termination = Termination::Failure {
                    failure,
                    message: e.to_string(),
                };
                break;
            }
        };
        steps += 1;
        if outcome.halvings > 0 {
            // halved steps are kept for the rest of the run
            dt = outcome.dt;
        }
        state = outcome.state;
        let mut report = outcome.report;
        report.step = steps;
        let verdict = singularity_verdict(&report, &thresholds);
        out.reports.push(report);
        let done = verdict.any() || state.time >= t_end * (1.0 - 1e-12);
        if steps.is_multiple_of(frames_every) || done {
            out.frames.push((steps, state.clone()));
        }
        if verdict.any() {
            out.termination = Termination::Singularity { verdict };
            break;
        }
        if steps.is_multiple_of(params.reparam_cadence) {
            state = reparametrize_constant_speed(&state);
        }
    }
    if out.frames.last().map(|(s, _)| *s) != Some(steps) {
        out.frames.push((steps, state.clone()));
    }
    out.final_state = Some(state);
    Ok(out)
}
