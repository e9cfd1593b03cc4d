//! Per-step diagnostics: energy, lengths, junction angles and residuals,
//! consistency of the discrete evolution with the continuum evolution
//! laws, and the singularity verdicts.
//!
//! The continuum statements concern inferior limits as `t` approaches the
//! maximal time; a finite run can only threshold instantaneous values, so
//! the verdicts here are threshold crossings.

use serde::{Deserialize, Serialize};

use crate::admissibility::{det_m, junction_angles, junction_tangential_solve, rho_hat, third_order_vector, EndFrame};
use crate::error::{Error, Result};
use crate::geometry::{CurveFields, GeometryFields};
use crate::model::NetworkState;
use crate::vec2::Vec2;

/// Singularity thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_length: f64,
    pub min_sin_angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionMonitor {
    pub angles: [f64; 3],
    pub rho_hat: f64,
    pub det_m: f64,
    pub max_abs_k: f64,
    pub third_order_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub energy: f64,
    /// `E(next) - E(prev)` with both states on the same parametrization.
    pub energy_change: f64,
    /// `∫ A^2 ds` at the midpoint of the step (at the state itself for the
    /// initial report).
    pub dissipation: f64,
    pub lengths: Vec<f64>,
    pub total_length: f64,
    pub k_l2: f64,
    pub ks_l2: f64,
    pub kss_l2: f64,
    pub junctions: Vec<JunctionMonitor>,
    pub concurrency_gap: f64,
    pub max_boundary_k: f64,
    pub max_third_order: f64,
    pub max_boundary_second_derivative: f64,
    /// Largest disagreement between the two forms of `∂_t k`'s right side.
    pub kt_form_discrepancy: f64,
    pub curvature_evolution_residual: Option<f64>,
    pub ds_residuals: Option<Vec<f64>>,
    pub kinematics_residual: Option<f64>,
    pub length_collapse: bool,
    pub angle_degeneracy: bool,
}

impl MonitorReport {
    /// Report for `next`, reached from `prev` (if any) in one step of `dt`.
    pub fn evaluate(
        step: usize,
        prev: Option<&NetworkState>,
        next: &NetworkState,
        mu: f64,
        dt: f64,
        thresholds: &Thresholds,
    ) -> MonitorReport {
        let fields = GeometryFields::compute(next, mu);
        let energy = fields.energy();
        let lengths: Vec<f64> = fields.curves.iter().map(CurveFields::length).collect();
        let total_length = lengths.iter().sum();
        let sum_sq = |f: &dyn Fn(&CurveFields) -> &Vec<f64>| -> f64 {
            fields.curves.iter().map(|c| c.l2_sq(f(c))).sum::<f64>()
        };
        let k_l2 = sum_sq(&|c| &c.k).sqrt();
        let ks_l2 = sum_sq(&|c| &c.k_s).sqrt();
        let kss_l2 = sum_sq(&|c| &c.k_ss).sqrt();
        let kt_form_discrepancy = fields
            .curves
            .iter()
            .map(|c| c.kt_rhs(mu).discrepancy())
            .fold(0.0, f64::max);

        let topo = next.topology();
        let mut junctions = Vec::new();
        let mut concurrency_gap: f64 = 0.0;
        let mut max_boundary_k: f64 = 0.0;
        let mut max_third_order: f64 = 0.0;
        let mut max_d2: f64 = 0.0;
        for junction in &topo.junctions {
            let frames = junction.ends.map(|ce| EndFrame::of(&fields.curves[ce.curve], next, ce));
            let p = next.end_point(junction.ends[0]);
            for ce in junction.ends {
                concurrency_gap = concurrency_gap.max(next.end_point(ce).distance(p));
            }
            let tangents = frames.map(|f| f.tangent);
            let angles = junction_angles(&tangents);
            let max_abs_k = frames.iter().map(|f| f.k.abs()).fold(0.0, f64::max);
            let third = third_order_vector(&frames, mu).norm();
            max_boundary_k = max_boundary_k.max(max_abs_k);
            max_third_order = max_third_order.max(third);
            max_d2 = frames.iter().map(|f| f.second_derivative).fold(max_d2, f64::max);
            junctions.push(JunctionMonitor {
                angles,
                rho_hat: rho_hat(&angles),
                det_m: det_m(&tangents),
                max_abs_k,
                third_order_residual: third,
            });
        }
        for ep in &topo.endpoints {
            let f = EndFrame::of(&fields.curves[ep.curve], next, ep.curve_end());
            max_boundary_k = max_boundary_k.max(f.k.abs());
            max_d2 = max_d2.max(f.second_derivative);
        }

        let same_grid = prev.filter(|p| same_parametrization(p, next));
        let (energy_change, dissipation, cer, ds, kin) = match same_grid {
            Some(p) => {
                let mid = midpoint(p, next);
                let mid_fields = GeometryFields::compute(&mid, mu);
                let prev_fields = GeometryFields::compute(p, mu);
                (
                    energy - prev_fields.energy(),
                    dissipation(&mid_fields),
                    Some(curvature_residual(&prev_fields, &fields, &mid_fields, next, dt)),
                    Some(ds_residual(&prev_fields, &fields, &mid_fields, next, dt)),
                    kinematics(p, next, &mid, &mid_fields, dt),
                )
            }
            None => (0.0, dissipation(&fields), None, None, None),
        };

        let mut report = MonitorReport {
            step,
            time: next.time,
            dt,
            energy,
            energy_change,
            dissipation,
            lengths,
            total_length,
            k_l2,
            ks_l2,
            kss_l2,
            junctions,
            concurrency_gap,
            max_boundary_k,
            max_third_order,
            max_boundary_second_derivative: max_d2,
            kt_form_discrepancy,
            curvature_evolution_residual: cer,
            ds_residuals: ds,
            kinematics_residual: kin,
            length_collapse: false,
            angle_degeneracy: false,
        };
        let v = singularity_verdict(&report, thresholds);
        report.length_collapse = v.length_collapse;
        report.angle_degeneracy = v.angle_degeneracy;
        report
    }

    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = [
            "step",
            "time",
            "dt",
            "energy",
            "energy_change",
            "dissipation",
            "total_length",
            "k_l2",
            "ks_l2",
            "kss_l2",
            "concurrency_gap",
            "max_boundary_k",
            "max_third_order",
            "max_boundary_second_derivative",
            "kt_form_discrepancy",
            "curvature_evolution_residual",
            "kinematics_residual",
            "length_collapse",
            "angle_degeneracy",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for c in 0..self.lengths.len() {
            cols.push(format!("length_{c}"));
        }
        for c in 0..self.lengths.len() {
            cols.push(format!("ds_residual_{c}"));
        }
        for j in 0..self.junctions.len() {
            for name in ["angle_12", "angle_23", "angle_31", "rho_hat", "det_m", "max_abs_k", "third_order"] {
                cols.push(format!("junction_{j}_{name}"));
            }
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut cols = vec![
            self.step.to_string(),
            format!("{:e}", self.time),
            format!("{:e}", self.dt),
            format!("{:e}", self.energy),
            format!("{:e}", self.energy_change),
            format!("{:e}", self.dissipation),
            format!("{:e}", self.total_length),
            format!("{:e}", self.k_l2),
            format!("{:e}", self.ks_l2),
            format!("{:e}", self.kss_l2),
            format!("{:e}", self.concurrency_gap),
            format!("{:e}", self.max_boundary_k),
            format!("{:e}", self.max_third_order),
            format!("{:e}", self.max_boundary_second_derivative),
            format!("{:e}", self.kt_form_discrepancy),
            opt(self.curvature_evolution_residual),
            opt(self.kinematics_residual),
            (self.length_collapse as u8).to_string(),
            (self.angle_degeneracy as u8).to_string(),
        ];
        cols.extend(self.lengths.iter().map(|l| format!("{l:e}")));
        for c in 0..self.lengths.len() {
            cols.push(opt(self.ds_residuals.as_ref().map(|d| d[c])));
        }
        for j in &self.junctions {
            cols.extend(j.angles.iter().map(|a| format!("{a:e}")));
            cols.push(format!("{:e}", j.rho_hat));
            cols.push(format!("{:e}", j.det_m));
            cols.push(format!("{:e}", j.max_abs_k));
            cols.push(format!("{:e}", j.third_order_residual));
        }
        cols.join(",")
    }
}

fn same_parametrization(a: &NetworkState, b: &NetworkState) -> bool {
    a.param_epoch == b.param_epoch && a.grid_n() == b.grid_n() && a.nodes().len() == b.nodes().len()
}

fn midpoint(a: &NetworkState, b: &NetworkState) -> NetworkState {
    let nodes = a.nodes().iter().zip(b.nodes()).map(|(p, q)| p.lerp(*q, 0.5)).collect();
    let mut mid = b.with_nodes(nodes);
    mid.time = 0.5 * (a.time + b.time);
    mid
}

fn dissipation(fields: &GeometryFields) -> f64 {
    fields.curves.iter().map(|c| c.l2_sq(&c.a)).sum()
}

/// Fraction of an open curve's nodes excluded at each end by the
/// curvature-evolution residual.
const INTERIOR_MARGIN: f64 = 0.125;

fn interior_nodes(count: usize, periodic: bool) -> std::ops::Range<usize> {
    if periodic {
        return 0..count;
    }
    let skip = ((count - 1) as f64 * INTERIOR_MARGIN).ceil() as usize;
    skip..count - skip
}

fn curvature_residual(
    prev: &GeometryFields,
    next: &GeometryFields,
    mid: &GeometryFields,
    state: &NetworkState,
    dt: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..next.curves.len() {
        let rhs = mid.curves[c].kt_rhs(mid.mu).compact;
        for j in interior_nodes(rhs.len(), state.topology().is_closed(c)) {
            let fd = (next.curves[c].k[j] - prev.curves[c].k[j]) / dt;
            worst = worst.max((fd - rhs[j]).abs());
        }
    }
    worst
}

/// Relative discrepancy per curve between the observed length rate and
/// `∫ (k A - T_s) ds` at the midpoint.
fn ds_residual(
    prev: &GeometryFields,
    next: &GeometryFields,
    mid: &GeometryFields,
    state: &NetworkState,
    dt: f64,
) -> Vec<f64> {
    (0..next.curves.len())
        .map(|c| {
            let f = &mid.curves[c];
            let observed = (next.curves[c].length() - prev.curves[c].length()) / dt;
            let ka: f64 = f.k.iter().zip(&f.a).zip(&f.ds).map(|((k, a), w)| k * a * w).sum();
            // ∫ T_s ds telescopes to the end values (zero for closed curves)
            let t_jump = if state.topology().is_closed(c) { 0.0 } else { f.t[f.t.len() - 1] - f.t[0] };
            let predicted = ka - t_jump;
            // rates below RATE_FLOOR of the length per unit time count as zero
            relative(observed, predicted, RATE_FLOOR * f.length())
        })
        .collect()
}

/// Relative size below which an observed rate is indistinguishable from
/// roundoff in a difference quotient.
pub const RATE_FLOOR: f64 = 1e-6;

fn relative(observed: f64, predicted: f64, floor: f64) -> f64 {
    let scale = observed.abs().max(predicted.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (observed - predicted).abs() / scale
    }
}

fn kinematics(prev: &NetworkState, next: &NetworkState, mid: &NetworkState, fields: &GeometryFields, dt: f64) -> Option<f64> {
    let topo = next.topology();
    if topo.junctions.is_empty() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (j, junction) in topo.junctions.iter().enumerate() {
        let observed = (next.junction_point(j) - prev.junction_point(j)) / dt;
        let frames = junction.ends.map(|ce| EndFrame::of(&fields.curves[ce.curve], mid, ce));
        for f in &frames {
            let predicted = -(f.normal * f.a + f.tangent * f.t);
            worst = worst.max((observed - predicted).norm());
        }
        let tangents = frames.map(|f| f.tangent);
        let normals = frames.map(|f| f.normal);
        let a = frames.map(|f| f.a);
        if let Ok(sol) = junction_tangential_solve(&tangents, &normals, &a, 0.0) {
            for (i, f) in frames.iter().enumerate() {
                let predicted: Vec2 = -(f.normal * f.a + f.tangent * sol.t[i]);
                worst = worst.max((observed - predicted).norm());
            }
        }
    }
    Some(worst)
}

/// `max |(k_next - k_prev)/dt - rhs(midpoint)|` over interior nodes.
pub fn curvature_evolution_residual(prev: &NetworkState, next: &NetworkState, mu: f64, dt: f64) -> Result<f64> {
    if !same_parametrization(prev, next) {
        return Err(Error::GridMismatch);
    }
    let mid = midpoint(prev, next);
    Ok(curvature_residual(
        &GeometryFields::compute(prev, mu),
        &GeometryFields::compute(next, mu),
        &GeometryFields::compute(&mid, mu),
        next,
        dt,
    ))
}

/// Relative per-curve discrepancy of the length evolution law.
pub fn ds_evolution_residual(prev: &NetworkState, next: &NetworkState, mu: f64, dt: f64) -> Result<Vec<f64>> {
    if !same_parametrization(prev, next) {
        return Err(Error::GridMismatch);
    }
    let mid = midpoint(prev, next);
    Ok(ds_residual(
        &GeometryFields::compute(prev, mu),
        &GeometryFields::compute(next, mu),
        &GeometryFields::compute(&mid, mu),
        next,
        dt,
    ))
}

/// Largest discrepancy between the observed junction velocity and the
/// velocity predicted by each incident curve (directly and through the
/// tangential solve). `Ok(0.0)` for networks without junctions.
pub fn junction_kinematics_check(prev: &NetworkState, next: &NetworkState, mu: f64, dt: f64) -> Result<f64> {
    if !same_parametrization(prev, next) {
        return Err(Error::GridMismatch);
    }
    let mid = midpoint(prev, next);
    let fields = GeometryFields::compute(&mid, mu);
    Ok(kinematics(prev, next, &mid, &fields, dt).unwrap_or(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyVerdict {
    pub monotone: bool,
    /// Index (into the series) of the first report whose step increased
    /// the energy beyond tolerance.
    pub first_violation: Option<usize>,
    /// Largest relative gap between `-ΔE/Δt` and the step's `∫ A^2 ds`.
    pub max_rate_discrepancy: f64,
}

/// Checks monotone decay (`energy_change ≤ tol · E(0)` per step) and
/// compares the decay rate with the dissipation.
pub fn check_energy_series(series: &[MonitorReport], tol: f64) -> EnergyVerdict {
    let e0 = series.first().map(|r| r.energy).unwrap_or(0.0);
    let mut first_violation = None;
    let mut max_rate: f64 = 0.0;
    for (i, r) in series.iter().enumerate().skip(1) {
        if first_violation.is_none() && r.energy_change > tol * e0 {
            first_violation = Some(i);
        }
        if r.dt > 0.0 {
            max_rate = max_rate.max(relative(-r.energy_change / r.dt, r.dissipation, RATE_FLOOR * e0));
        }
    }
    EnergyVerdict {
        monotone: first_violation.is_none(),
        first_violation,
        max_rate_discrepancy: max_rate,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsVerdict {
    pub curvature_ok: bool,
    pub length_ok: bool,
}

impl BoundsVerdict {
    pub fn ok(&self) -> bool {
        self.curvature_ok && self.length_ok
    }
}

/// `‖k‖² ≤ E0 (1 + tol)` and `Σ ℓ ≤ E0 (1 + tol) / mu`.
pub fn check_bounds(report: &MonitorReport, e0: f64, mu: f64, tol: f64) -> BoundsVerdict {
    BoundsVerdict {
        curvature_ok: report.k_l2 * report.k_l2 <= e0 * (1.0 + tol),
        length_ok: report.total_length <= e0 / mu * (1.0 + tol),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    /// Some curve is shorter than the length threshold.
    pub length_collapse: bool,
    /// Some junction has `ρ̂` below the angle threshold.
    pub angle_degeneracy: bool,
}

impl SingularityVerdict {
    pub fn any(&self) -> bool {
        self.length_collapse || self.angle_degeneracy
    }
}

pub fn singularity_verdict(report: &MonitorReport, thresholds: &Thresholds) -> SingularityVerdict {
    SingularityVerdict {
        length_collapse: report.lengths.iter().any(|&l| l < thresholds.min_length),
        angle_degeneracy: report.junctions.iter().any(|j| j.rho_hat < thresholds.min_sin_angle),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KssGrowth {
    /// `‖k_ss‖²` per report.
    pub values: Vec<f64>,
    /// Forward differences `Δ‖k_ss‖² / Δt`.
    pub rates: Vec<f64>,
    pub running_max: Vec<f64>,
    pub all_finite: bool,
}

pub fn kss_growth_series(series: &[MonitorReport]) -> KssGrowth {
    let values: Vec<f64> = series.iter().map(|r| r.kss_l2 * r.kss_l2).collect();
    let rates = series
        .windows(2)
        .map(|w| (w[1].kss_l2.powi(2) - w[0].kss_l2.powi(2)) / (w[1].time - w[0].time))
        .collect();
    let running_max = values
        .iter()
        .scan(0.0f64, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect();
    KssGrowth {
        all_finite: values.iter().all(|v| v.is_finite()),
        values,
        rates,
        running_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::reparametrize_constant_speed;
    use crate::model::{build_state, NetworkTopology};
    use crate::scene::{builtin, BuiltinArgs, Scene};
    use crate::solver::{run, step, RunOptions, StepConfig};
    use std::sync::Arc;

    const LOOSE: Thresholds = Thresholds {
        min_length: 1e-6,
        min_sin_angle: 1e-2,
    };

    fn scene(name: &str, args: &BuiltinArgs) -> Scene {
        builtin(name, args).unwrap()
    }

    fn state(name: &str, args: &BuiltinArgs, n: usize) -> NetworkState {
        let s = scene(name, args);
        build_state(s.topology, &s.curves, n).unwrap()
    }

    fn advance(s: &NetworkState, mu: f64, dt: f64) -> NetworkState {
        step(s, mu, &StepConfig::new(dt, Default::default(), LOOSE)).unwrap().state
    }

    fn report_with_energy(step: usize, energy: f64, change: f64) -> MonitorReport {
        let s = state("steiner_triod", &BuiltinArgs::default(), 8);
        let mut r = MonitorReport::evaluate(step, None, &s, 1.0, 0.1, &LOOSE);
        r.time = step as f64 * 0.1;
        r.energy = energy;
        r.energy_change = change;
        r.dissipation = -change / 0.1;
        r
    }

    #[test]
    fn energy_series_flags_the_first_increase() {
        let series = vec![
            report_with_energy(0, 3.0, 0.0),
            report_with_energy(1, 2.9, -0.1),
            report_with_energy(2, 2.95, 0.05),
            report_with_energy(3, 3.0, 0.05),
        ];
        let v = check_energy_series(&series, 1e-12);
        assert!(!v.monotone);
        assert_eq!(v.first_violation, Some(2));
        assert!(v.max_rate_discrepancy < 1e-12);
        assert!(check_energy_series(&series[..2], 1e-12).monotone);
    }

    #[test]
    fn steiner_energy_is_constant() {
        let s = state("steiner_triod", &BuiltinArgs::default(), 16);
        let next = advance(&s, 1.0, 1e-3);
        let r = MonitorReport::evaluate(1, Some(&s), &next, 1.0, 1e-3, &LOOSE);
        assert!(r.energy_change.abs() < 1e-13 * r.energy);
        assert!(r.dissipation < 1e-12);
        assert!((r.energy - r.total_length).abs() < 1e-12);
        assert!(!singularity_verdict(&r, &LOOSE).any());
    }

    #[test]
    fn bounds_check_catches_a_forged_length() {
        let mu = 2.0;
        let pts: Vec<Vec2> = (0..=16).map(|j| Vec2::new(j as f64 / 16.0, 0.0)).collect();
        let topo = NetworkTopology::segment(pts[0], pts[16]);
        let s = NetworkState::from_samples(Arc::new(topo), vec![pts]).unwrap();
        let mut r = MonitorReport::evaluate(0, None, &s, mu, 0.0, &LOOSE);
        // a straight segment attains the length bound exactly
        assert!((r.energy - mu).abs() < 1e-12);
        assert!(check_bounds(&r, r.energy, mu, 1e-12).ok());
        let e0 = r.energy;
        r.total_length *= 1.01;
        let v = check_bounds(&r, e0, mu, 1e-3);
        assert!(v.curvature_ok && !v.length_ok);
    }

    #[test]
    fn singularity_flags_follow_the_thresholds() {
        let s = state("theta_eps", &BuiltinArgs::default(), 16);
        let r = MonitorReport::evaluate(0, None, &s, 1.0, 0.0, &LOOSE);
        assert!(!singularity_verdict(&r, &LOOSE).any());
        let strict = Thresholds {
            min_length: 0.2,
            min_sin_angle: 0.5,
        };
        let v = singularity_verdict(&r, &strict);
        assert!(v.length_collapse && v.angle_degeneracy);
        let short_only = Thresholds {
            min_length: 0.05,
            min_sin_angle: 1e-2,
        };
        assert!(!singularity_verdict(&r, &short_only).any());
    }

    #[test]
    fn stationary_steiner_residuals_vanish() {
        let s = state("steiner_triod", &BuiltinArgs::default(), 8);
        let next = advance(&s, 1.0, 1e-3);
        assert!(curvature_evolution_residual(&s, &next, 1.0, 1e-3).unwrap() <= 1e-8);
        assert!(junction_kinematics_check(&s, &next, 1.0, 1e-3).unwrap() <= 1e-8);
        let series = vec![
            MonitorReport::evaluate(0, None, &s, 1.0, 0.0, &LOOSE),
            MonitorReport::evaluate(1, Some(&s), &next, 1.0, 1e-3, &LOOSE),
        ];
        assert!(kss_growth_series(&series).values.iter().all(|v| *v < 1e-16));
    }

    #[test]
    fn segment_length_residual_is_zero() {
        let s = state("segment", &BuiltinArgs::default(), 16);
        let next = advance(&s, 1.0, 1e-3);
        assert!(ds_evolution_residual(&s, &next, 1.0, 1e-3).unwrap().iter().all(|r| *r == 0.0));
    }

    #[test]
    fn circle_length_follows_its_evolution_law() {
        let (mu, dt) = (4.0, 1e-4);
        let s = state("circle", &BuiltinArgs { radius: 1.0, ..Default::default() }, 64);
        let next = advance(&s, mu, dt);
        let ds = ds_evolution_residual(&s, &next, mu, dt).unwrap();
        assert!(ds[0] < 0.05, "{ds:?}");
    }

    #[test]
    fn reparametrized_states_do_not_compare() {
        let s = state("perturbed_triod", &BuiltinArgs::default(), 32);
        let r = reparametrize_constant_speed(&s);
        assert!(matches!(curvature_evolution_residual(&s, &r, 1.0, 1e-3), Err(Error::GridMismatch)));
        assert!(matches!(ds_evolution_residual(&s, &r, 1.0, 1e-3), Err(Error::GridMismatch)));
        assert!(matches!(junction_kinematics_check(&s, &r, 1.0, 1e-3), Err(Error::GridMismatch)));
        let report = MonitorReport::evaluate(1, Some(&s), &r, 1.0, 1e-3, &LOOSE);
        assert!(report.curvature_evolution_residual.is_none() && report.energy_change == 0.0);
    }

    #[test]
    fn logged_reports_can_be_recomputed() {
        let mut sc = scene("perturbed_triod", &BuiltinArgs::default());
        sc.params.grid_n = 32;
        sc.params.t_end = 5.0 * sc.params.dt;
        sc.params.reparam_cadence = usize::MAX;
        let options = RunOptions {
            frames_every: 1,
            ..RunOptions::default()
        };
        let out = run(&sc, &options).unwrap();
        assert_eq!(out.frames.len(), out.reports.len());
        for i in 1..out.frames.len() {
            let (prev, next) = (&out.frames[i - 1].1, &out.frames[i].1);
            let logged = &out.reports[i];
            let again = MonitorReport::evaluate(i, Some(prev), next, sc.params.mu, logged.dt, &out.thresholds);
            assert_eq!(&again, logged);
        }
    }
}
