//! Combinatorial topology, flow parameters and sampled network states.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::Primitive;
use crate::stencil::StencilSet;
use crate::vec2::Vec2;

/// Which end of a curve: `x = 0` (start) or `x = 1` (finish).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndTag {
    Start,
    Finish,
}

impl EndTag {
    /// `+1` for a start end, `-1` for a finish end: flips the curve's
    /// tangent and normal to point away from the end.
    pub fn sign(self) -> f64 {
        match self {
            EndTag::Start => 1.0,
            EndTag::Finish => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveEnd {
    pub curve: usize,
    pub end: EndTag,
}

impl CurveEnd {
    pub fn new(curve: usize, end: EndTag) -> Self {
        CurveEnd { curve, end }
    }
}

/// A triple junction joining three curve ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub ends: [CurveEnd; 3],
}

/// A curve end pinned at a point of the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedEndpoint {
    pub curve: usize,
    pub end: EndTag,
    pub position: Vec2,
}

impl FixedEndpoint {
    pub fn curve_end(&self) -> CurveEnd {
        CurveEnd::new(self.curve, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub curve_count: usize,
    #[serde(default)]
    pub junctions: Vec<Junction>,
    #[serde(default)]
    pub endpoints: Vec<FixedEndpoint>,
    #[serde(default)]
    pub closed_curves: BTreeSet<usize>,
}

impl NetworkTopology {
    /// Three curves starting at one junction, finishing at `ends`.
    pub fn triod(ends: [Vec2; 3]) -> Self {
        NetworkTopology {
            curve_count: 3,
            junctions: vec![Junction {
                ends: [0, 1, 2].map(|c| CurveEnd::new(c, EndTag::Start)),
            }],
            endpoints: (0..3)
                .map(|c| FixedEndpoint {
                    curve: c,
                    end: EndTag::Finish,
                    position: ends[c],
                })
                .collect(),
            closed_curves: BTreeSet::new(),
        }
    }

    /// Three curves all starting at junction 0 and finishing at junction 1.
    pub fn theta() -> Self {
        NetworkTopology {
            curve_count: 3,
            junctions: vec![
                Junction {
                    ends: [0, 1, 2].map(|c| CurveEnd::new(c, EndTag::Start)),
                },
                Junction {
                    ends: [0, 1, 2].map(|c| CurveEnd::new(c, EndTag::Finish)),
                },
            ],
            endpoints: Vec::new(),
            closed_curves: BTreeSet::new(),
        }
    }

    /// One closed curve.
    pub fn closed() -> Self {
        NetworkTopology {
            curve_count: 1,
            junctions: Vec::new(),
            endpoints: Vec::new(),
            closed_curves: BTreeSet::from([0]),
        }
    }

    /// One curve with both ends fixed.
    pub fn segment(from: Vec2, to: Vec2) -> Self {
        NetworkTopology {
            curve_count: 1,
            junctions: Vec::new(),
            endpoints: vec![
                FixedEndpoint {
                    curve: 0,
                    end: EndTag::Start,
                    position: from,
                },
                FixedEndpoint {
                    curve: 0,
                    end: EndTag::Finish,
                    position: to,
                },
            ],
            closed_curves: BTreeSet::new(),
        }
    }

    pub fn is_closed(&self, curve: usize) -> bool {
        self.closed_curves.contains(&curve)
    }

    /// Checks that every curve end is claimed exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.curve_count == 0 {
            return Err(Error::Topology("network has no curves".into()));
        }
        let mut claimed = BTreeSet::new();
        let mut claim = |ce: CurveEnd, what: &str| -> Result<()> {
            if ce.curve >= self.curve_count {
                return Err(Error::Topology(format!("{what} references missing curve {}", ce.curve)));
            }
            if !claimed.insert(ce) {
                return Err(Error::Topology(format!(
                    "{:?} end of curve {} is claimed more than once",
                    ce.end, ce.curve
                )));
            }
            Ok(())
        };
        for (j, junction) in self.junctions.iter().enumerate() {
            for ce in junction.ends {
                claim(ce, &format!("junction {j}"))?;
            }
        }
        for ep in &self.endpoints {
            if !ep.position.is_finite() {
                return Err(Error::Topology(format!("endpoint of curve {} is not finite", ep.curve)));
            }
            claim(ep.curve_end(), "fixed endpoint")?;
        }
        for &c in &self.closed_curves {
            claim(CurveEnd::new(c, EndTag::Start), "closed curve")?;
            claim(CurveEnd::new(c, EndTag::Finish), "closed curve")?;
        }
        for c in 0..self.curve_count {
            for end in [EndTag::Start, EndTag::Finish] {
                if !claimed.contains(&CurveEnd::new(c, end)) {
                    return Err(Error::Topology(format!("{end:?} end of curve {c} is not claimed")));
                }
            }
        }
        for (a, ea) in self.endpoints.iter().enumerate() {
            for eb in &self.endpoints[a + 1..] {
                if ea.position == eb.position {
                    return Err(Error::Topology(format!(
                        "fixed endpoints of curves {} and {} coincide",
                        ea.curve, eb.curve
                    )));
                }
            }
        }
        Ok(())
    }

    /// Junction index and slot claiming a curve end, if any.
    pub fn junction_of(&self, ce: CurveEnd) -> Option<(usize, usize)> {
        self.junctions
            .iter()
            .enumerate()
            .find_map(|(j, junction)| junction.ends.iter().position(|e| *e == ce).map(|slot| (j, slot)))
    }

    /// Fixed endpoint claiming a curve end, if any.
    pub fn endpoint_of(&self, ce: CurveEnd) -> Option<&FixedEndpoint> {
        self.endpoints.iter().find(|ep| ep.curve_end() == ce)
    }
}

/// Thresholds for boundary residuals, energy control and degeneracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Admissibility: `|k|` at junctions and fixed endpoints.
    pub curvature: f64,
    /// Admissibility: third-order junction residual.
    pub third_order: f64,
    /// Admissibility: `|γ_xx|` at boundary nodes for an analytic verdict.
    pub second_order: f64,
    /// Per step: third-order junction residual after the boundary solve.
    pub step_third_order: f64,
    /// Per step: admissible energy increase, relative to the current energy.
    pub energy_increase: f64,
    /// Smallest admissible `det M` at a junction.
    pub det_m: f64,
    /// Smallest admissible ratio `min |γ_x| / length` on a curve.
    pub min_speed_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curvature: 1e-6,
            third_order: 1e-6,
            second_order: 1e-6,
            step_third_order: 1e-5,
            energy_increase: 1e-10,
            det_m: 1e-6,
            min_speed_ratio: 1e-2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("curvature", self.curvature),
            ("third_order", self.third_order),
            ("second_order", self.second_order),
            ("step_third_order", self.step_third_order),
            ("energy_increase", self.energy_increase),
            ("det_m", self.det_m),
            ("min_speed_ratio", self.min_speed_ratio),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub mu: f64,
    pub grid_n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub tolerances: Tolerances,
    pub reparam_cadence: usize,
    /// `None` resolves to `1e-3` times the initial total length.
    pub min_length_threshold: Option<f64>,
    pub min_sin_angle_threshold: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            mu: 1.0,
            grid_n: 64,
            dt: 1e-4,
            t_end: 1.0,
            tolerances: Tolerances::default(),
            reparam_cadence: 10,
            min_length_threshold: None,
            min_sin_angle_threshold: 1e-2,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Params(m));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if self.grid_n < 8 {
            return bad(format!("grid_n must be at least 8, got {}", self.grid_n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.reparam_cadence == 0 {
            return bad("reparam_cadence must be at least 1".into());
        }
        if let Some(l) = self.min_length_threshold {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("min_length_threshold must be positive, got {l}"));
            }
        }
        if !(self.min_sin_angle_threshold > 0.0 && self.min_sin_angle_threshold.is_finite()) {
            return bad(format!(
                "min_sin_angle_threshold must be positive, got {}",
                self.min_sin_angle_threshold
            ));
        }
        self.tolerances.validate()
    }
}

/// Sampled network at one instant.
///
/// Points live in one shared pool; each curve indexes `grid_n + 1` of them.
/// A junction is a single pool entry referenced by all three incident
/// curves, and a closed curve's last index equals its first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    topology: Arc<NetworkTopology>,
    pub time: f64,
    grid_n: usize,
    nodes: Vec<Vec2>,
    curve_nodes: Vec<Vec<usize>>,
    /// Incremented by every reparametrization, so consumers comparing two
    /// states can tell whether they share a parametrization.
    pub param_epoch: u64,
}

impl NetworkState {
    /// Builds a state from per-curve samples (`grid_n + 1` points each).
    ///
    /// Junction nodes take the value of the first incident end listed in the
    /// topology; the others must agree within `1e-12` (relative to scale).
    /// Fixed endpoints are snapped to their topology positions, which must
    /// agree equally well.
    pub fn from_samples(topology: Arc<NetworkTopology>, samples: Vec<Vec<Vec2>>) -> Result<Self> {
        topology.validate()?;
        if samples.len() != topology.curve_count {
            return Err(Error::Incidence(format!(
                "topology has {} curves but {} were given",
                topology.curve_count,
                samples.len()
            )));
        }
        let grid_n = samples[0].len().saturating_sub(1);
        if grid_n < 8 {
            return Err(Error::Params(format!("grid_n must be at least 8, got {grid_n}")));
        }
        if let Some(c) = samples.iter().position(|s| s.len() != grid_n + 1) {
            return Err(Error::Incidence(format!("curve {c} has a different sample count")));
        }
        let tol = |a: Vec2, b: Vec2| 1e-12 * (1.0 + a.norm().max(b.norm()));
        let end_point = |ce: CurveEnd| match ce.end {
            EndTag::Start => samples[ce.curve][0],
            EndTag::Finish => samples[ce.curve][grid_n],
        };

        let mut nodes = Vec::new();
        let mut curve_nodes = vec![vec![usize::MAX; grid_n + 1]; topology.curve_count];
        let set_end = |curve_nodes: &mut Vec<Vec<usize>>, ce: CurveEnd, idx: usize| match ce.end {
            EndTag::Start => curve_nodes[ce.curve][0] = idx,
            EndTag::Finish => curve_nodes[ce.curve][grid_n] = idx,
        };
        for (j, junction) in topology.junctions.iter().enumerate() {
            let p = end_point(junction.ends[0]);
            let gap = junction.ends.iter().map(|&ce| end_point(ce).distance(p)).fold(0.0, f64::max);
            if gap > tol(p, p) {
                return Err(Error::JunctionMismatch { junction: j, gap });
            }
            let idx = nodes.len();
            nodes.push(p);
            for ce in junction.ends {
                set_end(&mut curve_nodes, ce, idx);
            }
        }
        for ep in &topology.endpoints {
            let p = end_point(ep.curve_end());
            if p.distance(ep.position) > tol(p, ep.position) {
                return Err(Error::Incidence(format!(
                    "curve {} {:?} end is at ({}, {}), fixed endpoint is at ({}, {})",
                    ep.curve, ep.end, p.x, p.y, ep.position.x, ep.position.y
                )));
            }
            let idx = nodes.len();
            nodes.push(ep.position);
            set_end(&mut curve_nodes, ep.curve_end(), idx);
        }
        for (c, pts) in samples.iter().enumerate() {
            let closed = topology.is_closed(c);
            if closed && pts[0].distance(pts[grid_n]) > tol(pts[0], pts[grid_n]) {
                return Err(Error::Incidence(format!("closed curve {c} does not close up")));
            }
            let interior = if closed { 0..grid_n } else { 1..grid_n };
            for j in interior {
                curve_nodes[c][j] = nodes.len();
                nodes.push(pts[j]);
            }
            if closed {
                curve_nodes[c][grid_n] = curve_nodes[c][0];
            }
        }
        let state = NetworkState {
            topology,
            time: 0.0,
            grid_n,
            nodes,
            curve_nodes,
            param_epoch: 0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<NetworkTopology> {
        &self.topology
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn curve_count(&self) -> usize {
        self.topology.curve_count
    }

    /// Shared point pool.
    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    /// Pool indices of a curve's `grid_n + 1` samples.
    pub fn curve_node_indices(&self, curve: usize) -> &[usize] {
        &self.curve_nodes[curve]
    }

    pub fn point(&self, curve: usize, j: usize) -> Vec2 {
        self.nodes[self.curve_nodes[curve][j]]
    }

    /// Samples of one curve, `grid_n + 1` points.
    pub fn curve_points(&self, curve: usize) -> Vec<Vec2> {
        self.curve_nodes[curve].iter().map(|&i| self.nodes[i]).collect()
    }

    /// Position of a curve end.
    pub fn end_point(&self, ce: CurveEnd) -> Vec2 {
        self.point(ce.curve, self.end_index(ce.end))
    }

    /// Grid index of an end tag.
    pub fn end_index(&self, end: EndTag) -> usize {
        match end {
            EndTag::Start => 0,
            EndTag::Finish => self.grid_n,
        }
    }

    /// Position of junction `j`.
    pub fn junction_point(&self, j: usize) -> Vec2 {
        self.end_point(self.topology.junctions[j].ends[0])
    }

    pub fn stencils(&self, curve: usize) -> Arc<StencilSet> {
        StencilSet::get(self.grid_n, self.topology.is_closed(curve))
    }

    /// New snapshot with sample `j` of `curve` moved to `p`. Moving a shared
    /// junction node moves it for every incident curve.
    pub fn with_point(&self, curve: usize, j: usize, p: Vec2) -> NetworkState {
        let mut next = self.clone();
        let idx = next.curve_nodes[curve][j];
        next.nodes[idx] = p;
        next
    }

    /// New snapshot with the whole pool replaced (same layout).
    pub fn with_nodes(&self, nodes: Vec<Vec2>) -> NetworkState {
        assert_eq!(nodes.len(), self.nodes.len(), "node pool size must not change");
        NetworkState {
            nodes,
            ..self.clone()
        }
    }

    /// New snapshot with every curve resampled; the layout is unchanged and
    /// `param_epoch` is incremented. Shared nodes are taken from the first
    /// curve that writes them.
    pub(crate) fn with_curves(&self, curves: &[Vec<Vec2>]) -> NetworkState {
        let mut nodes = self.nodes.clone();
        let mut written = vec![false; nodes.len()];
        for (c, pts) in curves.iter().enumerate() {
            for (j, &p) in pts.iter().enumerate() {
                let idx = self.curve_nodes[c][j];
                if !written[idx] {
                    nodes[idx] = p;
                    written[idx] = true;
                }
            }
        }
        NetworkState {
            nodes,
            param_epoch: self.param_epoch + 1,
            ..self.clone()
        }
    }

    /// Re-checks every structural and regularity invariant.
    pub fn validate(&self) -> Result<()> {
        let topo = &self.topology;
        let n = self.grid_n;
        if self.curve_nodes.len() != topo.curve_count {
            return Err(Error::Incidence("curve count differs from topology".into()));
        }
        for (c, idx) in self.curve_nodes.iter().enumerate() {
            if idx.len() != n + 1 || idx.iter().any(|&i| i >= self.nodes.len()) {
                return Err(Error::Incidence(format!("curve {c} has a malformed node index list")));
            }
            if topo.is_closed(c) && idx[0] != idx[n] {
                return Err(Error::Incidence(format!("closed curve {c} is not identified at its ends")));
            }
        }
        for (j, junction) in topo.junctions.iter().enumerate() {
            let first = self.curve_nodes[junction.ends[0].curve][self.end_index(junction.ends[0].end)];
            for ce in &junction.ends[1..] {
                if self.curve_nodes[ce.curve][self.end_index(ce.end)] != first {
                    return Err(Error::JunctionMismatch {
                        junction: j,
                        gap: self.end_point(*ce).distance(self.nodes[first]),
                    });
                }
            }
        }
        for ep in &topo.endpoints {
            if self.end_point(ep.curve_end()) != ep.position {
                return Err(Error::Incidence(format!("curve {} {:?} end has left its fixed position", ep.curve, ep.end)));
            }
        }
        for c in 0..topo.curve_count {
            let pts = self.curve_points(c);
            let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
            let d1 = self.stencils(c).differentiate(1, &pts);
            for (j, v) in d1.iter().enumerate() {
                let speed = v.norm();
                if !(speed > 1e-12 * scale) {
                    return Err(Error::NonRegular { curve: c, node: j, speed });
                }
            }
        }
        Ok(())
    }
}

/// Samples every primitive on a `grid_n` grid and assembles a state.
pub fn build_state(topology: NetworkTopology, curves: &[Primitive], grid_n: usize) -> Result<NetworkState> {
    if curves.len() != topology.curve_count {
        return Err(Error::Incidence(format!(
            "topology has {} curves but {} primitives were given",
            topology.curve_count,
            curves.len()
        )));
    }
    if grid_n < 8 {
        return Err(Error::Params(format!("grid_n must be at least 8, got {grid_n}")));
    }
    for (c, p) in curves.iter().enumerate() {
        p.validate().map_err(|m| Error::Incidence(format!("curve {c}: {m}")))?;
    }
    let samples = curves.iter().map(|p| p.sample(grid_n)).collect();
    NetworkState::from_samples(Arc::new(topology), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn steiner() -> (NetworkTopology, Vec<Primitive>) {
        let ends: [Vec2; 3] = [0, 1, 2].map(|i| Vec2::from_angle(2.0 * PI * i as f64 / 3.0));
        let curves = ends.iter().map(|&e| Primitive::Segment { from: Vec2::ZERO, to: e }).collect();
        (NetworkTopology::triod(ends), curves)
    }

    #[test]
    fn triod_shares_its_junction_node() {
        let (topo, curves) = steiner();
        let s = build_state(topo, &curves, 8).unwrap();
        let idx: Vec<usize> = (0..3).map(|c| s.curve_node_indices(c)[0]).collect();
        assert!(idx.iter().all(|&i| i == idx[0]));
        assert_eq!(s.nodes().len(), 3 * 9 - 2);
        let moved = s.with_point(1, 0, Vec2::new(0.1, 0.2));
        for c in 0..3 {
            assert_eq!(moved.point(c, 0), Vec2::new(0.1, 0.2));
        }
        assert_eq!(s.point(0, 0), Vec2::ZERO);
    }

    #[test]
    fn zero_length_segment_is_not_regular() {
        let topo = NetworkTopology::closed();
        let p = Vec2::new(1.0, 1.0);
        let err = build_state(topo, &[Primitive::Segment { from: p, to: p }], 16).unwrap_err();
        assert!(matches!(err, Error::NonRegular { .. }), "{err}");
    }

    #[test]
    fn mismatched_junction_is_rejected() {
        let (topo, mut curves) = steiner();
        curves[2] = Primitive::Segment {
            from: Vec2::new(1e-6, 0.0),
            to: topo.endpoints[2].position,
        };
        let err = build_state(topo, &curves, 8).unwrap_err();
        assert!(matches!(err, Error::JunctionMismatch { .. }), "{err}");
    }

    #[test]
    fn unclaimed_or_doubly_claimed_ends_are_rejected() {
        let mut topo = NetworkTopology::theta();
        topo.junctions[1].ends[2] = CurveEnd::new(2, EndTag::Start);
        assert!(matches!(topo.validate(), Err(Error::Topology(_))));
        let mut topo = NetworkTopology::theta();
        topo.curve_count = 4;
        assert!(matches!(topo.validate(), Err(Error::Topology(_))));
    }

    #[test]
    fn coincident_fixed_endpoints_are_rejected() {
        let topo = NetworkTopology::triod([Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
        assert!(matches!(topo.validate(), Err(Error::Topology(_))));
    }

    #[test]
    fn flow_params_validate_ranges() {
        assert!(FlowParams::default().validate().is_ok());
        let p = FlowParams { mu: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = FlowParams { grid_n: 7, ..Default::default() };
        assert!(p.validate().is_err());
        let p = FlowParams { dt: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn state_serialization_round_trips_exactly() {
        let (topo, curves) = steiner();
        let s = build_state(topo, &curves, 8).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: NetworkState = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
