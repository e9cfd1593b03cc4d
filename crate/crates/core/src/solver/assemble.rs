//! Assembly of the linearly-implicit step in delta form.
//!
//! Unknowns are the increments `δ` of every pooled node, two components
//! each; unknown `2 i + c` is component `c` of node `i`. Every unknown slot
//! owns exactly one row:
//!
//! * interior nodes `2..=n-2` of an open curve, and every node of a closed
//!   curve: `δ_j + dt (2/|γ_x|^4) (D4 δ)_j = -dt W_j`, with the coefficient
//!   and `W` taken from the current state;
//! * a fixed end node: `δ = P - γ`;
//! * node 1 (or `n-1`) next to any end: the second derivative at the end
//!   node vanishes, `D2 (γ + δ) = 0`;
//! * a junction node: `Σ σ_i (2/|γ_x|^3) ν_i ⟨ν_i, D3 (γ + δ)⟩ = mu Σ σ_i τ_i`
//!   over the three incident ends, with `σ = ±1` for start/finish ends and
//!   `ν`, `τ`, `|γ_x|` frozen at a given iterate.
//!
//! Concurrency needs no rows: the three ends share one node.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryFields;
use crate::model::{EndTag, NetworkState};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Interior motion row of an open curve.
    Motion,
    /// Motion row of a closed curve (periodic stencils, no boundary rows).
    Periodic,
    FixedEndpoint,
    SecondOrder,
    ThirdOrder,
}

/// Row counts by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowCounts {
    pub motion: usize,
    pub periodic: usize,
    pub fixed_endpoint: usize,
    pub second_order: usize,
    pub third_order: usize,
    /// Scalar concurrency conditions satisfied by sharing junction nodes
    /// (four per junction).
    pub shared_concurrency: usize,
}

impl RowCounts {
    pub fn total_rows(&self) -> usize {
        self.motion + self.periodic + self.fixed_endpoint + self.second_order + self.third_order
    }
}

/// One assembled linear system.
#[derive(Clone, Debug)]
pub struct LinearStep {
    pub unknowns: usize,
    /// Merged `(row, column, value)` entries, sorted by column then row.
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub kinds: Vec<RowKind>,
    junction_count: usize,
}

impl LinearStep {
    pub fn row_counts(&self) -> RowCounts {
        let mut c = RowCounts {
            shared_concurrency: 4 * self.junction_count,
            ..Default::default()
        };
        for k in &self.kinds {
            match k {
                RowKind::Motion => c.motion += 1,
                RowKind::Periodic => c.periodic += 1,
                RowKind::FixedEndpoint => c.fixed_endpoint += 1,
                RowKind::SecondOrder => c.second_order += 1,
                RowKind::ThirdOrder => c.third_order += 1,
            }
        }
        c
    }

    /// Square, every row classified, every entry in range and finite.
    pub fn check_invariants(&self) -> Result<()> {
        if self.kinds.len() != self.unknowns || self.rhs.len() != self.unknowns {
            return Err(Error::LinearSolve(format!(
                "{} rows and {} right-hand sides for {} unknowns",
                self.kinds.len(),
                self.rhs.len(),
                self.unknowns
            )));
        }
        if self.row_counts().total_rows() != self.unknowns {
            return Err(Error::LinearSolve("row classification does not cover the system".into()));
        }
        if self
            .entries
            .iter()
            .any(|&(r, c, v)| r >= self.unknowns || c >= self.unknowns || !v.is_finite())
            || self.rhs.iter().any(|v| !v.is_finite())
        {
            return Err(Error::LinearSolve("non-finite or out-of-range entry".into()));
        }
        Ok(())
    }

    /// Solves for the increments with a sparse LU factorization.
    pub fn solve(&self) -> Result<Vec<f64>> {
        self.check_invariants()?;
        crate::solver::init_linear_algebra();
        let trips: Vec<Triplet<usize, usize, f64>> =
            self.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.unknowns, self.unknowns, &trips)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Mat::<f64>::from_fn(self.unknowns, 1, |i, _| self.rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.unknowns).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular system".into()));
        }
        Ok(out)
    }
}

/// Frame of one end, frozen for the third-order rows.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FrozenEnd {
    pub normal: Vec2,
    pub tangent: Vec2,
    pub speed: f64,
}

/// Frames of all ends at the given node pool (same layout as `state`).
pub(crate) fn end_frames(state: &NetworkState, nodes: &[Vec2]) -> Vec<[FrozenEnd; 3]> {
    let n = state.grid_n();
    state
        .topology()
        .junctions
        .iter()
        .map(|junction| {
            junction.ends.map(|ce| {
                let j = if ce.end == EndTag::Start { 0 } else { n };
                let idx = state.curve_node_indices(ce.curve);
                let d1 = state.stencils(ce.curve).stencil(1, j).apply(j, None, |i| nodes[idx[i]]);
                let speed = d1.norm();
                let tangent = d1 / speed;
                FrozenEnd {
                    normal: tangent.perp(),
                    tangent,
                    speed,
                }
            })
        })
        .collect()
}

struct Builder {
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    kinds: Vec<Option<RowKind>>,
}

impl Builder {
    fn claim(&mut self, row: usize, kind: RowKind) -> Result<()> {
        if let Some(prev) = self.kinds[row] {
            return Err(Error::LinearSolve(format!(
                "unknown {row} claimed by both {prev:?} and {kind:?} rows"
            )));
        }
        self.kinds[row] = Some(kind);
        Ok(())
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((row, col, v));
        }
    }
}

/// Assembles the step system for `state`, with third-order rows frozen at
/// `frames` (one entry per junction; see [`end_frames`]).
pub(crate) fn assemble_with_frames(
    state: &NetworkState,
    fields: &GeometryFields,
    frames: &[[FrozenEnd; 3]],
    mu: f64,
    dt: f64,
) -> Result<LinearStep> {
    let topo = state.topology();
    let n = state.grid_n();
    let nodes = state.nodes();
    let unknowns = 2 * nodes.len();
    let mut b = Builder {
        entries: Vec::new(),
        rhs: vec![0.0; unknowns],
        kinds: vec![None; unknowns],
    };

    for c in 0..topo.curve_count {
        let idx = state.curve_node_indices(c);
        let set = state.stencils(c);
        let period = set.period();
        let f = &fields.curves[c];
        let closed = topo.is_closed(c);
        let (range, kind) = if closed {
            (0..n, RowKind::Periodic)
        } else {
            (2..n - 1, RowKind::Motion)
        };
        for j in range {
            let node = idx[j];
            let coef = dt * 2.0 / f.speed[j].powi(4);
            let increment = f.velocity[j] * dt;
            let st = set.stencil(4, j);
            for comp in 0..2 {
                let row = 2 * node + comp;
                b.claim(row, kind)?;
                b.add(row, row, 1.0);
                for (col_node, &wt) in st.nodes(j, period).zip(&st.weights) {
                    b.add(row, 2 * idx[col_node] + comp, coef * wt);
                }
                b.rhs[row] = increment.component(comp);
            }
        }
        if closed {
            continue;
        }
        for end in [EndTag::Start, EndTag::Finish] {
            let (j_end, j_next) = match end {
                EndTag::Start => (0, 1),
                EndTag::Finish => (n, n - 1),
            };
            // second derivative at the end node vanishes
            let st = set.stencil(2, j_end);
            let d2 = st.apply(j_end, None, |i| nodes[idx[i]]);
            for comp in 0..2 {
                let row = 2 * idx[j_next] + comp;
                b.claim(row, RowKind::SecondOrder)?;
                for (col_node, &wt) in st.nodes(j_end, None).zip(&st.weights) {
                    b.add(row, 2 * idx[col_node] + comp, wt);
                }
                b.rhs[row] = -d2.component(comp);
            }
            if let Some(ep) = topo.endpoint_of(crate::model::CurveEnd::new(c, end)) {
                let node = idx[j_end];
                let gap = ep.position - nodes[node];
                for comp in 0..2 {
                    let row = 2 * node + comp;
                    b.claim(row, RowKind::FixedEndpoint)?;
                    b.add(row, row, 1.0);
                    b.rhs[row] = gap.component(comp);
                }
            }
        }
    }

    for (jn, junction) in topo.junctions.iter().enumerate() {
        let jnode = state.curve_node_indices(junction.ends[0].curve)[state.end_index(junction.ends[0].end)];
        let mut target = Vec2::ZERO;
        let mut current = Vec2::ZERO;
        let mut coeffs: Vec<(usize, [[f64; 2]; 2])> = Vec::new();
        for (slot, ce) in junction.ends.iter().enumerate() {
            let fr = frames[jn][slot];
            let sigma = ce.end.sign();
            let j_end = state.end_index(ce.end);
            let idx = state.curve_node_indices(ce.curve);
            let st = state.stencils(ce.curve).stencil(3, j_end).clone();
            let scale = sigma * 2.0 / fr.speed.powi(3);
            let nu = fr.normal;
            let d3 = st.apply(j_end, None, |i| nodes[idx[i]]);
            current += nu * (scale * nu.dot(d3));
            target += fr.tangent * (sigma * mu);
            // block ν νᵀ scaled, per stencil node
            let block = [[nu.x * nu.x, nu.x * nu.y], [nu.y * nu.x, nu.y * nu.y]];
            for (col_node, &wt) in st.nodes(j_end, None).zip(&st.weights) {
                let s = scale * wt;
                coeffs.push((idx[col_node], block.map(|r| r.map(|v| v * s))));
            }
        }
        for comp in 0..2 {
            let row = 2 * jnode + comp;
            b.claim(row, RowKind::ThirdOrder)?;
            for (col_node, block) in &coeffs {
                for (other, &v) in block[comp].iter().enumerate() {
                    b.add(row, 2 * col_node + other, v);
                }
            }
            b.rhs[row] = (target - current).component(comp);
        }
    }

    let kinds = b
        .kinds
        .iter()
        .enumerate()
        .map(|(row, k)| k.ok_or_else(|| Error::LinearSolve(format!("unknown {row} has no row"))))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = b.entries;
    entries.sort_by_key(|&(r, c, _)| (c, r));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => merged.push((r, c, v)),
        }
    }
    Ok(LinearStep {
        unknowns,
        entries: merged,
        rhs: b.rhs,
        kinds,
        junction_count: topo.junctions.len(),
    })
}

/// Assembles the step system with every frame frozen at `state`.
pub fn assemble(state: &NetworkState, mu: f64, dt: f64) -> Result<LinearStep> {
    let fields = GeometryFields::compute(state, mu);
    let frames = end_frames(state, state.nodes());
    assemble_with_frames(state, &fields, &frames, mu, dt)
}
