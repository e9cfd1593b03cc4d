//! Admissibility of initial networks, boundary-matched and constant-speed
//! reparametrizations, and the junction tangential solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{derivatives, CurveFields, GeometryFields};
use crate::model::{CurveEnd, EndTag, NetworkState, Tolerances};
use crate::quadrature::gauss_legendre_8;
use crate::stencil::fd_weights;
use crate::theta::build_theta;
use crate::vec2::Vec2;

/// Geometric quantities at one curve end, oriented to point away from the
/// end: for a finish end `τ`, `ν`, `k`, `A` and `T` change sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndFrame {
    pub tangent: Vec2,
    pub normal: Vec2,
    pub k: f64,
    pub k_s: f64,
    pub a: f64,
    pub t: f64,
    pub speed: f64,
    pub second_derivative: f64,
}

impl EndFrame {
    pub fn of(fields: &CurveFields, state: &NetworkState, ce: CurveEnd) -> Self {
        let j = match ce.end {
            EndTag::Start => 0,
            EndTag::Finish => state.grid_n(),
        };
        let sg = ce.end.sign();
        EndFrame {
            tangent: fields.tangent[j] * sg,
            normal: fields.normal[j] * sg,
            k: fields.k[j] * sg,
            // k and s both flip, so k_s keeps its sign
            k_s: fields.k_s[j],
            a: fields.a[j] * sg,
            t: fields.t[j] * sg,
            speed: fields.speed[j],
            second_derivative: fields.derivatives.d2[j].norm(),
        }
    }
}

/// Angles between outward tangents, in `[0, π]`, for the pairs (1,2), (2,3), (3,1).
pub fn junction_angles(tangents: &[Vec2; 3]) -> [f64; 3] {
    let angle = |u: Vec2, v: Vec2| u.cross(v).abs().atan2(u.dot(v));
    [
        angle(tangents[0], tangents[1]),
        angle(tangents[1], tangents[2]),
        angle(tangents[2], tangents[0]),
    ]
}

/// `max |sin α|` over the three junction angles.
pub fn rho_hat(angles: &[f64; 3]) -> f64 {
    angles.iter().map(|a| a.sin().abs()).fold(0.0, f64::max)
}

/// `Σ (2 k_s ν - mu τ)` with outward frames.
pub fn third_order_vector(frames: &[EndFrame; 3], mu: f64) -> Vec2 {
    frames.iter().map(|f| f.normal * (2.0 * f.k_s) - f.tangent * mu).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionReport {
    pub junction: usize,
    pub concurrency_gap: f64,
    pub max_abs_k: f64,
    pub third_order_residual: f64,
    pub angles: [f64; 3],
    pub rho_hat: f64,
    /// At least two incident curves meet at a strictly positive angle.
    pub positive_angle: bool,
    /// The three normals span the plane.
    pub normals_span: bool,
    pub det_m: f64,
    pub max_second_derivative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointReport {
    pub curve: usize,
    pub end: EndTag,
    pub abs_k: f64,
    pub max_second_derivative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Passes every geometric condition.
    Geometric,
    /// Geometric, and `γ_xx = 0` at every boundary node.
    Analytic,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub junctions: Vec<JunctionReport>,
    pub endpoints: Vec<EndpointReport>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.verdict != Verdict::Rejected
    }
}

/// Below this, an angle or a sine counts as zero.
const DEGENERATE: f64 = 1e-12;

/// Evaluates the junction and endpoint conditions of an initial network.
pub fn check_geometric(state: &NetworkState, mu: f64, tol: &Tolerances) -> AdmissibilityReport {
    let fields = GeometryFields::compute(state, mu);
    let topo = state.topology();
    let mut reasons = Vec::new();
    let mut analytic = true;

    let mut junctions = Vec::new();
    for (j, junction) in topo.junctions.iter().enumerate() {
        let frames = junction.ends.map(|ce| EndFrame::of(&fields.curves[ce.curve], state, ce));
        let p = state.end_point(junction.ends[0]);
        let concurrency_gap = junction.ends.iter().map(|&ce| state.end_point(ce).distance(p)).fold(0.0, f64::max);
        let max_abs_k = frames.iter().map(|f| f.k.abs()).fold(0.0, f64::max);
        let third = third_order_vector(&frames, mu).norm();
        let tangents = frames.map(|f| f.tangent);
        let angles = junction_angles(&tangents);
        let rho = rho_hat(&angles);
        let positive_angle = angles.iter().any(|&a| a > DEGENERATE);
        let normals_span = rho > DEGENERATE;
        let det_m = det_m(&tangents);
        let max_second_derivative = frames.iter().map(|f| f.second_derivative).fold(0.0, f64::max);

        if concurrency_gap > 0.0 {
            reasons.push(format!("junction {j}: concurrency condition (gap {concurrency_gap:e})"));
        }
        if max_abs_k > tol.curvature {
            reasons.push(format!("junction {j}: curvature condition (|k| = {max_abs_k:e})"));
        }
        if third > tol.third_order {
            reasons.push(format!("junction {j}: third order condition (residual {third:e})"));
        }
        if !positive_angle {
            reasons.push(format!("junction {j}: no two curves form a positive angle"));
        }
        if !normals_span {
            reasons.push(format!("junction {j}: normals do not span the plane"));
        }
        if normals_span && det_m < tol.det_m {
            reasons.push(format!("junction {j}: degenerate junction (det M = {det_m:e})"));
        }
        analytic &= max_second_derivative <= tol.second_order;
        junctions.push(JunctionReport {
            junction: j,
            concurrency_gap,
            max_abs_k,
            third_order_residual: third,
            angles,
            rho_hat: rho,
            positive_angle,
            normals_span,
            det_m,
            max_second_derivative,
        });
    }

    let mut endpoints = Vec::new();
    for ep in &topo.endpoints {
        let frame = EndFrame::of(&fields.curves[ep.curve], state, ep.curve_end());
        let abs_k = frame.k.abs();
        if abs_k > tol.curvature {
            reasons.push(format!("curve {} {:?} end: curvature condition (|k| = {abs_k:e})", ep.curve, ep.end));
        }
        analytic &= frame.second_derivative <= tol.second_order;
        endpoints.push(EndpointReport {
            curve: ep.curve,
            end: ep.end,
            abs_k,
            max_second_derivative: frame.second_derivative,
        });
    }

    let verdict = if !reasons.is_empty() {
        Verdict::Rejected
    } else if analytic {
        Verdict::Analytic
    } else {
        Verdict::Geometric
    };
    AdmissibilityReport {
        junctions,
        endpoints,
        verdict,
        reasons,
    }
}

/// `det M = 1 - ⟨τ1,τ2⟩⟨τ2,τ3⟩⟨τ3,τ1⟩`.
pub fn det_m(tangents: &[Vec2; 3]) -> f64 {
    let [t1, t2, t3] = *tangents;
    1.0 - t1.dot(t2) * t2.dot(t3) * t3.dot(t1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentialSolve {
    pub t: [f64; 3],
    pub det_m: f64,
    /// `max |(M T - rhs)_i|`.
    pub residual: f64,
}

/// Tangential velocities at a junction implied by the normal velocities and
/// concurrency, `A_i ν_i + T_i τ_i` equal for all `i`. Frames are outward.
pub fn junction_tangential_solve(
    tangents: &[Vec2; 3],
    normals: &[Vec2; 3],
    a: &[f64; 3],
    det_threshold: f64,
) -> Result<TangentialSolve> {
    let [t1, t2, t3] = *tangents;
    let (c12, c23, c31) = (t1.dot(t2), t2.dot(t3), t3.dot(t1));
    let m = [[-c12, 1.0, 0.0], [0.0, -c23, 1.0], [1.0, 0.0, -c31]];
    let rhs = [normals[0].dot(t2) * a[0], normals[1].dot(t3) * a[1], normals[2].dot(t1) * a[2]];
    let det = det3(&m);
    if !(det >= det_threshold) {
        return Err(Error::DegenerateJunction { junction: 0, det_m: det });
    }
    // Cramer's rule
    let mut t = [0.0; 3];
    for (col, ti) in t.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *ti = det3(&mc) / det;
    }
    let residual = (0..3)
        .map(|r| ((0..3).map(|c| m[r][c] * t[c]).sum::<f64>() - rhs[r]).abs())
        .fold(0.0, f64::max);
    Ok(TangentialSolve { t, det_m: det, residual })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Local degree-5 Lagrange interpolation of a sampled curve.
pub struct LocalInterpolant<'a> {
    pts: &'a [Vec2],
    n: usize,
    periodic: bool,
}

impl<'a> LocalInterpolant<'a> {
    /// `pts` holds `n + 1` samples (for periodic curves the last repeats the first).
    pub fn new(pts: &'a [Vec2], periodic: bool) -> Self {
        LocalInterpolant {
            pts,
            n: pts.len() - 1,
            periodic,
        }
    }

    fn window(&self, x: f64) -> (isize, f64) {
        let u = x * self.n as f64;
        let i = (u.floor() as isize).clamp(0, self.n as isize - 1);
        let start = if self.periodic {
            i - 2
        } else {
            (i - 2).clamp(0, self.n as isize - 5)
        };
        (start, u - start as f64)
    }

    fn sample(&self, idx: isize) -> Vec2 {
        if self.periodic {
            self.pts[idx.rem_euclid(self.n as isize) as usize]
        } else {
            self.pts[idx as usize]
        }
    }

    /// Value and parameter derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (Vec2, Vec2) {
        let (start, z) = self.window(x);
        let nodes = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let w = fd_weights(z, &nodes, 1);
        let mut p = Vec2::ZERO;
        let mut d = Vec2::ZERO;
        for k in 0..6 {
            let v = self.sample(start + k as isize);
            p += v * w[0][k];
            d += v * w[1][k];
        }
        (p, d * self.n as f64)
    }

    pub fn eval(&self, x: f64) -> Vec2 {
        self.eval_with_derivative(x).0
    }
}

/// Resamples every open curve as `σ ∘ θ` so that `γ_xx` vanishes at its
/// ends, then imposes the boundary conditions exactly with a zero-length
/// boundary solve. Closed curves are returned unchanged.
pub fn make_admissible(state: &NetworkState, mu: f64, tol: &Tolerances) -> Result<NetworkState> {
    let n = state.grid_n();
    let mut curves = Vec::with_capacity(state.curve_count());
    let mut changed = false;
    for c in 0..state.curve_count() {
        let pts = state.curve_points(c);
        if state.topology().is_closed(c) {
            curves.push(pts);
            continue;
        }
        let d = derivatives(state, c);
        // θ''(end) = -⟨σ_xx, σ_x⟩ / |σ_x|^2 cancels the tangential part of σ_xx;
        // its normal part is the curvature, zero for admissible input
        let end_value = |j: usize| {
            if d.d2[j].norm() <= tol.second_order {
                0.0
            } else {
                -d.d2[j].dot(d.d1[j]) / d.d1[j].norm_sq()
            }
        };
        let (a, b) = (end_value(0), end_value(n));
        if a == 0.0 && b == 0.0 {
            curves.push(pts);
            continue;
        }
        changed = true;
        let theta = build_theta(a, b);
        let interp = LocalInterpolant::new(&pts, false);
        let mut out: Vec<Vec2> = (0..=n).map(|j| interp.eval(theta.eval(j as f64 / n as f64))).collect();
        out[0] = pts[0];
        out[n] = pts[n];
        curves.push(out);
    }
    let resampled = if changed {
        let mut next = state.with_curves(&curves);
        next.param_epoch = state.param_epoch;
        next
    } else {
        state.clone()
    };
    check_regularity(&resampled, tol)?;
    let polished = crate::solver::project_boundary(&resampled, mu, tol)?;
    check_regularity(&polished, tol)?;
    Ok(polished)
}

fn check_regularity(state: &NetworkState, tol: &Tolerances) -> Result<()> {
    state
        .validate()
        .map_err(|e| Error::Reparametrization(format!("resampled network is not regular: {e}")))?;
    for c in 0..state.curve_count() {
        let d1 = state.stencils(c).differentiate(1, &state.curve_points(c));
        let speeds: Vec<f64> = d1.iter().map(|v| v.norm()).collect();
        let length = crate::geometry::arclength_weights(&speeds, state.topology().is_closed(c)).iter().sum::<f64>();
        let min = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        if min < tol.min_speed_ratio * length {
            return Err(Error::Reparametrization(format!(
                "curve {c} speed dropped to {min:e} (length {length:e})"
            )));
        }
    }
    Ok(())
}

/// Resamples every curve at uniform arclength spacing. End nodes stay put
/// (node 0 for closed curves); `param_epoch` is incremented.
pub fn reparametrize_constant_speed(state: &NetworkState) -> NetworkState {
    let n = state.grid_n();
    let curves: Vec<Vec<Vec2>> = (0..state.curve_count())
        .map(|c| {
            let pts = state.curve_points(c);
            let periodic = state.topology().is_closed(c);
            let interp = LocalInterpolant::new(&pts, periodic);
            let h = 1.0 / n as f64;
            let speed = |x: f64| interp.eval_with_derivative(x).1.norm();
            let cumulative: Vec<f64> = std::iter::once(0.0)
                .chain((0..n).scan(0.0, |acc, i| {
                    let x0 = i as f64 * h;
                    *acc += gauss_legendre_8(x0, x0 + h, speed);
                    Some(*acc)
                }))
                .collect();
            let total = cumulative[n];
            let mut out = Vec::with_capacity(n + 1);
            out.push(pts[0]);
            let mut i = 0;
            for j in 1..n {
                let target = total * j as f64 / n as f64;
                while i + 1 < n && cumulative[i + 1] < target {
                    i += 1;
                }
                let x0 = i as f64 * h;
                let (s0, s1) = (cumulative[i], cumulative[i + 1]);
                let mut x = x0 + h * ((target - s0) / (s1 - s0)).clamp(0.0, 1.0);
                for _ in 0..8 {
                    let f = s0 + gauss_legendre_8(x0, x, speed) - target;
                    let dx = f / speed(x);
                    x = (x - dx).clamp(x0, x0 + h);
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                out.push(interp.eval(x));
            }
            out.push(pts[n]);
            out
        })
        .collect();
    state.with_curves(&curves)
}
