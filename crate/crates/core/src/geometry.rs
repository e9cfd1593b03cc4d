//! Discrete differential geometry of sampled curves.
//!
//! Every field is evaluated from the parameter derivatives `γ_x … γ_xxxx`
//! through closed-form expressions, so no arclength resampling is needed.
//! Arrays have one entry per distinct node: `grid_n + 1` for open curves,
//! `grid_n` for closed ones (the duplicated last node is dropped).
//!
//! Conventions: `τ = γ_x / |γ_x|`, `ν` is `τ` rotated counter-clockwise by a
//! right angle, and `k = ⟨γ_ss, ν⟩`. A counter-clockwise circle of radius
//! `r` therefore has `k = 1/r` with `ν` pointing inward. The flow moves each
//! point with velocity `-A ν - T τ` where `A = 2 k_ss + k^3 - mu k`.

use serde::{Deserialize, Serialize};

use crate::model::NetworkState;
use crate::vec2::Vec2;

/// Parameter derivatives of one curve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Derivatives {
    pub d1: Vec<Vec2>,
    pub d2: Vec<Vec2>,
    pub d3: Vec<Vec2>,
    pub d4: Vec<Vec2>,
}

/// Parameter derivatives up to order four at every distinct node.
pub fn derivatives(state: &NetworkState, curve: usize) -> Derivatives {
    let pts = state.curve_points(curve);
    let set = state.stencils(curve);
    Derivatives {
        d1: set.differentiate(1, &pts),
        d2: set.differentiate(2, &pts),
        d3: set.differentiate(3, &pts),
        d4: set.differentiate(4, &pts),
    }
}

/// Local jet `(γ_x, γ_xx, γ_xxx, γ_xxxx)` at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub g1: Vec2,
    pub g2: Vec2,
    pub g3: Vec2,
    pub g4: Vec2,
}

impl Jet {
    pub fn speed(&self) -> f64 {
        self.g1.norm()
    }

    pub fn tangent(&self) -> Vec2 {
        self.g1 / self.g1.norm()
    }

    pub fn normal(&self) -> Vec2 {
        self.tangent().perp()
    }

    /// `(k, k_x, k_xx)`: curvature and its parameter derivatives.
    pub fn curvature_x(&self) -> (f64, f64, f64) {
        let Jet { g1, g2, g3, g4 } = *self;
        let l2 = g1.norm_sq();
        let l = l2.sqrt();
        let l3 = l2 * l;
        let l5 = l3 * l2;
        let l7 = l5 * l2;
        let c = g1.cross(g2);
        let d = g1.dot(g2);
        let c13 = g1.cross(g3);
        let k = c / l3;
        let k_x = c13 / l3 - 3.0 * c * d / l5;
        let k_xx = (g2.cross(g3) + g1.cross(g4)) / l3 - 6.0 * c13 * d / l5 - 3.0 * c * (g2.norm_sq() + g1.dot(g3)) / l5
            + 15.0 * c * d * d / l7;
        (k, k_x, k_xx)
    }

    /// `(k, k_s, k_ss)`.
    pub fn curvature_s(&self) -> (f64, f64, f64) {
        let (k, k_x, k_xx) = self.curvature_x();
        let l2 = self.g1.norm_sq();
        let l = l2.sqrt();
        let d = self.g1.dot(self.g2);
        (k, k_x / l, k_xx / l2 - k_x * d / (l2 * l2))
    }

    /// The vector `W` with `⟨W, ν⟩ = A` and `⟨W, τ⟩ = T`; the flow moves the
    /// point with velocity `-W`.
    pub fn motion(&self, mu: f64) -> Vec2 {
        let Jet { g1, g2, g3, g4 } = *self;
        let l2 = g1.norm_sq();
        let l4 = l2 * l2;
        let l6 = l4 * l2;
        let l8 = l4 * l4;
        let d = g1.dot(g2);
        g4 * (2.0 / l4) - g3 * (12.0 * d / l6) - g2 * (5.0 * g2.norm_sq() / l6) - g2 * (8.0 * g3.dot(g1) / l6)
            + g2 * (35.0 * d * d / l8)
            - g2 * (mu / l2)
    }

    /// Part of [`Jet::motion`] that is not the leading `2 γ_xxxx / |γ_x|^4`.
    pub fn motion_lower_order(&self, mu: f64) -> Vec2 {
        let l2 = self.g1.norm_sq();
        self.motion(mu) - self.g4 * (2.0 / (l2 * l2))
    }
}

impl Derivatives {
    pub fn jet(&self, j: usize) -> Jet {
        Jet {
            g1: self.d1[j],
            g2: self.d2[j],
            g3: self.d3[j],
            g4: self.d4[j],
        }
    }

    pub fn len(&self) -> usize {
        self.d1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d1.is_empty()
    }
}

/// Derived fields of one curve at every distinct node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveFields {
    pub derivatives: Derivatives,
    pub speed: Vec<f64>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    pub k: Vec<f64>,
    pub k_s: Vec<f64>,
    pub k_ss: Vec<f64>,
    pub k_sss: Vec<f64>,
    pub k_ssss: Vec<f64>,
    /// Normal velocity coefficient `A = 2 k_ss + k^3 - mu k`.
    pub a: Vec<f64>,
    /// Tangential velocity coefficient `T`.
    pub t: Vec<f64>,
    /// Point velocity `-A ν - T τ`.
    pub velocity: Vec<Vec2>,
    /// Trapezoidal arclength weights.
    pub ds: Vec<f64>,
}

impl CurveFields {
    pub fn compute(state: &NetworkState, curve: usize, mu: f64) -> Self {
        let derivatives = derivatives(state, curve);
        let set = state.stencils(curve);
        let m = derivatives.len();
        let mut f = CurveFields {
            speed: Vec::with_capacity(m),
            tangent: Vec::with_capacity(m),
            normal: Vec::with_capacity(m),
            k: Vec::with_capacity(m),
            k_s: Vec::with_capacity(m),
            k_ss: Vec::with_capacity(m),
            a: Vec::with_capacity(m),
            t: Vec::with_capacity(m),
            velocity: Vec::with_capacity(m),
            ..Default::default()
        };
        for j in 0..m {
            let jet = derivatives.jet(j);
            let speed = jet.speed();
            let tau = jet.g1 / speed;
            let (k, k_s, k_ss) = jet.curvature_s();
            let w = jet.motion(mu);
            f.speed.push(speed);
            f.tangent.push(tau);
            f.normal.push(tau.perp());
            f.k.push(k);
            f.k_s.push(k_s);
            f.k_ss.push(k_ss);
            f.a.push(2.0 * k_ss + k * k * k - mu * k);
            f.t.push(w.dot(tau));
            f.velocity.push(-w);
        }
        let d_s = |v: &[f64]| -> Vec<f64> {
            set.differentiate(1, v).iter().zip(&f.speed).map(|(d, s)| d / s).collect()
        };
        f.k_sss = d_s(&f.k_ss);
        f.k_ssss = d_s(&f.k_sss);
        f.ds = arclength_weights(&f.speed, set.periodic);
        f.derivatives = derivatives;
        f
    }

    pub fn length(&self) -> f64 {
        self.ds.iter().sum()
    }

    /// `∫ (k^2 + mu) ds`.
    pub fn energy(&self, mu: f64) -> f64 {
        self.k.iter().zip(&self.ds).map(|(k, w)| (k * k + mu) * w).sum()
    }

    /// `∫ f^2 ds` for a nodal field.
    pub fn l2_sq(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.ds).map(|(v, w)| v * v * w).sum()
    }

    /// `A_ss`, obtained from the curvature derivatives.
    pub fn a_ss(&self, mu: f64) -> Vec<f64> {
        (0..self.k.len())
            .map(|j| {
                let (k, ks, kss) = (self.k[j], self.k_s[j], self.k_ss[j]);
                2.0 * self.k_ssss[j] + 3.0 * k * k * kss + 6.0 * k * ks * ks - mu * kss
            })
            .collect()
    }

    /// Both forms of the right side of the curvature evolution equation.
    pub fn kt_rhs(&self, mu: f64) -> KtRhs {
        let a_ss = self.a_ss(mu);
        let mut expanded = Vec::with_capacity(self.k.len());
        let mut compact = Vec::with_capacity(self.k.len());
        for j in 0..self.k.len() {
            let (k, ks, kss, t) = (self.k[j], self.k_s[j], self.k_ss[j], self.t[j]);
            let k2 = k * k;
            expanded.push(
                -2.0 * self.k_ssss[j] - 5.0 * k2 * kss - 6.0 * k * ks * ks - t * ks - k2 * k2 * k + mu * (kss + k2 * k),
            );
            compact.push(-a_ss[j] - t * ks - k2 * self.a[j]);
        }
        KtRhs { expanded, compact }
    }
}

/// Trapezoidal weights `|γ_x| dx` on the uniform parameter grid.
pub fn arclength_weights(speed: &[f64], periodic: bool) -> Vec<f64> {
    let m = speed.len();
    let n = if periodic { m } else { m - 1 };
    let h = 1.0 / n as f64;
    speed
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let end = !periodic && (j == 0 || j == m - 1);
            s * if end { 0.5 * h } else { h }
        })
        .collect()
}

/// Fields of every curve of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFields {
    pub mu: f64,
    pub curves: Vec<CurveFields>,
}

impl GeometryFields {
    pub fn compute(state: &NetworkState, mu: f64) -> Self {
        GeometryFields {
            mu,
            curves: (0..state.curve_count()).map(|c| CurveFields::compute(state, c, mu)).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.curves.iter().map(|c| c.energy(self.mu)).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(CurveFields::length).sum()
    }
}

/// Right side of `∂_t k` in expanded and compact form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtRhs {
    pub expanded: Vec<f64>,
    pub compact: Vec<f64>,
}

impl KtRhs {
    /// Largest pointwise disagreement between the two forms.
    pub fn discrepancy(&self) -> f64 {
        self.expanded.iter().zip(&self.compact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Curvature `k` and its arclength derivatives `k_s`, `k_ss`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    pub k: Vec<f64>,
    pub k_s: Vec<f64>,
    pub k_ss: Vec<f64>,
}

pub fn curvature(state: &NetworkState, curve: usize) -> Curvature {
    let d = derivatives(state, curve);
    let (mut k, mut k_s, mut k_ss) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..d.len() {
        let (a, b, c) = d.jet(j).curvature_s();
        k.push(a);
        k_s.push(b);
        k_ss.push(c);
    }
    Curvature { k, k_s, k_ss }
}

/// `Σ_curves ∫ (k^2 + mu) ds`.
pub fn elastic_energy(state: &NetworkState, mu: f64) -> f64 {
    (0..state.curve_count()).map(|c| CurveFields::compute(state, c, mu).energy(mu)).sum()
}

pub fn normal_velocity(state: &NetworkState, curve: usize, mu: f64) -> Vec<f64> {
    CurveFields::compute(state, curve, mu).a
}

pub fn tangential_velocity(state: &NetworkState, curve: usize, mu: f64) -> Vec<f64> {
    let d = derivatives(state, curve);
    (0..d.len())
        .map(|j| {
            let jet = d.jet(j);
            jet.motion(mu).dot(jet.tangent())
        })
        .collect()
}

pub fn curvature_time_rhs(state: &NetworkState, curve: usize, mu: f64) -> KtRhs {
    CurveFields::compute(state, curve, mu).kt_rhs(mu)
}

/// Trapezoidal length of one curve.
pub fn length(state: &NetworkState, curve: usize) -> f64 {
    let d1 = state.stencils(curve).differentiate(1, &state.curve_points(curve));
    let speed: Vec<f64> = d1.iter().map(|v| v.norm()).collect();
    arclength_weights(&speed, state.topology().is_closed(curve)).iter().sum()
}

pub fn total_length(state: &NetworkState) -> f64 {
    (0..state.curve_count()).map(|c| length(state, c)).sum()
}
