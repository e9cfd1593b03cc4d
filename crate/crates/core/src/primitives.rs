//! Analytic curve primitives used to build sampled networks.

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss_legendre_8;
use crate::vec2::Vec2;

/// One curve of a scene, parametrized over `x ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    /// Straight segment traversed at constant speed.
    Segment { from: Vec2, to: Vec2 },
    /// Circular arc `center + radius·(cos φ, sin φ)`, `φ = start_angle + sweep·x`.
    /// A positive sweep runs counter-clockwise.
    Arc {
        center: Vec2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
    /// Natural cubic spline through the control points, at uniform parameter
    /// spacing.
    CubicSpline { points: Vec<Vec2> },
    /// Arclength-parametrized curve whose curvature is a sum of smooth
    /// bumps. Straight wherever no bump is supported, in particular near
    /// both ends when the supports stay inside `(0, 1)`.
    Bent {
        start: Vec2,
        heading: f64,
        length: f64,
        bumps: Vec<Bump>,
    },
}

/// Curvature bump of a [`Primitive::Bent`] curve: supported on `support`
/// (fractions of the length), integrating to `turning`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub support: [f64; 2],
    pub turning: f64,
}

impl Bump {
    pub fn new(a: f64, b: f64, turning: f64) -> Self {
        Bump {
            support: [a, b],
            turning,
        }
    }
}

/// Smoothness of the curvature bump: `(w(1-w))^BUMP_POWER`.
const BUMP_POWER: u32 = 6;

impl Primitive {
    /// Point at parameter `x`.
    pub fn eval(&self, x: f64) -> Vec2 {
        self.eval_many(&[x])[0]
    }

    /// Points at the (ascending) parameters `xs`.
    pub fn eval_many(&self, xs: &[f64]) -> Vec<Vec2> {
        match self {
            Primitive::Segment { from, to } => xs.iter().map(|&x| from.lerp(*to, x)).collect(),
            Primitive::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => xs
                .iter()
                .map(|&x| *center + Vec2::from_angle(start_angle + sweep * x) * *radius)
                .collect(),
            Primitive::CubicSpline { points } => {
                let spline = NaturalSpline::new(points);
                xs.iter().map(|&x| spline.eval(x)).collect()
            }
            Primitive::Bent {
                start,
                heading,
                length,
                bumps,
            } => {
                let bent = BentProfile {
                    heading: *heading,
                    length: *length,
                    bumps: bumps.clone(),
                };
                bent.positions(*start, xs)
            }
        }
    }

    /// Samples at `x_j = j / n`, `j = 0..=n`.
    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        let xs: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let mut pts = self.eval_many(&xs);
        // ends exactly where the primitive says they are
        pts[0] = self.start();
        pts[n] = self.finish();
        pts
    }

    pub fn start(&self) -> Vec2 {
        match self {
            Primitive::Segment { from, .. } => *from,
            Primitive::Bent { start, .. } => *start,
            Primitive::CubicSpline { points } => points[0],
            _ => self.eval_many(&[0.0])[0],
        }
    }

    pub fn finish(&self) -> Vec2 {
        match self {
            Primitive::Segment { to, .. } => *to,
            Primitive::CubicSpline { points } => points[points.len() - 1],
            _ => self.eval_many(&[1.0])[0],
        }
    }

    /// Exact length where a closed form exists.
    pub fn length(&self) -> Option<f64> {
        match self {
            Primitive::Segment { from, to } => Some(from.distance(*to)),
            Primitive::Arc { radius, sweep, .. } => Some(radius.abs() * sweep.abs()),
            Primitive::Bent { length, .. } => Some(*length),
            Primitive::CubicSpline { .. } => None,
        }
    }

    /// Checks the parameters describe a usable curve.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        match self {
            Primitive::Segment { from, to } => {
                if !from.is_finite() || !to.is_finite() {
                    return Err("segment endpoints must be finite".into());
                }
            }
            Primitive::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                if !center.is_finite() || !finite(*radius) || !finite(*start_angle) || !finite(*sweep) {
                    return Err("arc parameters must be finite".into());
                }
            }
            Primitive::CubicSpline { points } => {
                if points.len() < 2 {
                    return Err("cubic spline needs at least two control points".into());
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err("cubic spline control points must be finite".into());
                }
            }
            Primitive::Bent {
                start,
                heading,
                length,
                bumps,
            } => {
                if !start.is_finite() || !finite(*heading) || !finite(*length) {
                    return Err("bent curve parameters must be finite".into());
                }
                for b in bumps {
                    if !finite(b.turning) {
                        return Err("bent curve turning must be finite".into());
                    }
                    if !(0.0 <= b.support[0] && b.support[0] < b.support[1] && b.support[1] <= 1.0) {
                        return Err("bent curve support must satisfy 0 <= a < b <= 1".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Curvature profile of a [`Primitive::Bent`] curve as a function of arclength.
#[derive(Clone, Debug)]
pub struct BentProfile {
    pub heading: f64,
    pub length: f64,
    pub bumps: Vec<Bump>,
}

impl BentProfile {
    fn local(&self, b: &Bump, s: f64) -> (f64, f64) {
        let width = (b.support[1] - b.support[0]) * self.length;
        (((s - b.support[0] * self.length) / width).clamp(0.0, 1.0), width)
    }

    /// Tangent angle at arclength `s`.
    pub fn angle(&self, s: f64) -> f64 {
        self.heading
            + self
                .bumps
                .iter()
                .map(|b| b.turning * regularized_beta_sym(self.local(b, s).0, BUMP_POWER))
                .sum::<f64>()
    }

    /// Signed curvature at arclength `s` (counter-clockwise positive).
    pub fn curvature(&self, s: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let (w, width) = self.local(b, s);
                if w <= 0.0 || w >= 1.0 {
                    0.0
                } else {
                    b.turning * bump_density(w, BUMP_POWER) / width
                }
            })
            .sum()
    }

    fn positions(&self, start: Vec2, xs: &[f64]) -> Vec<Vec2> {
        // integrate the unit tangent piecewise, splitting at the support
        // edges where the profile is only finitely smooth
        let l = self.length;
        let max_piece = l / 512.0;
        let breaks: Vec<f64> = self.bumps.iter().flat_map(|b| [b.support[0] * l, b.support[1] * l]).collect();
        let mut out = Vec::with_capacity(xs.len());
        let mut s_prev = 0.0;
        let mut p = start;
        for &x in xs {
            let s = x * l;
            let mut cuts = vec![s_prev];
            cuts.extend(breaks.iter().copied().filter(|&b| b > s_prev && b < s));
            cuts.push(s);
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let pieces = ((b - a) / max_piece).ceil().max(1.0) as usize;
                let step = (b - a) / pieces as f64;
                for k in 0..pieces {
                    let lo = a + k as f64 * step;
                    p += gauss_legendre_8(lo, lo + step, |t| Vec2::from_angle(self.angle(t)));
                }
            }
            out.push(p);
            s_prev = s;
        }
        out
    }
}

/// Normalized bump `(w(1-w))^m / B(m+1, m+1)` on `[0, 1]`.
fn bump_density(w: f64, m: u32) -> f64 {
    let beta = beta_int(m + 1, m + 1);
    (w * (1.0 - w)).powi(m as i32) / beta
}

/// `I_w(m+1, m+1)`, the cumulative of [`bump_density`].
fn regularized_beta_sym(w: f64, m: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let n = 2 * m + 1;
    (m + 1..=n)
        .map(|j| binomial(n, j) * w.powi(j as i32) * (1.0 - w).powi((n - j) as i32))
        .sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Beta function for positive integer arguments.
fn beta_int(a: u32, b: u32) -> f64 {
    let fact = |k: u32| (1..=k).fold(1.0, |acc, i| acc * i as f64);
    fact(a - 1) * fact(b - 1) / fact(a + b - 1)
}

/// Natural cubic spline through points at uniform parameters on [0, 1].
struct NaturalSpline {
    points: Vec<Vec2>,
    second: Vec<Vec2>,
    h: f64,
}

impl NaturalSpline {
    fn new(points: &[Vec2]) -> Self {
        let m = points.len();
        let h = 1.0 / (m - 1) as f64;
        let mut second = vec![Vec2::ZERO; m];
        if m > 2 {
            // tridiagonal system h/6 M_{i-1} + 2h/3 M_i + h/6 M_{i+1} = Δ²P / h
            let k = m - 2;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<Vec2> = (1..m - 1)
                .map(|i| (points[i + 1] - points[i] * 2.0 + points[i - 1]) * (6.0 / (h * h)))
                .collect();
            for i in 1..k {
                let f = 1.0 / diag[i - 1];
                diag[i] -= f;
                let prev = rhs[i - 1];
                rhs[i] -= prev * f;
            }
            let mut sol = vec![Vec2::ZERO; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - sol[i + 1]) / diag[i];
            }
            second[1..m - 1].copy_from_slice(&sol);
        }
        NaturalSpline {
            points: points.to_vec(),
            second,
            h,
        }
    }

    fn eval(&self, x: f64) -> Vec2 {
        let m = self.points.len();
        let i = ((x / self.h).floor() as isize).clamp(0, m as isize - 2) as usize;
        let t0 = i as f64 * self.h;
        let a = (t0 + self.h - x) / self.h;
        let b = (x - t0) / self.h;
        let h2 = self.h * self.h / 6.0;
        self.points[i] * a
            + self.points[i + 1] * b
            + (self.second[i] * (a * a * a - a) + self.second[i + 1] * (b * b * b - b)) * h2
    }
}
