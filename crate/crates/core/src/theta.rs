//! Boundary-matched reparametrizations `θ: [0, 1] → [0, 1]` with
//! `θ(0) = 0`, `θ(1) = 1`, `θ'(0) = θ'(1) = 1`, `θ''(0) = a`, `θ''(1) = b`
//! and `θ' ≥ 1/4`.

use crate::quadrature::gauss_legendre_8;

/// Lower bound required of `θ'`.
pub const MIN_SLOPE: f64 = 0.25;

/// Grid used to verify `θ' ≥ 1/4`.
const CHECK_POINTS: usize = 20_000;

const MOLLIFIER_PIECES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum Theta {
    /// `x + x^2 (1-x)^2 (a/2 + (b-a) x / 2)`.
    Quintic { a: f64, b: f64 },
    /// Taylor pieces at both ends joined by a mollified linear middle piece.
    Mollified(MollifiedTheta),
}

/// Builds `θ` for end second derivatives `a` and `b`: the quintic when it
/// is monotone enough, otherwise the mollified piecewise construction.
pub fn build_theta(a: f64, b: f64) -> Theta {
    let quintic = Theta::Quintic { a, b };
    if quintic.min_slope() >= MIN_SLOPE {
        return quintic;
    }
    log::debug!("quintic θ rejected for a = {a}, b = {b}; using the mollified construction");
    Theta::Mollified(MollifiedTheta::new(a, b))
}

impl Theta {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Theta::Quintic { a, b } => {
                let x2 = x * x;
                let y = 1.0 - x;
                x + x2 * y * y * (0.5 * a + 0.5 * (b - a) * x)
            }
            Theta::Mollified(m) => m.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Theta::Quintic { a, b } => {
                // p = x^2 (1-x)^2 q,  q = a/2 + (b-a) x / 2
                let y = 1.0 - x;
                let q = 0.5 * a + 0.5 * (b - a) * x;
                let w = x * x * y * y;
                let dw = 2.0 * x * y * (y - x);
                1.0 + dw * q + w * 0.5 * (b - a)
            }
            Theta::Mollified(m) => m.derivative(x),
        }
    }

    pub fn is_quintic(&self) -> bool {
        matches!(self, Theta::Quintic { .. })
    }

    /// Smallest `θ'` over a uniform check grid on `[0, 1]`.
    pub fn min_slope(&self) -> f64 {
        (0..=CHECK_POINTS)
            .map(|i| self.derivative(i as f64 / CHECK_POINTS as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Construction for large `|a|` or `|b|`.
///
/// With `δ ≤ min(1/12, 1/(6 max(|a|, |b|)))`, the piecewise function `g` is
/// `p(x) = x + a x^2 / 2` left of `2δ`, `q(x) = x + b (x-1)^2 / 2` right of
/// `1 - 2δ`, and linear in between. `g` is mollified at width `ε = δ/20` and
/// blended back to `p` on `[0, δ]` and to `q` on `[1-δ, 1]` with smooth
/// cut-offs, so the end jets are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedTheta {
    a: f64,
    b: f64,
    delta: f64,
    eps: f64,
    left: f64,
    right: f64,
    slope: f64,
}

impl MollifiedTheta {
    fn new(a: f64, b: f64) -> Self {
        let scale = a.abs().max(b.abs());
        let delta = (1.0 / 12.0f64).min(1.0 / (6.0 * scale));
        let left = 2.0 * delta;
        let right = 1.0 - 2.0 * delta;
        let mut m = MollifiedTheta {
            a,
            b,
            delta,
            eps: delta / 20.0,
            left,
            right,
            slope: 0.0,
        };
        m.slope = (m.q(right) - m.p(left)) / (right - left);
        m
    }

    fn p(&self, x: f64) -> f64 {
        x + 0.5 * self.a * x * x
    }

    fn q(&self, x: f64) -> f64 {
        x + 0.5 * self.b * (x - 1.0) * (x - 1.0)
    }

    fn g(&self, x: f64) -> f64 {
        if x <= self.left {
            self.p(x)
        } else if x >= self.right {
            self.q(x)
        } else {
            self.p(self.left) + self.slope * (x - self.left)
        }
    }

    fn dg(&self, x: f64) -> f64 {
        if x <= self.left {
            1.0 + self.a * x
        } else if x >= self.right {
            1.0 + self.b * (x - 1.0)
        } else {
            self.slope
        }
    }

    /// `∫ f(x - ε t) ρ(t) dt / ∫ ρ(t) dt`, both integrals on the same
    /// pieces (eight fixed ones, further split at the kinks of `g`) so that
    /// constants are reproduced exactly.
    fn mollify(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut cuts: Vec<f64> = (0..=MOLLIFIER_PIECES).map(|i| -1.0 + 2.0 * i as f64 / MOLLIFIER_PIECES as f64).collect();
        for k in [self.left, self.right] {
            let t = (x - k) / self.eps;
            if t > -1.0 && t < 1.0 {
                cuts.push(t);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let (mut num, mut den) = (0.0, 0.0);
        for w in cuts.windows(2) {
            num += gauss_legendre_8(w[0], w[1], |t| f(x - self.eps * t) * bump(t));
            den += gauss_legendre_8(w[0], w[1], bump);
        }
        num / den
    }

    fn cutoffs(&self, x: f64) -> (f64, f64, f64, f64) {
        let w = 0.5 * self.delta;
        let left = 1.0 - smooth_step((x - self.delta) / w);
        let right = smooth_step((x - (1.0 - 1.5 * self.delta)) / w);
        let dleft = -smooth_step_derivative((x - self.delta) / w) / w;
        let dright = smooth_step_derivative((x - (1.0 - 1.5 * self.delta)) / w) / w;
        (left, right, dleft, dright)
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= self.delta {
            return self.p(x);
        }
        if x >= 1.0 - self.delta {
            return self.q(x);
        }
        let (l, r, _, _) = self.cutoffs(x);
        let smooth = self.mollify(x, |y| self.g(y));
        l * self.p(x) + r * self.q(x) + (1.0 - l - r) * smooth
    }

    fn derivative(&self, x: f64) -> f64 {
        if x <= self.delta {
            return 1.0 + self.a * x;
        }
        if x >= 1.0 - self.delta {
            return 1.0 + self.b * (x - 1.0);
        }
        let (l, r, dl, dr) = self.cutoffs(x);
        let smooth = self.mollify(x, |y| self.g(y));
        let dsmooth = self.mollify(x, |y| self.dg(y));
        l * (1.0 + self.a * x) + r * (1.0 + self.b * (x - 1.0)) + (1.0 - l - r) * dsmooth
            + dl * (self.p(x) - smooth)
            + dr * (self.q(x) - smooth)
    }
}

/// Standard mollifier profile on `(-1, 1)` (unnormalized).
fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn dpsi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let (u, v) = (psi(t), psi(1.0 - t));
    u / (u + v)
}

fn smooth_step_derivative(t: f64) -> f64 {
    let (u, v) = (psi(t), psi(1.0 - t));
    let (du, dv) = (dpsi(t), -dpsi(1.0 - t));
    let s = u + v;
    (du * s - u * (du + dv)) / (s * s)
}
