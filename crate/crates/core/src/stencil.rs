//! Finite-difference stencils on the uniform parameter grid `x_j = j / n`.
//!
//! Interior nodes use fourth-order centered stencils where the window fits,
//! second-order centered stencils next to the ends, and second-order
//! one-sided stencils at the ends themselves. Periodic grids use Fourier
//! spectral differentiation, which is exact for trigonometric polynomials
//! below the Nyquist frequency.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Highest derivative order provided by a [`StencilSet`].
pub const MAX_DERIVATIVE: usize = 4;

/// Finite-difference weights for derivatives `0..=max_order` at `z`, given
/// distinct abscissae `nodes` (Fornberg's recursion).
///
/// `result[m][j]` is the weight of `f(nodes[j])` in the `m`-th derivative.
pub fn fd_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One stencil: node offsets relative to the evaluation node and weights
/// already scaled by `n^order` (so they act directly on nodal values).
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub offsets: Vec<isize>,
    pub weights: Vec<f64>,
}

impl Stencil {
    fn build(offsets: Vec<isize>, order: usize, n: usize) -> Self {
        let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let w = fd_weights(0.0, &xs, order);
        let scale = (n as f64).powi(order as i32);
        let weights = w[order].iter().map(|v| v * scale).collect();
        Stencil { offsets, weights }
    }

    /// Circulant weights of the `order`-th derivative of the trigonometric
    /// interpolant through `n` equispaced periodic samples.
    fn spectral(order: usize, n: usize) -> Self {
        use std::f64::consts::PI;
        let half = n as isize / 2;
        let modes: Vec<(f64, f64)> = (-half..=half)
            .filter(|&k| n % 2 == 0 || k.unsigned_abs() * 2 < n)
            .map(|k| {
                // the Nyquist mode of an even grid is split between ±n/2
                let w = if n % 2 == 0 && k.unsigned_abs() * 2 == n { 0.5 } else { 1.0 };
                (k as f64, w)
            })
            .collect();
        let weights = (0..n)
            .map(|m| {
                let sum: f64 = modes
                    .iter()
                    .map(|&(k, w)| {
                        let omega = 2.0 * PI * k;
                        let phase = -omega * m as f64 / n as f64;
                        // Re[(i ω)^d e^{i phase}]
                        let mag = w * omega.powi(order as i32);
                        match order % 4 {
                            0 => mag * phase.cos(),
                            1 => -mag * phase.sin(),
                            2 => -mag * phase.cos(),
                            _ => mag * phase.sin(),
                        }
                    })
                    .sum();
                sum / n as f64
            })
            .collect();
        Stencil {
            offsets: (0..n as isize).collect(),
            weights,
        }
    }

    /// Applies the stencil at node `j` to a node-indexed sequence of values.
    /// For periodic sets, indices wrap modulo `period`.
    #[inline]
    pub fn apply<T, F>(&self, j: usize, period: Option<usize>, value: F) -> T
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
        F: Fn(usize) -> T,
    {
        let mut acc = T::default();
        for (&o, &w) in self.offsets.iter().zip(&self.weights) {
            let idx = match period {
                Some(p) => (j as isize + o).rem_euclid(p as isize) as usize,
                None => (j as isize + o) as usize,
            };
            acc = acc + value(idx) * w;
        }
        acc
    }

    /// Absolute node indices touched when applied at node `j`.
    pub fn nodes(&self, j: usize, period: Option<usize>) -> impl Iterator<Item = usize> + '_ {
        self.offsets.iter().map(move |&o| match period {
            Some(p) => (j as isize + o).rem_euclid(p as isize) as usize,
            None => (j as isize + o) as usize,
        })
    }
}

/// Stencils for derivative orders 1..=4 at every node of one grid.
#[derive(Debug)]
pub struct StencilSet {
    pub n: usize,
    pub periodic: bool,
    /// `by_order[d-1][j]`: stencil for derivative `d` at node `j`.
    by_order: Vec<Vec<Stencil>>,
}

impl StencilSet {
    fn new(n: usize, periodic: bool) -> Self {
        // a periodic stencil is translation invariant, so one copy serves
        // every node
        let by_order = (1..=MAX_DERIVATIVE)
            .map(|d| {
                if periodic {
                    vec![Stencil::spectral(d, n)]
                } else {
                    (0..=n).map(|j| Stencil::build(window(d, j, n), d, n)).collect()
                }
            })
            .collect();
        StencilSet {
            n,
            periodic,
            by_order,
        }
    }

    /// Shared, lazily built stencil set for an `n`-interval grid.
    pub fn get(n: usize, periodic: bool) -> Arc<StencilSet> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<StencilSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((n, periodic))
            .or_insert_with(|| Arc::new(StencilSet::new(n, periodic)))
            .clone()
    }

    #[inline]
    pub fn stencil(&self, order: usize, j: usize) -> &Stencil {
        let j = if self.periodic { 0 } else { j };
        &self.by_order[order - 1][j]
    }

    /// Period used for index wrapping, if any.
    #[inline]
    pub fn period(&self) -> Option<usize> {
        self.periodic.then_some(self.n)
    }

    /// Number of distinct nodes (`n` if periodic, `n + 1` otherwise).
    #[inline]
    pub fn node_count(&self) -> usize {
        if self.periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    /// Derivative of order `order` of `values` at every distinct node.
    pub fn differentiate<T>(&self, order: usize, values: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let period = self.period();
        (0..self.node_count())
            .map(|j| self.stencil(order, j).apply(j, period, |i| values[i]))
            .collect()
    }
}

/// Offsets of the stencil window for derivative `d` at node `j`.
fn window(d: usize, j: usize, n: usize) -> Vec<isize> {
    // Symmetric windows of 2r+1 points: r = 2 (d <= 2) or 3 (d >= 3) give
    // fourth order; r = 1 or 2 give second order.
    let r4 = if d <= 2 { 2 } else { 3 };
    let r2 = r4 - 1;
    let fits = |r: usize| j >= r && j + r <= n;
    if fits(r4) {
        return (-(r4 as isize)..=r4 as isize).collect();
    }
    if fits(r2) {
        return (-(r2 as isize)..=r2 as isize).collect();
    }
    // Second-order non-centered window of d + 2 points, clamped to [0, n].
    let m = d + 2;
    let start = if j < n / 2 { 0 } else { n + 1 - m };
    (start..start + m).map(|i| i as isize - j as isize).collect()
}
