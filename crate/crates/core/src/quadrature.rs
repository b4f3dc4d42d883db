//! Gauss–Legendre rules and composite grids built from them.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A one-dimensional quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Grid {
    /// A single `n`-point rule on `[lo, hi]`.
    pub fn gauss_legendre(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_breakpoints(&[lo, hi], n)
    }

    /// `panels` equal panels, each carrying an `order`-point rule.
    pub fn composite(lo: f64, hi: f64, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidArgument("at least one panel required".into()));
        }
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
            .collect();
        Self::from_breakpoints(&breaks, order)
    }

    /// Panels of width `h0` next to `center`, growing by `ratio` away from it
    /// and clipped to `[lo, hi]`.
    pub fn graded(
        lo: f64,
        hi: f64,
        center: f64,
        h0: f64,
        ratio: f64,
        order: usize,
    ) -> Result<Self> {
        Self::graded_capped(lo, hi, center, h0, ratio, f64::INFINITY, order)
    }

    /// As [`Grid::graded`], with panel widths never exceeding `h_max`.
    pub fn graded_capped(
        lo: f64,
        hi: f64,
        center: f64,
        h0: f64,
        ratio: f64,
        h_max: f64,
        order: usize,
    ) -> Result<Self> {
        if !(lo < hi)
            || !(h0 > 0.0)
            || !(ratio >= 1.0)
            || !(h_max >= h0)
            || !(lo..=hi).contains(&center)
        {
            return Err(Error::InvalidArgument("bad graded grid parameters".into()));
        }
        let mut left = Vec::new();
        let (mut x, mut h) = (center, h0);
        while x > lo {
            x = (x - h).max(lo);
            left.push(x);
            h = (h * ratio).min(h_max);
        }
        let mut breaks: Vec<f64> = left.into_iter().rev().collect();
        breaks.push(center);
        let (mut x, mut h) = (center, h0);
        while x < hi {
            x = (x + h).min(hi);
            breaks.push(x);
            h = (h * ratio).min(h_max);
        }
        breaks.dedup();
        Self::from_breakpoints(&breaks, order)
    }

    /// One `order`-point rule on each interval between consecutive breakpoints.
    pub fn from_breakpoints(breaks: &[f64], order: usize) -> Result<Self> {
        if breaks.len() < 2 || order == 0 {
            return Err(Error::InvalidArgument(
                "need two breakpoints and a positive order".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "breakpoints must be finite and increasing".into(),
            ));
        }
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for b in breaks.windows(2) {
            let half = 0.5 * (b[1] - b[0]);
            let mid = 0.5 * (b[1] + b[0]);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(Grid {
            nodes,
            weights,
            lo: breaks[0],
            hi: breaks[breaks.len() - 1],
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// `Σ w_i v_i` with pairwise summation.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate(&self.sample(f))
    }

    /// Bitwise identity of nodes and weights.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_point_rule_matches_closed_form() {
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - r).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn large_rule_weights_sum_to_two() {
        for n in [64, 256, 512] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            assert!(x.windows(2).all(|p| p[1] > p[0]));
        }
    }

    #[test]
    fn exponential_and_oscillatory_integrals() {
        let g = Grid::gauss_legendre(0.0, 1.0, 20).unwrap();
        assert!((g.integrate_fn(|x| x.exp()) - (1.0f64.exp() - 1.0)).abs() < 1e-14);
        let g = Grid::composite(0.0, 10.0, 40, 16).unwrap();
        let exact = (1.0 - (50.0f64).cos()) / 5.0;
        assert!((g.integrate_fn(|x| (5.0 * x).sin()) - exact).abs() < 1e-12);
    }

    #[test]
    fn graded_grid_covers_interval() {
        let g = Grid::graded(0.0, 2000.0, 1000.0, 0.05, 1.15, 16).unwrap();
        assert!((g.integrate_fn(|_| 1.0) - 2000.0).abs() < 1e-9);
        assert_eq!(g.bounds(), (0.0, 2000.0));
        let s = 0.7;
        let gauss = g.integrate_fn(|x| (-(x - 1000.0) * (x - 1000.0) / (2.0 * s * s)).exp());
        assert!((gauss - s * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(Grid::from_breakpoints(&[1.0, 0.0], 4).is_err());
        assert!(Grid::composite(0.0, 1.0, 0, 4).is_err());
        assert!(Grid::graded(0.0, 1.0, 2.0, 0.1, 1.1, 4).is_err());
    }

    proptest! {
        #[test]
        fn exact_for_polynomials_up_to_degree_2n_minus_1(n in 1usize..12, a in -2.0f64..0.0, b in 0.1f64..2.0) {
            let g = Grid::gauss_legendre(a, b, n).unwrap();
            let d = 2 * n - 1;
            let got = g.integrate_fn(|x| x.powi(d as i32));
            let exact = (b.powi(d as i32 + 1) - a.powi(d as i32 + 1)) / (d as f64 + 1.0);
            prop_assert!((got - exact).abs() < 1e-11 * (1.0 + exact.abs()));
        }
    }
}
