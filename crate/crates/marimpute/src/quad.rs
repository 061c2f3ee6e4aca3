//! Tensor-product quadrature on axis-aligned boxes.
//!
//! Gauss-Legendre is the default; the midpoint rule is kept for densities
//! with jumps, where clustering nodes at the interval ends hurts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuadRule {
    GaussLegendre,
    Midpoint,
}

/// Per-dimension node count plus rule; ranges come from the mechanism.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub nodes: usize,
    pub rule: QuadRule,
}

impl GridSpec {
    pub fn new(nodes: usize, rule: QuadRule) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 8 nodes per dimension, got {nodes}"
            )));
        }
        Ok(Self { nodes, rule })
    }

    pub fn gauss(nodes: usize) -> Result<Self> {
        Self::new(nodes, QuadRule::GaussLegendre)
    }

    pub fn axis(&self, lo: f64, hi: f64) -> Axis {
        Axis::new(self.rule, self.nodes, lo, hi)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nodes: 32, rule: QuadRule::GaussLegendre }
    }
}

/// Quadrature nodes and weights on one interval.
#[derive(Debug, Clone)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn new(rule: QuadRule, n: usize, lo: f64, hi: f64) -> Self {
        match rule {
            QuadRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                Axis {
                    nodes: x.iter().map(|&t| mid + half * t).collect(),
                    weights: w.iter().map(|&wi| wi * half).collect(),
                }
            }
            QuadRule::Midpoint => {
                let h = (hi - lo) / n as f64;
                Axis {
                    nodes: (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(),
                    weights: vec![h; n],
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Iterates every tensor point of `axes`, calling `f(point, weight)`.
pub fn for_each_tensor_point<F: FnMut(&[f64], f64)>(axes: &[Axis], mut f: F) {
    let dims = axes.len();
    if dims == 0 {
        f(&[], 1.0);
        return;
    }
    let mut idx = vec![0usize; dims];
    let mut point = vec![0.0f64; dims];
    loop {
        let mut w = 1.0;
        for (k, axis) in axes.iter().enumerate() {
            point[k] = axis.nodes[idx[k]];
            w *= axis.weights[idx[k]];
        }
        f(&point, w);
        let mut k = dims;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // degree 2n-1 exactness
        let axis = Axis::new(QuadRule::GaussLegendre, 8, 0.0, 1.0);
        for k in 0..=15u32 {
            let got: f64 = axis
                .nodes
                .iter()
                .zip(&axis.weights)
                .map(|(&x, &w)| w * x.powi(k as i32))
                .sum();
            let want = 1.0 / (k as f64 + 1.0);
            assert!((got - want).abs() < 1e-13, "x^{k}: {got} vs {want}");
        }
    }

    #[test]
    fn gauss_legendre_gaussian_tail_accuracy() {
        let axis = Axis::new(QuadRule::GaussLegendre, 32, -8.0, 8.0);
        let got: f64 = axis
            .nodes
            .iter()
            .zip(&axis.weights)
            .map(|(&x, &w)| w * (-0.5 * x * x).exp())
            .sum();
        let want = (2.0 * std::f64::consts::PI).sqrt();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn midpoint_rule_weights() {
        let axis = Axis::new(QuadRule::Midpoint, 10, 0.0, 2.0);
        let total: f64 = axis.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let mean: f64 = axis
            .nodes
            .iter()
            .zip(&axis.weights)
            .map(|(&x, &w)| w * x)
            .sum();
        assert!((mean - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_volume() {
        let a = Axis::new(QuadRule::GaussLegendre, 8, 0.0, 1.0);
        let b = Axis::new(QuadRule::Midpoint, 9, 0.0, 3.0);
        let mut vol = 0.0;
        for_each_tensor_point(&[a, b], |_, w| vol += w);
        assert!((vol - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_spec_rejects_tiny_grids() {
        assert!(GridSpec::gauss(4).is_err());
        assert!(GridSpec::gauss(8).is_ok());
    }
}
