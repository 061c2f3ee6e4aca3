//! Bagged regression trees with empirical-distribution aggregation.
//!
//! The forest pools leaf memberships across trees into normalized weights
//! over the training rows, in the style of distributional forests: a draw
//! picks a training response with probability proportional to its pooled
//! weight, and the conditional-mean estimate is the weighted average. A
//! `per_tree_draw` switch instead samples one random tree and then one
//! random member of its leaf, matching the classic single-tree-at-a-time
//! imputation; the induced law is the same, only the mechanics differ.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::tree::{fit_tree, Tree, MIN_LEAF};
use super::ConditionalModel;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy)]
pub struct ForestOptions {
    pub trees: usize,
    pub min_leaf: usize,
    /// Features tried per split; defaults to `max(1, p/3)`.
    pub mtry: Option<usize>,
    /// Draw from one random tree instead of the pooled weights.
    pub per_tree_draw: bool,
    /// Impute with the aggregated mean instead of a draw.
    pub aggregate_mean: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            trees: 100,
            min_leaf: MIN_LEAF,
            mtry: None,
            per_tree_draw: false,
            aggregate_mean: false,
        }
    }
}

pub struct Forest {
    trees: Vec<Tree>,
    y: Vec<f64>,
    opts: ForestOptions,
}

pub fn fit_forest(xs: &[Vec<f64>], y: &[f64], opts: &ForestOptions, seed: u64) -> Result<Forest> {
    let n = xs.len();
    if n == 0 || n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "forest fit: {n} rows of features against {} targets",
            y.len()
        )));
    }
    if opts.trees == 0 {
        return Err(Error::InvalidConfig("forest needs at least one tree".into()));
    }
    let p = xs[0].len();
    let mtry = opts.mtry.unwrap_or_else(|| (p / 3).max(1)).min(p.max(1));
    let min_leaf = opts.min_leaf;
    let trees: Vec<Tree> = (0..opts.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(&[seed, 0x666f72657374, t as u64]);
            let boot: Vec<u32> =
                (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
            fit_tree(xs, y, &boot, min_leaf, Some(mtry), &mut rng)
        })
        .collect();
    Ok(Forest { trees, y: y.to_vec(), opts: *opts })
}

impl Forest {
    /// Pooled weights over training rows at query `x`; entries sum to one.
    pub fn weights(&self, x: &[f64]) -> Vec<(u32, f64)> {
        let mut acc: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
        let per_tree = 1.0 / self.trees.len() as f64;
        for tree in &self.trees {
            let members = tree.leaf_members(x);
            let w = per_tree / members.len() as f64;
            for &i in members {
                *acc.entry(i).or_insert(0.0) += w;
            }
        }
        let mut out: Vec<(u32, f64)> = acc.into_iter().collect();
        out.sort_by_key(|&(i, _)| i);
        out
    }

    fn weighted_mean(&self, x: &[f64]) -> f64 {
        self.weights(x).iter().map(|&(i, w)| w * self.y[i as usize]).sum()
    }

    fn tree_mean(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .trees
            .iter()
            .map(|t| {
                let members = t.leaf_members(x);
                members.iter().map(|&i| self.y[i as usize]).sum::<f64>()
                    / members.len() as f64
            })
            .sum();
        total / self.trees.len() as f64
    }
}

impl ConditionalModel for Forest {
    fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64 {
        if self.opts.aggregate_mean {
            return self.predict(x);
        }
        if self.opts.per_tree_draw {
            let tree = &self.trees[rng.gen_range(0..self.trees.len())];
            let members = tree.leaf_members(x);
            return self.y[members[rng.gen_range(0..members.len())] as usize];
        }
        let weights = self.weights(x);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(i, w) in &weights {
            acc += w;
            if u < acc {
                return self.y[i as usize];
            }
        }
        self.y[weights.last().expect("nonempty weights").0 as usize]
    }

    fn predict(&self, x: &[f64]) -> f64 {
        if self.opts.aggregate_mean {
            self.tree_mean(x)
        } else {
            self.weighted_mean(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn nonlinear_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = rng_from(&[seed]);
        let mut xs = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let e: f64 = StandardNormal.sample(&mut rng);
            xs.push(vec![a, b]);
            y.push((3.0 * std::f64::consts::PI * a).sin() * b + 0.1 * e);
        }
        (xs, y)
    }

    fn small_opts() -> ForestOptions {
        ForestOptions { trees: 50, ..Default::default() }
    }

    #[test]
    fn weights_are_a_probability_vector() {
        let (xs, y) = nonlinear_data(300, 1);
        let f = fit_forest(&xs, &y, &small_opts(), 7).unwrap();
        for q in [[0.1, 0.9], [0.5, 0.5], [0.95, 0.2]] {
            let w = f.weights(&q);
            let total: f64 = w.iter().map(|&(_, v)| v).sum();
            assert!((total - 1.0).abs() < 1e-12, "total {total}");
            assert!(w.iter().all(|&(_, v)| v > 0.0));
        }
    }

    #[test]
    fn fit_is_deterministic_in_the_seed() {
        let (xs, y) = nonlinear_data(200, 2);
        let a = fit_forest(&xs, &y, &small_opts(), 5).unwrap();
        let b = fit_forest(&xs, &y, &small_opts(), 5).unwrap();
        for q in [[0.2, 0.4], [0.7, 0.7]] {
            assert_eq!(a.predict(&q), b.predict(&q));
        }
        let c = fit_forest(&xs, &y, &small_opts(), 6).unwrap();
        assert_ne!(a.predict(&[0.2, 0.4]), c.predict(&[0.2, 0.4]));
    }

    #[test]
    fn beats_a_line_on_a_sine() {
        let (xs, y) = nonlinear_data(2000, 3);
        let (txs, ty) = nonlinear_data(500, 4);
        let forest = fit_forest(
            &xs,
            &y,
            &ForestOptions { aggregate_mean: true, ..small_opts() },
            9,
        )
        .unwrap();
        let line = super::super::fit_linear(&xs, &y).unwrap();
        let rmse = |f: &dyn Fn(&[f64]) -> f64| -> f64 {
            let sse: f64 =
                txs.iter().zip(&ty).map(|(x, &t)| (f(x) - t).powi(2)).sum();
            (sse / ty.len() as f64).sqrt()
        };
        let rf = rmse(&|x| forest.predict(x));
        let rl = rmse(&|x| line.predict(x));
        assert!(rf < 0.5 * rl, "forest {rf} vs linear {rl}");
    }

    #[test]
    fn draws_come_from_training_responses() {
        let (xs, y) = nonlinear_data(300, 5);
        for per_tree in [false, true] {
            let f = fit_forest(
                &xs,
                &y,
                &ForestOptions { per_tree_draw: per_tree, ..small_opts() },
                3,
            )
            .unwrap();
            let mut rng = rng_from(&[12]);
            for _ in 0..40 {
                let v = f.sample(&[0.4, 0.6], &mut rng);
                assert!(y.contains(&v), "per_tree={per_tree}");
            }
        }
    }

    #[test]
    fn conditional_location_tracked_by_draws() {
        // y jumps by 5 at x0 = 0.5; draws at x0 = 0.85 should sit near 5
        let mut rng = rng_from(&[21]);
        let n = 1500;
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.gen();
            let e: f64 = StandardNormal.sample(&mut rng);
            xs.push(vec![a]);
            y.push(if a > 0.5 { 5.0 } else { 0.0 } + e);
        }
        let f = fit_forest(&xs, &y, &small_opts(), 2).unwrap();
        let mut draw_rng = rng_from(&[22]);
        let mean: f64 =
            (0..400).map(|_| f.sample(&[0.85], &mut draw_rng)).sum::<f64>() / 400.0;
        assert!((mean - 5.0).abs() < 0.5, "mean {mean}");
    }

    #[test]
    fn mean_mode_is_deterministic() {
        let (xs, y) = nonlinear_data(200, 6);
        let f = fit_forest(
            &xs,
            &y,
            &ForestOptions { aggregate_mean: true, ..small_opts() },
            4,
        )
        .unwrap();
        let mut rng = rng_from(&[1]);
        let a = f.sample(&[0.3, 0.3], &mut rng);
        let b = f.sample(&[0.3, 0.3], &mut rng);
        assert_eq!(a, b);
        assert_eq!(a, f.predict(&[0.3, 0.3]));
    }
}
