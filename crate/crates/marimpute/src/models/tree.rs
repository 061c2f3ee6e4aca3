//! Regression tree with variance-reduction splits and leaf sampling.
//!
//! Leaves keep the training indices that fall into them, so a fitted tree
//! can serve both as a conditional-mean estimate (leaf average) and as a
//! crude conditional-distribution estimate (uniform draw from the leaf).

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::ConditionalModel;
use crate::error::{Error, Result};

/// Smallest admissible child size for a split.
pub const MIN_LEAF: usize = 5;

#[derive(Debug, Clone)]
pub enum Node {
    Split { feat: usize, thresh: f64, left: usize, right: usize },
    Leaf { members: Vec<u32> },
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Training indices of the leaf containing `x`.
    pub fn leaf_members(&self, x: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feat, thresh, left, right } => {
                    at = if x[*feat] <= *thresh { *left } else { *right };
                }
                Node::Leaf { members } => return members,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

struct BestSplit {
    feat: usize,
    thresh: f64,
    reduction: f64,
}

/// Exhaustive best variance-reduction split of `members`, scanning
/// midpoints between consecutive distinct feature values. `mtry`
/// restricts the scan to a random feature subset (used by forests).
fn best_split(
    xs: &[Vec<f64>],
    y: &[f64],
    members: &[u32],
    min_leaf: usize,
    mtry: Option<usize>,
    rng: &mut ChaCha12Rng,
) -> Option<BestSplit> {
    let n = members.len();
    if n < 2 * min_leaf {
        return None;
    }
    let p = xs[0].len();
    let feats: Vec<usize> = match mtry {
        None => (0..p).collect(),
        Some(k) => {
            // partial Fisher-Yates over the feature index vector
            let mut all: Vec<usize> = (0..p).collect();
            let k = k.min(p);
            for i in 0..k {
                let j = rng.gen_range(i..p);
                all.swap(i, j);
            }
            all.truncate(k);
            all
        }
    };
    let total_sum: f64 = members.iter().map(|&i| y[i as usize]).sum();
    let total_sq: f64 = members.iter().map(|&i| y[i as usize] * y[i as usize]).sum();
    let parent_sse = total_sq - total_sum * total_sum / n as f64;
    let mut best: Option<BestSplit> = None;
    let mut order: Vec<u32> = members.to_vec();
    for &f in &feats {
        order.sort_by(|&a, &b| {
            xs[a as usize][f].partial_cmp(&xs[b as usize][f]).unwrap()
        });
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for (cnt, win) in order.windows(2).enumerate() {
            let (a, b) = (win[0] as usize, win[1] as usize);
            left_sum += y[a];
            left_sq += y[a] * y[a];
            let n_left = cnt + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            if xs[a][f] == xs[b][f] {
                continue; // ties cannot be separated here
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / n_left as f64)
                + (right_sq - right_sum * right_sum / n_right as f64);
            let reduction = parent_sse - sse;
            if best.as_ref().is_none_or(|b| reduction > b.reduction) && reduction > 1e-12 {
                best = Some(BestSplit {
                    feat: f,
                    thresh: 0.5 * (xs[a][f] + xs[b][f]),
                    reduction,
                });
            }
        }
    }
    best
}

/// Grows a tree on the rows listed in `idx` (indices into `xs` / `y`).
pub fn fit_tree(
    xs: &[Vec<f64>],
    y: &[f64],
    idx: &[u32],
    min_leaf: usize,
    mtry: Option<usize>,
    rng: &mut ChaCha12Rng,
) -> Tree {
    let mut nodes = Vec::new();
    nodes.push(Node::Leaf { members: idx.to_vec() });
    let mut stack = vec![0usize];
    while let Some(at) = stack.pop() {
        let members = match &nodes[at] {
            Node::Leaf { members } => members.clone(),
            Node::Split { .. } => unreachable!(),
        };
        let Some(split) = best_split(xs, y, &members, min_leaf, mtry, rng) else {
            continue;
        };
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in &members {
            if xs[i as usize][split.feat] <= split.thresh {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        let li = nodes.len();
        nodes.push(Node::Leaf { members: left });
        let ri = nodes.len();
        nodes.push(Node::Leaf { members: right });
        nodes[at] = Node::Split { feat: split.feat, thresh: split.thresh, left: li, right: ri };
        stack.push(li);
        stack.push(ri);
    }
    Tree { nodes }
}

/// Greedy split of the full dataset, as `(feature, threshold)`; `None`
/// when no admissible split reduces variance. All features are scanned,
/// so the result is deterministic.
pub fn root_split(xs: &[Vec<f64>], y: &[f64]) -> Option<(usize, f64)> {
    let members: Vec<u32> = (0..y.len() as u32).collect();
    let mut rng = crate::rng::rng_from(&[0]);
    best_split(xs, y, &members, MIN_LEAF, None, &mut rng).map(|b| (b.feat, b.thresh))
}

/// Single-tree imputation model: draw uniformly from the matched leaf.
pub struct CartModel {
    tree: Tree,
    y: Vec<f64>,
}

impl CartModel {
    pub fn fit(xs: &[Vec<f64>], y: &[f64], seed: u64) -> Result<Self> {
        if xs.is_empty() || xs.len() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "tree fit: {} rows of features against {} targets",
                xs.len(),
                y.len()
            )));
        }
        let idx: Vec<u32> = (0..xs.len() as u32).collect();
        let mut rng = crate::rng::rng_from(&[seed, 0x63617274]);
        let tree = fit_tree(xs, y, &idx, MIN_LEAF, None, &mut rng);
        Ok(CartModel { tree, y: y.to_vec() })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
}

impl ConditionalModel for CartModel {
    fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64 {
        let members = self.tree.leaf_members(x);
        let pick = members[rng.gen_range(0..members.len())];
        self.y[pick as usize]
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let members = self.tree.leaf_members(x);
        members.iter().map(|&i| self.y[i as usize]).sum::<f64>() / members.len() as f64
    }
}
