//! Scoring: energy distance between samples, RMSE on imputed cells,
//! cross-method score standardization, and quantile summaries.

use rayon::prelude::*;

use crate::data::{CompletedDataset, DataMatrix, IncompleteData};
use crate::error::{Error, Result};

/// Energy distance between two samples, as the plug-in V-statistic
///
/// ```text
/// 2/(nm) sum ||a_i - b_k||  -  1/n^2 sum ||a_i - a_j||
///                           -  1/m^2 sum ||b_k - b_l||.
/// ```
///
/// Zero iff the underlying distributions coincide, which makes it the
/// headline metric for distributional imputation quality.
pub fn energy_distance(a: &DataMatrix, b: &DataMatrix) -> Result<f64> {
    if a.n_cols() != b.n_cols() {
        return Err(Error::ShapeMismatch(format!(
            "energy distance: {} vs {} columns",
            a.n_cols(),
            b.n_cols()
        )));
    }
    if a.n_rows() == 0 || b.n_rows() == 0 {
        return Err(Error::ShapeMismatch("energy distance: empty sample".into()));
    }
    let (n, m) = (a.n_rows() as f64, b.n_rows() as f64);
    // per-row partial sums are collected in index order and reduced
    // sequentially, so the result does not depend on thread scheduling
    let cross: f64 = (0..a.n_rows())
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            (0..b.n_rows()).map(|k| dist(ai, b.row(k))).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let within_a = within_sum(a);
    let within_b = within_sum(b);
    Ok(2.0 * cross / (n * m) - within_a / (n * n) - within_b / (m * m))
}

fn within_sum(x: &DataMatrix) -> f64 {
    // sum over ordered pairs; diagonal terms are zero
    let partial: Vec<f64> = (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (i + 1..x.n_rows()).map(|j| dist(xi, x.row(j))).sum::<f64>()
        })
        .collect();
    2.0 * partial.iter().sum::<f64>()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Root mean squared error over the cells that were imputed.
pub fn rmse(completed: &CompletedDataset, truth: &DataMatrix) -> Result<f64> {
    let mask = &completed.source_mask;
    if truth.n_rows() != mask.n_rows() || truth.n_cols() != mask.n_cols() {
        return Err(Error::ShapeMismatch("rmse: truth/completed shapes".into()));
    }
    let mut sse = 0.0;
    let mut count = 0usize;
    for i in 0..truth.n_rows() {
        for j in 0..truth.n_cols() {
            if mask.get(i, j) == 1 {
                let d = completed.values.get(i, j) - truth.get(i, j);
                sse += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoMissingCells);
    }
    Ok((sse / count as f64).sqrt())
}

/// Margin keeping standardized scores strictly inside `(-1, 0)`.
pub const STANDARDIZE_EPS: f64 = 1e-6;

/// Affinely maps raw scores (lower is better) onto `(-1, 0)`: the best
/// score lands at `-1 + eps`, the worst at `-eps`. Identical scores all
/// map to `-0.5`. This makes scores comparable across metrics with
/// different scales when averaging over datasets.
pub fn standardize(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo == 0.0 {
        return vec![-0.5; scores.len()];
    }
    let span = 1.0 - 2.0 * STANDARDIZE_EPS;
    scores
        .iter()
        .map(|&s| -1.0 + STANDARDIZE_EPS + (s - lo) / (hi - lo) * span)
        .collect()
}

/// Linear-interpolation quantile (the common "type 7" definition):
/// with `h = (n-1) q`, interpolate between the floor and ceiling order
/// statistics.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::ShapeMismatch("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidConfig(format!("quantile level {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Quantile of column `j` after imputation (complete-data estimate).
pub fn completed_quantile(completed: &CompletedDataset, j: usize, q: f64) -> Result<f64> {
    quantile(&completed.values.column(j), q)
}

/// Quantile of column `j` using only its observed cells — the estimate an
/// analyst gets by dropping missing entries, biased whenever selection
/// depends on the value.
pub fn observed_only_quantile(data: &IncompleteData, j: usize, q: f64) -> Result<f64> {
    let obs: Vec<f64> = (0..data.n_rows())
        .filter(|&i| data.mask.get(i, j) == 0)
        .map(|i| data.get(i, j))
        .collect();
    if obs.is_empty() {
        return Err(Error::EmptyColumn(j));
    }
    quantile(&obs, q)
}
