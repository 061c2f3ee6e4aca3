//! Can the conditional of a masked block be written as a convex mixture
//! of the corresponding conditionals from patterns that observe it?
//!
//! For a target pattern with masked block `S`, each donor pattern `a`
//! (observing all of `S`) contributes the conditional density
//! `f_a(x_S) = p(x_S | x_{S^c}, M=a)`; the question is whether some
//! simplex weights `w` make `sum_a w_a f_a` equal the unconditional
//! conditional `g(x_S) = p(x_S | x_{S^c})`. When no such weights exist,
//! no donor-pooling method can be distributionally correct for this block,
//! whatever weighting it uses.
//!
//! The inner problem is least squares over the simplex, solved by
//! projected gradient descent on the quadratic
//! `J(w) = w'Aw - 2b'w + c` with Gram matrices accumulated by quadrature.

use serde::Serialize;

use super::{donor_patterns, integrate_over, masked_set, require_density, spec_axes, SUPPORT_EPS};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::quad::{for_each_tensor_point, GridSpec};
use rand::Rng;

const PG_ITERS: usize = 500;
const PG_RESTARTS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct WeightExistenceReport {
    pub mechanism: String,
    pub pattern: Vec<u8>,
    pub donors: Vec<Vec<u8>>,
    /// Worst-case (over the observed profile) L2 distance between the best
    /// donor mixture and the unconditional conditional.
    pub max_residual: f64,
    /// Observed profile achieving `max_residual`; masked entries hold the
    /// inner-grid placeholder 0.
    pub witness: Vec<f64>,
    /// Optimal weights at the witness, aligned with `donors`.
    pub weights_at_witness: Vec<f64>,
}

pub fn weight_existence(
    spec: &MechanismSpec,
    pattern_index: usize,
    grid: &GridSpec,
) -> Result<WeightExistenceReport> {
    require_density(spec, "donor-mixture")?;
    let patterns = spec.patterns();
    if pattern_index >= patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "pattern index {pattern_index} out of range for `{}`",
            spec.id()
        )));
    }
    let s = masked_set(&patterns[pattern_index]);
    if s.is_empty() {
        return Err(Error::InvalidConfig(
            "the fully observed pattern leaves nothing to reconstruct".into(),
        ));
    }
    let donors = donor_patterns(spec, &s);
    if donors.is_empty() {
        return Err(Error::UnsupportedCheck {
            spec: spec.id().to_string(),
            condition: "donor-mixture".into(),
            reason: format!("no pattern observes the whole masked block {s:?}"),
        });
    }
    let sc = super::complement(&s, spec.d());
    let outer = spec_axes(spec, grid, &sc);
    let inner = spec_axes(spec, grid, &s);

    let mut report = WeightExistenceReport {
        mechanism: spec.id().to_string(),
        pattern: patterns[pattern_index].clone(),
        donors: donors.iter().map(|&a| patterns[a].clone()).collect(),
        max_residual: 0.0,
        witness: Vec::new(),
        weights_at_witness: Vec::new(),
    };

    let mut x = vec![0.0; spec.d()];
    let mut rng = crate::rng::rng_from(&[0x776569676874, pattern_index as u64]);
    for_each_tensor_point(&outer, |o, _| {
        for (i, &j) in sc.iter().enumerate() {
            x[j] = o[i];
        }
        let mass = integrate_over(spec, grid, &s, &x, |y| spec.density(y).unwrap());
        if mass <= SUPPORT_EPS {
            return;
        }
        // Donor conditionals need their own normalizers; donors without
        // mass at this profile cannot contribute and are dropped.
        let donor_mass: Vec<f64> = donors
            .iter()
            .map(|&a| {
                integrate_over(spec, grid, &s, &x, |y| {
                    spec.density(y).unwrap() * spec.prob(a, y)
                })
            })
            .collect();
        let active: Vec<usize> = (0..donors.len())
            .filter(|&i| donor_mass[i] / mass > SUPPORT_EPS)
            .collect();
        if active.is_empty() {
            return;
        }
        // Gram matrices of the active donor conditionals against g.
        let na = active.len();
        let mut a_mat = vec![0.0; na * na];
        let mut b_vec = vec![0.0; na];
        let mut c = 0.0;
        let mut x_in = x.clone();
        let mut f = vec![0.0; na];
        for_each_tensor_point(&inner, |pt, w| {
            for (i, &j) in s.iter().enumerate() {
                x_in[j] = pt[i];
            }
            let dens = spec.density(&x_in).unwrap();
            let g = dens / mass;
            for (i, &ai) in active.iter().enumerate() {
                f[i] = dens * spec.prob(donors[ai], &x_in) / donor_mass[ai];
            }
            for i in 0..na {
                for k in 0..na {
                    a_mat[i * na + k] += w * f[i] * f[k];
                }
                b_vec[i] += w * f[i] * g;
            }
            c += w * g * g;
        });
        let (w_active, obj) = minimize_on_simplex(&a_mat, &b_vec, c, na, &mut rng);
        let residual = obj.max(0.0).sqrt();
        if residual > report.max_residual {
            report.max_residual = residual;
            report.witness = x.clone();
            let mut w_full = vec![0.0; donors.len()];
            for (i, &ai) in active.iter().enumerate() {
                w_full[ai] = w_active[i];
            }
            report.weights_at_witness = w_full;
        }
    });
    if report.weights_at_witness.is_empty() {
        // never hit the support; degenerate but well defined
        report.weights_at_witness = vec![0.0; donors.len()];
        report.witness = vec![0.0; spec.d()];
    }
    Ok(report)
}

/// Minimizes `w'Aw - 2b'w + c` over the probability simplex by projected
/// gradient descent with random restarts; returns the best `(w, J(w))`.
fn minimize_on_simplex(
    a: &[f64],
    b: &[f64],
    c: f64,
    n: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> (Vec<f64>, f64) {
    let objective = |w: &[f64]| -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..n {
            for k in 0..n {
                quad += w[i] * a[i * n + k] * w[k];
            }
            lin += b[i] * w[i];
        }
        quad - 2.0 * lin + c
    };
    // Lipschitz bound on the gradient via the row-sum norm of A.
    let lip = (0..n)
        .map(|i| (0..n).map(|k| a[i * n + k].abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / (2.0 * lip);
    let mut best_w = vec![1.0 / n as f64; n];
    let mut best = f64::INFINITY;
    for restart in 0..=PG_RESTARTS {
        let mut w = if restart == 0 {
            vec![1.0 / n as f64; n]
        } else {
            let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
            let tot: f64 = raw.iter().sum();
            raw.iter().map(|v| v / tot).collect()
        };
        for _ in 0..PG_ITERS {
            let mut next = w.clone();
            for i in 0..n {
                let mut grad = -2.0 * b[i];
                for k in 0..n {
                    grad += 2.0 * a[i * n + k] * w[k];
                }
                next[i] -= step * grad;
            }
            project_onto_simplex(&mut next);
            w = next;
        }
        let obj = objective(&w);
        if obj < best {
            best = obj;
            best_w = w;
        }
    }
    (best_w, best)
}

/// Euclidean projection onto `{w : w_i >= 0, sum w_i = 1}`.
fn project_onto_simplex(w: &mut [f64]) {
    let n = w.len();
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for v in w.iter_mut().take(n) {
        *v = (*v - theta).max(0.0);
    }
}
