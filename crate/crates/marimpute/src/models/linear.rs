//! Linear conditional model with an optional Gaussian noise term.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ConditionalModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub resid_sd: f64,
    noise: bool,
}

impl LinearModel {
    pub fn with_noise(mut self, noise: bool) -> Self {
        self.noise = noise;
        self
    }
}

/// Least squares via the normal equations; a small ridge is added when the
/// Gram matrix is (numerically) singular, e.g. for collinear features.
pub fn fit_linear(xs: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let n = xs.len();
    if n == 0 || n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "linear fit: {n} rows of features against {} targets",
            y.len()
        )));
    }
    let p = xs[0].len() + 1; // leading intercept column
    let mut gram = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for (x, &yi) in xs.iter().zip(y) {
        row[0] = 1.0;
        row[1..p].copy_from_slice(x);
        for i in 0..p {
            for j in 0..=i {
                gram[i * p + j] += row[i] * row[j];
            }
            xty[i] += row[i] * yi;
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            gram[i * p + j] = gram[j * p + i];
        }
    }
    let beta = match cholesky_solve(&gram, &xty, p) {
        Some(beta) => beta,
        None => {
            let trace: f64 = (0..p).map(|i| gram[i * p + i]).sum();
            let ridge = 1e-8 * trace.max(1.0) / p as f64;
            let mut damped = gram.clone();
            for i in 0..p {
                damped[i * p + i] += ridge;
            }
            cholesky_solve(&damped, &xty, p).ok_or_else(|| {
                Error::ShapeMismatch("linear fit: Gram matrix is not positive definite".into())
            })?
        }
    };
    let mut sse = 0.0;
    for (x, &yi) in xs.iter().zip(y) {
        let pred = beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        sse += (yi - pred) * (yi - pred);
    }
    let dof = if n > p { (n - p) as f64 } else { 1.0 };
    Ok(LinearModel {
        intercept: beta[0],
        coef: beta[1..].to_vec(),
        resid_sd: (sse / dof).sqrt(),
        noise: false,
    })
}

fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * p + k] * z[k];
        }
        z[i] = sum / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = z[i];
        for k in (i + 1)..p {
            sum -= l[k * p + i] * x[k];
        }
        x[i] = sum / l[i * p + i];
    }
    Some(x)
}

impl ConditionalModel for LinearModel {
    fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64 {
        let mean = self.predict(x);
        if self.noise {
            let z: f64 = StandardNormal.sample(rng);
            mean + self.resid_sd * z
        } else {
            mean
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}
