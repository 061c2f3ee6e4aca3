//! The best observable single-column predictor.
//!
//! For column `j`, pool every pattern in which `x_j` is observed and take
//! the conditional of the pooled joint:
//!
//! ```text
//! h(x_j | x_{-j}) = sum_{m: m_j=0} P(M=m|x) p(x)
//!                   ---------------------------------------
//!                   int_{x_j} sum_{m: m_j=0} P(M=m|.) p(.)
//! ```
//!
//! This is exactly what a consistent regression fitted on the rows with
//! `x_j` observed estimates, so it serves as the population target for the
//! imputation models.

use super::{integrate_over, require_density, SUPPORT_EPS};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::quad::GridSpec;

/// Evaluates the pooled observed-rows conditional density of `x_j` at `x`.
pub fn hstar_oracle(spec: &MechanismSpec, j: usize, x: &[f64], grid: &GridSpec) -> Result<f64> {
    require_density(spec, "observable-predictor")?;
    if j >= spec.d() || x.len() != spec.d() {
        return Err(Error::InvalidConfig(format!(
            "column {j} / point of length {} out of range for `{}` (d = {})",
            x.len(),
            spec.id(),
            spec.d()
        )));
    }
    let donors: Vec<usize> =
        (0..spec.patterns().len()).filter(|&k| spec.patterns()[k][j] == 0).collect();
    if donors.is_empty() {
        return Err(Error::UnsupportedCheck {
            spec: spec.id().to_string(),
            condition: "observable-predictor".into(),
            reason: format!("column {j} is observed in no pattern"),
        });
    }
    let pooled = |y: &[f64]| -> f64 {
        let dens = spec.density(y).unwrap();
        donors.iter().map(|&k| dens * spec.prob(k, y)).sum()
    };
    let denom = integrate_over(spec, grid, &[j], x, pooled);
    if denom <= SUPPORT_EPS {
        return Err(Error::OutsideSupport(x.to_vec()));
    }
    Ok(pooled(x) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{fgm_density, make_spec};
    use crate::quad::{for_each_tensor_point, GridSpec};

    fn max_err_vs_truth<F: Fn(&[f64]) -> f64>(name: &str, j: usize, truth: F) -> f64 {
        let spec = make_spec(name).unwrap();
        let grid = GridSpec::default();
        let dims: Vec<usize> = (0..spec.d()).collect();
        let axes = super::super::spec_axes(&spec, &grid, &dims);
        let mut worst = 0.0f64;
        for_each_tensor_point(&axes, |x, _| {
            let h = hstar_oracle(&spec, j, x, &grid).unwrap();
            worst = worst.max((h - truth(x)).abs());
        });
        worst
    }

    #[test]
    fn uniform_example_recovers_flat_conditional() {
        // The two patterns observing x1 have total probability 2/3
        // regardless of x, so pooling changes nothing: h = p(x1|.) = 1.
        let err = max_err_vs_truth("ex1-uniform3", 0, |_| 1.0);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn copula_example_recovers_fgm_conditional() {
        // Pooled selection probability for column 0 is the constant 2/3,
        // so pooling cancels and h is the FGM conditional density
        // 1 + (2x1-1)(2x2-1).
        let err = max_err_vs_truth("ex-fgm4", 0, |x| fgm_density(x[0], x[1]));
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn copula_example_second_column() {
        // here the pooled probability is (1 + x0)/3, a function of the
        // conditioning variables only, and cancels as well
        let err = max_err_vs_truth("ex-fgm4", 1, |x| fgm_density(x[0], x[1]));
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn integrates_to_one() {
        let spec = make_spec("ex2-gauss-shift").unwrap();
        let grid = GridSpec::default();
        for x1 in [-1.0, 0.0, 2.5, 5.0, 6.5] {
            let total = super::super::integrate_over(&spec, &grid, &[0], &[0.0, x1], |y| {
                hstar_oracle(&spec, 0, y, &grid).unwrap()
            });
            assert!((total - 1.0).abs() < 1e-8, "x1={x1}: total={total}");
        }
    }

    #[test]
    fn never_observed_column_rejected() {
        let spec = make_spec("ex1-uniform3").unwrap();
        // every column is observed somewhere in this catalogue entry
        assert!(hstar_oracle(&spec, 0, &[0.5, 0.5, 0.5], &GridSpec::default()).is_ok());
        assert!(hstar_oracle(&spec, 7, &[0.5, 0.5, 0.5], &GridSpec::default()).is_err());
    }
}
