//! Quadrature checkers for the MAR condition family and for overlap.
//!
//! All checks share the same scheme: fix the coordinates a condition
//! conditions on (outer grid), compare conditional quantities across the
//! remaining coordinates (inner grid), and report the worst absolute
//! discrepancy together with the grid point achieving it. Points where the
//! joint density (or the relevant conditioning mass) falls below
//! [`SUPPORT_EPS`] are outside the support and skipped.

use super::{
    complement, integrate_over, masked_set, require_density, spec_axes, Condition,
    ConditionReport, SUPPORT_EPS,
};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::quad::{for_each_tensor_point, GridSpec};

/// Conditional density of the masked block of one pattern given its
/// observed block, evaluable through two independent routes.
pub struct PatternConditional<'a> {
    spec: &'a MechanismSpec,
    grid: GridSpec,
    pattern_index: usize,
    target: Vec<usize>,
}

/// Builds the conditional `p(x_S | x_{S^c}, M = m)` for pattern `m =
/// patterns[pattern_index]`, `S` its masked block.
pub fn pattern_conditional(
    spec: &MechanismSpec,
    pattern_index: usize,
    grid: GridSpec,
) -> Result<PatternConditional<'_>> {
    require_density(spec, "pattern-conditional")?;
    let patterns = spec.patterns();
    if pattern_index >= patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "pattern index {pattern_index} out of range for `{}` ({} patterns)",
            spec.id(),
            patterns.len()
        )));
    }
    let target = masked_set(&patterns[pattern_index]);
    if target.is_empty() {
        return Err(Error::InvalidConfig(
            "the fully observed pattern has no masked block to condition on".into(),
        ));
    }
    let all: Vec<usize> = (0..spec.d()).collect();
    let base = vec![0.0; spec.d()];
    let mass = integrate_over(spec, &grid, &all, &base, |x| {
        spec.density(x).unwrap() * spec.prob(pattern_index, x)
    });
    if mass <= SUPPORT_EPS {
        return Err(Error::ZeroPatternMass(spec.id().to_string(), pattern_index));
    }
    Ok(PatternConditional { spec, grid, pattern_index, target })
}

impl PatternConditional<'_> {
    /// Masked coordinates whose conditional density this object evaluates.
    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn pattern(&self) -> &[u8] {
        &self.spec.patterns()[self.pattern_index]
    }

    /// Direct route: normalize the joint-with-pattern density,
    /// `p(x) P(M=m|x) / \int_S p P(M=m|.)`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let spec = self.spec;
        let k = self.pattern_index;
        let denom = integrate_over(spec, &self.grid, &self.target, x, |y| {
            spec.density(y).unwrap() * spec.prob(k, y)
        });
        if denom <= SUPPORT_EPS {
            return Err(Error::OutsideSupport(x.to_vec()));
        }
        Ok(spec.density(x)? * spec.prob(k, x) / denom)
    }

    /// Reweighting route: the unconditional conditional `p(x_S | x_{S^c})`
    /// times the selection factor `P(M=m|x) / E[P(M=m|X) | x_{S^c}]`.
    pub fn density_via_reweighting(&self, x: &[f64]) -> Result<f64> {
        let spec = self.spec;
        let k = self.pattern_index;
        let mass = integrate_over(spec, &self.grid, &self.target, x, |y| {
            spec.density(y).unwrap()
        });
        if mass <= SUPPORT_EPS {
            return Err(Error::OutsideSupport(x.to_vec()));
        }
        let mean_prob = integrate_over(spec, &self.grid, &self.target, x, |y| {
            spec.density(y).unwrap() * spec.prob(k, y)
        }) / mass;
        if mean_prob <= SUPPORT_EPS {
            return Err(Error::OutsideSupport(x.to_vec()));
        }
        let base = spec.density(x)? / mass;
        Ok(base * spec.prob(k, x) / mean_prob)
    }
}

/// Runs one condition check against the mechanism's analytic densities.
pub fn check_condition(
    spec: &MechanismSpec,
    condition: Condition,
    grid: &GridSpec,
    tol: f64,
) -> Result<ConditionReport> {
    require_density(spec, &condition.to_string())?;
    let mut report = ConditionReport::new(condition, spec, tol);
    match condition {
        Condition::SmMarII => check_sm_mar_ii(spec, grid, &mut report),
        Condition::PmmMar => {
            for k in masked_pattern_indices(spec) {
                conditional_vs_unconditional(spec, grid, k, k, &mut report);
            }
        }
        Condition::Cimar => {
            for k in masked_pattern_indices(spec) {
                for donor in 0..spec.patterns().len() {
                    conditional_vs_unconditional(spec, grid, k, donor, &mut report);
                }
            }
        }
        Condition::Emar => {
            let zero = spec.zero_pattern_index().ok_or_else(|| Error::UnsupportedCheck {
                spec: spec.id().to_string(),
                condition: condition.to_string(),
                reason: "no fully observed pattern in the pattern set".into(),
            })?;
            for k in masked_pattern_indices(spec) {
                conditional_vs_unconditional(spec, grid, k, k, &mut report);
                conditional_vs_unconditional(spec, grid, k, zero, &mut report);
            }
        }
        Condition::Mcar => check_mcar(spec, grid, &mut report),
        Condition::Rmar => check_rmar(spec, grid, &mut report),
        Condition::Overlap => {
            for j in 0..spec.d() {
                let r = check_overlap(spec, j, grid, tol)?;
                report.record(r.max_violation, &r.witness);
            }
        }
        Condition::Positivity => {
            let r = check_positivity(spec, grid, tol)?;
            report.record(r.max_violation, &r.witness);
        }
    }
    Ok(report)
}

fn masked_pattern_indices(spec: &MechanismSpec) -> Vec<usize> {
    (0..spec.patterns().len())
        .filter(|&k| spec.patterns()[k].iter().any(|&b| b == 1))
        .collect()
}

/// Compares `p(x_S | x_{S^c}, M = donor)` with the unconditional
/// `p(x_S | x_{S^c})`, `S` being the masked block of `target`.
fn conditional_vs_unconditional(
    spec: &MechanismSpec,
    grid: &GridSpec,
    target: usize,
    donor: usize,
    report: &mut ConditionReport,
) {
    let s = masked_set(&spec.patterns()[target]);
    let sc = complement(&s, spec.d());
    let outer = spec_axes(spec, grid, &sc);
    let inner = spec_axes(spec, grid, &s);
    let mut x = vec![0.0; spec.d()];
    for_each_tensor_point(&outer, |o, _| {
        for (i, &j) in sc.iter().enumerate() {
            x[j] = o[i];
        }
        let mass = integrate_over(spec, grid, &s, &x, |y| spec.density(y).unwrap());
        if mass <= SUPPORT_EPS {
            return;
        }
        let donor_mass = integrate_over(spec, grid, &s, &x, |y| {
            spec.density(y).unwrap() * spec.prob(donor, y)
        });
        // Donor pattern carries no mass at this observed point: the
        // conditional under the donor is undefined, nothing to compare.
        if donor_mass / mass <= SUPPORT_EPS {
            return;
        }
        let mut x_in = x.clone();
        for_each_tensor_point(&inner, |pt, _| {
            for (i, &j) in s.iter().enumerate() {
                x_in[j] = pt[i];
            }
            let dens = spec.density(&x_in).unwrap();
            if dens <= SUPPORT_EPS {
                return;
            }
            let cond = dens * spec.prob(donor, &x_in) / donor_mass;
            let uncond = dens / mass;
            report.record((cond - uncond).abs(), &x_in);
        });
    });
}

/// `P(M=m | X=x) = P(M=m | o(X,m) = o(x,m))` for every pattern: the
/// selection probability may only depend on the observed block.
fn check_sm_mar_ii(spec: &MechanismSpec, grid: &GridSpec, report: &mut ConditionReport) {
    for k in masked_pattern_indices(spec) {
        let s = masked_set(&spec.patterns()[k]);
        let sc = complement(&s, spec.d());
        let outer = spec_axes(spec, grid, &sc);
        let inner = spec_axes(spec, grid, &s);
        let mut x = vec![0.0; spec.d()];
        for_each_tensor_point(&outer, |o, _| {
            for (i, &j) in sc.iter().enumerate() {
                x[j] = o[i];
            }
            let mass = integrate_over(spec, grid, &s, &x, |y| spec.density(y).unwrap());
            if mass <= SUPPORT_EPS {
                return;
            }
            let avg = integrate_over(spec, grid, &s, &x, |y| {
                spec.density(y).unwrap() * spec.prob(k, y)
            }) / mass;
            let mut x_in = x.clone();
            for_each_tensor_point(&inner, |pt, _| {
                for (i, &j) in s.iter().enumerate() {
                    x_in[j] = pt[i];
                }
                if spec.density(&x_in).unwrap() <= SUPPORT_EPS {
                    return;
                }
                report.record((spec.prob(k, &x_in) - avg).abs(), &x_in);
            });
        });
    }
}

/// `P(M=m | X=x)` constant in `x` for every pattern.
fn check_mcar(spec: &MechanismSpec, grid: &GridSpec, report: &mut ConditionReport) {
    let all: Vec<usize> = (0..spec.d()).collect();
    let base = vec![0.0; spec.d()];
    let marginals: Vec<f64> = (0..spec.patterns().len())
        .map(|k| {
            integrate_over(spec, grid, &all, &base, |y| {
                spec.density(y).unwrap() * spec.prob(k, y)
            })
        })
        .collect();
    let axes = spec_axes(spec, grid, &all);
    for_each_tensor_point(&axes, |x, _| {
        if spec.density(x).unwrap() <= SUPPORT_EPS {
            return;
        }
        for (k, &pk) in marginals.iter().enumerate() {
            report.record((spec.prob(k, x) - pk).abs(), x);
        }
    });
}

/// `P(M=m | X=x) = P(M=m | x_O)` with `O` the always observed columns.
fn check_rmar(spec: &MechanismSpec, grid: &GridSpec, report: &mut ConditionReport) {
    let d = spec.d();
    let o_set: Vec<usize> =
        (0..d).filter(|&j| spec.patterns().iter().all(|p| p[j] == 0)).collect();
    let rest = complement(&o_set, d);
    let outer = spec_axes(spec, grid, &o_set);
    let inner = spec_axes(spec, grid, &rest);
    let mut x = vec![0.0; d];
    for_each_tensor_point(&outer, |o, _| {
        for (i, &j) in o_set.iter().enumerate() {
            x[j] = o[i];
        }
        let mass = integrate_over(spec, grid, &rest, &x, |y| spec.density(y).unwrap());
        if mass <= SUPPORT_EPS {
            return;
        }
        for k in 0..spec.patterns().len() {
            let avg = integrate_over(spec, grid, &rest, &x, |y| {
                spec.density(y).unwrap() * spec.prob(k, y)
            }) / mass;
            let mut x_in = x.clone();
            for_each_tensor_point(&inner, |pt, _| {
                for (i, &j) in rest.iter().enumerate() {
                    x_in[j] = pt[i];
                }
                if spec.density(&x_in).unwrap() <= SUPPORT_EPS {
                    return;
                }
                report.record((spec.prob(k, &x_in) - avg).abs(), &x_in);
            });
        }
    });
}

/// Overlap for column `j`: wherever the observed-profile density of rows
/// missing `x_j` is positive, rows observing `x_j` must also have mass.
/// A bare support violation is reported as `max_violation = 1.0` at the
/// witness profile (column `j` of the witness is filled with the support
/// midpoint, since the condition does not involve `x_j` itself).
pub fn check_overlap(
    spec: &MechanismSpec,
    j: usize,
    grid: &GridSpec,
    tol: f64,
) -> Result<ConditionReport> {
    require_density(spec, "OVERLAP")?;
    if j >= spec.d() {
        return Err(Error::InvalidConfig(format!(
            "column {j} out of range for `{}` (d = {})",
            spec.id(),
            spec.d()
        )));
    }
    let mut report = ConditionReport::new(Condition::Overlap, spec, tol);
    let miss: Vec<usize> =
        (0..spec.patterns().len()).filter(|&k| spec.patterns()[k][j] == 1).collect();
    let obs: Vec<usize> =
        (0..spec.patterns().len()).filter(|&k| spec.patterns()[k][j] == 0).collect();
    if miss.is_empty() {
        return Ok(report); // column is never missing, nothing to overlap
    }
    let rest = complement(&[j], spec.d());
    let outer = spec_axes(spec, grid, &rest);
    let group_mass = |x: &[f64], group: &[usize]| -> f64 {
        integrate_over(spec, grid, &[j], x, |y| {
            let dens = spec.density(y).unwrap();
            group.iter().map(|&k| dens * spec.prob(k, y)).sum()
        })
    };
    // Normalizers so the support cutoff applies to proper densities.
    let mut z_miss = 0.0;
    let mut z_obs = 0.0;
    let mut x = vec![0.0; spec.d()];
    let (lo, hi) = spec.support()[j];
    x[j] = 0.5 * (lo + hi);
    for_each_tensor_point(&outer, |o, w| {
        for (i, &jj) in rest.iter().enumerate() {
            x[jj] = o[i];
        }
        z_miss += w * group_mass(&x, &miss);
        z_obs += w * group_mass(&x, &obs);
    });
    if z_miss <= SUPPORT_EPS {
        return Ok(report);
    }
    for_each_tensor_point(&outer, |o, _| {
        for (i, &jj) in rest.iter().enumerate() {
            x[jj] = o[i];
        }
        let need = group_mass(&x, &miss) / z_miss;
        if need <= SUPPORT_EPS {
            return;
        }
        let have = if z_obs <= SUPPORT_EPS { 0.0 } else { group_mass(&x, &obs) / z_obs };
        if have <= SUPPORT_EPS {
            report.record(1.0, &x);
        }
    });
    Ok(report)
}

/// Positivity of the fully observed pattern: `P(M=0 | X=x) > 0` on the
/// whole support. Violations are reported as `max_violation = 1.0`.
pub fn check_positivity(spec: &MechanismSpec, grid: &GridSpec, tol: f64) -> Result<ConditionReport> {
    require_density(spec, "POSITIVITY")?;
    let zero = spec.zero_pattern_index().ok_or_else(|| Error::UnsupportedCheck {
        spec: spec.id().to_string(),
        condition: "POSITIVITY".into(),
        reason: "no fully observed pattern in the pattern set".into(),
    })?;
    let mut report = ConditionReport::new(Condition::Positivity, spec, tol);
    let all: Vec<usize> = (0..spec.d()).collect();
    let axes = spec_axes(spec, grid, &all);
    for_each_tensor_point(&axes, |x, _| {
        if spec.density(x).unwrap() <= SUPPORT_EPS {
            return;
        }
        if spec.prob(zero, x) <= SUPPORT_EPS {
            report.record(1.0, x);
        }
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::make_spec;

    fn grid() -> GridSpec {
        GridSpec::gauss(16).unwrap()
    }

    fn run(name: &str, cond: Condition) -> ConditionReport {
        let spec = make_spec(name).unwrap();
        check_condition(&spec, cond, &grid(), super::super::DEFAULT_TOL).unwrap()
    }

    #[test]
    fn pattern_conditional_routes_agree() {
        for name in ["ex1-uniform3", "ex-fgm4", "ex2-gauss-shift"] {
            let spec = make_spec(name).unwrap();
            for k in 0..spec.patterns().len() {
                if spec.patterns()[k].iter().all(|&b| b == 0) {
                    continue;
                }
                let pc = pattern_conditional(&spec, k, grid()).unwrap();
                let mut rng = crate::rng::rng_from(&[11, k as u64]);
                let mut checked = 0;
                while checked < 50 {
                    let x = spec.sample_x(&mut rng);
                    let (Ok(a), Ok(b)) = (pc.density(&x), pc.density_via_reweighting(&x)) else {
                        continue;
                    };
                    assert!((a - b).abs() < 1e-6, "{name} pattern {k}: {a} vs {b}");
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn pattern_conditional_integrates_to_one() {
        let spec = make_spec("ex-fgm4").unwrap();
        // pattern (1,1,0) masks the copula pair
        let pc = pattern_conditional(&spec, 3, grid()).unwrap();
        assert_eq!(pc.target(), &[0, 1]);
        let x = vec![0.0, 0.0, 0.7];
        let total = super::super::integrate_over(&spec, &grid(), &[0, 1], &x, |y| {
            pc.density(y).unwrap()
        });
        assert!((total - 1.0).abs() < 1e-10, "total={total}");
    }

    #[test]
    fn fully_observed_pattern_rejected() {
        let spec = make_spec("ex1-uniform3").unwrap();
        assert!(pattern_conditional(&spec, 0, grid()).is_err());
    }

    #[test]
    fn uniform_example_is_mar_but_not_extended() {
        assert!(run("ex1-uniform3", Condition::SmMarII).passed);
        assert!(run("ex1-uniform3", Condition::PmmMar).passed);
        let emar = run("ex1-uniform3", Condition::Emar);
        assert!(!emar.passed);
        // p(x1 | ., M=0) = 2 x1 against the uniform 1; worst near x1 = 0.
        assert!(emar.max_violation > 0.9, "violation {}", emar.max_violation);
        assert!(!emar.witness.is_empty());
        assert!(!run("ex1-uniform3", Condition::Cimar).passed);
        assert!(!run("ex1-uniform3", Condition::Mcar).passed);
        assert!(!run("ex1-uniform3", Condition::Rmar).passed);
    }

    #[test]
    fn copula_examples_follow_same_split() {
        for name in ["ex-fgm4", "ex-fgm3-d3"] {
            assert!(run(name, Condition::SmMarII).passed, "{name}");
            assert!(run(name, Condition::PmmMar).passed, "{name}");
            assert!(!run(name, Condition::Cimar).passed, "{name}");
        }
        assert!(!run("ex-fgm4", Condition::Emar).passed);
    }

    #[test]
    fn gaussian_shift_is_cimar_not_mcar() {
        assert!(run("ex2-gauss-shift", Condition::Cimar).passed);
        assert!(run("ex2-gauss-shift", Condition::Rmar).passed);
        assert!(run("ex2-gauss-shift", Condition::PmmMar).passed);
        let mcar = run("ex2-gauss-shift", Condition::Mcar);
        assert!(!mcar.passed);
        assert!(mcar.max_violation > 0.4);
    }

    #[test]
    fn bernoulli_masking_passes_everything() {
        for cond in [
            Condition::SmMarII,
            Condition::PmmMar,
            Condition::Cimar,
            Condition::Emar,
            Condition::Mcar,
            Condition::Rmar,
        ] {
            let r = run("mcar-bernoulli", cond);
            assert!(r.passed, "{cond}: violation {}", r.max_violation);
        }
    }

    #[test]
    fn disjoint_supports_fail_overlap_only() {
        let spec = make_spec("ex-nonoverlap").unwrap();
        // CIMAR holds wherever both patterns have mass; the defect is in
        // the supports, which the overlap check isolates on column 0.
        assert!(run("ex-nonoverlap", Condition::Cimar).passed);
        let r0 = check_overlap(&spec, 0, &grid(), 1e-6).unwrap();
        assert!(!r0.passed);
        assert_eq!(r0.max_violation, 1.0);
        // rows missing x1 live at x2 > 1, where no donor rows exist
        assert!(r0.witness[1] > 1.0, "witness {:?}", r0.witness);
        let r1 = check_overlap(&spec, 1, &grid(), 1e-6).unwrap();
        assert!(r1.passed);
    }

    #[test]
    fn positivity_flags_vanishing_complete_pattern() {
        // the fully observed pattern carries no mass at x2 > 1
        let r = check_positivity(&make_spec("ex-nonoverlap").unwrap(), &grid(), 1e-6).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_violation, 1.0);
        let r = check_positivity(&make_spec("ex-fgm3-d3").unwrap(), &grid(), 1e-6).unwrap();
        assert!(r.passed);
        // no analytic density: the check cannot run at all
        assert!(check_positivity(&make_spec("appB-gaussmix6").unwrap(), &grid(), 1e-6).is_err());
    }

    #[test]
    fn implication_chain_is_monotone() {
        // pass(MCAR) <= pass(CIMAR) <= pass(EMAR) <= pass(PMM-MAR),
        // and SM-MAR-II agrees with PMM-MAR.
        for name in
            ["ex1-uniform3", "ex-fgm4", "ex-fgm3-d3", "ex2-gauss-shift", "mcar-bernoulli"]
        {
            let spec = make_spec(name).unwrap();
            let pass = |c: Condition| {
                check_condition(&spec, c, &grid(), super::super::DEFAULT_TOL).unwrap().passed
            };
            let (mcar, cimar, pmm, sm) = (
                pass(Condition::Mcar),
                pass(Condition::Cimar),
                pass(Condition::PmmMar),
                pass(Condition::SmMarII),
            );
            assert!(!mcar || cimar, "{name}: MCAR without CIMAR");
            assert!(!cimar || pmm, "{name}: CIMAR without PMM-MAR");
            assert_eq!(sm, pmm, "{name}: SM-MAR-II vs PMM-MAR");
            if spec.zero_pattern_index().is_some() {
                let emar = pass(Condition::Emar);
                assert!(!cimar || emar, "{name}: CIMAR without EMAR");
                assert!(!emar || pmm, "{name}: EMAR without PMM-MAR");
            }
        }
    }
}
