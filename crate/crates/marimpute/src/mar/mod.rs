//! Numerical verification of MAR conditions, overlap and identifiability
//! on low-dimensional analytic mechanisms.
//!
//! Every checker works from the mechanism's analytic joint density and
//! pattern probabilities; conditionals and marginals are obtained by
//! tensor-product quadrature, never from finite samples.

mod conditions;
mod graphical;
mod hstar;
mod weights;

pub use conditions::{
    check_condition, check_overlap, check_positivity, pattern_conditional, PatternConditional,
};
pub use graphical::{graphical_factor_check, GraphicalReport, GraphicalStep};
pub use hstar::hstar_oracle;
pub use weights::{weight_existence, WeightExistenceReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::quad::{Axis, GridSpec};

/// Densities below this are treated as outside the support.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Default absolute tolerance on conditional-density violations.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    SmMarII,
    PmmMar,
    Cimar,
    Emar,
    Mcar,
    Rmar,
    Overlap,
    Positivity,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::SmMarII => "SM-MAR-II",
            Condition::PmmMar => "PMM-MAR",
            Condition::Cimar => "CIMAR",
            Condition::Emar => "EMAR",
            Condition::Mcar => "MCAR",
            Condition::Rmar => "RMAR",
            Condition::Overlap => "OVERLAP",
            Condition::Positivity => "POSITIVITY",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sm-mar-ii" | "smmar2" | "sm-mar2" => Ok(Condition::SmMarII),
            "pmm-mar" | "mar" => Ok(Condition::PmmMar),
            "cimar" => Ok(Condition::Cimar),
            "emar" => Ok(Condition::Emar),
            "mcar" | "pmm-mcar" => Ok(Condition::Mcar),
            "rmar" => Ok(Condition::Rmar),
            "overlap" => Ok(Condition::Overlap),
            "positivity" => Ok(Condition::Positivity),
            other => Err(Error::InvalidConfig(format!("unknown condition `{other}`"))),
        }
    }
}

/// Outcome of a numerical condition check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub mechanism: String,
    pub passed: bool,
    pub max_violation: f64,
    /// Grid point achieving the maximal violation.
    pub witness: Vec<f64>,
    pub tolerance: f64,
}

impl ConditionReport {
    fn new(condition: Condition, spec: &MechanismSpec, tol: f64) -> Self {
        Self {
            condition,
            mechanism: spec.id().to_string(),
            passed: true,
            max_violation: 0.0,
            witness: Vec::new(),
            tolerance: tol,
        }
    }

    fn record(&mut self, violation: f64, witness: &[f64]) {
        if violation > self.max_violation {
            self.max_violation = violation;
            self.witness = witness.to_vec();
        }
        self.passed = self.max_violation <= self.tolerance;
    }
}

pub(crate) fn require_density(spec: &MechanismSpec, what: &str) -> Result<()> {
    if !spec.has_density() {
        return Err(Error::UnsupportedCheck {
            spec: spec.id().to_string(),
            condition: what.to_string(),
            reason: "mechanism exposes no analytic density".into(),
        });
    }
    Ok(())
}

/// Quadrature axes for the given dimensions, honoring the mechanism's
/// preference for the midpoint rule on discontinuous densities.
pub(crate) fn spec_axes(spec: &MechanismSpec, grid: &GridSpec, dims: &[usize]) -> Vec<Axis> {
    let rule = if spec.discontinuous_density() {
        crate::quad::QuadRule::Midpoint
    } else {
        grid.rule
    };
    dims.iter()
        .map(|&j| {
            let (lo, hi) = spec.support()[j];
            Axis::new(rule, grid.nodes, lo, hi)
        })
        .collect()
}

/// Integrates `f` over the coordinates `dims`, the remaining coordinates
/// held fixed at their values in `base`.
pub(crate) fn integrate_over<F: Fn(&[f64]) -> f64>(
    spec: &MechanismSpec,
    grid: &GridSpec,
    dims: &[usize],
    base: &[f64],
    f: F,
) -> f64 {
    if dims.is_empty() {
        return f(base);
    }
    let axes = spec_axes(spec, grid, dims);
    let mut x = base.to_vec();
    let mut total = 0.0;
    crate::quad::for_each_tensor_point(&axes, |sub, w| {
        for (k, &j) in dims.iter().enumerate() {
            x[j] = sub[k];
        }
        total += w * f(&x);
    });
    total
}

/// Masked coordinate set of a pattern.
pub(crate) fn masked_set(pattern: &[u8]) -> Vec<usize> {
    pattern
        .iter()
        .enumerate()
        .filter_map(|(j, &b)| (b == 1).then_some(j))
        .collect()
}

/// Complement of `dims` in `0..d`.
pub(crate) fn complement(dims: &[usize], d: usize) -> Vec<usize> {
    (0..d).filter(|j| !dims.contains(j)).collect()
}

/// Donor set for a target block `s`: patterns observing every column of `s`.
pub(crate) fn donor_patterns(spec: &MechanismSpec, s: &[usize]) -> Vec<usize> {
    spec.patterns()
        .iter()
        .enumerate()
        .filter_map(|(k, p)| s.iter().all(|&j| p[j] == 0).then_some(k))
        .collect()
}
