//! Benchmark harness: repeated generate-mask-impute-score experiments.
//!
//! Every repetition draws one `(X, M)` pair from the mechanism; all
//! methods impute the same masked data, so score differences are purely
//! about the methods. Seeds derive from `(base seed, repetition)` and
//! `(base seed, repetition, method)`, which keeps runs reproducible and
//! method-isolated at the same time.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_mask, DataMatrix, IncompleteData};
use crate::error::{Error, Result};
use crate::eval::{energy_distance, observed_only_quantile, quantile, rmse, standardize};
use crate::fcs::{impute, FcsConfig, VisitOrder};
use crate::mechanisms::{generate, make_spec};
use crate::models::{ForestOptions, ModelKind};
use crate::rng::derive_seed;

/// Config schema version accepted by this build.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub mechanism: String,
    pub n: usize,
    pub methods: Vec<ModelKind>,
    pub repetitions: usize,
    pub sweeps: usize,
    pub chains: usize,
    pub seed: u64,
    pub forest_trees: usize,
    pub per_tree_draw: bool,
}

impl ExperimentConfig {
    pub fn new(mechanism: &str) -> Self {
        Self {
            version: CONFIG_VERSION,
            mechanism: mechanism.to_string(),
            n: 1000,
            methods: ModelKind::ALL.to_vec(),
            repetitions: 10,
            sweeps: crate::fcs::DEFAULT_SWEEPS,
            chains: 1,
            seed: 0,
            forest_trees: 100,
            per_tree_draw: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!(
                "config version {} not supported (this build reads version {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.n < 10 || self.repetitions == 0 || self.sweeps == 0 || self.chains == 0 {
            return Err(Error::InvalidConfig(
                "n, repetitions, sweeps and chains must be positive (n at least 10)".into(),
            ));
        }
        make_spec(&self.mechanism).map(|_| ())
    }

    pub fn from_json_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One method's scores on one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct MethodScore {
    pub rep: usize,
    pub method: String,
    pub energy: f64,
    pub rmse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_energy: f64,
    pub sd_energy: f64,
    pub mean_rmse: f64,
    pub sd_rmse: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardizedScore {
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub scores: Vec<MethodScore>,
    pub summary: Vec<MethodSummary>,
    pub standardized: Vec<StandardizedScore>,
}

fn fcs_config(cfg: &ExperimentConfig, method: ModelKind, rep: usize) -> FcsConfig {
    FcsConfig {
        method,
        sweeps: cfg.sweeps,
        chains: cfg.chains,
        visit: VisitOrder::Ascending,
        forest: ForestOptions {
            trees: cfg.forest_trees,
            per_tree_draw: cfg.per_tree_draw,
            ..ForestOptions::default()
        },
        seed: derive_seed(&[cfg.seed, rep as u64, method_tag(method)]),
    }
}

fn method_tag(method: ModelKind) -> u64 {
    method.name().bytes().fold(0u64, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u64))
}

/// Runs the full benchmark described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = Arc::new(make_spec(&cfg.mechanism)?);
    let per_rep: Result<Vec<Vec<MethodScore>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(&[cfg.seed, rep as u64]);
            let sample = generate(&spec, cfg.n, rep_seed);
            let incomplete = apply_mask(&sample.x, &sample.mask)?;
            let mut scores = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let fcs = fcs_config(cfg, method, rep);
                let start = Instant::now();
                let run = impute(&incomplete, &fcs, Some(spec.clone()))?;
                let seconds = start.elapsed().as_secs_f64();
                let completed = &run.chains[0].completed;
                scores.push(MethodScore {
                    rep,
                    method: method.name().to_string(),
                    energy: energy_distance(&completed.values, &sample.x)?,
                    rmse: rmse(completed, &sample.x)?,
                    seconds,
                });
            }
            Ok(scores)
        })
        .collect();
    let scores: Vec<MethodScore> = per_rep?.into_iter().flatten().collect();
    let summary = summarize(cfg, &scores);
    let standardized = standardize_summary(&summary);
    Ok(ExperimentReport { config: cfg.clone(), scores, summary, standardized })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(cfg: &ExperimentConfig, scores: &[MethodScore]) -> Vec<MethodSummary> {
    cfg.methods
        .iter()
        .map(|m| {
            let name = m.name();
            let mine: Vec<&MethodScore> =
                scores.iter().filter(|s| s.method == name).collect();
            let (mean_energy, sd_energy) =
                mean_sd(&mine.iter().map(|s| s.energy).collect::<Vec<_>>());
            let (mean_rmse, sd_rmse) =
                mean_sd(&mine.iter().map(|s| s.rmse).collect::<Vec<_>>());
            let (mean_seconds, _) =
                mean_sd(&mine.iter().map(|s| s.seconds).collect::<Vec<_>>());
            MethodSummary {
                method: name.to_string(),
                mean_energy,
                sd_energy,
                mean_rmse,
                sd_rmse,
                mean_seconds,
            }
        })
        .collect()
}

fn standardize_summary(summary: &[MethodSummary]) -> Vec<StandardizedScore> {
    let mut out = Vec::new();
    for (metric, extract) in [
        ("energy", Box::new(|s: &MethodSummary| s.mean_energy) as Box<dyn Fn(&MethodSummary) -> f64>),
        ("rmse", Box::new(|s: &MethodSummary| s.mean_rmse)),
    ] {
        let raw: Vec<f64> = summary.iter().map(|s| extract(s)).collect();
        for (s, v) in summary.iter().zip(standardize(&raw)) {
            out.push(StandardizedScore {
                method: s.method.clone(),
                metric: metric.to_string(),
                value: v,
            });
        }
    }
    out
}

/// Writes `report.json`, `scores.csv` and `standardized.csv` into `dir`.
pub fn write_report<P: AsRef<Path>>(report: &ExperimentReport, dir: P) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json)?;

    let mut w = csv::Writer::from_path(dir.join("scores.csv"))?;
    w.write_record(["rep", "method", "energy", "rmse", "seconds"])?;
    for s in &report.scores {
        w.write_record([
            s.rep.to_string(),
            s.method.clone(),
            format!("{:?}", s.energy),
            format!("{:?}", s.rmse),
            format!("{:.6}", s.seconds),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("standardized.csv"))?;
    w.write_record(["method", "metric", "value"])?;
    for s in &report.standardized {
        w.write_record([s.method.clone(), s.metric.clone(), format!("{:?}", s.value)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an external benchmark pair: the complete ground truth and the
/// masked version of the same table. Observed cells must match exactly.
pub fn ingest_csv_pair<P: AsRef<Path>>(
    truth_path: P,
    incomplete_path: P,
    header: bool,
) -> Result<(DataMatrix, IncompleteData)> {
    let truth = DataMatrix::read_csv_path(truth_path, header)?;
    let incomplete = IncompleteData::read_csv_path(incomplete_path, header)?;
    if truth.n_rows() != incomplete.n_rows() || truth.n_cols() != incomplete.n_cols() {
        return Err(Error::ShapeMismatch(format!(
            "truth {}x{} vs incomplete {}x{}",
            truth.n_rows(),
            truth.n_cols(),
            incomplete.n_rows(),
            incomplete.n_cols()
        )));
    }
    for i in 0..truth.n_rows() {
        for j in 0..truth.n_cols() {
            if incomplete.mask.get(i, j) == 0
                && incomplete.get(i, j).to_bits() != truth.get(i, j).to_bits()
            {
                return Err(Error::ShapeMismatch(format!(
                    "observed cell ({i},{j}) differs between the two files"
                )));
            }
        }
    }
    Ok((truth, incomplete))
}

// ---------------------------------------------------------------------------
// Quantile study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileStudyConfig {
    pub version: u32,
    pub mechanism: String,
    pub n: usize,
    pub column: usize,
    pub level: f64,
    pub repetitions: usize,
    pub methods: Vec<ModelKind>,
    pub sweeps: usize,
    pub seed: u64,
}

impl QuantileStudyConfig {
    pub fn new(mechanism: &str) -> Self {
        Self {
            version: CONFIG_VERSION,
            mechanism: mechanism.to_string(),
            n: 2000,
            column: 0,
            level: 0.1,
            repetitions: 20,
            methods: vec![ModelKind::CartSample, ModelKind::ForestSample],
            sweeps: crate::fcs::DEFAULT_SWEEPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileStudyReport {
    pub config: QuantileStudyConfig,
    /// Monte Carlo estimate of the true marginal quantile.
    pub true_value: f64,
    /// Estimate from dropping rows where the column is missing.
    pub observed_only: SummaryStat,
    /// Estimate from the imputed complete data, per method.
    pub methods: Vec<(String, SummaryStat)>,
}

/// How well do imputation methods recover a marginal quantile that the
/// observed rows alone estimate with a selection bias?
pub fn run_quantile_study(cfg: &QuantileStudyConfig) -> Result<QuantileStudyReport> {
    if cfg.version != CONFIG_VERSION {
        return Err(Error::InvalidConfig(format!(
            "config version {} not supported (this build reads version {CONFIG_VERSION})",
            cfg.version
        )));
    }
    if !(0.0..=1.0).contains(&cfg.level) {
        return Err(Error::InvalidConfig(format!("quantile level {}", cfg.level)));
    }
    let spec = Arc::new(make_spec(&cfg.mechanism)?);
    if cfg.column >= spec.d() {
        return Err(Error::InvalidConfig(format!(
            "column {} out of range for `{}`",
            cfg.column,
            spec.id()
        )));
    }
    // reference value from one large complete draw
    let big = generate(&spec, 200_000, derive_seed(&[cfg.seed, 0x7472757468]));
    let true_value = quantile(&big.x.column(cfg.column), cfg.level)?;

    type RepOut = (f64, Vec<f64>);
    let reps: Result<Vec<RepOut>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(&[cfg.seed, rep as u64]);
            let sample = generate(&spec, cfg.n, rep_seed);
            let incomplete = apply_mask(&sample.x, &sample.mask)?;
            let observed = observed_only_quantile(&incomplete, cfg.column, cfg.level)?;
            let mut per_method = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let mut fcs = FcsConfig::new(method);
                fcs.sweeps = cfg.sweeps;
                fcs.seed = derive_seed(&[cfg.seed, rep as u64, method_tag(method)]);
                let run = impute(&incomplete, &fcs, Some(spec.clone()))?;
                per_method.push(crate::eval::completed_quantile(
                    &run.chains[0].completed,
                    cfg.column,
                    cfg.level,
                )?);
            }
            Ok((observed, per_method))
        })
        .collect();
    let reps = reps?;
    let observed: Vec<f64> = reps.iter().map(|r| r.0).collect();
    let (mean, sd) = mean_sd(&observed);
    let mut methods = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let vals: Vec<f64> = reps.iter().map(|r| r.1[mi]).collect();
        let (mean, sd) = mean_sd(&vals);
        methods.push((method.name().to_string(), SummaryStat { mean, sd }));
    }
    Ok(QuantileStudyReport {
        config: cfg.clone(),
        true_value,
        observed_only: SummaryStat { mean, sd },
        methods,
    })
}
