use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use marimpute::bench::{
    run_experiment, run_quantile_study, write_report, ExperimentConfig, QuantileStudyConfig,
};
use marimpute::data::{apply_mask, IncompleteData};
use marimpute::fcs::{impute, FcsConfig, VisitOrder};
use marimpute::mar::{
    check_condition, check_overlap, check_positivity, graphical_factor_check, weight_existence,
    Condition, DEFAULT_TOL,
};
use marimpute::mechanisms::{catalogue_names, generate, make_spec};
use marimpute::models::ModelKind;
use marimpute::quad::GridSpec;
use marimpute::{Error, Result};

#[derive(Parser)]
#[command(name = "marimpute", version, about = "Imputation engine with analytic missingness test beds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a complete sample and its missingness mask from a catalogue mechanism
    Generate(GenerateArgs),
    /// Fill in the missing cells of a CSV (NA / empty cells are missing)
    Impute(ImputeArgs),
    /// Run quadrature checks on a mechanism's missingness law
    Check(CheckArgs),
    /// Compare imputation methods over repeated generate-mask-impute runs
    Bench(BenchArgs),
    /// Quantile recovery: observed-only vs imputed estimates of a marginal quantile
    QuantileStudy(QuantileArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Mechanism name; pass `list` to print the catalogue
    #[arg(long)]
    mechanism: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the complete data
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Where to write the masked data (missing cells as NA)
    #[arg(long)]
    masked: Option<PathBuf>,
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "cart-sample")]
    method: ModelKind,
    /// Required by `true-sampler`; ignored otherwise
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long, default_value_t = marimpute::fcs::DEFAULT_SWEEPS)]
    sweeps: usize,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Column visit order: `ascending` or `random`
    #[arg(long, default_value = "ascending")]
    visit: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    mechanism: String,
    /// Conditions to test (sm-mar-ii, pmm-mar, cimar, emar, mcar, rmar);
    /// defaults to all six
    #[arg(long)]
    condition: Vec<Condition>,
    /// Also test column-wise support overlap for this column (repeatable)
    #[arg(long)]
    overlap: Vec<usize>,
    /// Also test positivity of the fully observed pattern
    #[arg(long)]
    positivity: bool,
    /// Also test donor-mixture weight existence for this pattern index (repeatable)
    #[arg(long)]
    weights: Vec<usize>,
    /// Also test ordered factorization for this comma-separated permutation
    #[arg(long)]
    graphical: Option<String>,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Emit machine-readable JSON instead of one line per check
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment config; flags below are used when absent
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "appB-gaussmix6")]
    mechanism: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for report.json / scores.csv / standardized.csv
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct QuantileArgs {
    #[arg(long, default_value = "ex-fgm3")]
    mechanism: String,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    column: usize,
    #[arg(long, default_value_t = 0.1)]
    level: f64,
    #[arg(long, default_value_t = 20)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON output path (summary always prints to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration problems, 3 for data problems.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::UnknownMechanism(_)
        | Error::UnsupportedCheck { .. }
        | Error::NoDensity(_)
        | Error::NoOracle(_, _)
        | Error::Json(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
        Command::QuantileStudy(a) => cmd_quantile(a),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    if a.mechanism == "list" {
        for name in catalogue_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let spec = make_spec(&a.mechanism)?;
    if a.n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let masked_path = a
        .masked
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--masked is required".into()))?;
    let sample = generate(&spec, a.n, a.seed);
    let masked = apply_mask(&sample.x, &sample.mask)?;
    masked.write_csv_path(masked_path, a.header)?;
    if let Some(truth) = &a.truth {
        sample.x.write_csv_path(truth, a.header)?;
    }
    eprintln!(
        "{}: {} rows, {} columns, missing rate {:.3}",
        spec.id(),
        a.n,
        spec.d(),
        sample.mask.missing_rate()
    );
    Ok(())
}

fn cmd_impute(a: ImputeArgs) -> Result<()> {
    let data = IncompleteData::read_csv_path(&a.input, a.header)?;
    let spec = match (&a.mechanism, a.method) {
        (Some(name), _) => Some(Arc::new(make_spec(name)?)),
        (None, ModelKind::TrueSampler) => {
            return Err(Error::InvalidConfig(
                "true-sampler needs --mechanism to look up the analytic laws".into(),
            ))
        }
        (None, _) => None,
    };
    let mut cfg = FcsConfig::new(a.method);
    cfg.sweeps = a.sweeps;
    cfg.chains = a.chains;
    cfg.seed = a.seed;
    cfg.visit = match a.visit.as_str() {
        "ascending" => VisitOrder::Ascending,
        "random" => VisitOrder::RandomPerSweep,
        other => {
            return Err(Error::InvalidConfig(format!("unknown visit order `{other}`")))
        }
    };
    let run = impute(&data, &cfg, spec)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    // chain index becomes a suffix when more than one chain is requested
    if run.chains.len() == 1 {
        run.chains[0].completed.values.write_csv_path(&a.output, a.header)?;
    } else {
        for (c, chain) in run.chains.iter().enumerate() {
            let mut path = a.output.clone();
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("imputed")
                .to_string();
            let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv").to_string();
            path.set_file_name(format!("{stem}-{c}.{ext}"));
            chain.completed.values.write_csv_path(&path, a.header)?;
        }
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<()> {
    let spec = make_spec(&a.mechanism)?;
    let grid = GridSpec::gauss(a.nodes)?;
    let conditions = if a.condition.is_empty() && !a.positivity && a.overlap.is_empty() {
        vec![
            Condition::SmMarII,
            Condition::PmmMar,
            Condition::Cimar,
            Condition::Emar,
            Condition::Mcar,
            Condition::Rmar,
        ]
    } else {
        a.condition.clone()
    };
    let mut reports = Vec::new();
    for c in conditions {
        reports.push(check_condition(&spec, c, &grid, a.tol)?);
    }
    for &j in &a.overlap {
        reports.push(check_overlap(&spec, j, &grid, a.tol)?);
    }
    if a.positivity {
        reports.push(check_positivity(&spec, &grid, a.tol)?);
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!(
                "{:<16} {:<10} {}  max-violation {:.3e}",
                r.mechanism,
                r.condition.to_string(),
                if r.passed { "pass" } else { "FAIL" },
                r.max_violation
            );
        }
    }
    for &k in &a.weights {
        let r = weight_existence(&spec, k, &grid)?;
        if a.json {
            println!("{}", serde_json::to_string_pretty(&r)?);
        } else {
            println!(
                "{:<16} weights[{}] residual {:.3e} over donors {:?}",
                r.mechanism, k, r.max_residual, r.donors
            );
        }
    }
    if let Some(perm) = &a.graphical {
        let order: Vec<usize> = perm
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("bad permutation entry `{t}`")))
            })
            .collect::<Result<_>>()?;
        let r = graphical_factor_check(&spec, &order, &grid, a.tol)?;
        if a.json {
            println!("{}", serde_json::to_string_pretty(&r)?);
        } else {
            println!(
                "{:<16} ordered factorization {:?} {}  max-violation {:.3e}",
                r.mechanism,
                r.permutation,
                if r.passed { "pass" } else { "FAIL" },
                r.max_violation
            );
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => ExperimentConfig::from_json_path(path)?,
        None => {
            let mut cfg = ExperimentConfig::new(&a.mechanism);
            cfg.n = a.n;
            cfg.repetitions = a.repetitions;
            cfg.seed = a.seed;
            cfg
        }
    };
    let report = run_experiment(&cfg)?;
    write_report(&report, &a.out)?;
    for s in &report.summary {
        println!(
            "{:<16} energy {:.4} (sd {:.4})  rmse {:.4} (sd {:.4})  {:.2}s/rep",
            s.method, s.mean_energy, s.sd_energy, s.mean_rmse, s.sd_rmse, s.mean_seconds
        );
    }
    eprintln!("wrote report.json, scores.csv, standardized.csv to {}", a.out.display());
    Ok(())
}

fn cmd_quantile(a: QuantileArgs) -> Result<()> {
    let mut cfg = QuantileStudyConfig::new(&a.mechanism);
    cfg.n = a.n;
    cfg.column = a.column;
    cfg.level = a.level;
    cfg.repetitions = a.repetitions;
    cfg.seed = a.seed;
    let report = run_quantile_study(&cfg)?;
    println!("true {:.4}-quantile of column {}: {:.5}", a.level, a.column, report.true_value);
    println!(
        "observed-only estimate: {:.5} (sd {:.5}, bias {:+.5})",
        report.observed_only.mean,
        report.observed_only.sd,
        report.observed_only.mean - report.true_value
    );
    for (method, stat) in &report.methods {
        println!(
            "{:<16} estimate: {:.5} (sd {:.5}, bias {:+.5})",
            method,
            stat.mean,
            stat.sd,
            stat.mean - report.true_value
        );
    }
    if let Some(path) = &a.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

// clap derives rely on FromStr; make sure the bound is satisfied for the
// catalogue-facing enums without pulling ValueEnum into the library.
const _: fn() = || {
    fn assert_from_str<T: FromStr>() {}
    assert_from_str::<ModelKind>();
    assert_from_str::<Condition>();
};
