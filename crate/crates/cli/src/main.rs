use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use fullcp::datagen::{gen_classification, gen_regression, save_csv, save_regression_csv, GenSpec, Task};
use fullcp_cli::bench::{append_records, prediction_slopes, run_sweep};
use fullcp_cli::config::{BenchMeasure, BenchVariant, RunConfig};
use fullcp_cli::fuzziness::run_fuzziness;
use fullcp_cli::predict::run_predict;
use fullcp_cli::report::{report_path, write_json};
use fullcp_cli::validate::run_validation;

#[derive(Parser)]
#[command(name = "fullcp", version, about = "Full conformal prediction with incremental and decremental learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Predict every row of a test CSV and print a JSON report.
    Predict(PredictArgs),
    /// Time training and prediction over a grid of training set sizes.
    Bench(BenchArgs),
    /// Estimate empirical error rates against the significance level.
    Validate(Common),
    /// Compare the fuzziness of full CP and ICP.
    Fuzziness(Common),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "classification")]
    task: Task,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 2.0)]
    class_sep: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_sd: f64,
}

/// Settings shared by the experiment commands. Precedence, lowest first:
/// defaults, environment, `--config`, `--set`, explicit flags.
#[derive(Args)]
struct Common {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Comma-separated measures.
    #[arg(long)]
    measures: Option<String>,
    /// Comma-separated variants: standard, optimized, icp.
    #[arg(long)]
    variants: Option<String>,
    /// Comma-separated sizes, or `log:lo,hi,count`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    test_points: Option<usize>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Parallelise prediction over (test point, label) pairs.
    #[arg(long)]
    parallel: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::from_env();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.sets {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k, v)?;
        }
        let flags: [(&str, Option<String>); 11] = [
            ("measures", self.measures.clone()),
            ("variants", self.variants.clone()),
            ("grid", self.grid.clone()),
            ("seeds", self.seeds.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("test_points", self.test_points.map(|v| v.to_string())),
            ("timeout", self.timeout.map(|v| v.to_string())),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("report_dir", self.report_dir.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.parallel {
            cfg.parallel = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "knn")]
    measure: BenchMeasure,
    #[arg(long, default_value = "optimized")]
    variant: BenchVariant,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    /// CSV file to append records to; defaults to `<report_dir>/bench.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn gen(args: &GenArgs) -> Result<()> {
    let spec = GenSpec {
        task: args.task,
        n: args.n,
        dim: args.dim,
        n_labels: args.classes,
        class_sep: args.class_sep,
        noise_sd: args.noise_sd,
        seed: args.seed,
    };
    match args.task {
        Task::Classification => save_csv(&gen_classification(&spec)?, &args.out)?,
        Task::Regression => save_regression_csv(&gen_regression(&spec)?, &args.out)?,
    }
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let report = run_predict(&cfg, &args.train, &args.test, args.measure, args.variant)?;
    match &args.out {
        Some(path) => write_json(path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => report_path(&cfg, "bench.csv")?,
    };
    let records = run_sweep(&cfg, |r| {
        let status = if !r.error.is_empty() {
            format!("error: {}", r.error)
        } else if r.timed_out {
            "timed out".to_owned()
        } else {
            "ok".to_owned()
        };
        eprintln!(
            "{} {} n={} seed={} train={:.3e}s predict={:.3e}s {}",
            r.measure, r.variant, r.n, r.seed, r.train_seconds, r.mean_predict_seconds, status
        );
        append_records(&out, std::slice::from_ref(r))
    })?;
    let lo = cfg.grid[0];
    let hi = *cfg.grid.last().unwrap_or(&lo);
    for row in prediction_slopes(&records, lo, hi) {
        println!(
            "{} {}: log-log prediction slope {:.3} over {} sizes",
            row.measure, row.variant, row.slope, row.points
        );
    }
    println!("records written to {}", out.display());
    Ok(())
}

fn validate(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let rows = run_validation(&cfg)?;
    for r in &rows {
        println!(
            "{} {} n={} eps={} errors={}/{} rate={:.4} bound={:.4} {}",
            r.measure,
            r.variant,
            r.n,
            r.epsilon,
            r.errors,
            r.trials,
            r.error_rate,
            r.bound,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let path = report_path(&cfg, "validation.json")?;
    write_json(&path, &rows)?;
    println!("report written to {}", path.display());
    Ok(())
}

fn fuzziness(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let reports = run_fuzziness(&cfg)?;
    for r in &reports {
        println!(
            "{}: CP {:.4} ± {:.4}, ICP {:.4} ± {:.4}, t={:.3}, p={:.3e}{}",
            r.measure,
            r.cp_mean,
            r.cp_sd,
            r.icp_mean,
            r.icp_sd,
            r.welch.t,
            r.welch.p_value,
            if r.reject_null { " (ICP fuzzier)" } else { "" }
        );
    }
    let path = report_path(&cfg, "fuzziness.json")?;
    write_json(&path, &reports)?;
    println!("report written to {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => bench(a),
        Command::Validate(c) => validate(c),
        Command::Fuzziness(c) => fuzziness(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
