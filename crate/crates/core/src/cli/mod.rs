//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (line-search failure or divergence, or a failed gradient check).

pub mod config;
pub mod gradcheck;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{
    run_benchmark, run_comparison, BenchConfig, BenchError, BenchFunction, ComparisonConfig,
    OptimizerConfig, TrainReport,
};
use crate::optim::GdMode;
use config::{parse_config, ConfigError, OptimizerKind, Overrides, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qnbp", version, about = "Gradient-descent vs BFGS back-propagation benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one network on one benchmark function.
    Train(TrainArgs),
    /// Train on every benchmark function (one subdirectory each).
    Bench(BenchArgs),
    /// Train gradient descent and BFGS from identical initial conditions.
    Compare(CompareArgs),
    /// Check back-propagated gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Benchmark function: beale or booth (required, here or in the config file)
    #[arg(long)]
    pub function: Option<BenchFunction>,
    /// Optimizer: gd or bfgs [default: bfgs]
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Optimizer: gd or bfgs [default: bfgs]
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Benchmark function: beale or booth (required, here or in the config file)
    #[arg(long)]
    pub function: Option<BenchFunction>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// Hidden-layer width [default: 10]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of sampled points [default: 500]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Fraction of samples used for training [default: 0.8]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Seed for sampling and weight initialization [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gradient-descent learning rate [default: 0.1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Gradient-descent epochs [default: 500]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Gradient-descent update mode: online or batch [default: online]
    #[arg(long)]
    pub gd_mode: Option<GdMode>,
    /// BFGS iteration limit [default: 500]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// BFGS gradient-norm tolerance [default: 1e-5]
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Sufficient-decrease constant [default: 1e-4]
    #[arg(long)]
    pub c1: Option<f64>,
    /// Curvature constant [default: 0.9]
    #[arg(long)]
    pub c2: Option<f64>,
    /// `key = value` config file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Fixed hidden width; by default trials cycle through 1..=5
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Negative control: corrupts one analytic gradient entry.
    #[arg(long, hide = true)]
    pub sabotage: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write to {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidConfig(_) | BenchError::Mlp(_) => CliError::Usage(e.to_string()),
            BenchError::Optim(crate::optim::OptimError::InvalidConfig(msg)) => CliError::Usage(msg),
            BenchError::Optim(other) => CliError::Numerical(other.to_string()),
        }
    }
}

impl SharedArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            hidden: self.hidden,
            samples: self.samples,
            train_fraction: self.train_fraction,
            seed: self.seed,
            eta: self.eta,
            epochs: self.epochs,
            gd_mode: self.gd_mode,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            c1: self.c1,
            c2: self.c2,
            ..Overrides::default()
        }
    }

    fn resolve(
        &self,
        function: Option<BenchFunction>,
        optimizer: Option<OptimizerKind>,
    ) -> Result<Settings, CliError> {
        let flags = Overrides {
            function,
            optimizer,
            ..self.overrides()
        };
        let file = match &self.config {
            Some(path) => parse_config(path)?,
            None => Overrides::default(),
        };
        Ok(Settings::resolve(&flags.or(file)))
    }
}

fn out_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

fn write_manifest(
    dir: &Path,
    subcommand: &str,
    settings: &Settings,
    include_optimizer: bool,
    artifacts: &[&str],
) -> Result<(), CliError> {
    let mut pairs = vec![
        ("tool_version", env!("CARGO_PKG_VERSION").to_string()),
        ("subcommand", subcommand.to_string()),
    ];
    pairs.extend(settings.manifest_pairs(include_optimizer));
    let mut files: Vec<&str> = artifacts.to_vec();
    files.push("manifest.txt");
    pairs.push(("artifacts", files.join(",")));
    let path = dir.join("manifest.txt");
    output::write_key_values(&path, &pairs).map_err(out_err(&path))
}

fn optimizer_config(settings: &Settings) -> OptimizerConfig {
    match settings.optimizer {
        OptimizerKind::Gd => OptimizerConfig::Gd(settings.gd),
        OptimizerKind::Bfgs => OptimizerConfig::Bfgs {
            stop: settings.stop,
            wolfe: settings.wolfe,
        },
    }
}

fn bench_config(function: BenchFunction, settings: &Settings) -> BenchConfig {
    BenchConfig {
        function,
        n_samples: settings.samples,
        train_fraction: settings.train_fraction,
        seed: settings.seed,
        hidden: settings.hidden,
        optimizer: optimizer_config(settings),
    }
}

fn require_function(settings: &Settings) -> Result<BenchFunction, CliError> {
    settings
        .function
        .ok_or_else(|| CliError::Usage("missing --function (beale|booth)".into()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(out_err(dir))
}

/// Trains, then writes `history.csv`, `report.txt` and `manifest.txt`
/// into `dir`. Returns the report.
fn train_into(
    dir: &Path,
    subcommand: &str,
    function: BenchFunction,
    settings: &Settings,
) -> Result<TrainReport, CliError> {
    let report = run_benchmark(&bench_config(function, settings))?;
    create_dir(dir)?;
    let history = dir.join("history.csv");
    output::write_history(&history, &report).map_err(out_err(&history))?;
    let report_path = dir.join("report.txt");
    output::write_key_values(&report_path, &output::report_pairs(function.name(), &report))
        .map_err(out_err(&report_path))?;
    let mut resolved = settings.clone();
    resolved.function = Some(function);
    write_manifest(dir, subcommand, &resolved, true, &["history.csv", "report.txt"])?;
    println!(
        "{function} / {}: status {}, train error {:.6}%, test error {:.6}%, {} iterations",
        report.optimizer, report.status, report.train_error_pct, report.test_error_pct, report.iterations
    );
    Ok(report)
}

fn status_code(reports: &[&TrainReport]) -> i32 {
    if reports.iter().any(|r| r.status.is_failure()) {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<i32, CliError> {
    let settings = args.shared.resolve(args.function, args.optimizer)?;
    let function = require_function(&settings)?;
    let report = train_into(&args.shared.out, "train", function, &settings)?;
    Ok(status_code(&[&report]))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    let settings = args.shared.resolve(None, args.optimizer)?;
    let mut reports = Vec::new();
    for function in BenchFunction::ALL {
        let dir = args.shared.out.join(function.name());
        reports.push(train_into(&dir, "bench", function, &settings)?);
    }
    Ok(status_code(&reports.iter().collect::<Vec<_>>()))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    let settings = args.shared.resolve(args.function, None)?;
    let function = require_function(&settings)?;
    let cfg = ComparisonConfig {
        function,
        seed: settings.seed,
        n_samples: settings.samples,
        train_fraction: settings.train_fraction,
        hidden: settings.hidden,
        gd: settings.gd,
        stop: settings.stop,
        wolfe: settings.wolfe,
    };
    let cmp = run_comparison(&cfg)?;
    let mut owned: Vec<(String, String)> = Vec::new();

    let dir = &args.shared.out;
    create_dir(dir)?;
    let csv_path = dir.join("comparison.csv");
    output::write_comparison(&csv_path, &cmp).map_err(out_err(&csv_path))?;
    for (name, report) in [("history_gd.csv", &cmp.gd), ("history_bfgs.csv", &cmp.bfgs)] {
        let path = dir.join(name);
        output::write_history(&path, report).map_err(out_err(&path))?;
    }
    let mut pairs = vec![("function", function.name().to_string())];
    for r in [&cmp.bfgs, &cmp.gd] {
        let prefixed = output::report_pairs(function.name(), r)
            .into_iter()
            .filter(|(k, _)| *k != "function" && *k != "optimizer")
            .map(|(k, v)| (format!("{}_{k}", r.optimizer), v));
        owned.extend(prefixed);
    }
    pairs.extend(owned.iter().map(|(k, v)| (k.as_str(), v.clone())));
    let report_path = dir.join("report.txt");
    output::write_key_values(&report_path, &pairs).map_err(out_err(&report_path))?;
    write_manifest(
        dir,
        "compare",
        &settings,
        false,
        &["comparison.csv", "history_gd.csv", "history_bfgs.csv", "report.txt"],
    )?;
    print!("{}", output::comparison_table(function.name(), &cmp));
    Ok(status_code(&[&cmp.gd, &cmp.bfgs]))
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<i32, CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if args.hidden == Some(0) {
        return Err(CliError::Usage("--hidden must be at least 1".into()));
    }
    let worst = gradcheck::max_gradient_error(args.trials, args.seed, args.hidden, args.sabotage)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pass = worst <= gradcheck::MAX_REL_ERROR;
    println!(
        "gradcheck: {} trials, max relative error {worst:.3e} (limit {:.0e}): {}",
        args.trials,
        gradcheck::MAX_REL_ERROR,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
