//! Beale/Booth function-approximation benchmark.
//!
//! A 2-h-1 perceptron is fitted to random samples of a two-variable test
//! function, and its train/test error is reported as `100 × MSE` on the
//! normalized targets.

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::math::RealVector;
use crate::mlp::{init_params, loss_mse, Dataset, MlpError, Network, ParamVector, Rows, Topology};
use crate::optim::{
    bfgs_train_observed, gd_train, BfgsStep, GdConfig, MinimizeResult, OptimError, Status,
    StopCriteria, WolfeConfig,
};

/// ChaCha stream used for dataset sampling, kept apart from the weight
/// initialization stream of the same seed.
const SAMPLING_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchFunction {
    Beale,
    Booth,
}

impl BenchFunction {
    pub const ALL: [BenchFunction; 2] = [BenchFunction::Beale, BenchFunction::Booth];

    pub fn name(&self) -> &'static str {
        match self {
            BenchFunction::Beale => "beale",
            BenchFunction::Booth => "booth",
        }
    }

    /// Per-coordinate sampling domain `(lo, hi)`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            BenchFunction::Beale => (-4.5, 4.5),
            BenchFunction::Booth => (-10.0, 10.0),
        }
    }

    pub fn eval(&self, x0: f64, x1: f64) -> f64 {
        match self {
            BenchFunction::Beale => beale(x0, x1),
            BenchFunction::Booth => booth(x0, x1),
        }
    }

    /// Analytic gradient `(∂f/∂x0, ∂f/∂x1)`.
    pub fn gradient(&self, x0: f64, x1: f64) -> (f64, f64) {
        match self {
            BenchFunction::Beale => {
                let r1 = 1.5 - x0 + x0 * x1;
                let r2 = 2.25 - x0 + x0 * x1 * x1;
                let r3 = 2.625 - x0 + x0 * x1 * x1 * x1;
                let d0 = 2.0 * (r1 * (x1 - 1.0) + r2 * (x1 * x1 - 1.0) + r3 * (x1 * x1 * x1 - 1.0));
                let d1 = 2.0 * (r1 * x0 + r2 * 2.0 * x0 * x1 + r3 * 3.0 * x0 * x1 * x1);
                (d0, d1)
            }
            BenchFunction::Booth => {
                let r1 = x0 + 2.0 * x1 - 7.0;
                let r2 = 2.0 * x0 + x1 - 5.0;
                (2.0 * r1 + 4.0 * r2, 4.0 * r1 + 2.0 * r2)
            }
        }
    }
}

impl FromStr for BenchFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "beale" => Ok(BenchFunction::Beale),
            "booth" => Ok(BenchFunction::Booth),
            other => Err(format!("unknown function `{other}` (expected beale|booth)")),
        }
    }
}

impl std::fmt::Display for BenchFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Canonical Beale function; zero at `(3, 0.5)`.
pub fn beale(x0: f64, x1: f64) -> f64 {
    (1.5 - x0 + x0 * x1).powi(2)
        + (2.25 - x0 + x0 * x1 * x1).powi(2)
        + (2.625 - x0 + x0 * x1 * x1 * x1).powi(2)
}

/// Booth function; zero at `(1, 3)`.
pub fn booth(x0: f64, x1: f64) -> f64 {
    (x0 + 2.0 * x1 - 7.0).powi(2) + (2.0 * x0 + x1 - 5.0).powi(2)
}

/// Draws `n` uniform points from the function's domain, shuffles them and
/// splits off the first `round(train_fraction · n)` rows for training.
pub fn sample_dataset(
    function: BenchFunction,
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<Dataset, BenchError> {
    if n < 10 {
        return Err(BenchError::InvalidConfig(format!("need at least 10 samples, got {n}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(BenchError::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let split = (train_fraction * n as f64).round() as usize;
    if split < 1 || split >= n {
        return Err(BenchError::InvalidConfig(format!(
            "train fraction {train_fraction} of {n} samples leaves an empty partition"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLING_STREAM);
    let (lo, hi) = function.domain();
    let mut points: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)))
        .collect();
    points.shuffle(&mut rng);

    let inputs = points
        .iter()
        .map(|&(a, b)| RealVector::new(vec![a, b]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(MlpError::from)?;
    let targets = points.iter().map(|&(a, b)| function.eval(a, b)).collect();
    Ok(Dataset::new(inputs, targets, split)?)
}

/// `100 × MSE` on normalized targets.
pub fn error_percent(net: &Network, data: &Dataset, rows: Rows) -> Result<f64, BenchError> {
    Ok(100.0 * loss_mse(net, data, rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerConfig {
    Gd(GdConfig),
    Bfgs {
        stop: StopCriteria,
        wolfe: WolfeConfig,
    },
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Gd(_) => "gd",
            OptimizerConfig::Bfgs { .. } => "bfgs",
        }
    }

    pub fn bfgs_default() -> Self {
        OptimizerConfig::Bfgs {
            stop: StopCriteria::default(),
            wolfe: WolfeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub function: BenchFunction,
    pub n_samples: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub hidden: usize,
    pub optimizer: OptimizerConfig,
}

impl BenchConfig {
    pub fn new(function: BenchFunction, optimizer: OptimizerConfig) -> Self {
        Self {
            function,
            n_samples: 500,
            train_fraction: 0.8,
            seed: 42,
            hidden: 10,
            optimizer,
        }
    }
}

/// One history row of a [`TrainReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub iter: usize,
    pub train_error_pct: f64,
    pub test_error_pct: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub optimizer: &'static str,
    pub train_error_pct: f64,
    pub test_error_pct: f64,
    pub iterations: usize,
    pub wall_clock_s: f64,
    pub history: Vec<ReportRow>,
    pub status: Status,
    pub n_train: usize,
    pub n_test: usize,
    pub skipped_updates: usize,
    /// SHA-256 of the initial parameters (little-endian `f64` bytes).
    pub initial_param_hash: String,
}

impl TrainReport {
    /// Equality ignoring the wall-clock measurement.
    pub fn same_numbers(&self, other: &TrainReport) -> bool {
        let mut a = self.clone();
        a.wall_clock_s = other.wall_clock_s;
        a == *other
    }
}

pub fn param_hash(params: &ParamVector) -> String {
    let mut hasher = Sha256::new();
    for v in params.as_slice() {
        hasher.update(v.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Dataset and initial network for a seed.
pub fn prepare(
    function: BenchFunction,
    n_samples: usize,
    train_fraction: f64,
    hidden: usize,
    seed: u64,
) -> Result<(Dataset, Network), BenchError> {
    let data = sample_dataset(function, n_samples, train_fraction, seed)?;
    let topology = Topology::new(2, hidden, 1)?;
    Ok((data, Network::from_params(init_params(topology, seed))))
}

fn train_prepared<F>(
    net: &Network,
    data: &Dataset,
    optimizer: &OptimizerConfig,
    observer: F,
) -> Result<TrainReport, BenchError>
where
    F: FnMut(&BfgsStep<'_>),
{
    let start = Instant::now();
    let (trained, result) = match optimizer {
        OptimizerConfig::Gd(cfg) => gd_train(net, data, cfg)?,
        OptimizerConfig::Bfgs { stop, wolfe } => bfgs_train_observed(net, data, stop, wolfe, observer)?,
    };
    let wall_clock_s = start.elapsed().as_secs_f64();
    Ok(build_report(optimizer.name(), net, &trained, data, result, wall_clock_s)?)
}

fn build_report(
    optimizer: &'static str,
    initial: &Network,
    trained: &Network,
    data: &Dataset,
    result: MinimizeResult,
    wall_clock_s: f64,
) -> Result<TrainReport, BenchError> {
    let history = result
        .history
        .iter()
        .map(|e| ReportRow {
            iter: e.iter,
            train_error_pct: 100.0 * e.f,
            test_error_pct: 100.0 * e.test_f.unwrap_or(f64::NAN),
            grad_norm: e.grad_norm,
        })
        .collect();
    Ok(TrainReport {
        optimizer,
        train_error_pct: error_percent(trained, data, Rows::Train)?,
        test_error_pct: error_percent(trained, data, Rows::Test)?,
        iterations: result.iters,
        wall_clock_s,
        history,
        status: result.status,
        n_train: data.split_index(),
        n_test: data.len() - data.split_index(),
        skipped_updates: result.n_skipped_updates,
        initial_param_hash: param_hash(initial.params()),
    })
}

/// Samples the dataset, initializes the network from the seed, trains it and
/// times the training.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<TrainReport, BenchError> {
    let (data, net) = prepare(cfg.function, cfg.n_samples, cfg.train_fraction, cfg.hidden, cfg.seed)?;
    train_prepared(&net, &data, &cfg.optimizer, |_| {})
}

/// Settings for a paired gradient-descent vs BFGS run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConfig {
    pub function: BenchFunction,
    pub seed: u64,
    pub n_samples: usize,
    pub train_fraction: f64,
    pub hidden: usize,
    pub gd: GdConfig,
    pub stop: StopCriteria,
    pub wolfe: WolfeConfig,
}

impl ComparisonConfig {
    pub fn new(function: BenchFunction, seed: u64) -> Self {
        Self {
            function,
            seed,
            n_samples: 500,
            train_fraction: 0.8,
            hidden: 10,
            gd: GdConfig::default(),
            stop: StopCriteria::default(),
            wolfe: WolfeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub gd: TrainReport,
    pub bfgs: TrainReport,
}

/// Trains both optimizers from the same dataset and initial network.
pub fn run_comparison(cfg: &ComparisonConfig) -> Result<Comparison, BenchError> {
    run_comparison_observed(cfg, |_| {})
}

/// As [`run_comparison`], calling `observer` on every accepted BFGS step.
/// The two trainings run on separate threads.
pub fn run_comparison_observed<F>(cfg: &ComparisonConfig, observer: F) -> Result<Comparison, BenchError>
where
    F: FnMut(&BfgsStep<'_>) + Send,
{
    let (data, net) = prepare(cfg.function, cfg.n_samples, cfg.train_fraction, cfg.hidden, cfg.seed)?;
    let gd_opt = OptimizerConfig::Gd(cfg.gd);
    let bfgs_opt = OptimizerConfig::Bfgs {
        stop: cfg.stop,
        wolfe: cfg.wolfe,
    };
    let (gd, bfgs) = std::thread::scope(|scope| {
        let gd = scope.spawn(|| train_prepared(&net, &data, &gd_opt, |_| {}));
        let bfgs = train_prepared(&net, &data, &bfgs_opt, observer);
        (gd.join().expect("gradient-descent thread panicked"), bfgs)
    });
    Ok(Comparison { gd: gd?, bfgs: bfgs? })
}
