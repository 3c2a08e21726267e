//! One-hidden-layer sigmoid perceptron.
//!
//! Parameters live in a single flat vector so that any optimizer can treat
//! training as unconstrained minimization. The layout is
//! `[W_in_hidden (row-major) | b_hidden | W_hidden_out (row-major) | b_out]`,
//! where row `h` of `W_in_hidden` holds the weights feeding hidden unit `h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math::{MathError, RealVector};

/// Lower end of the normalized target range.
pub const NORM_LO: f64 = 0.1;
/// Upper end of the normalized target range.
pub const NORM_HI: f64 = 0.9;

/// Bound of the uniform weight initialization interval `[-INIT_BOUND, INIT_BOUND]`.
pub const INIT_BOUND: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid topology {0}-{1}-{2}: every layer needs at least one node")]
    InvalidTopology(usize, usize, usize),
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("row selection is empty")]
    EmptySelection,
    #[error("targets are constant; cannot normalize")]
    ConstantTargets,
    #[error("invalid normalization range: lo {lo} must be below hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
}

impl Topology {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Result<Self, MlpError> {
        if n_in == 0 || n_hidden == 0 || n_out == 0 {
            return Err(MlpError::InvalidTopology(n_in, n_hidden, n_out));
        }
        Ok(Self {
            n_in,
            n_hidden,
            n_out,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Number of trainable parameters, biases included.
    pub fn param_len(&self) -> usize {
        self.n_hidden * self.n_in + self.n_hidden + self.n_out * self.n_hidden + self.n_out
    }

    fn offsets(&self) -> Offsets {
        let b_hidden = self.n_hidden * self.n_in;
        let w_out = b_hidden + self.n_hidden;
        let b_out = w_out + self.n_out * self.n_hidden;
        Offsets {
            b_hidden,
            w_out,
            b_out,
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.n_in, self.n_hidden, self.n_out)
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    b_hidden: usize,
    w_out: usize,
    b_out: usize,
}

/// Borrowed view of a flat parameter slice split into its four blocks.
struct Layers<'a> {
    w_hidden: &'a [f64],
    b_hidden: &'a [f64],
    w_out: &'a [f64],
    b_out: &'a [f64],
}

impl<'a> Layers<'a> {
    fn split(topology: &Topology, params: &'a [f64]) -> Self {
        debug_assert_eq!(params.len(), topology.param_len());
        let o = topology.offsets();
        Self {
            w_hidden: &params[..o.b_hidden],
            b_hidden: &params[o.b_hidden..o.w_out],
            w_out: &params[o.w_out..o.b_out],
            b_out: &params[o.b_out..],
        }
    }
}

/// Flattened weights and biases whose length matches a [`Topology`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    topology: Topology,
    values: RealVector,
}

impl ParamVector {
    pub fn new(topology: Topology, values: RealVector) -> Result<Self, MlpError> {
        if values.len() != topology.param_len() {
            return Err(MlpError::DimensionMismatch {
                what: "parameter vector",
                expected: topology.param_len(),
                found: values.len(),
            });
        }
        Ok(Self { topology, values })
    }

    pub fn from_vec(topology: Topology, values: Vec<f64>) -> Result<Self, MlpError> {
        Self::new(topology, RealVector::new(values)?)
    }

    pub fn zeros(topology: Topology) -> Self {
        Self {
            topology,
            values: RealVector::zeros(topology.param_len()),
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn values(&self) -> &RealVector {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> RealVector {
        self.values
    }
}

/// Draws every parameter uniformly from `[-0.5, 0.5]` using a ChaCha8 stream
/// seeded with `seed`.
pub fn init_params(topology: Topology, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..topology.param_len())
        .map(|_| rng.gen_range(-INIT_BOUND..=INIT_BOUND))
        .collect();
    ParamVector::from_vec(topology, values).expect("uniform draws are finite")
}

/// Logistic function `1 / (1 + e^-x)`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Activations produced by one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: RealVector,
    pub output: RealVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    params: ParamVector,
}

impl Network {
    pub fn new(topology: Topology, params: ParamVector) -> Result<Self, MlpError> {
        if params.topology() != topology {
            return Err(MlpError::DimensionMismatch {
                what: "parameter vector",
                expected: topology.param_len(),
                found: params.len(),
            });
        }
        Ok(Self { topology, params })
    }

    pub fn from_params(params: ParamVector) -> Self {
        Self {
            topology: params.topology(),
            params,
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn with_params(&self, values: RealVector) -> Result<Self, MlpError> {
        Ok(Self {
            topology: self.topology,
            params: ParamVector::new(self.topology, values)?,
        })
    }

    pub fn forward(&self, input: &RealVector) -> Result<Activations, MlpError> {
        if input.len() != self.topology.n_in {
            return Err(MlpError::DimensionMismatch {
                what: "input",
                expected: self.topology.n_in,
                found: input.len(),
            });
        }
        let mut hidden = vec![0.0; self.topology.n_hidden];
        let mut output = vec![0.0; self.topology.n_out];
        forward_into(
            &self.topology,
            self.params.as_slice(),
            input.as_slice(),
            &mut hidden,
            &mut output,
        );
        Ok(Activations {
            hidden: RealVector::new(hidden)?,
            output: RealVector::new(output)?,
        })
    }
}

pub(crate) fn forward_into(
    topology: &Topology,
    params: &[f64],
    input: &[f64],
    hidden: &mut [f64],
    output: &mut [f64],
) {
    let layers = Layers::split(topology, params);
    let n_in = topology.n_in;
    let n_hidden = topology.n_hidden;
    for (h, act) in hidden.iter_mut().enumerate() {
        let w = &layers.w_hidden[h * n_in..(h + 1) * n_in];
        let z: f64 = w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + layers.b_hidden[h];
        *act = sigmoid(z);
    }
    for (k, act) in output.iter_mut().enumerate() {
        let w = &layers.w_out[k * n_hidden..(k + 1) * n_hidden];
        let z: f64 = w.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>() + layers.b_out[k];
        *act = sigmoid(z);
    }
}

/// Which rows of a [`Dataset`] an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rows {
    Train,
    Test,
    All,
}

/// Sampled `(input, target)` pairs with their normalization and a
/// train/test split. Rows `[0, split_index)` are training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<RealVector>,
    targets_raw: Vec<f64>,
    targets_norm: Vec<f64>,
    norm_lo: f64,
    norm_hi: f64,
    split_index: usize,
}

impl Dataset {
    /// Builds a dataset from raw targets, normalizing over all rows.
    pub fn new(
        inputs: Vec<RealVector>,
        targets_raw: Vec<f64>,
        split_index: usize,
    ) -> Result<Self, MlpError> {
        let norm = normalize_targets(&targets_raw)?;
        Self::from_parts(inputs, targets_raw, norm.normed, norm.lo, norm.hi, split_index)
    }

    /// Builds a dataset with explicitly supplied normalized targets.
    pub fn from_parts(
        inputs: Vec<RealVector>,
        targets_raw: Vec<f64>,
        targets_norm: Vec<f64>,
        norm_lo: f64,
        norm_hi: f64,
        split_index: usize,
    ) -> Result<Self, MlpError> {
        let n = inputs.len();
        if n < 2 {
            return Err(MlpError::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if targets_raw.len() != n || targets_norm.len() != n {
            return Err(MlpError::InvalidDataset(format!(
                "{n} inputs but {} raw and {} normalized targets",
                targets_raw.len(),
                targets_norm.len()
            )));
        }
        let n_in = inputs[0].len();
        if inputs.iter().any(|x| x.len() != n_in) {
            return Err(MlpError::InvalidDataset("inputs have differing lengths".into()));
        }
        if targets_raw.iter().any(|t| !t.is_finite()) {
            return Err(MlpError::InvalidDataset("non-finite raw target".into()));
        }
        let slack = 1e-12;
        if let Some(t) = targets_norm
            .iter()
            .find(|t| !(**t >= NORM_LO - slack && **t <= NORM_HI + slack))
        {
            return Err(MlpError::InvalidDataset(format!(
                "normalized target {t} outside [{NORM_LO}, {NORM_HI}]"
            )));
        }
        if !(norm_lo < norm_hi) {
            return Err(MlpError::InvalidRange {
                lo: norm_lo,
                hi: norm_hi,
            });
        }
        if split_index < 1 || split_index >= n {
            return Err(MlpError::InvalidDataset(format!(
                "split index {split_index} leaves an empty partition of {n} rows"
            )));
        }
        Ok(Self {
            inputs,
            targets_raw,
            targets_norm,
            norm_lo,
            norm_hi,
            split_index,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_in(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[RealVector] {
        &self.inputs
    }

    pub fn targets_raw(&self) -> &[f64] {
        &self.targets_raw
    }

    pub fn targets_norm(&self) -> &[f64] {
        &self.targets_norm
    }

    pub fn norm_lo(&self) -> f64 {
        self.norm_lo
    }

    pub fn norm_hi(&self) -> f64 {
        self.norm_hi
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn range(&self, rows: Rows) -> std::ops::Range<usize> {
        match rows {
            Rows::Train => 0..self.split_index,
            Rows::Test => self.split_index..self.len(),
            Rows::All => 0..self.len(),
        }
    }

    fn check_against(&self, topology: &Topology) -> Result<(), MlpError> {
        if self.n_in() != topology.n_in {
            return Err(MlpError::DimensionMismatch {
                what: "dataset input",
                expected: topology.n_in,
                found: self.n_in(),
            });
        }
        if topology.n_out != 1 {
            return Err(MlpError::DimensionMismatch {
                what: "output layer for scalar targets",
                expected: 1,
                found: topology.n_out,
            });
        }
        Ok(())
    }
}

/// Mean squared error over the selected rows against normalized targets.
pub fn loss_mse(net: &Network, data: &Dataset, rows: Rows) -> Result<f64, MlpError> {
    data.check_against(&net.topology)?;
    let range = data.range(rows);
    if range.is_empty() {
        return Err(MlpError::EmptySelection);
    }
    let mut hidden = vec![0.0; net.topology.n_hidden];
    let mut out = [0.0];
    let n = range.len() as f64;
    let mut sum = 0.0;
    for r in range {
        forward_into(
            &net.topology,
            net.params.as_slice(),
            data.inputs[r].as_slice(),
            &mut hidden,
            &mut out,
        );
        let e = data.targets_norm[r] - out[0];
        sum += e * e;
    }
    Ok(sum / n)
}

/// MSE and its gradient at `params`, computed in one sweep over the rows.
///
/// Output deltas follow the sigmoid delta rule `O(1-O)(T-O)` and are pushed
/// back through the output weights; the result is scaled by `-2/N` so that
/// it is the true gradient of the mean squared error.
pub(crate) fn loss_and_grad_raw(
    topology: &Topology,
    params: &[f64],
    data: &Dataset,
    rows: Rows,
) -> (f64, Vec<f64>) {
    let layers = Layers::split(topology, params);
    let offs = topology.offsets();
    let (n_in, n_hidden) = (topology.n_in, topology.n_hidden);
    let range = data.range(rows);
    let scale = -2.0 / range.len() as f64;

    let mut grad = vec![0.0; params.len()];
    let mut hidden = vec![0.0; n_hidden];
    let mut out = [0.0];
    let mut sum = 0.0;
    for r in range {
        let x = data.inputs[r].as_slice();
        forward_into(topology, params, x, &mut hidden, &mut out);
        let o = out[0];
        let err = data.targets_norm[r] - o;
        sum += err * err;
        let delta_out = o * (1.0 - o) * err;

        let (g_hidden, rest) = grad.split_at_mut(offs.w_out);
        let (g_w_out, g_b_out) = rest.split_at_mut(n_hidden);
        g_b_out[0] += delta_out;
        for h in 0..n_hidden {
            g_w_out[h] += delta_out * hidden[h];
            let delta_h = hidden[h] * (1.0 - hidden[h]) * layers.w_out[h] * delta_out;
            let row = &mut g_hidden[h * n_in..(h + 1) * n_in];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += delta_h * xi;
            }
            g_hidden[offs.b_hidden + h] += delta_h;
        }
    }
    for g in &mut grad {
        *g *= scale;
    }
    (sum / data.range(rows).len() as f64, grad)
}

/// Gradient of [`loss_mse`] with respect to every parameter, in layout order.
pub fn grad_backprop(net: &Network, data: &Dataset, rows: Rows) -> Result<ParamVector, MlpError> {
    data.check_against(&net.topology)?;
    if data.range(rows).is_empty() {
        return Err(MlpError::EmptySelection);
    }
    let (_, g) = loss_and_grad_raw(&net.topology, net.params.as_slice(), data, rows);
    ParamVector::from_vec(net.topology, g)
}

/// Central-difference approximation of the MSE gradient with step `h`.
pub fn finite_diff_grad(
    net: &Network,
    data: &Dataset,
    rows: Rows,
    h: f64,
) -> Result<ParamVector, MlpError> {
    if !(h > 0.0) {
        return Err(MlpError::InvalidStep(h));
    }
    let base = net.params.as_slice();
    let mut probe = base.to_vec();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        let up = loss_mse(&net.with_params(RealVector::new(probe.clone())?)?, data, rows)?;
        probe[i] = base[i] - h;
        let down = loss_mse(&net.with_params(RealVector::new(probe.clone())?)?, data, rows)?;
        probe[i] = base[i];
        grad.push((up - down) / (2.0 * h));
    }
    ParamVector::from_vec(net.topology, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub normed: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

/// Affine map sending `min(raw)` to 0.1 and `max(raw)` to 0.9.
pub fn normalize_targets(raw: &[f64]) -> Result<Normalized, MlpError> {
    if raw.len() < 2 {
        return Err(MlpError::InvalidDataset(format!(
            "need at least 2 targets to normalize, got {}",
            raw.len()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(MlpError::InvalidDataset("non-finite raw target".into()));
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(MlpError::ConstantTargets);
    }
    let width = hi - lo;
    let normed = raw
        .iter()
        .map(|v| (NORM_LO + (NORM_HI - NORM_LO) * (v - lo) / width).clamp(NORM_LO, NORM_HI))
        .collect();
    Ok(Normalized { normed, lo, hi })
}

/// Inverse of [`normalize_targets`] for the range `[lo, hi]`.
pub fn denormalize(y: f64, lo: f64, hi: f64) -> Result<f64, MlpError> {
    if !(hi > lo) {
        return Err(MlpError::InvalidRange { lo, hi });
    }
    Ok(lo + (y - NORM_LO) * (hi - lo) / (NORM_HI - NORM_LO))
}
