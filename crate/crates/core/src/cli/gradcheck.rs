//! Back-propagation vs central-difference gradient check over random
//! seeded networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::RealVector;
use crate::mlp::{
    finite_diff_grad, grad_backprop, init_params, Dataset, MlpError, Network, Rows, Topology,
    NORM_HI, NORM_LO,
};

pub const FD_STEP: f64 = 1e-5;
pub const MAX_REL_ERROR: f64 = 1e-6;
pub const ROWS_PER_TRIAL: usize = 5;

/// Random 2-h-1 network and `ROWS_PER_TRIAL`-row dataset for one trial.
pub fn trial_case(seed: u64, hidden: usize) -> Result<(Network, Dataset), MlpError> {
    let topology = Topology::new(2, hidden, 1)?;
    let net = Network::from_params(init_params(topology, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let inputs = (0..ROWS_PER_TRIAL)
        .map(|_| RealVector::new(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
        .collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<f64> = (0..ROWS_PER_TRIAL)
        .map(|_| rng.gen_range(NORM_LO..=NORM_HI))
        .collect();
    let data = Dataset::from_parts(inputs, targets.clone(), targets, 0.0, 1.0, ROWS_PER_TRIAL - 1)?;
    Ok((net, data))
}

/// Largest `|a - b| / max(1, |a|, |b|)` over every coordinate of every
/// trial. Trial `t` uses seed `seed + t` and, unless `hidden` is fixed,
/// hidden width `1 + t % 5`.
///
/// `sabotage` flips the sign of the first analytic coordinate; it exists
/// only to prove the check can fail.
pub fn max_gradient_error(
    trials: usize,
    seed: u64,
    hidden: Option<usize>,
    sabotage: bool,
) -> Result<f64, MlpError> {
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let h = hidden.unwrap_or(1 + t % 5);
        let (net, data) = trial_case(seed.wrapping_add(t as u64), h)?;
        let mut analytic = grad_backprop(&net, &data, Rows::All)?.into_values().into_vec();
        if sabotage {
            analytic[0] = -analytic[0];
        }
        let numeric = finite_diff_grad(&net, &data, Rows::All, FD_STEP)?;
        for (a, b) in analytic.iter().zip(numeric.as_slice()) {
            worst = worst.max((a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs()));
        }
    }
    Ok(worst)
}
