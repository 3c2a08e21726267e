use crate::math::{MathError, RealVector};
use crate::mlp::{loss_and_grad_raw, loss_mse, Dataset, Network, Rows, Topology};

use super::bfgs::{bfgs_minimize_observed, BfgsStep};
use super::{MinimizeResult, Objective, OptimError, StopCriteria, WolfeConfig};

/// The network's MSE over a row set, as a function of its flattened
/// parameters.
pub struct MlpObjective<'a> {
    topology: Topology,
    data: &'a Dataset,
    rows: Rows,
}

impl<'a> MlpObjective<'a> {
    pub fn new(net: &Network, data: &'a Dataset, rows: Rows) -> Result<Self, OptimError> {
        // Surfaces topology/selection mismatches before any optimization.
        loss_mse(net, data, rows)?;
        Ok(Self {
            topology: net.topology(),
            data,
            rows,
        })
    }
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.topology.param_len()
    }

    fn eval(&self, x: &RealVector) -> Result<(f64, RealVector), OptimError> {
        if x.len() != self.dim() {
            return Err(OptimError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let (f, g) = loss_and_grad_raw(&self.topology, x.as_slice(), self.data, self.rows);
        if !f.is_finite() {
            return Err(MathError::NonFinite { index: 0 }.into());
        }
        Ok((f, RealVector::new(g)?))
    }
}

/// Trains `net` with full-batch BFGS on the training MSE.
///
/// History entries carry the test MSE at every iterate.
pub fn bfgs_train(
    net: &Network,
    data: &Dataset,
    stop: &StopCriteria,
    wolfe: &WolfeConfig,
) -> Result<(Network, MinimizeResult), OptimError> {
    bfgs_train_observed(net, data, stop, wolfe, |_| {})
}

pub fn bfgs_train_observed<F>(
    net: &Network,
    data: &Dataset,
    stop: &StopCriteria,
    wolfe: &WolfeConfig,
    mut observer: F,
) -> Result<(Network, MinimizeResult), OptimError>
where
    F: FnMut(&BfgsStep<'_>),
{
    let train = MlpObjective::new(net, data, Rows::Train)?;
    let test_loss = |x: &[f64]| loss_and_grad_raw(&net.topology(), x, data, Rows::Test).0;

    let mut test_f = vec![test_loss(net.params().as_slice())];
    let mut result = bfgs_minimize_observed(&train, net.params().values(), stop, wolfe, |step| {
        test_f.push(test_loss(step.state.x.as_slice()));
        observer(step);
    })?;
    for (entry, t) in result.history.iter_mut().zip(test_f) {
        entry.test_f = Some(t);
    }
    let trained = net.with_params(result.x_final.clone())?;
    Ok((trained, result))
}
