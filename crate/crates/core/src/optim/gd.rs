//! Classic delta-rule back-propagation.

use crate::math::RealVector;
use crate::mlp::{forward_into, loss_and_grad_raw, Dataset, Network, Rows};

use super::{GdConfig, GdMode, HistoryEntry, MinimizeResult, OptimError, Status};

/// Trains `net` by gradient descent, recording the full training MSE, its
/// gradient norm and the test MSE once per epoch (entry 0 is the initial
/// network).
///
/// `Online` visits training rows in dataset order and applies
/// `w += η·δ·(upstream activation)` after each one, with
/// `δ_out = O(1-O)(T-O)` and `δ_h = O_h(1-O_h)·w_h·δ_out`. `Batch` takes
/// one step `w -= η·∇MSE` per epoch.
///
/// A non-finite loss stops training with [`Status::Diverged`]; the last
/// finite network is returned.
pub fn gd_train(
    net: &Network,
    data: &Dataset,
    cfg: &GdConfig,
) -> Result<(Network, MinimizeResult), OptimError> {
    cfg.validate()?;
    // Validates topology against the dataset.
    crate::mlp::loss_mse(net, data, Rows::Train)?;
    let topology = net.topology();
    let mut params = net.params().as_slice().to_vec();

    let record = |iter: usize, params: &[f64]| -> Option<HistoryEntry> {
        let (f, g) = loss_and_grad_raw(&topology, params, data, Rows::Train);
        let (test_f, _) = loss_and_grad_raw(&topology, params, data, Rows::Test);
        let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        [f, test_f, grad_norm]
            .iter()
            .all(|v| v.is_finite())
            .then_some(HistoryEntry {
                iter,
                f,
                grad_norm,
                test_f: Some(test_f),
            })
    };

    let mut history = vec![record(0, &params).ok_or(crate::math::MathError::NonFinite { index: 0 })?];
    let mut last_good = params.clone();
    let mut status = Status::MaxIters;
    for epoch in 1..=cfg.epochs {
        match cfg.mode {
            GdMode::Online => online_epoch(net, data, cfg.eta, &mut params),
            GdMode::Batch => {
                let (_, g) = loss_and_grad_raw(&topology, &params, data, Rows::Train);
                for (w, gi) in params.iter_mut().zip(&g) {
                    *w -= cfg.eta * gi;
                }
            }
        }
        match record(epoch, &params).filter(|_| params.iter().all(|w| w.is_finite())) {
            Some(entry) => {
                history.push(entry);
                last_good.copy_from_slice(&params);
            }
            None => {
                status = Status::Diverged;
                break;
            }
        }
    }

    let final_entry = *history.last().expect("history starts with the initial entry");
    let x_final = RealVector::new(last_good)?;
    let trained = net.with_params(x_final.clone())?;
    Ok((
        trained,
        MinimizeResult {
            x_final,
            f_final: final_entry.f,
            grad_norm_final: final_entry.grad_norm,
            iters: final_entry.iter,
            status,
            history,
            n_skipped_updates: 0,
        },
    ))
}

fn online_epoch(net: &Network, data: &Dataset, eta: f64, params: &mut [f64]) {
    let topology = net.topology();
    let n_in = topology.n_in();
    let n_hidden = topology.n_hidden();
    let b_hidden = n_hidden * n_in;
    let w_out = b_hidden + n_hidden;
    let b_out = w_out + n_hidden;

    let mut hidden = vec![0.0; n_hidden];
    let mut delta_hidden = vec![0.0; n_hidden];
    let mut out = [0.0];
    for r in data.range(Rows::Train) {
        let x = data.inputs()[r].as_slice();
        forward_into(&topology, params, x, &mut hidden, &mut out);
        let o = out[0];
        let delta_out = o * (1.0 - o) * (data.targets_norm()[r] - o);
        for h in 0..n_hidden {
            delta_hidden[h] = hidden[h] * (1.0 - hidden[h]) * params[w_out + h] * delta_out;
        }
        for h in 0..n_hidden {
            params[w_out + h] += eta * delta_out * hidden[h];
            let row = &mut params[h * n_in..(h + 1) * n_in];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += eta * delta_hidden[h] * xi;
            }
            params[b_hidden + h] += eta * delta_hidden[h];
        }
        params[b_out] += eta * delta_out;
    }
}
