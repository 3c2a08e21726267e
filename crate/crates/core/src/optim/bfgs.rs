//! BFGS quasi-Newton minimization with an explicit dense inverse-Hessian
//! approximation.

use crate::math::{dot, matvec, norm2, outer, RealMatrix, RealVector};

use super::line_search::wolfe_line_search;
use super::{
    HistoryEntry, MinimizeResult, Objective, OptimError, Status, StopCriteria, WolfeConfig,
    CURVATURE_FLOOR,
};

/// Rank-two update of the inverse-Hessian approximation:
/// `H' = (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / yᵀs`.
///
/// The expanded form `H - ρ(Hy)sᵀ - ρ s(Hᵀy)ᵀ + (ρ² yᵀHy + ρ) s sᵀ` is used,
/// then the result is symmetrized.
pub fn bfgs_update_h(h: &RealMatrix, s: &RealVector, y: &RealVector) -> Result<RealMatrix, OptimError> {
    let n = s.len();
    if !h.is_square() || h.rows() != n || y.len() != n {
        return Err(OptimError::DimensionMismatch {
            expected: h.rows(),
            found: s.len().max(y.len()),
        });
    }
    let ys = dot(y, s)?;
    if !(ys > 0.0) {
        return Err(OptimError::Curvature { denominator: ys });
    }
    let rho = 1.0 / ys;
    let hy = matvec(h, y)?;
    let hty = matvec(&h.transpose(), y)?;
    let yhy = dot(y, &hy)?;
    let ss_coef = rho * rho * yhy + rho;

    let hd = h.as_slice();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(
                hd[i * n + j] - rho * (hy[i] * s[j] + s[i] * hty[j]) + ss_coef * s[i] * s[j],
            );
        }
    }
    let mut next = RealMatrix::new(n, n, data)?;
    next.symmetrize()?;
    Ok(next)
}

/// Direct Hessian-approximation update:
/// `B' = B + y yᵀ / yᵀs - (Bs)(Bs)ᵀ / sᵀBs`.
pub fn bfgs_update_b(b: &RealMatrix, s: &RealVector, y: &RealVector) -> Result<RealMatrix, OptimError> {
    let n = s.len();
    if !b.is_square() || b.rows() != n || y.len() != n {
        return Err(OptimError::DimensionMismatch {
            expected: b.rows(),
            found: s.len().max(y.len()),
        });
    }
    let ys = dot(y, s)?;
    if !(ys > 0.0) {
        return Err(OptimError::Curvature { denominator: ys });
    }
    let bs = matvec(b, s)?;
    let sbs = dot(s, &bs)?;
    if !(sbs > 0.0) {
        return Err(OptimError::Curvature { denominator: sbs });
    }
    Ok(b
        .add_scaled(1.0 / ys, &outer(y, y))?
        .add_scaled(-1.0 / sbs, &outer(&bs, &bs))?)
}

/// Iterate state of a BFGS run.
#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    pub x: RealVector,
    pub f: f64,
    pub g: RealVector,
    /// Inverse-Hessian approximation.
    pub h: RealMatrix,
    pub iter: usize,
    pub n_skipped_updates: usize,
}

/// Everything about one accepted BFGS step, handed to the observer of
/// [`bfgs_minimize_observed`]. `state` is the state after the step.
#[derive(Debug)]
pub struct BfgsStep<'a> {
    pub x_prev: &'a RealVector,
    pub f_prev: f64,
    pub g_prev: &'a RealVector,
    pub direction: &'a RealVector,
    pub alpha: f64,
    /// Inverse-Hessian approximation used to form `direction`.
    pub h_prev: &'a RealMatrix,
    pub s: &'a RealVector,
    pub y: &'a RealVector,
    /// Whether `state.h` was produced by a BFGS update at this step.
    pub updated: bool,
    /// Whether the direction came from a steepest-descent restart.
    pub restarted: bool,
    pub state: &'a BfgsState,
}

pub fn bfgs_minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &RealVector,
    stop: &StopCriteria,
    wolfe: &WolfeConfig,
) -> Result<MinimizeResult, OptimError> {
    bfgs_minimize_observed(obj, x0, stop, wolfe, |_| {})
}

/// BFGS minimization starting from `H₀ = I`, calling `observer` after every
/// accepted step.
///
/// A line-search failure triggers one steepest-descent restart with `H`
/// reset to the identity; a second consecutive failure ends the run with
/// [`Status::LineSearchFailed`] at the best point reached.
pub fn bfgs_minimize_observed<O, F>(
    obj: &O,
    x0: &RealVector,
    stop: &StopCriteria,
    wolfe: &WolfeConfig,
    mut observer: F,
) -> Result<MinimizeResult, OptimError>
where
    O: Objective + ?Sized,
    F: FnMut(&BfgsStep<'_>),
{
    stop.validate()?;
    wolfe.validate()?;
    let n = obj.dim();
    if x0.len() != n {
        return Err(OptimError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let (f0, g0) = obj.eval(x0)?;
    let mut state = BfgsState {
        x: x0.clone(),
        f: f0,
        g: g0,
        h: RealMatrix::identity(n),
        iter: 0,
        n_skipped_updates: 0,
    };
    let mut h_is_identity = true;
    let mut history = vec![HistoryEntry {
        iter: 0,
        f: state.f,
        grad_norm: norm2(&state.g),
        test_f: None,
    }];

    let status = loop {
        let grad_norm = norm2(&state.g);
        if stop.grad_tol > 0.0 && grad_norm <= stop.grad_tol {
            break Status::ConvergedGrad;
        }
        if state.iter >= stop.max_iters {
            break Status::MaxIters;
        }

        let mut restarted = false;
        let mut direction = matvec(&state.h, &state.g)?.scale(-1.0)?;
        if !(dot(&state.g, &direction)? < 0.0) {
            state.h = RealMatrix::identity(n);
            h_is_identity = true;
            restarted = true;
            direction = state.g.scale(-1.0)?;
        }
        let search = match wolfe_line_search(obj, &state.x, &direction, state.f, &state.g, wolfe) {
            Ok(r) => r,
            Err(OptimError::LineSearchFailed { .. } | OptimError::NotDescent { .. })
                if !h_is_identity =>
            {
                state.h = RealMatrix::identity(n);
                h_is_identity = true;
                restarted = true;
                direction = state.g.scale(-1.0)?;
                match wolfe_line_search(obj, &state.x, &direction, state.f, &state.g, wolfe) {
                    Ok(r) => r,
                    Err(OptimError::LineSearchFailed { .. } | OptimError::NotDescent { .. }) => {
                        break Status::LineSearchFailed
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(OptimError::LineSearchFailed { .. } | OptimError::NotDescent { .. }) => {
                break Status::LineSearchFailed
            }
            Err(e) => return Err(e),
        };

        let x_new = state.x.add_scaled(search.alpha, &direction)?;
        let s = x_new.sub(&state.x)?;
        let y = search.g_new.sub(&state.g)?;
        let ys = dot(&y, &s)?;
        let h_prev = state.h.clone();
        let updated = ys > CURVATURE_FLOOR * norm2(&y) * norm2(&s);
        if updated {
            state.h = bfgs_update_h(&state.h, &s, &y)?;
            h_is_identity = false;
        } else {
            state.n_skipped_updates += 1;
        }

        let x_prev = std::mem::replace(&mut state.x, x_new);
        let g_prev = std::mem::replace(&mut state.g, search.g_new);
        let f_prev = std::mem::replace(&mut state.f, search.f_new);
        state.iter += 1;
        history.push(HistoryEntry {
            iter: state.iter,
            f: state.f,
            grad_norm: norm2(&state.g),
            test_f: None,
        });
        observer(&BfgsStep {
            x_prev: &x_prev,
            f_prev,
            g_prev: &g_prev,
            direction: &direction,
            alpha: search.alpha,
            h_prev: &h_prev,
            s: &s,
            y: &y,
            updated,
            restarted,
            state: &state,
        });

        if stop.f_tol > 0.0 && (f_prev - state.f).abs() <= stop.f_tol * f_prev.abs().max(1.0) {
            break Status::ConvergedFtol;
        }
    };

    Ok(MinimizeResult {
        grad_norm_final: norm2(&state.g),
        f_final: state.f,
        iters: state.iter,
        status,
        history,
        n_skipped_updates: state.n_skipped_updates,
        x_final: state.x,
    })
}
