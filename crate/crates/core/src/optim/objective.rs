use crate::math::{MathError, RealVector};

use super::OptimError;

/// A differentiable function of a real vector.
///
/// `eval` must be deterministic and return a gradient of length `dim()`.
/// Overflow is reported as [`MathError::NonFinite`]; the line search treats
/// it as an infinitely bad trial point.
pub trait Objective {
    fn dim(&self) -> usize;
    fn eval(&self, x: &RealVector) -> Result<(f64, RealVector), OptimError>;
}

/// Adapts a closure returning `(f, gradient)` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    func: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    pub fn new(dim: usize, func: F) -> Self {
        Self { dim, func }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &RealVector) -> Result<(f64, RealVector), OptimError> {
        if x.len() != self.dim {
            return Err(OptimError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let (f, g) = (self.func)(x.as_slice());
        if g.len() != self.dim {
            return Err(OptimError::DimensionMismatch {
                expected: self.dim,
                found: g.len(),
            });
        }
        if !f.is_finite() {
            return Err(MathError::NonFinite { index: 0 }.into());
        }
        Ok((f, RealVector::new(g)?))
    }
}

pub(crate) fn is_non_finite(err: &OptimError) -> bool {
    matches!(
        err,
        OptimError::Math(MathError::NonFinite { .. })
            | OptimError::Mlp(crate::mlp::MlpError::Math(MathError::NonFinite { .. }))
    )
}
