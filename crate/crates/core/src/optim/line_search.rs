//! Bracket-and-zoom line search for the strong Wolfe conditions.

use crate::math::{dot, RealVector};

use super::objective::is_non_finite;
use super::{Objective, OptimError, WolfeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub f_new: f64,
    pub g_new: RealVector,
    pub evals: usize,
}

/// Checks both strong Wolfe inequalities for a step of length `alpha`,
/// given the slopes `slope0 = g0·p` and `slope_new = g(x + αp)·p`.
pub fn satisfies_strong_wolfe(
    f0: f64,
    slope0: f64,
    alpha: f64,
    f_new: f64,
    slope_new: f64,
    c1: f64,
    c2: f64,
) -> bool {
    f_new <= f0 + c1 * alpha * slope0 && slope_new.abs() <= c2 * slope0.abs()
}

/// A trial point on the search ray. `phi` is `+inf` when the objective
/// overflowed there.
#[derive(Debug, Clone)]
struct Trial {
    alpha: f64,
    phi: f64,
    slope: Option<f64>,
    grad: Option<RealVector>,
}

struct Ray<'a, O: Objective + ?Sized> {
    obj: &'a O,
    x: &'a RealVector,
    p: &'a RealVector,
    evals: usize,
}

impl<O: Objective + ?Sized> Ray<'_, O> {
    fn probe(&mut self, alpha: f64) -> Result<Trial, OptimError> {
        self.evals += 1;
        let overflow = Trial {
            alpha,
            phi: f64::INFINITY,
            slope: None,
            grad: None,
        };
        let point = match self.x.add_scaled(alpha, self.p) {
            Ok(pt) => pt,
            Err(_) => return Ok(overflow),
        };
        match self.obj.eval(&point) {
            Ok((f, g)) => {
                let slope = dot(&g, self.p)?;
                Ok(Trial {
                    alpha,
                    phi: f,
                    slope: Some(slope),
                    grad: Some(g),
                })
            }
            Err(e) if is_non_finite(&e) => Ok(overflow),
            Err(e) => Err(e),
        }
    }
}

/// Minimizer of the cubic matching values and slopes at `a` and `b`,
/// falling back to the quadratic through `(a, phi_a, slope_a)` and
/// `(b, phi_b)`. `None` when neither model is usable.
fn interpolate(lo: &Trial, hi: &Trial) -> Option<f64> {
    let (a, b) = (lo.alpha, hi.alpha);
    let da = lo.slope?;
    if !hi.phi.is_finite() {
        return None;
    }
    if let Some(db) = hi.slope {
        let d1 = da + db - 3.0 * (lo.phi - hi.phi) / (a - b);
        let disc = d1 * d1 - da * db;
        if disc >= 0.0 {
            let d2 = (b - a).signum() * disc.sqrt();
            let denom = db - da + 2.0 * d2;
            if denom != 0.0 {
                let t = b - (b - a) * (db + d2 - d1) / denom;
                if t.is_finite() {
                    return Some(t);
                }
            }
        }
    }
    let h = b - a;
    let curv = hi.phi - lo.phi - da * h;
    if curv > 0.0 {
        let t = a - da * h * h / (2.0 * curv);
        if t.is_finite() {
            return Some(t);
        }
    }
    None
}

/// Finds a step `α > 0` along `p` from `x` satisfying the strong Wolfe
/// conditions.
///
/// The bracketing phase grows the step from `alpha_init` (doubling, capped at
/// `alpha_max`) until it brackets an acceptable interval; the zoom phase then
/// shrinks that interval using safeguarded cubic/quadratic interpolation,
/// falling back to bisection.
pub fn wolfe_line_search<O: Objective + ?Sized>(
    obj: &O,
    x: &RealVector,
    p: &RealVector,
    f0: f64,
    g0: &RealVector,
    cfg: &WolfeConfig,
) -> Result<LineSearchResult, OptimError> {
    cfg.validate()?;
    let slope0 = dot(g0, p)?;
    if !(slope0 < 0.0) {
        return Err(OptimError::NotDescent { slope: slope0 });
    }
    let mut ray = Ray {
        obj,
        x,
        p,
        evals: 0,
    };
    let armijo = |t: &Trial| t.phi <= f0 + cfg.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.is_some_and(|s| s.abs() <= -cfg.c2 * slope0);

    let origin = Trial {
        alpha: 0.0,
        phi: f0,
        slope: Some(slope0),
        grad: None,
    };
    let mut prev = origin;
    let mut alpha = cfg.alpha_init;
    let mut step = 0;
    let (mut lo, mut hi) = loop {
        if step == cfg.max_bracket_steps {
            return Err(OptimError::LineSearchFailed {
                best_alpha: prev.alpha,
                best_f: prev.phi,
                evals: ray.evals,
            });
        }
        let trial = ray.probe(alpha)?;
        if !armijo(&trial) || (step > 0 && trial.phi >= prev.phi) {
            break (prev, trial);
        }
        if curvature(&trial) {
            return Ok(accept(trial, ray.evals));
        }
        if trial.slope.is_some_and(|s| s >= 0.0) {
            break (trial, prev);
        }
        if alpha >= cfg.alpha_max {
            return Err(OptimError::LineSearchFailed {
                best_alpha: trial.alpha,
                best_f: trial.phi,
                evals: ray.evals,
            });
        }
        prev = trial;
        alpha = (2.0 * alpha).min(cfg.alpha_max);
        step += 1;
    };

    // Zoom: `lo` always satisfies sufficient decrease and has the lowest
    // value seen; `hi` is on the other side of an acceptable step.
    for _ in 0..cfg.max_zoom_steps {
        let (left, right) = if lo.alpha < hi.alpha {
            (lo.alpha, hi.alpha)
        } else {
            (hi.alpha, lo.alpha)
        };
        let width = right - left;
        if width <= f64::EPSILON * right.max(1.0) {
            break;
        }
        let margin = 0.1 * width;
        let alpha = match interpolate(&lo, &hi) {
            Some(t) if t >= left + margin && t <= right - margin => t,
            _ => 0.5 * (left + right),
        };
        let trial = ray.probe(alpha)?;
        if !armijo(&trial) || trial.phi >= lo.phi {
            hi = trial;
            continue;
        }
        if curvature(&trial) {
            return Ok(accept(trial, ray.evals));
        }
        let slope = trial.slope.expect("finite trial has a slope");
        if slope * (hi.alpha - lo.alpha) >= 0.0 {
            hi = lo;
        }
        lo = trial;
    }
    Err(OptimError::LineSearchFailed {
        best_alpha: lo.alpha,
        best_f: lo.phi,
        evals: ray.evals,
    })
}

fn accept(trial: Trial, evals: usize) -> LineSearchResult {
    LineSearchResult {
        alpha: trial.alpha,
        f_new: trial.phi,
        g_new: trial.grad.expect("accepted trial has a gradient"),
        evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RealMatrix;
    use crate::optim::FnObjective;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rv(x: &[f64]) -> RealVector {
        RealVector::new(x.to_vec()).unwrap()
    }

    fn check_wolfe<O: Objective>(
        obj: &O,
        x: &RealVector,
        p: &RealVector,
        cfg: &WolfeConfig,
    ) -> LineSearchResult {
        let (f0, g0) = obj.eval(x).unwrap();
        let r = wolfe_line_search(obj, x, p, f0, &g0, cfg).unwrap();
        // Re-evaluate independently at the returned step.
        let (f_new, g_new) = obj.eval(&x.add_scaled(r.alpha, p).unwrap()).unwrap();
        assert_eq!(f_new, r.f_new);
        let slope0 = dot(&g0, p).unwrap();
        let slope_new = dot(&g_new, p).unwrap();
        assert!(r.alpha > 0.0);
        assert!(f_new <= f0 + cfg.c1 * r.alpha * slope0, "sufficient decrease");
        assert!(slope_new.abs() <= cfg.c2 * slope0.abs(), "curvature");
        r
    }

    #[test]
    fn unit_step_on_parabola() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let r = check_wolfe(&obj, &rv(&[1.0]), &rv(&[-1.0]), &WolfeConfig::default());
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.evals, 1);
    }

    #[test]
    fn rejects_ascent_direction() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let (f0, g0) = obj.eval(&rv(&[1.0])).unwrap();
        for p in [1.0, 0.0] {
            let err = wolfe_line_search(&obj, &rv(&[1.0]), &rv(&[p]), f0, &g0, &WolfeConfig::default());
            assert!(matches!(err, Err(OptimError::NotDescent { .. })));
        }
    }

    #[test]
    fn expands_on_shallow_direction() {
        // Tiny direction: the minimizer is at alpha = 1000.
        let obj = FnObjective::new(1, |x: &[f64]| ((x[0] - 1.0).powi(2), vec![2.0 * (x[0] - 1.0)]));
        let r = check_wolfe(&obj, &rv(&[0.0]), &rv(&[1e-3]), &WolfeConfig::default());
        assert!(r.alpha > 1.0);
    }

    #[test]
    fn zooms_on_overlong_step() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let r = check_wolfe(&obj, &rv(&[1.0]), &rv(&[-50.0]), &WolfeConfig::default());
        assert!(r.alpha < 1.0);
    }

    #[test]
    fn backs_off_from_overflow() {
        // Defined only on x < 2; beyond that the objective overflows.
        let obj = FnObjective::new(1, |x: &[f64]| {
            if x[0] >= 2.0 {
                (f64::INFINITY, vec![0.0])
            } else {
                ((x[0] - 1.0).powi(2), vec![2.0 * (x[0] - 1.0)])
            }
        });
        let r = check_wolfe(&obj, &rv(&[0.0]), &rv(&[4.0]), &WolfeConfig::default());
        assert!(r.alpha < 0.5);
    }

    #[test]
    fn reports_failure_with_best_step() {
        // Strictly decreasing, unbounded below: no curvature point exists.
        let obj = FnObjective::new(1, |x: &[f64]| (-x[0], vec![-1.0]));
        let cfg = WolfeConfig {
            alpha_max: 8.0,
            ..WolfeConfig::default()
        };
        let (f0, g0) = obj.eval(&rv(&[0.0])).unwrap();
        match wolfe_line_search(&obj, &rv(&[0.0]), &rv(&[1.0]), f0, &g0, &cfg) {
            Err(OptimError::LineSearchFailed { best_alpha, .. }) => assert_eq!(best_alpha, 8.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
        let m = RealMatrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        m.transpose()
            .matmul(&m)
            .unwrap()
            .add_scaled(0.5, &RealMatrix::identity(n))
            .unwrap()
    }

    proptest! {
        #[test]
        fn strong_wolfe_on_random_quadratics(seed in 0u64..500, n in 1usize..6, scale in 0.01..100.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(n, &mut rng);
            let a2 = a.clone();
            let obj = FnObjective::new(n, move |x: &[f64]| {
                let ax = crate::math::matvec(&a2, &RealVector::new(x.to_vec()).unwrap()).unwrap();
                (0.5 * crate::math::dot_slices(x, ax.as_slice()), ax.into_vec())
            });
            let x = rv(&(0..n).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>());
            let (_, g) = obj.eval(&x).unwrap();
            prop_assume!(crate::math::norm2(&g) > 1e-8);
            let p = g.scale(-scale).unwrap();
            check_wolfe(&obj, &x, &p, &WolfeConfig::default());
        }
    }
}
