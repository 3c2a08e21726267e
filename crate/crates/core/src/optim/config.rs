use super::OptimError;

/// Strong Wolfe line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeConfig {
    pub c1: f64,
    pub c2: f64,
    pub alpha_init: f64,
    pub alpha_max: f64,
    pub max_bracket_steps: usize,
    pub max_zoom_steps: usize,
}

impl Default for WolfeConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            alpha_init: 1.0,
            alpha_max: 1e3,
            max_bracket_steps: 20,
            max_zoom_steps: 30,
        }
    }
}

impl WolfeConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(OptimError::InvalidConfig(format!(
                "need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.alpha_init > 0.0 && self.alpha_max >= self.alpha_init && self.alpha_max.is_finite())
        {
            return Err(OptimError::InvalidConfig(format!(
                "need 0 < alpha_init <= alpha_max, got {} and {}",
                self.alpha_init, self.alpha_max
            )));
        }
        if self.max_bracket_steps == 0 {
            return Err(OptimError::InvalidConfig("max_bracket_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Termination rules for [`bfgs_minimize`](super::bfgs_minimize).
///
/// `grad_tol = 0` or `f_tol = 0` disables the respective test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub f_tol: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            grad_tol: 1e-5,
            max_iters: 500,
            f_tol: 0.0,
        }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.grad_tol >= 0.0 && self.grad_tol.is_finite()) {
            return Err(OptimError::InvalidConfig(format!(
                "grad_tol must be a finite non-negative number, got {}",
                self.grad_tol
            )));
        }
        if !(self.f_tol >= 0.0 && self.f_tol.is_finite()) {
            return Err(OptimError::InvalidConfig(format!(
                "f_tol must be a finite non-negative number, got {}",
                self.f_tol
            )));
        }
        if self.grad_tol == 0.0 && self.f_tol == 0.0 && self.max_iters == 0 {
            return Err(OptimError::InvalidConfig("no stopping criterion enabled".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GdMode {
    /// Per-example delta-rule updates in dataset order.
    Online,
    /// One full-batch gradient step per epoch.
    Batch,
}

impl GdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GdMode::Online => "online",
            GdMode::Batch => "batch",
        }
    }
}

impl std::str::FromStr for GdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "online" => Ok(GdMode::Online),
            "batch" => Ok(GdMode::Batch),
            other => Err(format!("unknown gradient-descent mode `{other}` (expected online|batch)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdConfig {
    pub eta: f64,
    pub epochs: usize,
    pub mode: GdMode,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            epochs: 500,
            mode: GdMode::Online,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(OptimError::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if self.epochs == 0 {
            return Err(OptimError::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}
