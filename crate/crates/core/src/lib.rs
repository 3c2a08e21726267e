//! Multilayer-perceptron training with classic gradient-descent
//! back-propagation and full-batch BFGS quasi-Newton back-propagation, plus
//! the Beale/Booth function-approximation benchmark that compares them.

pub mod bench;
pub mod cli;
pub mod math;
pub mod mlp;
pub mod optim;

pub use math::{MathError, RealMatrix, RealVector};
pub use mlp::{Dataset, MlpError, Network, ParamVector, Rows, Topology};
pub use optim::{GdConfig, GdMode, MinimizeResult, OptimError, Status, StopCriteria, WolfeConfig};
