//! Output range estimation for black-box scalar functions over boxes.
//!
//! The minimum and maximum of a function (typically a trained residual
//! network) over a hypercube are searched with simulated annealing whose
//! proposals are folded back into the box by cyclic reflection.

pub mod anneal;
pub mod cli;
pub mod domain;
pub mod error;
pub mod objectives;
pub mod range;
pub mod resnet;
pub mod trainer;

pub use anneal::{acceptance_probability, AnnealConfig, AnnealState, Cooling, Mode, Trace};
pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use objectives::{Builtin, Dataset, Negated, Objective};
pub use range::{estimate_range, grid_oracle, RangeResult};
pub use resnet::{Activation, Architecture, ResNet};
pub use trainer::{evaluate_fit, train, FitReport, TrainConfig};
