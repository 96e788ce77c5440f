pub mod bounds;
pub mod classify;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod sim;
pub mod solvers;
pub mod stats;

pub use bounds::{BoundKind, BoundResult, ThresholdRule, TwoPolicyForm};
pub use error::{Error, ModelError, Result};
pub use model::{FiniteHorizonPolicy, RawModel, StationaryPolicy};
pub use scalar::Real;

/// Double-precision model.
pub type Model = model::MdpModel<f64>;
pub type Chain = model::InducedChain<f64>;
pub type Params = bounds::BoundParams<f64>;
pub type Bound = bounds::BoundResult<f64>;
pub type AverageEval = solvers::AverageEvalSolution<f64>;
pub type AverageOptimal = solvers::AverageOptimalSolution<f64>;
pub type DiscountedEval = solvers::DiscountedSolution<f64>;
pub type DiscountedOptimal = solvers::DiscountedOptimalSolution<f64>;
pub type FiniteHorizonEval = solvers::FiniteHorizonSolution<f64>;
pub type Dispersion = stats::DispersionStats<f64>;
pub type FhDispersion = stats::FiniteHorizonDispersion<f64>;
pub type Path = sim::Trajectory<f64>;
pub type Trace = sim::MartingaleTrace<f64>;
