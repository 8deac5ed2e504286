//! Constrained subdeterminant maximization.
//!
//! Given a PSD kernel `L = V^T V` and a matroid base family `B`, find
//! `S ∈ B` maximizing `det(L_{S,S})`. Two randomized sample-and-round
//! solvers are provided, one for partition constraints ([`partition`]) and
//! one for regular matroids given by a totally unimodular representation
//! ([`regular`]), together with exhaustive oracles ([`oracle`]) and a
//! Monte Carlo anti-concentration harness ([`anticoncentration`]).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the file formats and the CLI use.

pub mod anticoncentration;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod format;
pub mod instances;
pub mod kernel;
pub mod numkernel;
pub mod oracle;
pub mod partition;
pub mod regular;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use report::{ProblemKind, SolveReport, SolveWarning};
pub use rng::SeedStream;
pub use scalar::Scalar;

pub type Matrix = numkernel::RealMatrix<f64>;
pub type LogMag = numkernel::LogMagnitude<f64>;
pub type Kernel = kernel::KernelInstance<f64>;
pub type PartitionProblem = partition::PartitionInstance<f64>;
pub type RegularProblem = regular::RegularInstance<f64>;
pub type SimplexPoint = simplex::ProductSimplexPoint<f64>;
pub type CubePoint = regular::HypercubePoint<f64>;
pub type Exact = oracle::ExactResult<f64>;
