//! Online weighted bipartite matching under free disposal.
//!
//! A randomized adaptive greedy that beats 1/2: the policy engine decides each
//! arrival from expected gains, three interchangeable engines compute those
//! expectations (exhaustive enumeration, marginal propagation, Monte Carlo),
//! and the analysis side checks the excess accounting and evaluates the λ
//! certificates behind the competitive ratio.

pub mod analysis;
pub mod certificates;
pub mod distribution;
pub mod engine;
pub mod error;
pub mod exec;
pub mod harness;
pub mod instance;
pub mod io;
pub mod matchers;
pub mod optimum;
pub mod policy;
pub mod simplex;

pub use distribution::DiscreteDistribution;
pub use error::{EngineError, InstanceError, IoError, LambdaError, ParseError};
pub use exec::Execution;
pub use instance::{gain, pos_part, AssignmentTrace, Instance};
pub use optimum::{offline_optimum, OfflineMatching};
pub use policy::{AlgoParams, Branch, PolicyTable, StepDecision, Variant};
