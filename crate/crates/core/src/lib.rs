//! Common-ancestor type distribution of Λ-Wright-Fisher processes with
//! selection and two-way mutation.
//!
//! The tail probabilities `a_n` of the line count of the pruned lookdown
//! Λ-ASG are computed from a truncated linear system ([`recursion`]) and
//! checked by simulating the line-counting chain and its Siegmund dual
//! ([`simulate`]), by coupled flights ([`flights`]) and by explicit graphs
//! ([`asg`]).

pub mod asg;
pub mod error;
pub mod experiments;
pub mod flights;
pub mod lambda;
pub mod params;
pub mod quadrature;
pub mod recursion;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use lambda::{parse_lambda, LambdaMeasure};
pub use params::{AssumptionCheck, ModelParams};
