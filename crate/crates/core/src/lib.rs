//! Learning-graph cost analysis for constant-size certificate graphs.
//!
//! The pipeline: a certificate graph and a loading schedule compile to stage
//! costs in exponent space ([`cost`]), which are minimized over the set-size
//! and degree exponents by exact linear programming ([`lp`], [`optimizer`]).
//! [`learning_graph`] materializes the triangle construction at small `n` and
//! checks its flows and stage complexities directly; [`certificates`] extracts
//! certificate graphs from concrete inputs.

// index loops read closer to the matrix and bitmask code they implement
#![allow(clippy::needless_range_loop)]

pub mod certificates;
pub mod cost;
pub mod error;
pub mod graph;
pub mod learning_graph;
pub mod lp;
pub mod optimizer;
pub mod presets;
pub mod rational;
pub mod schedule;

pub use cost::{ExponentAssignment, Regime, StageCost, StageKind};
pub use graph::{CertGraph, UndirectedGraph};
pub use rational::Rational;
pub use schedule::{LoadingSchedule, ScheduleItem};
