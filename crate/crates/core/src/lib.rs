//! Linear bandits whose objective is the reward component lying in a known
//! target subspace, while observed returns also carry a corruption from the
//! orthogonal complement.
//!
//! The crate provides the numerical kernel ([`linalg`]), decision sets
//! ([`decision_set`]), reward environments ([`environment`], [`wine`]), the
//! four selection strategies ([`policy`]) and a reproducible experiment
//! harness ([`experiment`]).

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decision_set;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod policy;
pub mod validate;
pub mod wine;

pub use decision_set::{DecisionSet, EntropyBall, FiniteSet, Maximizer};
pub use environment::{Arm, Environment, Oracle};
pub use error::{Error, Result};
pub use experiment::{AggregateCurve, Experiment, ExperimentConfig, Setting, TrialRecord};
pub use linalg::{Projector, RidgeState};
pub use policy::{PolicyConfig, PolicyState, ScheduleKind, Strategy, UeExploit};
