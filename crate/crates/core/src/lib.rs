//! Deterministic simulator for Byzantine-resilient decentralized online
//! resource allocation.
//!
//! Agents on an undirected graph run an online primal-dual method for a
//! time-varying economic-dispatch problem and exchange only their dual
//! variables. Byzantine agents replace those messages with arbitrary values;
//! benign agents either take the plain weighted average (attack-free
//! algorithm) or a robust aggregate built from adaptive robust clipping
//! followed by a coordinate-wise trimmed mean, an iterative outlier scissor,
//! or self-centered clipping.
//!
//! Module map:
//! - [`topology`]: graphs, Metropolis weights, spectral and contraction diagnostics
//! - [`dispatch`]: cost models, demand, the per-step optimum oracle
//! - [`aggregation`]: robust aggregation rules and property checkers
//! - [`attacks`]: Byzantine message generation
//! - [`engine`]: the step loop and invariant monitors
//! - [`metrics`]: dynamic regret and accumulative constraint violation
//! - [`config`], [`experiment`], [`rng`]: experiment orchestration

pub mod aggregation;
pub mod attacks;
pub mod config;
pub mod dispatch;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod topology;
pub mod vector;

pub use error::{Error, Result};
pub use vector::DualVector;
