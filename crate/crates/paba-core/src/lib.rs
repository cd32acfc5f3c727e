//! Solvers and simulation tooling for joint parameter-and-bandwidth
//! allocation in partitioned edge learning.
//!
//! A parameter server trains a large model by splitting its parameter vector
//! into blocks, one per group of edge workers; every round it broadcasts the
//! model, each worker computes its block gradient over its local data, and
//! all workers upload over shared uplink bandwidth. Round latency is set by
//! the slowest group, so block lengths and bandwidth fractions must be
//! chosen together. This crate provides:
//!
//! - [`model`]: the physical latency model;
//! - [`solvers`]: the proportional baseline, both one-sided optimal schemes,
//!   latency-budgeted model-size maximization, the joint solver, and two
//!   structured special cases;
//! - [`oracle`]: brute-force and independently derived reference solvers
//!   used for cross-checking;
//! - [`learning`]: a block-coordinate-descent engine demonstrating that the
//!   distributed updates equal their centralized counterparts;
//! - [`sim`]: a Monte-Carlo wireless simulator comparing schemes;
//! - [`config`] and the `paba` binary: a config-driven front end.

pub mod config;
pub mod error;
pub mod learning;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
