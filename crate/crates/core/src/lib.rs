//! Simulation of a human / generative-AI / environment stochastic game with
//! logistic transition kernels and a tabular Q-learning user, plus the
//! information-theoretic toolkit (entropy, mutual information, conditional
//! mutual information, transfer entropy) used to measure how tightly the user
//! and the machine couple over repeated interaction.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: binary joint state and the sigmoid transition kernels.
//! - [`agents`]: softmax Q-learning user and the value-iteration oracle.
//! - [`game`]: scenario configuration, presets and the replicated simulation loop.
//! - [`infometrics`]: plug-in estimators, windowed series and the exact-chain oracle.
//! - [`experiments`]: CLI, aggregation, persistence and the figure pipelines.

pub mod agents;
pub mod error;
pub mod experiments;
pub mod game;
pub mod infometrics;
pub mod kernels;
pub mod rng;

pub use error::{Error, Result};
