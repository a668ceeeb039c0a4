//! A desk-scale laboratory for viewability control in real-time-bidding ad
//! campaigns, built entirely on synthetic impression logs with known ground
//! truth.
//!
//! The pieces, bottom to top:
//!
//! - [`domain`]: bounded probabilities, logit/sigmoid, and the campaign
//!   reward `(1 - |v - goal|)^2`.
//! - [`dataset`]: the log-level-data record and CSV format, a seeded
//!   synthetic generator, chronological splits, auction-stream sampling.
//! - [`predictors`]: the logistic view-probability model and the linear
//!   bid-pricing model that drive the replay simulator.
//! - [`auction`]: the offline replay simulator (threshold filter, bid,
//!   second-price win rule) producing interval reports, episode reports, and
//!   logged transitions.
//! - [`env_model`]: the logit-space transition model, its sensitivity
//!   estimator, and the one-step greedy baseline policy.
//! - [`controllers`]: the PID control arm and the toy-environment sanity
//!   battery.
//! - [`nn`] / [`agents`]: a small MLP substrate and the offline RL trainers
//!   (DQN over binned thresholds, DDPG, TD3) plus the comparison harness.
//! - [`bayesopt`]: GP-based hyperparameter tuning with expected improvement
//!   and a resumable trace.
//!
//! Every random choice flows from explicit seeds; identical inputs give
//! byte-identical outputs everywhere.

pub mod agents;
pub mod auction;
pub mod bayesopt;
pub mod controllers;
pub mod dataset;
pub mod domain;
pub mod env_model;
mod error;
mod linalg;
pub mod nn;
pub mod policy;
pub mod predictors;
mod rand_util;

pub use error::{Error, Result};
