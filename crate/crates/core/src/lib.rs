//! Kelly betting with noisy side information.
//!
//! A gambler bets on K-horse races, guided by side information that reaches
//! her through a noisy discrete channel. This crate computes optimal betting
//! strategies and log growth rates for arbitrary valid reward matrices,
//! decides whether the side-information channel admits an optimal
//! single-letter code (exhibiting the witnessing exponent `c` and offset
//! `d0` when it does), and verifies the analytic quantities by seeded
//! Monte Carlo simulation.
//!
//! Modules:
//! - [`types`]: priors, channels, reward and strategy matrices, scenarios,
//!   with all validity checks.
//! - [`infotheory`]: entropies, divergences, posteriors, channel capacity,
//!   and the genie's cost function.
//! - [`decomposition`]: the `R = B * D` factorization into a row-stochastic
//!   mixing matrix and a diagonal effective reward, dominant-wager
//!   detection, and effective/actual strategy conversion.
//! - [`strategy`]: growth rates, the perfect-information / no-side-information
//!   / proportional strategies, the constrained growth-rate optimizer, and
//!   distortion accounting.
//! - [`optimality`]: the single-letter-code optimality checks and the
//!   scenario classifier.
//! - [`simulate`]: deterministic, seeded, parallel Monte Carlo simulation of
//!   the race sequence.

pub mod decomposition;
pub mod infotheory;
pub mod optimality;
pub mod simulate;
pub mod strategy;
pub mod types;

pub use types::{
    BoxConstraints, Channel, Prior, RewardMatrix, Scenario, StrategyMatrix,
};
