//! Weighted regret, arrival-time beliefs, and approximate Bayesian incentive
//! compatibility for bandit recommendation systems.
//!
//! Agents arrive at an uncertain round and hold a belief over reward
//! sequences. A recommender whose regret is small when weighted by an agent's
//! arrival belief makes compliance an approximate equilibrium. This crate
//! computes the relevant quantities exactly where possible, simulates the
//! recommendation game, and evaluates the resulting bounds.

pub mod bounds;
pub mod game;
pub mod learners;
pub mod numeric;
pub mod regret;
pub mod rewards;
pub mod seed;
pub mod temporal;

pub use rewards::{gap, NoiseFamily, RewardEnsemble, RewardError, RewardInstance};
pub use temporal::{DispersionStats, TemporalBelief, TemporalError};
