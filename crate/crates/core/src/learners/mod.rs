//! Bandit recommendation policies.
//!
//! The external API speaks rewards in `[0, 1]`; exponential-weights learners
//! update internally on losses `1 − r`.

mod adaptive;
mod config;
mod exp_weights;
mod swap;
mod tabular;

pub use adaptive::{
    adaptive_regret_profile, log_grid, max_interval_regret, AdaptiveProfile, ProfileOptions, RegretSource, SwitchFamily,
};
pub use config::{BaseKind, PolicyConfig, PolicyFactory, PolicyKind};
pub use exp_weights::ExpWeights;
pub use swap::{stationary_distribution, SwapWrapper, DENSE_SOLVE_MAX_ARMS, STATIONARY_TOL};
pub use tabular::{HistoryRule, TabularPolicy};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("policy needs at least one arm")]
    NoArms,
    #[error("action {action} out of range for {arms} arms")]
    ActionOutOfRange { action: usize, arms: usize },
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("parameter {name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("missing parameter {0}")]
    MissingParameter(&'static str),
    #[error("base learners must have {expected} arms, got {got}")]
    ArmMismatch { expected: usize, got: usize },
    #[error("recommendation rule returned an invalid distribution")]
    InvalidDistribution,
    #[error("stationary distribution did not converge")]
    StationaryFailed,
}

/// A recommendation policy with its own random stream.
pub trait Policy: Send {
    fn arms(&self) -> usize;

    /// Distribution the next recommendation is drawn from.
    fn distribution(&self) -> &[f64];

    /// Samples a recommendation and returns it with the distribution used.
    fn recommend(&mut self) -> (usize, &[f64]);

    /// Feeds back the played action and its observed reward.
    fn update(&mut self, played: usize, reward: f64) -> Result<(), LearnerError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn arms(&self) -> usize {
        (**self).arms()
    }

    fn distribution(&self) -> &[f64] {
        (**self).distribution()
    }

    fn recommend(&mut self) -> (usize, &[f64]) {
        (**self).recommend()
    }

    fn update(&mut self, played: usize, reward: f64) -> Result<(), LearnerError> {
        (**self).update(played, reward)
    }
}

pub(crate) fn check_feedback(arms: usize, played: usize, reward: f64) -> Result<(), LearnerError> {
    if played >= arms {
        return Err(LearnerError::ActionOutOfRange { action: played, arms });
    }
    if !(0.0..=1.0).contains(&reward) {
        return Err(LearnerError::RewardOutOfRange(reward));
    }
    Ok(())
}

/// Inverse-CDF draw from `dist` with `u ∈ [0, 1)`; never returns a zero-mass index.
pub(crate) fn sample_index(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
