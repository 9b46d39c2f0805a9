//! The recommendation game: compliant play, unilateral deviations, and
//! estimators of the conditional gains that incentive compatibility bounds.
//!
//! Only the deviating agent's marginal arrival belief matters when everyone
//! else complies, so the simulator never materializes an arrival order.

mod estimate;
mod oracle;

pub use estimate::{
    estimate_conditional_gain, estimate_conditional_gains, estimate_recommendation_prob, naive_conditional_gain,
    CheckStatus, ConditionalGainReport, EstimatorOptions, NaiveEstimate, PairEstimate, RecommendationProbs,
    RegretSummary, DEFAULT_MIN_COUNT,
};
pub use oracle::{exhaustive_conditional_gains, ExactGains};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{LearnerError, PolicyFactory};
use crate::regret::{RegretError, Transcript};
use crate::rewards::{RewardEnsemble, RewardError, RewardInstance};
use crate::seed;
use crate::temporal::{TemporalBelief, TemporalError};

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Regret(#[from] RegretError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("policy has {policy} arms but the instance has {instance}")]
    ArmMismatch { policy: usize, instance: usize },
    #[error("belief horizon {belief} does not match reward horizon {rewards}")]
    HorizonMismatch { belief: usize, rewards: usize },
    #[error("strategy must map each of the {arms} actions to an action")]
    InvalidStrategy { arms: usize },
    #[error("estimator needs positive replication counts")]
    NoReplications,
    #[error("exhaustive enumeration does not support {0}")]
    Unsupported(&'static str),
}

/// Map from recommended action to played action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Strategy(Vec<usize>);

impl Strategy {
    pub fn identity(arms: usize) -> Self {
        Self((0..arms).collect())
    }

    pub fn new(map: Vec<usize>) -> Result<Self, GameError> {
        let k = map.len();
        if k == 0 || map.iter().any(|&b| b >= k) {
            return Err(GameError::InvalidStrategy { arms: k });
        }
        Ok(Self(map))
    }

    /// Plays `to` whenever `from` is recommended; compliant otherwise.
    pub fn swap_one(arms: usize, from: usize, to: usize) -> Result<Self, GameError> {
        let mut map: Vec<usize> = (0..arms).collect();
        *map.get_mut(from).ok_or(GameError::InvalidStrategy { arms })? = to;
        Self::new(map)
    }

    pub fn arms(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, recommended: usize) -> usize {
        self.0[recommended]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(a, &b)| a == b)
    }
}

/// One agent's beliefs and strategy.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub reward_belief: RewardEnsemble,
    pub temporal_belief: TemporalBelief,
    pub strategy: Strategy,
}

impl AgentSpec {
    pub fn compliant(reward_belief: RewardEnsemble, temporal_belief: TemporalBelief) -> Self {
        let strategy = Strategy::identity(reward_belief.arms());
        Self { reward_belief, temporal_belief, strategy }
    }
}

fn play(
    factory: &dyn PolicyFactory,
    mu: &RewardInstance,
    seed: u64,
    deviation: Option<(usize, &Strategy)>,
) -> Result<Transcript, GameError> {
    let (horizon, k) = (mu.horizon(), mu.arms());
    if factory.arms() != k {
        return Err(GameError::ArmMismatch { policy: factory.arms(), instance: k });
    }
    let mut policy = factory.build(horizon, seed)?;
    let mut env = seed::rng(seed, &[seed::stream::ENVIRONMENT]);
    let mut tr = Transcript::new(horizon, k);
    let mut u = vec![0.0; k];
    for t in 0..horizon {
        let (rec, _) = policy.recommend();
        mu.sample_rewards(t, &mut env, &mut u);
        let played = match deviation {
            Some((tau, s)) if tau == t => s.apply(rec),
            _ => rec,
        };
        tr.push_round(rec, played, &u)?;
        policy.update(played, u[played])?;
    }
    Ok(tr)
}

/// Every agent follows its recommendation for all `T` rounds.
pub fn run_compliant(factory: &dyn PolicyFactory, mu: &RewardInstance, seed: u64) -> Result<Transcript, GameError> {
    play(factory, mu, seed, None)
}

/// One agent arrives at `τ ~ belief` and plays `strategy(I_τ)`; everyone else
/// complies. Returns the transcript and the 1-based round `τ`.
pub fn run_with_deviation(
    factory: &dyn PolicyFactory,
    mu: &RewardInstance,
    belief: &TemporalBelief,
    strategy: &Strategy,
    seed: u64,
) -> Result<(Transcript, usize), GameError> {
    if belief.horizon() != mu.horizon() {
        return Err(GameError::HorizonMismatch { belief: belief.horizon(), rewards: mu.horizon() });
    }
    if strategy.arms() != mu.arms() {
        return Err(GameError::InvalidStrategy { arms: mu.arms() });
    }
    let mut arrival = seed::rng(seed, &[seed::stream::ARRIVAL]);
    let tau = belief.sampler().sample(&mut arrival);
    Ok((play(factory, mu, seed, Some((tau - 1, strategy)))?, tau))
}
