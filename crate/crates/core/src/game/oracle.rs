use serde::{Deserialize, Serialize};

use super::GameError;
use crate::learners::TabularPolicy;
use crate::rewards::{NoiseFamily, RewardEnsemble, RewardInstance};
use crate::temporal::TemporalBelief;

/// Exact compliant-profile quantities from full enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactGains {
    pub prob: Vec<f64>,
    /// Row-major `K × K`; `None` on the diagonal and when `P(I_τ = a) = 0`.
    pub gain: Vec<Option<f64>>,
}

struct Walk<'a> {
    policy: &'a TabularPolicy,
    mu: &'a RewardInstance,
    belief: &'a TemporalBelief,
    n: Vec<f64>,
    g: Vec<f64>,
}

impl Walk<'_> {
    fn descend(&mut self, t: usize, history: &mut Vec<(usize, f64)>, mass: f64) -> Result<(), GameError> {
        if t == self.mu.horizon() {
            return Ok(());
        }
        let k = self.mu.arms();
        let dist = self.policy.distribution_for(history)?;
        let w = self.belief.pmf()[t];
        let m = self.mu.row(t);
        for (a, &p) in dist.iter().enumerate().filter(|(_, &p)| p > 0.0) {
            let branch = mass * p;
            self.n[a] += branch * w;
            for b in 0..k {
                self.g[a * k + b] += branch * w * (m[b] - m[a]);
            }
            let outcomes: Vec<(f64, f64)> = match self.mu.noise() {
                NoiseFamily::Deterministic => vec![(m[a], 1.0)],
                NoiseFamily::Bernoulli => vec![(1.0, m[a]), (0.0, 1.0 - m[a])],
                NoiseFamily::TruncatedGaussian { .. } => return Err(GameError::Unsupported("continuous reward noise")),
            };
            for (r, q) in outcomes.into_iter().filter(|&(_, q)| q > 0.0) {
                history.push((a, r));
                self.descend(t + 1, history, branch * q)?;
                history.pop();
            }
        }
        Ok(())
    }
}

/// Enumerates every recommendation and reward path of a tabular policy on a
/// finite prior. Cost grows as `(2K)^T`, so this is for micro-instances.
pub fn exhaustive_conditional_gains(
    policy: &TabularPolicy,
    prior: &RewardEnsemble,
    belief: &TemporalBelief,
) -> Result<ExactGains, GameError> {
    let RewardEnsemble::Finite { instances, weights } = prior else {
        return Err(GameError::Unsupported("generative priors"));
    };
    if belief.horizon() != prior.horizon() {
        return Err(GameError::HorizonMismatch { belief: belief.horizon(), rewards: prior.horizon() });
    }
    let k = prior.arms();
    let mut n = vec![0.0; k];
    let mut g = vec![0.0; k * k];
    for (mu, &wi) in instances.iter().zip(weights) {
        let mut walk = Walk { policy, mu, belief, n: vec![0.0; k], g: vec![0.0; k * k] };
        walk.descend(0, &mut Vec::new(), 1.0)?;
        n.iter_mut().zip(&walk.n).for_each(|(x, y)| *x += wi * y);
        g.iter_mut().zip(&walk.g).for_each(|(x, y)| *x += wi * y);
    }
    let gain = (0..k * k)
        .map(|i| {
            let (a, b) = (i / k, i % k);
            (a != b && n[a] > 0.0).then(|| g[i] / n[a])
        })
        .collect();
    Ok(ExactGains { prob: n, gain })
}
