//! Reward beliefs: mean-reward matrices, noise families, and the agent prior.
//!
//! A [`RewardInstance`] is a `T × K` matrix of per-round mean rewards in
//! `[0, 1]` together with the noise family used to draw realized rewards.
//! Row `i` holds round `i + 1`; arms are 0-based.

mod ensemble;
pub mod io;

pub use ensemble::{
    make_drifting_ensemble, verify_drift, verify_explorability, DriftEstimate, DriftingGenerator, ExplorabilityReport,
    RewardEnsemble, DEFAULT_EXPLORABILITY_SAMPLES,
};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::temporal::TemporalBelief;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("instance needs at least one round and one arm")]
    Empty,
    #[error("expected {expected} means, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("mean at round {round}, arm {arm} is {value}, outside [0, 1]")]
    MeanOutOfRange { round: usize, arm: usize, value: f64 },
    #[error("gap needs at least two arms")]
    TooFewArms,
    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("belief horizon {belief} does not match instance horizon {instance}")]
    HorizonMismatch { belief: usize, instance: usize },
    #[error("noise sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("margin Delta must be positive, got {0}")]
    InvalidMargin(f64),
    #[error("generative ensembles need a positive sample budget")]
    ZeroSamples,
    #[error("step bound rho must be non-negative and finite, got {0}")]
    InvalidStep(f64),
    #[error("ensemble weights must be non-negative and sum to 1 (sum = {0})")]
    InvalidWeights(f64),
    #[error("ensemble members disagree on dimensions")]
    DimensionMismatch,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Distribution of realized rewards around the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// `u ∈ {0, 1}` with `P(u = 1) = μ`.
    #[default]
    Bernoulli,
    /// `clip(μ + σ·N(0,1), 0, 1)`. Clipping pulls the mean toward 1/2 when
    /// `μ` is within a few `σ` of either end; the bias is not corrected.
    TruncatedGaussian { sigma: f64 },
    /// `u = μ` exactly.
    Deterministic,
}

impl NoiseFamily {
    fn validate(self) -> Result<Self, RewardError> {
        match self {
            NoiseFamily::TruncatedGaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(RewardError::InvalidSigma(sigma))
            }
            other => Ok(other),
        }
    }

    /// Draws one reward with mean `mean` (approximately, for truncated-gaussian).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, mean: f64, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseFamily::TruncatedGaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mean + sigma * z).clamp(0.0, 1.0)
            }
            NoiseFamily::Deterministic => mean,
        }
    }
}

/// One realization `μ` of a reward belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct RewardInstance {
    horizon: usize,
    arms: usize,
    means: Vec<f64>,
    noise: NoiseFamily,
    drift: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "K")]
    arms: usize,
    mu: Vec<Vec<f64>>,
    #[serde(default)]
    noise: NoiseFamily,
}

impl TryFrom<InstanceRepr> for RewardInstance {
    type Error = RewardError;

    fn try_from(r: InstanceRepr) -> Result<Self, Self::Error> {
        if r.mu.len() != r.horizon {
            return Err(RewardError::ShapeMismatch { expected: r.horizon, got: r.mu.len() });
        }
        if let Some(row) = r.mu.iter().find(|row| row.len() != r.arms) {
            return Err(RewardError::ShapeMismatch { expected: r.arms, got: row.len() });
        }
        RewardInstance::new(r.horizon, r.arms, r.mu.concat(), r.noise)
    }
}

impl From<RewardInstance> for InstanceRepr {
    fn from(i: RewardInstance) -> Self {
        InstanceRepr {
            horizon: i.horizon,
            arms: i.arms,
            mu: i.means.chunks(i.arms).map(<[f64]>::to_vec).collect(),
            noise: i.noise,
        }
    }
}

impl RewardInstance {
    /// Builds an instance from row-major means (`means[t * K + a]`).
    pub fn new(horizon: usize, arms: usize, means: Vec<f64>, noise: NoiseFamily) -> Result<Self, RewardError> {
        if horizon == 0 || arms == 0 {
            return Err(RewardError::Empty);
        }
        if means.len() != horizon * arms {
            return Err(RewardError::ShapeMismatch { expected: horizon * arms, got: means.len() });
        }
        for (i, &m) in means.iter().enumerate() {
            if !(0.0..=1.0).contains(&m) {
                return Err(RewardError::MeanOutOfRange { round: i / arms + 1, arm: i % arms, value: m });
            }
        }
        let noise = noise.validate()?;
        let drift = means
            .chunks(arms)
            .zip(means.chunks(arms).skip(1))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (y - x).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        Ok(Self { horizon, arms, means, noise, drift })
    }

    /// The same mean vector at every round.
    pub fn stationary(means: &[f64], horizon: usize, noise: NoiseFamily) -> Result<Self, RewardError> {
        Self::new(horizon, means.len(), means.repeat(horizon), noise)
    }

    /// Concatenated stationary segments `(length, means)`.
    pub fn piecewise(segments: &[(usize, Vec<f64>)], noise: NoiseFamily) -> Result<Self, RewardError> {
        let arms = segments.first().map(|s| s.1.len()).ok_or(RewardError::Empty)?;
        let mut means = Vec::new();
        for (len, row) in segments {
            if row.len() != arms {
                return Err(RewardError::ShapeMismatch { expected: arms, got: row.len() });
            }
            for _ in 0..*len {
                means.extend_from_slice(row);
            }
        }
        let horizon = means.len() / arms;
        Self::new(horizon, arms, means, noise)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }

    pub fn with_noise(mut self, noise: NoiseFamily) -> Result<Self, RewardError> {
        self.noise = noise.validate()?;
        Ok(self)
    }

    /// Mean vector for 0-based round index `t`.
    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.means[t * self.arms..(t + 1) * self.arms]
    }

    #[inline]
    pub fn mean(&self, t: usize, arm: usize) -> f64 {
        self.means[t * self.arms + arm]
    }

    /// Row-major view of all means.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `max_t ‖μ_{t+1} − μ_t‖_∞`.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Realized reward of `arm` at 0-based round `t`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, t: usize, arm: usize, rng: &mut R) -> f64 {
        self.noise.sample(self.mean(t, arm), rng)
    }

    /// Realized reward vector for 0-based round `t`, written into `out`.
    pub fn sample_rewards<R: Rng + ?Sized>(&self, t: usize, rng: &mut R, out: &mut [f64]) {
        for (o, &m) in out.iter_mut().zip(self.row(t)) {
            *o = self.noise.sample(m, rng);
        }
    }

    /// `D`-weighted mean reward of every arm.
    pub fn weighted_means(&self, belief: &TemporalBelief) -> Result<Vec<f64>, RewardError> {
        if belief.horizon() != self.horizon {
            return Err(RewardError::HorizonMismatch { belief: belief.horizon(), instance: self.horizon });
        }
        let (lo, hi) = belief.support_interval();
        let mut acc = vec![CompensatedSum::new(); self.arms];
        for t in lo - 1..hi {
            let w = belief.pmf()[t];
            if w == 0.0 {
                continue;
            }
            for (a, m) in acc.iter_mut().zip(self.row(t)) {
                a.add(w * m);
            }
        }
        Ok(acc.iter().map(CompensatedSum::value).collect())
    }

    /// `gap(a)` for every arm: `min_{b≠a} Σ_t D(t)(μ_{t,a} − μ_{t,b})`.
    pub fn gaps(&self, belief: &TemporalBelief) -> Result<Vec<f64>, RewardError> {
        if self.arms < 2 {
            return Err(RewardError::TooFewArms);
        }
        let m = self.weighted_means(belief)?;
        Ok((0..self.arms)
            .map(|a| (0..self.arms).filter(|&b| b != a).map(|b| m[a] - m[b]).fold(f64::INFINITY, f64::min))
            .collect())
    }
}

/// Expected margin by which `arm` beats every other fixed arm under `belief`.
pub fn gap(mu: &RewardInstance, belief: &TemporalBelief, arm: usize) -> Result<f64, RewardError> {
    if arm >= mu.arms() {
        return Err(RewardError::ArmOutOfRange { arm, arms: mu.arms() });
    }
    Ok(mu.gaps(belief)?[arm])
}
