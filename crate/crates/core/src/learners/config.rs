use serde::{Deserialize, Serialize};

use super::{ExpWeights, LearnerError, Policy, SwapWrapper, TabularPolicy};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Exp3,
    Exp4s,
    SwapWrapper,
    Greedy,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Exp3,
    #[default]
    Exp4s,
}

/// Learner description; `null` parameters take their default formulas.
///
/// `L = null` means the window equals the horizon. `base` selects the
/// learner copied by `swap-wrapper`; `arm` is the fixed arm of `constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(rename = "K")]
    pub arms: usize,
    #[serde(rename = "L", default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// Builds a fresh policy for one replication.
pub trait PolicyFactory: Sync {
    fn arms(&self) -> usize;
    /// `stream` distinguishes replications; equal inputs give equal policies.
    fn build(&self, horizon: usize, stream: u64) -> Result<Box<dyn Policy>, LearnerError>;
}

impl<F> PolicyFactory for (usize, F)
where
    F: Fn(usize, u64) -> Result<Box<dyn Policy>, LearnerError> + Sync,
{
    fn arms(&self) -> usize {
        self.0
    }

    fn build(&self, horizon: usize, stream: u64) -> Result<Box<dyn Policy>, LearnerError> {
        (self.1)(horizon, stream)
    }
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, arms: usize) -> Self {
        Self { kind, arms, window: None, eta: None, gamma: None, beta: None, base: None, arm: None, seed: 0 }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = Some(window);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Resolved `(η, γ, β)` for an exponential-weights learner of kind `base`.
    pub fn parameters(&self, base: BaseKind, horizon: usize) -> (f64, f64, f64) {
        let (eta, gamma, beta) = match base {
            BaseKind::Exp3 => ExpWeights::exp3_defaults(self.arms, horizon),
            BaseKind::Exp4s => ExpWeights::exp4s_defaults(self.arms, horizon, self.window.unwrap_or(horizon)),
        };
        (self.eta.unwrap_or(eta), self.gamma.unwrap_or(gamma), self.beta.unwrap_or(beta))
    }

    fn exp_weights(&self, base: BaseKind, horizon: usize, path: &[u64]) -> Result<ExpWeights, LearnerError> {
        let (eta, gamma, beta) = self.parameters(base, horizon);
        ExpWeights::new(self.arms, eta, gamma, beta, seed::rng(self.seed, path))
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.arms == 0 {
            return Err(LearnerError::NoArms);
        }
        if self.window == Some(0) {
            return Err(LearnerError::InvalidParameter { name: "L", value: 0.0 });
        }
        match (self.kind, self.arm) {
            (PolicyKind::Constant, None) => Err(LearnerError::MissingParameter("arm")),
            (PolicyKind::Constant, Some(a)) if a >= self.arms => {
                Err(LearnerError::ActionOutOfRange { action: a, arms: self.arms })
            }
            _ => Ok(()),
        }
    }
}

impl PolicyFactory for PolicyConfig {
    fn arms(&self) -> usize {
        self.arms
    }

    fn build(&self, horizon: usize, stream: u64) -> Result<Box<dyn Policy>, LearnerError> {
        self.validate()?;
        let path = [seed::stream::POLICY, stream];
        let rng = seed::rng(self.seed, &path);
        Ok(match self.kind {
            PolicyKind::Exp3 => Box::new(self.exp_weights(BaseKind::Exp3, horizon, &path)?),
            PolicyKind::Exp4s => Box::new(self.exp_weights(BaseKind::Exp4s, horizon, &path)?),
            PolicyKind::SwapWrapper => {
                let base = self.base.unwrap_or_default();
                let bases = (0..self.arms as u64)
                    .map(|j| {
                        self.exp_weights(base, horizon, &[seed::stream::POLICY, stream, j + 1])
                            .map(|p| Box::new(p) as Box<dyn Policy>)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Box::new(SwapWrapper::new(bases, rng)?)
            }
            PolicyKind::Greedy => Box::new(TabularPolicy::greedy(self.arms, rng)?),
            PolicyKind::Constant => Box::new(TabularPolicy::constant(self.arms, self.arm.unwrap_or(0), rng)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_schema() {
        let c: PolicyConfig =
            serde_json::from_str(r#"{"kind":"exp4s","K":3,"L":null,"eta":null,"gamma":0.1,"beta":null,"seed":9}"#)
                .unwrap();
        assert_eq!(c.kind, PolicyKind::Exp4s);
        assert_eq!(c.window, None);
        assert_eq!(c.gamma, Some(0.1));
        let (_, gamma, beta) = c.parameters(BaseKind::Exp4s, 100);
        assert_eq!(gamma, 0.1);
        assert!((beta - 1.0 / 300.0).abs() < 1e-15);
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"kind":"exp3","K":2,"extra":1}"#).is_err());
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"kind":"ucb","K":2}"#).is_err());
    }

    #[test]
    fn builds_every_kind() {
        for kind in [PolicyKind::Exp3, PolicyKind::Exp4s, PolicyKind::SwapWrapper, PolicyKind::Greedy] {
            let p = PolicyConfig::new(kind, 3).build(50, 0).unwrap();
            assert_eq!(p.arms(), 3);
            assert!((p.distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let mut c = PolicyConfig::new(PolicyKind::Constant, 3);
        assert!(matches!(c.build(5, 0), Err(LearnerError::MissingParameter("arm"))));
        c.arm = Some(2);
        assert_eq!(c.build(5, 0).unwrap().distribution(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn same_stream_same_actions() {
        let c = PolicyConfig::new(PolicyKind::Exp4s, 4).with_seed(3);
        let run = |stream| {
            let mut p = c.build(1000, stream).unwrap();
            (0..1000)
                .map(|i| {
                    let a = p.recommend().0;
                    p.update(a, ((i * 7 + a) % 3) as f64 / 2.0).unwrap();
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }
}
