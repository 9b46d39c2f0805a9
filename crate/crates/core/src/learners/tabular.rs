use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_feedback, sample_index, LearnerError, Policy};

/// Recommendation rule as an explicit function of the feedback history
/// `[(played, reward), ...]`.
pub type HistoryRule = Arc<dyn Fn(&[(usize, f64)]) -> Vec<f64> + Send + Sync>;

/// Policy whose distribution is a declared function of the history, so its
/// randomness can be enumerated exactly.
#[derive(Clone)]
pub struct TabularPolicy {
    arms: usize,
    rule: HistoryRule,
    history: Vec<(usize, f64)>,
    dist: Vec<f64>,
    rng: ChaCha8Rng,
}

impl std::fmt::Debug for TabularPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TabularPolicy").field("arms", &self.arms).field("history", &self.history).finish()
    }
}

impl TabularPolicy {
    pub fn new(arms: usize, rule: HistoryRule, rng: ChaCha8Rng) -> Result<Self, LearnerError> {
        if arms == 0 {
            return Err(LearnerError::NoArms);
        }
        let dist = validated(arms, rule(&[]))?;
        Ok(Self { arms, rule, history: Vec::new(), dist, rng })
    }

    /// Always recommends `arm`.
    pub fn constant(arms: usize, arm: usize, rng: ChaCha8Rng) -> Result<Self, LearnerError> {
        if arm >= arms {
            return Err(LearnerError::ActionOutOfRange { action: arm, arms });
        }
        Self::new(arms, Arc::new(move |_| one_hot(arms, arm)), rng)
    }

    /// Recommends the arm with the highest running mean observed reward;
    /// unplayed arms count as mean 0 and ties go to the lowest index.
    pub fn greedy(arms: usize, rng: ChaCha8Rng) -> Result<Self, LearnerError> {
        Self::new(arms, Arc::new(move |h| one_hot(arms, greedy_choice(arms, h))), rng)
    }

    pub fn history(&self) -> &[(usize, f64)] {
        &self.history
    }

    /// Distribution the rule assigns to an arbitrary history.
    pub fn distribution_for(&self, history: &[(usize, f64)]) -> Result<Vec<f64>, LearnerError> {
        validated(self.arms, (self.rule)(history))
    }
}

fn one_hot(arms: usize, arm: usize) -> Vec<f64> {
    let mut v = vec![0.0; arms];
    v[arm] = 1.0;
    v
}

fn greedy_choice(arms: usize, history: &[(usize, f64)]) -> usize {
    let mut sum = vec![0.0; arms];
    let mut n = vec![0usize; arms];
    for &(a, r) in history {
        sum[a] += r;
        n[a] += 1;
    }
    let mean = |a: usize| if n[a] == 0 { 0.0 } else { sum[a] / n[a] as f64 };
    (0..arms).fold(0, |best, a| if mean(a) > mean(best) { a } else { best })
}

fn validated(arms: usize, dist: Vec<f64>) -> Result<Vec<f64>, LearnerError> {
    let s: f64 = dist.iter().sum();
    if dist.len() != arms || dist.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
        return Err(LearnerError::InvalidDistribution);
    }
    Ok(dist)
}

impl Policy for TabularPolicy {
    fn arms(&self) -> usize {
        self.arms
    }

    fn distribution(&self) -> &[f64] {
        &self.dist
    }

    fn recommend(&mut self) -> (usize, &[f64]) {
        (sample_index(&self.dist, self.rng.random()), &self.dist)
    }

    fn update(&mut self, played: usize, reward: f64) -> Result<(), LearnerError> {
        check_feedback(self.arms, played, reward)?;
        self.history.push((played, reward));
        self.dist = validated(self.arms, (self.rule)(&self.history))?;
        Ok(())
    }
}
