use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_feedback, sample_index, LearnerError, Policy};

/// Exponential weights over arms with uniform exploration and an optional
/// fixed-share step.
///
/// With `beta = 0` this is EXP3; with `beta > 0` it is Exp4.S with arms as
/// experts. Updates use importance-weighted losses `(1 − r) / p(a)`.
#[derive(Debug, Clone)]
pub struct ExpWeights {
    eta: f64,
    gamma: f64,
    beta: f64,
    weights: Vec<f64>,
    dist: Vec<f64>,
    rng: ChaCha8Rng,
}

impl ExpWeights {
    pub fn new(arms: usize, eta: f64, gamma: f64, beta: f64, rng: ChaCha8Rng) -> Result<Self, LearnerError> {
        if arms == 0 {
            return Err(LearnerError::NoArms);
        }
        for (name, v, hi) in [("eta", eta, f64::INFINITY), ("gamma", gamma, 1.0), ("beta", beta, 1.0)] {
            if !(v.is_finite() && v >= 0.0 && v <= hi) {
                return Err(LearnerError::InvalidParameter { name, value: v });
            }
        }
        let uniform = vec![1.0 / arms as f64; arms];
        Ok(Self { eta, gamma, beta, weights: uniform.clone(), dist: uniform, rng })
    }

    /// `η = √(2 ln K / (T K))`, `γ = 0`, `β = 0`.
    pub fn exp3_defaults(arms: usize, horizon: usize) -> (f64, f64, f64) {
        let (k, t) = (arms as f64, horizon.max(1) as f64);
        ((2.0 * k.ln() / (t * k)).sqrt(), 0.0, 0.0)
    }

    /// `η = √(ln(KT) / (LK))`, `γ = min(1, √(K ln K / L))`, `β = 1 / (LK)`.
    pub fn exp4s_defaults(arms: usize, horizon: usize, window: usize) -> (f64, f64, f64) {
        let (k, t, l) = (arms as f64, horizon.max(1) as f64, window.max(1) as f64);
        let eta = ((k * t).ln() / (l * k)).sqrt();
        let gamma = (k * k.ln() / l).sqrt().min(1.0);
        (eta, gamma, 1.0 / (l * k))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Normalized weights before exploration mixing.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn refresh(&mut self) {
        let u = self.gamma / self.weights.len() as f64;
        for (p, &w) in self.dist.iter_mut().zip(&self.weights) {
            *p = (1.0 - self.gamma) * w + u;
        }
    }
}

impl Policy for ExpWeights {
    fn arms(&self) -> usize {
        self.weights.len()
    }

    fn distribution(&self) -> &[f64] {
        &self.dist
    }

    fn recommend(&mut self) -> (usize, &[f64]) {
        let a = sample_index(&self.dist, self.rng.random());
        (a, &self.dist)
    }

    fn update(&mut self, played: usize, reward: f64) -> Result<(), LearnerError> {
        check_feedback(self.arms(), played, reward)?;
        let k = self.arms();
        if k == 1 {
            return Ok(());
        }
        let p = self.dist[played];
        if p > 0.0 {
            let loss_hat = (1.0 - reward) / p;
            self.weights[played] *= (-self.eta * loss_hat).exp();
        }
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            self.weights.iter_mut().for_each(|w| *w /= total);
        } else {
            self.weights.fill(1.0 / k as f64);
        }
        if self.beta > 0.0 {
            let share = self.beta / k as f64;
            self.weights.iter_mut().for_each(|w| *w = (1.0 - self.beta) * *w + share);
        }
        self.refresh();
        Ok(())
    }
}
