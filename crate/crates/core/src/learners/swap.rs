use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_feedback, sample_index, LearnerError, Policy};

/// Dense solves are used up to this many arms; power iteration beyond.
pub const DENSE_SOLVE_MAX_ARMS: usize = 64;
pub const STATIONARY_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;

/// Stationary distribution `p = pQ` of a row-stochastic matrix given row-major.
///
/// Uses an LU solve of `(Qᵀ − I)p = 0, Σp = 1` for small `K`. If that is
/// singular or its residual exceeds [`STATIONARY_TOL`], falls back to power
/// iteration from the uniform vector.
pub fn stationary_distribution(q: &[f64], k: usize) -> Result<Vec<f64>, LearnerError> {
    debug_assert_eq!(q.len(), k * k);
    if k == 1 {
        return Ok(vec![1.0]);
    }
    if k <= DENSE_SOLVE_MAX_ARMS {
        if let Some(p) = dense_stationary(q, k) {
            return Ok(p);
        }
    }
    power_stationary(q, k)
}

fn residual(q: &[f64], k: usize, p: &[f64]) -> f64 {
    (0..k).map(|j| ((0..k).map(|i| p[i] * q[i * k + j]).sum::<f64>() - p[j]).abs()).fold(0.0, f64::max)
}

fn dense_stationary(q: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut a = DMatrix::<f64>::from_fn(k, k, |r, c| q[c * k + r] - if r == c { 1.0 } else { 0.0 });
    a.row_mut(k - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    if x.iter().any(|&v| !v.is_finite() || v < -STATIONARY_TOL) {
        return None;
    }
    let mut p: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    (residual(q, k, &p) <= STATIONARY_TOL).then_some(p)
}

fn power_stationary(q: &[f64], k: usize) -> Result<Vec<f64>, LearnerError> {
    let mut p = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..POWER_MAX_ITERS {
        next.fill(0.0);
        for i in 0..k {
            for j in 0..k {
                next[j] += p[i] * q[i * k + j];
            }
        }
        // Lazy step keeps periodic chains convergent.
        for (n, &old) in next.iter_mut().zip(&p) {
            *n = 0.5 * (*n + old);
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        let diff = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut p, &mut next);
        if diff <= STATIONARY_TOL * 1e-2 && residual(q, k, &p) <= STATIONARY_TOL {
            return Ok(p);
        }
    }
    Err(LearnerError::StationaryFailed)
}

/// Swap-regret reduction over `K` copies of a base learner.
///
/// Each round the base distributions form the rows of `Q`, the
/// recommendation distribution is the stationary `p = pQ`, and the
/// recommendation is drawn in two stages: a learner `J ~ p`, then
/// `I ~ q_J`. The marginal of `I` is `p`. Learner `J` receives the bandit
/// feedback, which in expectation hands learner `j` its loss scaled by `p_j`.
pub struct SwapWrapper {
    bases: Vec<Box<dyn Policy>>,
    q: Vec<f64>,
    dist: Vec<f64>,
    active: Option<usize>,
    rng: ChaCha8Rng,
}

impl SwapWrapper {
    pub fn new(bases: Vec<Box<dyn Policy>>, rng: ChaCha8Rng) -> Result<Self, LearnerError> {
        let k = bases.len();
        if k == 0 {
            return Err(LearnerError::NoArms);
        }
        if let Some(b) = bases.iter().find(|b| b.arms() != k) {
            return Err(LearnerError::ArmMismatch { expected: k, got: b.arms() });
        }
        let mut s = Self { bases, q: vec![0.0; k * k], dist: vec![0.0; k], active: None, rng };
        s.refresh()?;
        Ok(s)
    }

    fn refresh(&mut self) -> Result<(), LearnerError> {
        let k = self.bases.len();
        for (j, b) in self.bases.iter().enumerate() {
            self.q[j * k..(j + 1) * k].copy_from_slice(b.distribution());
        }
        self.dist = stationary_distribution(&self.q, k)?;
        Ok(())
    }

    pub fn base(&self, j: usize) -> &dyn Policy {
        self.bases[j].as_ref()
    }
}

impl Policy for SwapWrapper {
    fn arms(&self) -> usize {
        self.bases.len()
    }

    fn distribution(&self) -> &[f64] {
        &self.dist
    }

    fn recommend(&mut self) -> (usize, &[f64]) {
        let k = self.bases.len();
        let j = sample_index(&self.dist, self.rng.random());
        let a = sample_index(&self.q[j * k..(j + 1) * k], self.rng.random());
        self.active = Some(j);
        (a, &self.dist)
    }

    fn update(&mut self, played: usize, reward: f64) -> Result<(), LearnerError> {
        check_feedback(self.arms(), played, reward)?;
        // Without a preceding recommend, credit the learner most likely to have proposed `played`.
        let k = self.bases.len();
        let j = self.active.take().unwrap_or_else(|| {
            (0..k)
                .map(|j| (j, self.dist[j] * self.q[j * k + played]))
                .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b })
                .0
        });
        self.bases[j].update(played, reward)?;
        self.refresh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let q = [0.9, 0.1, 0.3, 0.7];
        let p = stationary_distribution(&q, 2).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
        let pp = power_stationary(&q, 2).unwrap();
        assert!((pp[0] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn reducible_chain_falls_back() {
        // Two absorbing states: the dense system is singular.
        let q = [1.0, 0.0, 0.0, 1.0];
        let p = stationary_distribution(&q, 2).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(residual(&q, 2, &p) <= STATIONARY_TOL);
    }

    #[test]
    fn periodic_chain_power_iteration() {
        let q = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let p = power_stationary(&q, 3).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-9));
    }

    #[test]
    fn random_chains_are_stationary() {
        let mut rng = crate::seed::rng(4, &[]);
        for k in 2..8 {
            let mut q: Vec<f64> = (0..k * k).map(|_| rng.random::<f64>()).collect();
            for r in q.chunks_mut(k) {
                let s: f64 = r.iter().sum();
                r.iter_mut().for_each(|x| *x /= s);
            }
            let p = stationary_distribution(&q, k).unwrap();
            assert!(residual(&q, k, &p) <= 1e-12);
        }
    }
}
