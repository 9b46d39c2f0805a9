use std::sync::Arc;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use serde::{Deserialize, Serialize};

use super::{NoiseFamily, RewardError, RewardInstance};
use crate::numeric::{csum, Z95};
use crate::seed;
use crate::temporal::TemporalBelief;

pub const DEFAULT_EXPLORABILITY_SAMPLES: usize = 10_000;

/// Slack on the `gap ≥ Δ` comparison so that margins equal to `Δ` up to
/// rounding count as meeting it.
const GAP_SLACK: f64 = 1e-12;

/// Per-arm reflected random walks on `[0, 1]` with `U[−ρ, ρ]` increments.
///
/// Draw `i` is a pure function of `(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftingGenerator {
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub arms: usize,
    pub rho: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseFamily,
}

impl DriftingGenerator {
    pub fn draw(&self, index: u64) -> RewardInstance {
        let mut rng = seed::rng(self.seed, &[seed::stream::INSTANCE, index]);
        let (t_max, k) = (self.horizon, self.arms);
        let mut means = Vec::with_capacity(t_max * k);
        means.extend((0..k).map(|_| rng.random::<f64>()));
        if self.rho > 0.0 {
            let step = Uniform::new_inclusive(-self.rho, self.rho).expect("rho is finite");
            for t in 1..t_max {
                for a in 0..k {
                    let prev = means[(t - 1) * k + a];
                    let next = reflect(prev + step.sample(&mut rng));
                    // Reflection is 1-Lipschitz, so this only trims rounding.
                    means.push(next.clamp(prev - self.rho, prev + self.rho).clamp(0.0, 1.0));
                }
            }
        } else {
            let first = means.clone();
            for _ in 1..t_max {
                means.extend_from_slice(&first);
            }
        }
        RewardInstance::new(t_max, k, means, self.noise).expect("generator output is valid")
    }
}

fn reflect(x: f64) -> f64 {
    let mut x = x;
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

/// The agent prior over mean-reward matrices.
#[derive(Debug, Clone)]
pub enum RewardEnsemble {
    Finite { instances: Vec<Arc<RewardInstance>>, weights: Vec<f64> },
    Generative(DriftingGenerator),
}

impl RewardEnsemble {
    pub fn finite(instances: Vec<RewardInstance>, weights: Vec<f64>) -> Result<Self, RewardError> {
        let first = instances.first().ok_or(RewardError::Empty)?;
        if weights.len() != instances.len() {
            return Err(RewardError::ShapeMismatch { expected: instances.len(), got: weights.len() });
        }
        let (t, k) = (first.horizon(), first.arms());
        if instances.iter().any(|m| m.horizon() != t || m.arms() != k) {
            return Err(RewardError::DimensionMismatch);
        }
        let total = csum(weights.iter().copied());
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(RewardError::InvalidWeights(total));
        }
        Ok(Self::Finite { instances: instances.into_iter().map(Arc::new).collect(), weights })
    }

    /// Equal-weight finite ensemble.
    pub fn uniform(instances: Vec<RewardInstance>) -> Result<Self, RewardError> {
        let n = instances.len().max(1);
        Self::finite(instances, vec![1.0 / n as f64; n])
    }

    pub fn generative(generator: DriftingGenerator) -> Result<Self, RewardError> {
        if generator.horizon == 0 || generator.arms == 0 {
            return Err(RewardError::Empty);
        }
        if !(generator.rho.is_finite() && generator.rho >= 0.0) {
            return Err(RewardError::InvalidStep(generator.rho));
        }
        generator.noise.validate()?;
        Ok(Self::Generative(generator))
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Finite { instances, .. } => instances[0].horizon(),
            Self::Generative(g) => g.horizon,
        }
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Finite { instances, .. } => instances[0].arms(),
            Self::Generative(g) => g.arms,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }

    /// One draw `μ ~ 𝒫`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Arc<RewardInstance> {
        match self {
            Self::Finite { instances, weights } => {
                if instances.len() == 1 {
                    return Arc::clone(&instances[0]);
                }
                let idx = WeightedIndex::new(weights).expect("validated weights").sample(rng);
                Arc::clone(&instances[idx])
            }
            Self::Generative(g) => Arc::new(g.draw(rng.random())),
        }
    }

    /// Replaces the noise family of every member.
    pub fn with_noise(self, noise: NoiseFamily) -> Result<Self, RewardError> {
        match self {
            Self::Finite { instances, weights } => {
                let instances = instances
                    .into_iter()
                    .map(|m| Arc::unwrap_or_clone(m).with_noise(noise))
                    .collect::<Result<Vec<_>, _>>()?;
                Self::finite(instances, weights)
            }
            Self::Generative(g) => Self::generative(DriftingGenerator { noise, ..g }),
        }
    }
}

/// Reflected-random-walk prior satisfying a drift bound of `rho` by construction.
pub fn make_drifting_ensemble(horizon: usize, arms: usize, rho: f64, seed: u64) -> Result<RewardEnsemble, RewardError> {
    RewardEnsemble::generative(DriftingGenerator { horizon, arms, rho, seed, noise: NoiseFamily::Bernoulli })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorabilityReport {
    /// `π_a = P(gap(a) ≥ Δ)`.
    pub pi: Vec<f64>,
    pub alpha_hat: f64,
    /// Largest per-arm 95% binomial half-width; 0 when exact.
    pub ci_halfwidth: f64,
    pub samples: usize,
    pub exact: bool,
    pub assumption_holds: bool,
}

/// Estimates each arm's probability of leading every other arm by `delta`
/// under `belief`. Finite ensembles are enumerated exactly; generative ones
/// use `n_samples` draws (default [`DEFAULT_EXPLORABILITY_SAMPLES`]).
pub fn verify_explorability(
    prior: &RewardEnsemble,
    belief: &TemporalBelief,
    delta: f64,
    n_samples: Option<usize>,
) -> Result<ExplorabilityReport, RewardError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(RewardError::InvalidMargin(delta));
    }
    let k = prior.arms();
    let mut pi = vec![0.0; k];
    let (samples, exact) = match prior {
        RewardEnsemble::Finite { instances, weights } => {
            for (m, &w) in instances.iter().zip(weights) {
                for (p, g) in pi.iter_mut().zip(m.gaps(belief)?) {
                    if g >= delta - GAP_SLACK {
                        *p += w;
                    }
                }
            }
            (instances.len(), true)
        }
        RewardEnsemble::Generative(g) => {
            let n = n_samples.unwrap_or(DEFAULT_EXPLORABILITY_SAMPLES);
            if n == 0 {
                return Err(RewardError::ZeroSamples);
            }
            for i in 0..n {
                for (p, gap) in pi.iter_mut().zip(g.draw(i as u64).gaps(belief)?) {
                    if gap >= delta - GAP_SLACK {
                        *p += 1.0;
                    }
                }
            }
            pi.iter_mut().for_each(|p| *p /= n as f64);
            (n, false)
        }
    };
    let ci_halfwidth =
        if exact { 0.0 } else { pi.iter().map(|p| Z95 * (p * (1.0 - p) / samples as f64).sqrt()).fold(0.0, f64::max) };
    let alpha_hat = pi.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ExplorabilityReport { pi, alpha_hat, ci_halfwidth, samples, exact, assumption_holds: alpha_hat > 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub rho_hat: f64,
    /// True when `rho_hat` comes from a sample and only bounds the true drift from below.
    pub lower_estimate: bool,
}

/// Largest per-round sup-norm change over the ensemble (or over `n_samples`
/// generator draws).
pub fn verify_drift(prior: &RewardEnsemble, n_samples: usize) -> Result<DriftEstimate, RewardError> {
    match prior {
        RewardEnsemble::Finite { instances, .. } => Ok(DriftEstimate {
            rho_hat: instances.iter().map(|m| m.drift()).fold(0.0, f64::max),
            lower_estimate: false,
        }),
        RewardEnsemble::Generative(g) => {
            if n_samples == 0 {
                return Err(RewardError::ZeroSamples);
            }
            let rho_hat = (0..n_samples as u64).map(|i| g.draw(i).drift()).fold(0.0, f64::max);
            Ok(DriftEstimate { rho_hat, lower_estimate: true })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leader(best: usize) -> RewardInstance {
        let mut m = vec![0.3; 3];
        m[best] = 0.7;
        RewardInstance::stationary(&m, 5, NoiseFamily::Bernoulli).unwrap()
    }

    #[test]
    fn exact_explorability_of_rotating_leader() {
        let p = RewardEnsemble::uniform((0..3).map(leader).collect()).unwrap();
        let d = TemporalBelief::uniform_window(1, 5, 5).unwrap();
        let r = verify_explorability(&p, &d, 0.3, None).unwrap();
        for &x in &r.pi {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((r.alpha_hat - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.ci_halfwidth, 0.0);
        assert!(r.exact && r.assumption_holds);
        assert!(r.pi.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn arm_that_never_leads_fails() {
        let p = RewardEnsemble::uniform(vec![leader(0), leader(1)]).unwrap();
        let d = TemporalBelief::uniform_window(1, 5, 5).unwrap();
        let r = verify_explorability(&p, &d, 0.01, None).unwrap();
        assert_eq!(r.pi[2], 0.0);
        assert_eq!(r.alpha_hat, 0.0);
        assert!(!r.assumption_holds);
        let big = verify_explorability(&p, &d, 1.5, None).unwrap();
        assert!(big.pi.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn explorability_rejects_bad_inputs() {
        let p = make_drifting_ensemble(5, 2, 0.0, 1).unwrap();
        let d = TemporalBelief::uniform_window(1, 5, 5).unwrap();
        assert!(matches!(verify_explorability(&p, &d, 0.0, None), Err(RewardError::InvalidMargin(_))));
        assert!(matches!(verify_explorability(&p, &d, 0.1, Some(0)), Err(RewardError::ZeroSamples)));
    }

    #[test]
    fn generative_explorability_reports_ci() {
        let p = make_drifting_ensemble(20, 2, 0.01, 9).unwrap();
        let d = TemporalBelief::uniform_window(1, 20, 20).unwrap();
        let r = verify_explorability(&p, &d, 0.2, Some(2000)).unwrap();
        assert!(!r.exact && r.ci_halfwidth > 0.0);
        // Two i.i.d. uniform arms: P(x − y ≥ 0.2) = 0.32 with mild drift perturbation.
        assert!((r.pi[0] - 0.32).abs() < 0.05, "{:?}", r.pi);
        assert!(r.pi[0] + r.pi[1] <= 1.0);
    }

    #[test]
    fn drift_of_stationary_and_generated() {
        let p = RewardEnsemble::uniform(vec![leader(0), leader(1)]).unwrap();
        assert_eq!(verify_drift(&p, 0).unwrap(), DriftEstimate { rho_hat: 0.0, lower_estimate: false });
        let g = make_drifting_ensemble(100, 4, 0.01, 3).unwrap();
        let est = verify_drift(&g, 100).unwrap();
        assert!(est.lower_estimate);
        assert!(est.rho_hat <= 0.01 && est.rho_hat > 0.005);
        let jump = RewardInstance::new(2, 1, vec![0.0, 0.3], NoiseFamily::Bernoulli).unwrap();
        let single = RewardEnsemble::uniform(vec![jump]).unwrap();
        assert!((verify_drift(&single, 1).unwrap().rho_hat - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_step_generator_is_stationary() {
        let g = make_drifting_ensemble(50, 3, 0.0, 4).unwrap();
        assert_eq!(verify_drift(&g, 20).unwrap().rho_hat, 0.0);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = make_drifting_ensemble(30, 2, 0.05, 77).unwrap();
        let b = make_drifting_ensemble(30, 2, 0.05, 77).unwrap();
        let c = make_drifting_ensemble(30, 2, 0.05, 78).unwrap();
        let (RewardEnsemble::Generative(a), RewardEnsemble::Generative(b), RewardEnsemble::Generative(c)) = (a, b, c)
        else {
            unreachable!()
        };
        assert_eq!(a.draw(5), b.draw(5));
        assert_ne!(a.draw(5), a.draw(6));
        assert_ne!(a.draw(5), c.draw(5));
    }

    #[test]
    fn finite_weights_validated() {
        assert!(matches!(
            RewardEnsemble::finite(vec![leader(0), leader(1)], vec![0.5, 0.6]),
            Err(RewardError::InvalidWeights(_))
        ));
        let short = RewardInstance::stationary(&[0.1, 0.2, 0.3], 4, NoiseFamily::Bernoulli).unwrap();
        assert!(matches!(RewardEnsemble::uniform(vec![leader(0), short]), Err(RewardError::DimensionMismatch)));
    }

    #[test]
    fn reflection_stays_in_unit_interval() {
        for x in [-0.3, 1.2, 0.5, -1.7, 2.9] {
            assert!((0.0..=1.0).contains(&reflect(x)));
        }
        assert!((reflect(-0.25) - 0.25).abs() < 1e-15);
        assert!((reflect(1.25) - 0.75).abs() < 1e-15);
    }
}
