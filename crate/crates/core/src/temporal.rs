//! Arrival-time (temporal) beliefs.
//!
//! A [`TemporalBelief`] is a probability mass function over rounds `1..=T`.
//! Rounds are 1-based throughout the public API; `pmf()[t - 1]` is the mass
//! on round `t`.
//!
//! Dispersion statistics are computed exactly from the pmf:
//!
//! * `Ψ(t) = Σ_s D(s)|t − s|`, evaluated on the support interval `I`
//!   (the smallest contiguous range containing every positive entry);
//! * `Ψ_max = max_{t ∈ I} Ψ(t)`;
//! * `Φ = Σ_t D(t) Ψ(t) = E_{s,t ~ D}|t − s|`;
//! * `W₂ = Σ_t D(t)²`.
//!
//! All three are O(T) via compensated prefix/suffix moment sums, so horizons
//! of 10^6 rounds are routine.

use std::fmt;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{csum, CompensatedSum};

/// Tolerance on `Σ pmf = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Negative entries no smaller than this are treated as float noise.
pub const NEGATIVE_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemporalError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("window start {start}, length {len} does not fit in horizon {horizon}")]
    WindowOutOfRange { start: usize, len: usize, horizon: usize },
    #[error("round {round} outside 1..={horizon}")]
    RoundOutOfRange { round: usize, horizon: usize },
    #[error("pmf entry for round {round} is negative ({value})")]
    NegativeMass { round: usize, value: f64 },
    #[error("pmf entry for round {round} is not finite")]
    NonFinite { round: usize },
    #[error("pmf sums to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    NotNormalized { sum: f64 },
    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: usize, right: usize },
    #[error("{components} components but {weights} weights")]
    WeightCountMismatch { components: usize, weights: usize },
    #[error("mixture weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("block length {block} must lie in 1..={horizon}")]
    InvalidBlockLength { block: usize, horizon: usize },
}

/// Dispersion statistics of a temporal belief.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionStats {
    support_start: usize,
    psi_on_support: Vec<f64>,
    pub psi_max: f64,
    pub phi: f64,
    pub w2: f64,
}

impl DispersionStats {
    /// One-sided dispersion `Ψ(t)` for `t` in the support interval, `None` outside it.
    pub fn psi(&self, round: usize) -> Option<f64> {
        round.checked_sub(self.support_start).and_then(|i| self.psi_on_support.get(i).copied())
    }

    /// `Ψ` over the support interval, first entry at `support_interval().0`.
    pub fn psi_on_support(&self) -> &[f64] {
        &self.psi_on_support
    }
}

/// Probability mass function over the rounds of a horizon.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "BeliefRepr", into = "BeliefRepr")]
pub struct TemporalBelief {
    pmf: Vec<f64>,
    support: (usize, usize),
    stats: OnceLock<DispersionStats>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeliefRepr {
    #[serde(rename = "T")]
    horizon: usize,
    pmf: Vec<f64>,
}

impl TryFrom<BeliefRepr> for TemporalBelief {
    type Error = TemporalError;

    fn try_from(repr: BeliefRepr) -> Result<Self, Self::Error> {
        if repr.pmf.len() != repr.horizon {
            return Err(TemporalError::HorizonMismatch { left: repr.horizon, right: repr.pmf.len() });
        }
        TemporalBelief::from_pmf(repr.pmf)
    }
}

impl From<TemporalBelief> for BeliefRepr {
    fn from(b: TemporalBelief) -> Self {
        BeliefRepr { horizon: b.pmf.len(), pmf: b.pmf }
    }
}

impl fmt::Debug for TemporalBelief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TemporalBelief").field("horizon", &self.horizon()).field("support", &self.support).finish()
    }
}

impl PartialEq for TemporalBelief {
    fn eq(&self, other: &Self) -> bool {
        self.pmf == other.pmf
    }
}

impl TemporalBelief {
    /// Builds a belief from a dense pmf (entry `i` is round `i + 1`).
    ///
    /// Entries in `[-1e-12, 0)` are clamped to zero and the pmf renormalized;
    /// anything more negative is rejected.
    pub fn from_pmf(mut pmf: Vec<f64>) -> Result<Self, TemporalError> {
        if pmf.is_empty() {
            return Err(TemporalError::EmptyHorizon);
        }
        let mut clamped = false;
        for (i, p) in pmf.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(TemporalError::NonFinite { round: i + 1 });
            }
            if *p < 0.0 {
                if *p < -NEGATIVE_CLAMP_TOL {
                    return Err(TemporalError::NegativeMass { round: i + 1, value: *p });
                }
                *p = 0.0;
                clamped = true;
            }
        }
        let sum = csum(pmf.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TemporalError::NotNormalized { sum });
        }
        if clamped {
            pmf.iter_mut().for_each(|p| *p /= sum);
        }
        let lo = pmf.iter().position(|&p| p > 0.0).expect("positive mass exists");
        let hi = pmf.iter().rposition(|&p| p > 0.0).expect("positive mass exists");
        Ok(Self { pmf, support: (lo + 1, hi + 1), stats: OnceLock::new() })
    }

    /// Uniform distribution over rounds `start..start + len`.
    pub fn uniform_window(start: usize, len: usize, horizon: usize) -> Result<Self, TemporalError> {
        if horizon == 0 {
            return Err(TemporalError::EmptyHorizon);
        }
        if start == 0 || len == 0 || start - 1 + len > horizon {
            return Err(TemporalError::WindowOutOfRange { start, len, horizon });
        }
        let mut pmf = vec![0.0; horizon];
        let mass = 1.0 / len as f64;
        pmf[start - 1..start - 1 + len].iter_mut().for_each(|p| *p = mass);
        Ok(Self { pmf, support: (start, start + len - 1), stats: OnceLock::new() })
    }

    /// Point mass at `round` (the known-arrival case).
    pub fn point_mass(round: usize, horizon: usize) -> Result<Self, TemporalError> {
        if horizon == 0 {
            return Err(TemporalError::EmptyHorizon);
        }
        if round == 0 || round > horizon {
            return Err(TemporalError::RoundOutOfRange { round, horizon });
        }
        Self::uniform_window(round, 1, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Mass on a 1-based round (0 outside the horizon).
    pub fn prob(&self, round: usize) -> f64 {
        round.checked_sub(1).and_then(|i| self.pmf.get(i)).copied().unwrap_or(0.0)
    }

    /// Smallest contiguous `(lo, hi)` covering every positive entry, 1-based inclusive.
    pub fn support_interval(&self) -> (usize, usize) {
        self.support
    }

    /// Dispersion statistics, computed on first use.
    pub fn stats(&self) -> &DispersionStats {
        self.stats.get_or_init(|| dispersion(&self.pmf, self.support))
    }

    pub fn psi_max(&self) -> f64 {
        self.stats().psi_max
    }

    pub fn phi(&self) -> f64 {
        self.stats().phi
    }

    pub fn w2(&self) -> f64 {
        self.stats().w2
    }

    /// Convex combination of same-horizon beliefs. Statistics of the result
    /// are recomputed from its pmf, never mixed.
    pub fn mixture(components: &[TemporalBelief], weights: &[f64]) -> Result<Self, TemporalError> {
        let first = components.first().ok_or(TemporalError::EmptyMixture)?;
        if components.len() != weights.len() {
            return Err(TemporalError::WeightCountMismatch { components: components.len(), weights: weights.len() });
        }
        let horizon = first.horizon();
        if let Some(bad) = components.iter().find(|c| c.horizon() != horizon) {
            return Err(TemporalError::HorizonMismatch { left: horizon, right: bad.horizon() });
        }
        let sum = csum(weights.iter().copied());
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TemporalError::InvalidWeights { sum });
        }
        let pmf = (0..horizon).map(|i| csum(components.iter().zip(weights).map(|(c, w)| w * c.pmf[i]))).collect();
        Self::from_pmf(pmf)
    }

    /// Splits `U_{1,T}` into contiguous uniform blocks whose mixture, with
    /// weights proportional to block length, reproduces it exactly.
    ///
    /// Uses `m = ⌊T/L⌋` blocks with lengths as equal as possible, longer blocks
    /// last. When `T mod L ≤ m` every block has length `L` or `L + 1`;
    /// otherwise the balanced lengths exceed `L + 1` but never fall below `L`.
    pub fn decompose_uniform(horizon: usize, block: usize) -> Result<(Vec<Self>, Vec<f64>), TemporalError> {
        if block == 0 || block > horizon {
            return Err(TemporalError::InvalidBlockLength { block, horizon });
        }
        let count = horizon / block;
        let short = horizon / count;
        let n_long = horizon % count;
        let mut blocks = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut start = 1;
        for i in 0..count {
            let len = if i >= count - n_long { short + 1 } else { short };
            blocks.push(Self::uniform_window(start, len, horizon)?);
            weights.push(len as f64 / horizon as f64);
            start += len;
        }
        debug_assert_eq!(start, horizon + 1);
        Ok((blocks, weights))
    }

    /// Total variation distance `½ Σ_t |D1(t) − D2(t)|`.
    pub fn tv_distance(&self, other: &TemporalBelief) -> Result<f64, TemporalError> {
        if self.horizon() != other.horizon() {
            return Err(TemporalError::HorizonMismatch { left: self.horizon(), right: other.horizon() });
        }
        let d = 0.5 * csum(self.pmf.iter().zip(&other.pmf).map(|(a, b)| (a - b).abs()));
        Ok(d.clamp(0.0, 1.0))
    }

    /// Sampler for arrival rounds (1-based).
    pub fn sampler(&self) -> RoundSampler {
        RoundSampler { index: WeightedIndex::new(&self.pmf).expect("validated pmf has positive mass") }
    }
}

/// Draws arrival rounds from a belief.
#[derive(Debug, Clone)]
pub struct RoundSampler {
    index: WeightedIndex<f64>,
}

impl RoundSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng) + 1
    }
}

fn dispersion(pmf: &[f64], (lo, hi): (usize, usize)) -> DispersionStats {
    // Work on the support interval with offsets x = t - lo to keep magnitudes small.
    let p = &pmf[lo - 1..hi];
    let n = p.len();

    // left_mass[i] = Σ_{j ≤ i} p_j, left_moment[i] = Σ_{j ≤ i} j p_j
    let mut left_mass = Vec::with_capacity(n);
    let mut left_moment = Vec::with_capacity(n);
    let (mut m, mut g) = (CompensatedSum::new(), CompensatedSum::new());
    for (j, &pj) in p.iter().enumerate() {
        m.add(pj);
        g.add(j as f64 * pj);
        left_mass.push(m.value());
        left_moment.push(g.value());
    }
    // right sums over j > i, accumulated from the end
    let mut psi = vec![0.0; n];
    let (mut rm, mut rg) = (CompensatedSum::new(), CompensatedSum::new());
    for i in (0..n).rev() {
        let x = i as f64;
        let left = x * left_mass[i] - left_moment[i];
        let right = rg.value() - x * rm.value();
        psi[i] = left + right;
        rm.add(p[i]);
        rg.add(i as f64 * p[i]);
    }

    let psi_max = psi.iter().copied().fold(0.0, f64::max);
    let phi = csum(p.iter().zip(&psi).map(|(pi, si)| pi * si)).min(psi_max).max(0.0);
    let w2 = csum(p.iter().map(|pi| pi * pi));
    DispersionStats { support_start: lo, psi_on_support: psi, psi_max, phi, w2 }
}
