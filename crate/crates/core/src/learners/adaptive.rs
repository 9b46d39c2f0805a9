use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PolicyFactory;
use crate::game::{run_compliant, GameError};
use crate::numeric::{loglog_slope, mean_ci};
use crate::regret::Transcript;
use crate::rewards::RewardInstance;
use crate::seed;

/// Which reward values interval regret is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretSource {
    /// Sampled rewards recorded in the transcript.
    #[default]
    Realized,
    /// The adversary's mean rewards.
    Pseudo,
}

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Interval lengths to evaluate, ascending.
    pub lengths: Vec<usize>,
    pub n_seeds: usize,
    pub seed: u64,
    pub source: RegretSource,
}

/// Regret on intervals that start at one change point of the adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchFamily {
    /// 1-based first round of the family.
    pub start: usize,
    pub lengths: Vec<usize>,
    pub mean_regret: Vec<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveProfile {
    pub lengths: Vec<usize>,
    /// Max over all length-ℓ intervals of the interval regret, averaged over seeds.
    pub mean_max_regret: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    /// OLS slope of `ln(mean_max_regret)` against `ln ℓ`.
    pub slope: Option<f64>,
    pub switch_families: Vec<SwitchFamily>,
}

impl AdaptiveProfile {
    pub fn max_family_slope(&self) -> Option<f64> {
        self.switch_families.iter().filter_map(|f| f.slope).reduce(f64::max)
    }
}

/// About `points` distinct integers spaced log-uniformly on `[lo, hi]`.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let (lo, hi) = (lo.max(1), hi.max(lo.max(1)));
    if points <= 1 || lo == hi {
        return vec![hi];
    }
    let ratio = (hi as f64 / lo as f64).ln() / (points - 1) as f64;
    let mut out: Vec<usize> = (0..points).map(|i| (lo as f64 * (ratio * i as f64).exp()).round() as usize).collect();
    out.dedup();
    *out.last_mut().expect("non-empty") = hi;
    out
}

/// Cumulative per-arm advantage `Σ_{s<t} (v_{s,a} − v_{s,I_s})`, `(T+1) × K` row-major.
fn advantage_prefix<'a>(tr: &Transcript, row: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
    let k = tr.arms();
    let mut prefix = vec![0.0; (tr.len() + 1) * k];
    for t in 0..tr.len() {
        let v = row(t);
        let base = v[tr.recommended()[t]];
        for a in 0..k {
            prefix[(t + 1) * k + a] = prefix[t * k + a] + (v[a] - base);
        }
    }
    prefix
}

fn interval_regret(prefix: &[f64], k: usize, start: usize, len: usize) -> f64 {
    (0..k).map(|a| prefix[(start + len) * k + a] - prefix[start * k + a]).fold(f64::NEG_INFINITY, f64::max)
}

fn max_over_starts(prefix: &[f64], k: usize, horizon: usize, len: usize) -> f64 {
    (0..=horizon - len).map(|s| interval_regret(prefix, k, s, len)).fold(f64::NEG_INFINITY, f64::max)
}

/// `max_{s} max_a Σ_{t=s}^{s+len−1} (u_{t,a} − u_{t,I_t})` over realized rewards.
pub fn max_interval_regret(tr: &Transcript, len: usize) -> f64 {
    assert!(len >= 1 && len <= tr.len(), "interval length out of range");
    let prefix = advantage_prefix(tr, |t| tr.rewards(t));
    max_over_starts(&prefix, tr.arms(), tr.len(), len)
}

/// 0-based rounds where the mean vector changes.
fn change_points(mu: &RewardInstance) -> Vec<usize> {
    (1..mu.horizon()).filter(|&t| mu.row(t) != mu.row(t - 1)).collect()
}

/// Interval-regret profile of a policy against a fixed reward schedule.
pub fn adaptive_regret_profile(
    factory: &dyn PolicyFactory,
    adversary: &RewardInstance,
    options: &ProfileOptions,
) -> Result<AdaptiveProfile, GameError> {
    let horizon = adversary.horizon();
    let k = adversary.arms();
    let lengths: Vec<usize> = options.lengths.iter().copied().filter(|&l| l >= 1 && l <= horizon).collect();
    let switches = change_points(adversary);
    let family_bounds: Vec<(usize, usize)> =
        switches.iter().enumerate().map(|(i, &s)| (s, switches.get(i + 1).copied().unwrap_or(horizon) - s)).collect();

    let per_seed: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..options.n_seeds as u64)
        .into_par_iter()
        .map(|rep| {
            let tr = run_compliant(factory, adversary, seed::derive(options.seed, &[rep]))?;
            let prefix = match options.source {
                RegretSource::Realized => advantage_prefix(&tr, |t| tr.rewards(t)),
                RegretSource::Pseudo => advantage_prefix(&tr, |t| adversary.row(t)),
            };
            let maxima = lengths.iter().map(|&l| max_over_starts(&prefix, k, horizon, l)).collect();
            let families = family_bounds
                .iter()
                .map(|&(s, seg)| {
                    lengths.iter().filter(|&&l| l <= seg).map(|&l| interval_regret(&prefix, k, s, l)).collect()
                })
                .collect();
            Ok((maxima, families))
        })
        .collect::<Result<_, GameError>>()?;

    let mut mean_max_regret = Vec::with_capacity(lengths.len());
    let mut ci_halfwidth = Vec::with_capacity(lengths.len());
    for i in 0..lengths.len() {
        let xs: Vec<f64> = per_seed.iter().map(|(m, _)| m[i]).collect();
        let (m, h) = mean_ci(&xs);
        mean_max_regret.push(m);
        ci_halfwidth.push(h);
    }
    let lens_f: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let slope = loglog_slope(&lens_f, &mean_max_regret);

    let switch_families = family_bounds
        .iter()
        .enumerate()
        .map(|(f, &(s, seg))| {
            let fam_lengths: Vec<usize> = lengths.iter().copied().filter(|&l| l <= seg).collect();
            let mean_regret: Vec<f64> = (0..fam_lengths.len())
                .map(|i| mean_ci(&per_seed.iter().map(|(_, fam)| fam[f][i]).collect::<Vec<_>>()).0)
                .collect();
            let xs: Vec<f64> = fam_lengths.iter().map(|&l| l as f64).collect();
            let slope = loglog_slope(&xs, &mean_regret);
            SwitchFamily { start: s + 1, lengths: fam_lengths, mean_regret, slope }
        })
        .collect();

    Ok(AdaptiveProfile { lengths, mean_max_regret, ci_halfwidth, slope, switch_families })
}
