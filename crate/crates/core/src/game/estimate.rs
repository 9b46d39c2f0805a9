use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_compliant, AgentSpec, GameError};
use crate::learners::PolicyFactory;
use crate::numeric::{fmt_g17, CompensatedSum, Z95};
use crate::regret::{weighted_external_regret, weighted_swap_regret, Basis, Transcript};
use crate::rewards::{RewardEnsemble, RewardInstance};
use crate::seed;
use crate::temporal::TemporalBelief;

pub const DEFAULT_MIN_COUNT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
    /// Transcripts that must recommend `a` at least once (under the belief's
    /// support) before gains conditioned on `a` are reported.
    pub min_count: usize,
}

impl EstimatorOptions {
    pub fn new(n_outer: usize, n_inner: usize, seed: u64) -> Self {
        Self { n_outer, n_inner, seed, min_count: DEFAULT_MIN_COUNT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    NoGuarantee,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
            CheckStatus::NoGuarantee => "no-guarantee",
        }
    }
}

/// `E[μ_{τ,b} − μ_{τ,a} | I_τ = a]` for one ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub a: usize,
    pub b: usize,
    /// `None` when fewer than `min_count` transcripts recommend `a`.
    pub estimate: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub count: usize,
    pub bound: Option<f64>,
    pub status: Option<CheckStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationProbs {
    /// `P(I_τ = a)` under the compliant profile.
    pub prob: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
}

/// Realized `D`-weighted regret of the simulated transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub external_mean: f64,
    pub external_ci: f64,
    pub swap_mean: f64,
    pub swap_ci: f64,
}

impl RegretSummary {
    /// One-sided 95% upper bound on expected external regret, floored at 0.
    pub fn external_upper(&self) -> f64 {
        (self.external_mean + self.external_ci).max(0.0)
    }

    pub fn swap_upper(&self) -> f64 {
        (self.swap_mean + self.swap_ci).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGainReport {
    pub arms: usize,
    pub transcripts: usize,
    pub recommendation: RecommendationProbs,
    pub regret: RegretSummary,
    pub pairs: Vec<PairEstimate>,
}

impl ConditionalGainReport {
    /// Compares every pair with `epsilon`. A pair passes when its estimate is
    /// at most `epsilon + 2·CI`; `epsilon ≥ 1` gives no guarantee.
    pub fn check(&mut self, epsilon: f64) {
        for p in &mut self.pairs {
            p.bound = Some(epsilon);
            p.status = Some(match (p.estimate, p.ci_halfwidth) {
                (None, _) | (_, None) => CheckStatus::Inconclusive,
                _ if epsilon >= 1.0 => CheckStatus::NoGuarantee,
                (Some(g), Some(h)) if g <= epsilon + 2.0 * h => CheckStatus::Pass,
                _ => CheckStatus::Fail,
            });
        }
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairEstimate> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn any_fail(&self) -> bool {
        self.pairs.iter().any(|p| p.status == Some(CheckStatus::Fail))
    }

    /// One row per pair: `a,b,estimate,ci,n,prob_a,bound,status` (1-based actions).
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["a", "b", "estimate", "ci", "n", "prob_a", "bound", "status"])?;
        let opt = |x: Option<f64>| x.map(fmt_g17).unwrap_or_default();
        for p in &self.pairs {
            w.write_record([
                (p.a + 1).to_string(),
                (p.b + 1).to_string(),
                opt(p.estimate),
                opt(p.ci_halfwidth),
                p.count.to_string(),
                fmt_g17(self.recommendation.prob[p.a]),
                opt(p.bound),
                p.status.map(|s| s.as_str().to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sufficient statistics of one transcript under one belief.
#[derive(Debug, Clone)]
struct TranscriptStats {
    /// `N_a = Σ_t D(t) 1[I_t = a]`.
    n: Vec<f64>,
    /// `G_ab = Σ_t D(t) 1[I_t = a] (μ_{t,b} − μ_{t,a})`, row-major.
    g: Vec<f64>,
    external: f64,
    swap: f64,
}

fn transcript_stats(
    tr: &Transcript,
    mu: &RewardInstance,
    belief: &TemporalBelief,
) -> Result<TranscriptStats, GameError> {
    let k = tr.arms();
    let mut n = vec![CompensatedSum::new(); k];
    let mut g = vec![CompensatedSum::new(); k * k];
    let (lo, hi) = belief.support_interval();
    for t in lo - 1..hi {
        let w = belief.pmf()[t];
        if w == 0.0 {
            continue;
        }
        let a = tr.recommended()[t];
        let m = mu.row(t);
        n[a].add(w);
        for (s, &mb) in g[a * k..(a + 1) * k].iter_mut().zip(m) {
            s.add(w * (mb - m[a]));
        }
    }
    Ok(TranscriptStats {
        n: n.iter().map(CompensatedSum::value).collect(),
        g: g.iter().map(CompensatedSum::value).collect(),
        external: weighted_external_regret(tr, belief, Basis::Recommended)?,
        swap: weighted_swap_regret(tr, belief)?,
    })
}

/// Sampling plan: strata of independent units, each unit averaging
/// `n_inner` transcripts drawn on one reward instance.
/// `(instance, unit seed)` pairs of one stratum.
type Units = Vec<(Arc<RewardInstance>, u64)>;

struct Plan {
    strata: Vec<(f64, Units)>,
}

fn plan(prior: &RewardEnsemble, opts: &EstimatorOptions) -> Result<Plan, GameError> {
    if opts.n_outer == 0 || opts.n_inner == 0 {
        return Err(GameError::NoReplications);
    }
    let strata = match prior {
        // Exact weights with at least two units per instance, so instance
        // frequencies carry no sampling error.
        RewardEnsemble::Finite { instances, weights } => instances
            .iter()
            .zip(weights)
            .enumerate()
            .filter(|(_, (_, &w))| w > 0.0)
            .map(|(i, (mu, &w))| {
                let reps = ((opts.n_outer as f64 * w).ceil() as usize).max(2);
                (w, (0..reps as u64).map(|r| (Arc::clone(mu), seed::derive(opts.seed, &[i as u64, r]))).collect())
            })
            .collect(),
        RewardEnsemble::Generative(g) => vec![(
            1.0,
            (0..opts.n_outer as u64).map(|c| (Arc::new(g.draw(c)), seed::derive(opts.seed, &[c]))).collect(),
        )],
    };
    Ok(Plan { strata })
}

/// A unit's statistics averaged over its transcripts, plus per-arm counts of
/// transcripts with `N_a > 0`.
#[derive(Debug, Clone)]
struct UnitStats {
    mean: TranscriptStats,
    hits: Vec<usize>,
}

/// Runs every unit once and evaluates all beliefs on the same transcripts.
/// Output is indexed `[belief][stratum][unit]` and independent of scheduling.
fn simulate(
    factory: &dyn PolicyFactory,
    plan: &Plan,
    beliefs: &[TemporalBelief],
    n_inner: usize,
) -> Result<Vec<Vec<Vec<UnitStats>>>, GameError> {
    let jobs: Vec<(usize, usize)> =
        plan.strata.iter().enumerate().flat_map(|(s, (_, units))| (0..units.len()).map(move |u| (s, u))).collect();
    let results: Vec<Vec<UnitStats>> = jobs
        .par_iter()
        .map(|&(s, u)| {
            let (mu, unit_seed) = &plan.strata[s].1[u];
            let k = mu.arms();
            let mut acc: Vec<UnitStats> = beliefs
                .iter()
                .map(|_| UnitStats {
                    mean: TranscriptStats { n: vec![0.0; k], g: vec![0.0; k * k], external: 0.0, swap: 0.0 },
                    hits: vec![0; k],
                })
                .collect();
            for j in 0..n_inner as u64 {
                let tr = run_compliant(factory, mu, seed::derive(*unit_seed, &[j]))?;
                for (slot, d) in acc.iter_mut().zip(beliefs) {
                    let st = transcript_stats(&tr, mu, d)?;
                    slot.mean.n.iter_mut().zip(&st.n).for_each(|(x, y)| *x += y);
                    slot.mean.g.iter_mut().zip(&st.g).for_each(|(x, y)| *x += y);
                    slot.mean.external += st.external;
                    slot.mean.swap += st.swap;
                    slot.hits.iter_mut().zip(&st.n).for_each(|(h, &x)| *h += usize::from(x > 0.0));
                }
            }
            let inv = 1.0 / n_inner as f64;
            for slot in &mut acc {
                slot.mean.n.iter_mut().chain(slot.mean.g.iter_mut()).for_each(|x| *x *= inv);
                slot.mean.external *= inv;
                slot.mean.swap *= inv;
            }
            Ok(acc)
        })
        .collect::<Result<_, GameError>>()?;

    let mut out: Vec<Vec<Vec<UnitStats>>> =
        vec![plan.strata.iter().map(|(_, units)| Vec::with_capacity(units.len())).collect(); beliefs.len()];
    for (&(s, _), per_belief) in jobs.iter().zip(results) {
        for (b, unit) in per_belief.into_iter().enumerate() {
            out[b][s].push(unit);
        }
    }
    Ok(out)
}

/// Stratified estimate of a per-unit mean and the variance of that estimate.
fn stratified(weights: &[f64], strata: &[Vec<UnitStats>], f: impl Fn(&TranscriptStats) -> f64) -> (f64, f64) {
    let mut mean = CompensatedSum::new();
    let mut var = CompensatedSum::new();
    for (&w, units) in weights.iter().zip(strata) {
        let n = units.len() as f64;
        let m = units.iter().map(|u| f(&u.mean)).sum::<f64>() / n;
        mean.add(w * m);
        if units.len() > 1 {
            let s2 = units.iter().map(|u| (f(&u.mean) - m).powi(2)).sum::<f64>() / (n - 1.0);
            var.add(w * w * s2 / n);
        }
    }
    (mean.value(), var.value().max(0.0))
}

fn build_report(
    weights: &[f64],
    strata: &[Vec<UnitStats>],
    k: usize,
    n_inner: usize,
    min_count: usize,
) -> ConditionalGainReport {
    let units: usize = strata.iter().map(Vec::len).sum();
    let mut prob = Vec::with_capacity(k);
    let mut prob_ci = Vec::with_capacity(k);
    for a in 0..k {
        let (m, v) = stratified(weights, strata, |s| s.n[a]);
        prob.push(m);
        prob_ci.push(Z95 * v.sqrt());
    }
    let counts: Vec<usize> = (0..k).map(|a| strata.iter().flatten().map(|u| u.hits[a]).sum()).collect();
    let mut pairs = Vec::with_capacity(k * k.saturating_sub(1));
    for a in 0..k {
        for b in (0..k).filter(|&b| b != a) {
            let (estimate, ci_halfwidth) = if counts[a] >= min_count && prob[a] > 0.0 {
                let (g, _) = stratified(weights, strata, |s| s.g[a * k + b]);
                let r = g / prob[a];
                let (_, v) = stratified(weights, strata, |s| s.g[a * k + b] - r * s.n[a]);
                (Some(r), Some(Z95 * v.sqrt() / prob[a]))
            } else {
                (None, None)
            };
            pairs.push(PairEstimate { a, b, estimate, ci_halfwidth, count: counts[a], bound: None, status: None });
        }
    }
    let (external_mean, ev) = stratified(weights, strata, |s| s.external);
    let (swap_mean, sv) = stratified(weights, strata, |s| s.swap);
    ConditionalGainReport {
        arms: k,
        transcripts: units * n_inner,
        recommendation: RecommendationProbs { prob, ci_halfwidth: prob_ci },
        regret: RegretSummary { external_mean, external_ci: Z95 * ev.sqrt(), swap_mean, swap_ci: Z95 * sv.sqrt() },
        pairs,
    }
}

/// Conditional deviation gains for several arrival beliefs, all evaluated on
/// one shared set of compliant transcripts.
///
/// Finite priors are stratified by instance with exact weights; generative
/// priors draw `n_outer` instances. Each instance runs `n_inner` transcripts
/// and every transcript contributes its exact `D`-weighted sums rather than
/// a sampled arrival round.
pub fn estimate_conditional_gains(
    factory: &dyn PolicyFactory,
    prior: &RewardEnsemble,
    beliefs: &[TemporalBelief],
    opts: &EstimatorOptions,
) -> Result<Vec<ConditionalGainReport>, GameError> {
    for d in beliefs {
        if d.horizon() != prior.horizon() {
            return Err(GameError::HorizonMismatch { belief: d.horizon(), rewards: prior.horizon() });
        }
    }
    if factory.arms() != prior.arms() {
        return Err(GameError::ArmMismatch { policy: factory.arms(), instance: prior.arms() });
    }
    let plan = plan(prior, opts)?;
    let weights: Vec<f64> = plan.strata.iter().map(|(w, _)| *w).collect();
    let sims = simulate(factory, &plan, beliefs, opts.n_inner)?;
    Ok(sims.iter().map(|strata| build_report(&weights, strata, prior.arms(), opts.n_inner, opts.min_count)).collect())
}

fn require_compliant(agent: &AgentSpec) -> Result<(), GameError> {
    if agent.strategy.is_identity() && agent.strategy.arms() == agent.reward_belief.arms() {
        Ok(())
    } else {
        Err(GameError::InvalidStrategy { arms: agent.reward_belief.arms() })
    }
}

/// Gains from unilateral deviation for one compliant agent.
pub fn estimate_conditional_gain(
    factory: &dyn PolicyFactory,
    agent: &AgentSpec,
    opts: &EstimatorOptions,
) -> Result<ConditionalGainReport, GameError> {
    require_compliant(agent)?;
    let mut reports =
        estimate_conditional_gains(factory, &agent.reward_belief, std::slice::from_ref(&agent.temporal_belief), opts)?;
    Ok(reports.remove(0))
}

/// `P(I_τ = a)` under the compliant profile, `E[Σ_t D(t) 1[I_t = a]]`.
pub fn estimate_recommendation_prob(
    factory: &dyn PolicyFactory,
    agent: &AgentSpec,
    opts: &EstimatorOptions,
) -> Result<RecommendationProbs, GameError> {
    Ok(estimate_conditional_gain(factory, agent, opts)?.recommendation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveEstimate {
    pub samples: usize,
    pub prob: Vec<f64>,
    /// Row-major `K × K`; `None` on the diagonal and where `a` was never recommended.
    pub gain: Vec<Option<f64>>,
    pub ci_halfwidth: Vec<Option<f64>>,
}

/// Reference estimator that samples `μ`, one transcript, and one arrival
/// round `τ` per replication, with `n_outer · n_inner` i.i.d. replications.
pub fn naive_conditional_gain(
    factory: &dyn PolicyFactory,
    agent: &AgentSpec,
    opts: &EstimatorOptions,
) -> Result<NaiveEstimate, GameError> {
    require_compliant(agent)?;
    if opts.n_outer == 0 || opts.n_inner == 0 {
        return Err(GameError::NoReplications);
    }
    let k = agent.reward_belief.arms();
    let d = &agent.temporal_belief;
    if d.horizon() != agent.reward_belief.horizon() {
        return Err(GameError::HorizonMismatch { belief: d.horizon(), rewards: agent.reward_belief.horizon() });
    }
    let n = opts.n_outer * opts.n_inner;
    let sampler = d.sampler();
    let draws: Vec<(usize, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mu = agent.reward_belief.sample(&mut seed::rng(opts.seed, &[seed::stream::INSTANCE, i]));
            let tr = run_compliant(factory, &mu, seed::derive(opts.seed, &[i]))?;
            let tau = sampler.sample(&mut seed::rng(opts.seed, &[seed::stream::ARRIVAL, i])) - 1;
            let a = tr.recommended()[tau];
            let m = mu.row(tau);
            Ok((a, m.iter().map(|&mb| mb - m[a]).collect()))
        })
        .collect::<Result<_, GameError>>()?;

    let nf = n as f64;
    let mut hits = vec![0usize; k];
    for (a, _) in &draws {
        hits[*a] += 1;
    }
    let prob: Vec<f64> = hits.iter().map(|&h| h as f64 / nf).collect();
    let mut gain = vec![None; k * k];
    let mut ci_halfwidth = vec![None; k * k];
    for a in (0..k).filter(|&a| hits[a] > 1) {
        for b in (0..k).filter(|&b| b != a) {
            let ys: Vec<f64> = draws.iter().filter(|(x, _)| *x == a).map(|(_, diff)| diff[b]).collect();
            let r = ys.iter().sum::<f64>() / hits[a] as f64;
            // Delta method for the ratio of means Σy / Σ1[I_τ = a] over all n replications.
            let z_var = draws.iter().map(|(x, diff)| if *x == a { (diff[b] - r).powi(2) } else { 0.0 }).sum::<f64>()
                / (nf - 1.0);
            gain[a * k + b] = Some(r);
            ci_halfwidth[a * k + b] = Some(Z95 * (z_var / nf).sqrt() / prob[a]);
        }
    }
    Ok(NaiveEstimate { samples: n, prob, gain, ci_halfwidth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{PolicyConfig, PolicyKind};
    use crate::rewards::NoiseFamily;

    #[test]
    fn greedy_on_dominant_arm_loses_gap() {
        let mu = RewardInstance::stationary(&[0.8, 0.4, 0.4], 20, NoiseFamily::Deterministic).unwrap();
        let prior = RewardEnsemble::uniform(vec![mu]).unwrap();
        let d = TemporalBelief::uniform_window(1, 20, 20).unwrap();
        let agent = AgentSpec::compliant(prior, d);
        let mut opts = EstimatorOptions::new(4, 2, 1);
        opts.min_count = 1;
        let r = estimate_conditional_gain(&PolicyConfig::new(PolicyKind::Greedy, 3), &agent, &opts).unwrap();
        for b in 1..3 {
            assert!((r.pair(0, b).unwrap().estimate.unwrap() + 0.4).abs() < 1e-12);
        }
        assert!(r.pair(1, 0).unwrap().estimate.is_none());
        assert_eq!(r.recommendation.prob, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn check_statuses() {
        let mut r = ConditionalGainReport {
            arms: 2,
            transcripts: 10,
            recommendation: RecommendationProbs { prob: vec![0.5, 0.5], ci_halfwidth: vec![0.0; 2] },
            regret: RegretSummary { external_mean: 0.0, external_ci: 0.0, swap_mean: 0.0, swap_ci: 0.0 },
            pairs: vec![
                PairEstimate {
                    a: 0,
                    b: 1,
                    estimate: Some(0.2),
                    ci_halfwidth: Some(0.01),
                    count: 10,
                    bound: None,
                    status: None,
                },
                PairEstimate { a: 1, b: 0, estimate: None, ci_halfwidth: None, count: 0, bound: None, status: None },
            ],
        };
        r.check(0.15);
        assert_eq!(r.pairs[0].status, Some(CheckStatus::Fail));
        assert_eq!(r.pairs[1].status, Some(CheckStatus::Inconclusive));
        assert!(r.any_fail());
        r.check(0.19);
        assert_eq!(r.pairs[0].status, Some(CheckStatus::Pass));
        r.check(1.0);
        assert_eq!(r.pairs[0].status, Some(CheckStatus::NoGuarantee));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,b,estimate,ci,n,prob_a,bound,status\n1,2,0.20000000000000001,"));
        assert!(text.contains("\n2,1,,,0,0.5,1,inconclusive\n"));
    }
}
