//! Fast computations against exhaustive oracles.
//!
//! Swap regret is compared with the `K^K` enumeration on random transcripts.
//! When the policy is tabular (`greedy` or `constant`) and the ensemble is
//! finite, the conditional-gain estimator is also compared with full
//! enumeration of the game tree for each configured belief.

use arrival_ic::game::{estimate_conditional_gains, exhaustive_conditional_gains, EstimatorOptions};
use arrival_ic::learners::{PolicyKind, TabularPolicy};
use arrival_ic::regret::{weighted_swap_regret, weighted_swap_regret_oracle, Transcript};
use arrival_ic::rewards::{NoiseFamily, RewardEnsemble};
use arrival_ic::seed;
use arrival_ic::temporal::TemporalBelief;
use rand::Rng;
use rayon::prelude::*;

use super::{seeded_policy, Verdict};
use crate::config::{ExperimentConfig, OracleSpec};
use crate::error::CliError;
use crate::output::{num, opt, OutDir};

const TOL: f64 = 1e-12;
/// Beyond this the `K^K` enumeration is impractical.
const MAX_ORACLE_ARMS: usize = 6;
/// Enumeration grows as `(2K)^T`.
const MAX_GAME_HORIZON: usize = 10;

fn random_belief<R: Rng>(rng: &mut R, horizon: usize) -> Result<TemporalBelief, CliError> {
    let lo = rng.random_range(0..horizon);
    let hi = rng.random_range(lo..horizon);
    let mut pmf = vec![0.0; horizon];
    for p in &mut pmf[lo..=hi] {
        if rng.random::<f64>() < 0.8 {
            *p = rng.random::<f64>();
        }
    }
    pmf[lo] = pmf[lo].max(0.1);
    pmf[hi] = pmf[hi].max(0.1);
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    TemporalBelief::from_pmf(pmf).map_err(CliError::run)
}

fn random_transcript<R: Rng>(rng: &mut R, horizon: usize, arms: usize) -> Result<Transcript, CliError> {
    let recs: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..arms)).collect();
    let rows: Vec<Vec<f64>> = (0..horizon).map(|_| (0..arms).map(|_| rng.random()).collect()).collect();
    Transcript::compliant(arms, &recs, &rows).map_err(CliError::run)
}

struct SwapCase {
    horizon: usize,
    arms: usize,
    fast: f64,
    oracle: f64,
}

fn swap_cases(master: u64, spec: &OracleSpec) -> Result<Vec<SwapCase>, CliError> {
    if spec.max_horizon == 0 || spec.max_arms == 0 || spec.max_arms > MAX_ORACLE_ARMS {
        return Err(CliError::Config(format!("oracle: need max_T >= 1 and 1 <= max_K <= {MAX_ORACLE_ARMS}")));
    }
    (0..spec.transcripts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(master, &[seed::stream::ENVIRONMENT, i]);
            let horizon = rng.random_range(1..=spec.max_horizon);
            let arms = rng.random_range(1..=spec.max_arms);
            let tr = random_transcript(&mut rng, horizon, arms)?;
            let d = random_belief(&mut rng, horizon)?;
            let fast = weighted_swap_regret(&tr, &d).map_err(CliError::run)?;
            let oracle = weighted_swap_regret_oracle(&tr, &d).map_err(CliError::run)?;
            Ok(SwapCase { horizon, arms, fast, oracle })
        })
        .collect()
}

/// Estimator against the game-tree enumeration; returns the number of mismatches.
fn game_cases(cfg: &ExperimentConfig, out: &OutDir) -> Result<Option<usize>, CliError> {
    let Some(policy) = cfg.policy.as_ref() else { return Ok(None) };
    if !matches!(policy.kind, PolicyKind::Greedy | PolicyKind::Constant) || cfg.ensemble.is_none() {
        return Ok(None);
    }
    let policy = seeded_policy(cfg)?;
    let prior = cfg.ensemble()?;
    if !matches!(prior, RewardEnsemble::Finite { .. }) || prior.horizon() > MAX_GAME_HORIZON {
        return Err(CliError::Config(format!(
            "oracle: game enumeration needs a finite ensemble with T <= {MAX_GAME_HORIZON}"
        )));
    }
    let beliefs = cfg.beliefs()?;
    let rng = seed::rng(policy.seed, &[]);
    let tab = match policy.kind {
        PolicyKind::Greedy => TabularPolicy::greedy(policy.arms, rng),
        _ => TabularPolicy::constant(policy.arms, policy.arm.unwrap_or(0), rng),
    }
    .map_err(CliError::run)?;
    let targets: Vec<TemporalBelief> = beliefs.iter().map(|b| b.target().clone()).collect();
    let reps = cfg.replications;
    let opts = EstimatorOptions { min_count: 1, ..EstimatorOptions::new(reps.outer, reps.inner, cfg.seed) };
    let reports = estimate_conditional_gains(&policy, &prior, &targets, &opts).map_err(CliError::run)?;
    let exact_noise = matches!(&prior, RewardEnsemble::Finite { instances, .. }
        if instances.iter().all(|m| m.noise() == NoiseFamily::Deterministic));

    let mut csv = out.csv("oracle_game.csv")?;
    csv.row(["belief", "a", "b", "estimate", "ci", "exact", "abs_diff", "status"])?;
    let mut mismatches = 0;
    for ((b, d), r) in beliefs.iter().zip(&targets).zip(&reports) {
        let exact = exhaustive_conditional_gains(&tab, &prior, d).map_err(CliError::run)?;
        let k = r.arms;
        for p in &r.pairs {
            let x = exact.gain[p.a * k + p.b];
            let tol = if exact_noise { TOL } else { TOL + 2.0 * p.ci_halfwidth.unwrap_or(0.0) };
            let (diff, ok) = match (p.estimate, x) {
                (Some(e), Some(x)) => ((e - x).abs(), (e - x).abs() <= tol),
                (None, None) => (0.0, true),
                _ => (f64::NAN, false),
            };
            mismatches += usize::from(!ok);
            csv.row([
                b.label().to_string(),
                (p.a + 1).to_string(),
                (p.b + 1).to_string(),
                opt(p.estimate),
                opt(p.ci_halfwidth),
                opt(x),
                num(diff),
                if ok { "pass" } else { "fail" }.to_string(),
            ])?;
        }
    }
    csv.finish()?;
    Ok(Some(mismatches))
}

pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    let spec = cfg.oracle.unwrap_or_default();
    let cases = swap_cases(cfg.seed, &spec)?;
    let mut csv = out.csv("oracle_swap.csv")?;
    csv.row(["case", "T", "K", "fast", "oracle", "abs_diff", "status"])?;
    let mut mismatches = 0;
    for (i, c) in cases.iter().enumerate() {
        let diff = (c.fast - c.oracle).abs();
        let ok = diff <= TOL;
        mismatches += usize::from(!ok);
        csv.row([
            (i + 1).to_string(),
            c.horizon.to_string(),
            c.arms.to_string(),
            num(c.fast),
            num(c.oracle),
            num(diff),
            if ok { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    csv.finish()?;
    println!("oracle-check: swap regret {} cases, {mismatches} mismatches", cases.len());
    let game = game_cases(cfg, out)?;
    if let Some(g) = game {
        println!("oracle-check: game enumeration {g} mismatches");
    }
    Ok(Verdict::from_failures(mismatches + game.unwrap_or(0) > 0))
}
