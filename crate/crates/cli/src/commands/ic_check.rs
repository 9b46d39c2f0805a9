//! Estimated conditional deviation gains against the closed-form `ε`.

use arrival_ic::bounds::{epsilon_external, epsilon_swap, mixture_epsilon, BoundInputs, BoundReport, RegretKind};
use arrival_ic::game::{
    estimate_conditional_gains, CheckStatus, ConditionalGainReport, EstimatorOptions, DEFAULT_MIN_COUNT,
};
use arrival_ic::rewards::{verify_drift, verify_explorability, RewardEnsemble};
use arrival_ic::temporal::TemporalBelief;
use serde::Serialize;

use super::{seeded_policy, Verdict};
use crate::config::{Assumptions, Belief, ExperimentConfig, Param};
use crate::error::CliError;
use crate::output::{num, opt, OutDir};

/// `ε` for one belief, with the inputs that produced it.
#[derive(Serialize)]
struct Guarantee {
    alpha: f64,
    rho: f64,
    regret: f64,
    /// `None` when `α ≤ 0` and no bound applies.
    bound: Option<BoundReport>,
    epsilon: f64,
}

#[derive(Serialize)]
struct BeliefResult {
    belief: String,
    epsilon: f64,
    /// Present for a single belief.
    #[serde(skip_serializing_if = "Option::is_none")]
    guarantee: Option<Guarantee>,
    /// Present for a block decomposition: one guarantee per block.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    components: Vec<Guarantee>,
    report: ConditionalGainReport,
}

#[derive(Serialize)]
struct IcCheckOutput<'a> {
    scenario: &'a str,
    seed: u64,
    options: EstimatorOptions,
    rho: f64,
    beliefs: Vec<BeliefResult>,
}

fn guarantee(
    prior: &RewardEnsemble,
    d: &TemporalBelief,
    report: &ConditionalGainReport,
    a: &Assumptions,
    rho: f64,
) -> Result<Guarantee, CliError> {
    let alpha = match a.alpha {
        Param::Value(x) => x,
        Param::Verify(_) => {
            let r = verify_explorability(prior, d, a.gap, Some(a.verify_samples)).map_err(CliError::run)?;
            r.alpha_hat - r.ci_halfwidth
        }
    };
    let regret = match a.regret_kind {
        RegretKind::External => report.regret.external_upper(),
        RegretKind::Swap => report.regret.swap_upper(),
    };
    if alpha <= 0.0 {
        return Ok(Guarantee { alpha, rho, regret, bound: None, epsilon: 1.0 });
    }
    let inputs = BoundInputs {
        regret_kind: a.regret_kind,
        delta: a.delta,
        ..BoundInputs::for_belief(d, prior.arms(), alpha.min(1.0), a.gap, rho, regret)
    };
    let bound = match a.regret_kind {
        RegretKind::External => epsilon_external(&inputs),
        RegretKind::Swap => epsilon_swap(&inputs),
    }
    .map_err(|e| CliError::Config(format!("assumptions: {e}")))?;
    Ok(Guarantee { alpha, rho, regret, epsilon: bound.epsilon, bound: Some(bound) })
}

pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    let policy = seeded_policy(cfg)?;
    let prior = cfg.ensemble()?;
    let beliefs = cfg.beliefs()?;
    let a = cfg.assumptions()?;
    let rho = match a.rho {
        Param::Value(x) => x,
        Param::Verify(_) => verify_drift(&prior, a.verify_samples).map_err(CliError::run)?.rho_hat,
    };
    let reps = cfg.replications;
    let opts = EstimatorOptions {
        min_count: reps.min_count.unwrap_or(DEFAULT_MIN_COUNT),
        ..EstimatorOptions::new(reps.outer, reps.inner, cfg.seed)
    };

    // Every belief (and every block of a decomposition) shares one set of transcripts.
    let mut all: Vec<TemporalBelief> = Vec::new();
    for b in &beliefs {
        all.push(b.target().clone());
        if let Belief::Blocks { blocks, .. } = b {
            all.extend(blocks.iter().cloned());
        }
    }
    let mut reports = estimate_conditional_gains(&policy, &prior, &all, &opts).map_err(CliError::run)?.into_iter();

    let mut results = Vec::with_capacity(beliefs.len());
    for b in &beliefs {
        let mut report = reports.next().expect("one report per belief");
        let (g, components) = match b {
            Belief::Single { belief, .. } => (Some(guarantee(&prior, belief, &report, &a, rho)?), Vec::new()),
            Belief::Blocks { blocks, .. } => {
                let comps = blocks
                    .iter()
                    .map(|d| guarantee(&prior, d, &reports.next().expect("one report per block"), &a, rho))
                    .collect::<Result<Vec<_>, _>>()?;
                (None, comps)
            }
        };
        let epsilon = match &g {
            Some(g) => g.epsilon,
            None => {
                let bounds: Option<Vec<BoundReport>> = components.iter().map(|c| c.bound).collect();
                match bounds {
                    Some(bounds) => mixture_epsilon(&bounds).map_err(CliError::run)?,
                    None => 1.0,
                }
            }
        };
        report.check(epsilon);
        results.push(BeliefResult { belief: b.label().to_string(), epsilon, guarantee: g, components, report });
    }

    let mut csv = out.csv("ic_check.csv")?;
    csv.row(["belief", "a", "b", "estimate", "ci", "n", "prob_a", "bound", "status"])?;
    let mut counts = [0usize; 4];
    for r in &results {
        for p in &r.report.pairs {
            let status = p.status.unwrap_or(CheckStatus::Inconclusive);
            counts[status as usize] += 1;
            csv.row([
                r.belief.clone(),
                (p.a + 1).to_string(),
                (p.b + 1).to_string(),
                opt(p.estimate),
                opt(p.ci_halfwidth),
                p.count.to_string(),
                num(r.report.recommendation.prob[p.a]),
                opt(p.bound),
                status.as_str().to_string(),
            ])?;
        }
    }
    csv.finish()?;
    out.json(
        "ic_check.json",
        &IcCheckOutput { scenario: &cfg.scenario, seed: cfg.seed, options: opts, rho, beliefs: results },
    )?;

    let [pass, fail, inconclusive, none] = counts;
    println!("ic-check: pass {pass}, fail {fail}, inconclusive {inconclusive}, no-guarantee {none}");
    Ok(Verdict::from_failures(fail > 0))
}
