//! Weighted regrets of compliant runs, one row per run and belief.

use arrival_ic::game::run_compliant;
use arrival_ic::numeric::mean_ci;
use arrival_ic::regret::{
    weighted_external_regret, weighted_pseudo_regret, weighted_pseudo_swap_regret, weighted_swap_regret,
    weighted_swap_regret_oracle, Basis,
};
use arrival_ic::seed;
use rayon::prelude::*;
use serde::Serialize;

use super::{seeded_policy, Verdict};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, opt, OutDir};

/// Largest `K` for which the `K^K` swap oracle column is emitted.
pub const ORACLE_MAX_ARMS: usize = 4;
const ORACLE_TOL: f64 = 1e-12;

struct Row {
    external: f64,
    swap: f64,
    swap_oracle: Option<f64>,
    pseudo_external: f64,
    pseudo_swap: f64,
}

type Column = (&'static str, fn(&Row) -> f64);

#[derive(Serialize)]
struct MetricSummary {
    belief: String,
    metric: &'static str,
    mean: f64,
    ci: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    runs: usize,
    oracle_mismatches: usize,
    metrics: Vec<MetricSummary>,
}

pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    let policy = seeded_policy(cfg)?;
    let prior = cfg.ensemble()?;
    let beliefs = cfg.beliefs()?;
    let runs = cfg.replications.runs;
    if runs == 0 {
        return Err(CliError::Config("replications.runs must be positive".into()));
    }
    let with_oracle = prior.arms() <= ORACLE_MAX_ARMS;

    let table: Vec<Vec<Row>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mu = prior.sample(&mut seed::rng(cfg.seed, &[seed::stream::INSTANCE, i]));
            let tr = run_compliant(&policy, &mu, seed::derive(cfg.seed, &[seed::stream::ENVIRONMENT, i]))
                .map_err(CliError::run)?;
            beliefs
                .iter()
                .map(|b| {
                    let d = b.target();
                    Ok(Row {
                        external: weighted_external_regret(&tr, d, Basis::Recommended).map_err(CliError::run)?,
                        swap: weighted_swap_regret(&tr, d).map_err(CliError::run)?,
                        swap_oracle: if with_oracle {
                            Some(weighted_swap_regret_oracle(&tr, d).map_err(CliError::run)?)
                        } else {
                            None
                        },
                        pseudo_external: weighted_pseudo_regret(&tr, d, &mu).map_err(CliError::run)?,
                        pseudo_swap: weighted_pseudo_swap_regret(&tr, d, &mu).map_err(CliError::run)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_, CliError>>()?;

    let mut csv = out.csv("regret.csv")?;
    csv.row(["run", "belief", "external", "swap", "swap_oracle", "pseudo_external", "pseudo_swap"])?;
    let mut mismatches = 0;
    for (i, rows) in table.iter().enumerate() {
        for (b, r) in beliefs.iter().zip(rows) {
            if r.swap_oracle.is_some_and(|o| (o - r.swap).abs() > ORACLE_TOL) {
                mismatches += 1;
            }
            csv.row([
                (i + 1).to_string(),
                b.label().to_string(),
                num(r.external),
                num(r.swap),
                opt(r.swap_oracle),
                num(r.pseudo_external),
                num(r.pseudo_swap),
            ])?;
        }
    }
    csv.finish()?;

    let mut metrics = Vec::new();
    let mut sum_csv = out.csv("regret_summary.csv")?;
    sum_csv.row(["belief", "metric", "mean", "ci"])?;
    for (j, b) in beliefs.iter().enumerate() {
        let columns: [Column; 4] = [
            ("external", |r| r.external),
            ("swap", |r| r.swap),
            ("pseudo_external", |r| r.pseudo_external),
            ("pseudo_swap", |r| r.pseudo_swap),
        ];
        for (metric, get) in columns {
            let xs: Vec<f64> = table.iter().map(|rows| get(&rows[j])).collect();
            let (mean, ci) = mean_ci(&xs);
            sum_csv.row([b.label().to_string(), metric.to_string(), num(mean), num(ci)])?;
            metrics.push(MetricSummary { belief: b.label().to_string(), metric, mean, ci });
        }
    }
    sum_csv.finish()?;
    out.json(
        "regret_summary.json",
        &Summary { scenario: &cfg.scenario, seed: cfg.seed, runs, oracle_mismatches: mismatches, metrics },
    )?;

    println!("regret: {runs} runs x {} beliefs written to {}", beliefs.len(), out.root().display());
    if with_oracle {
        println!("regret: swap oracle mismatches {mismatches}");
    }
    Ok(Verdict::from_failures(mismatches > 0))
}
