//! Interval-regret profile of the configured policy, optionally against a baseline.

use arrival_ic::learners::{adaptive_regret_profile, log_grid, AdaptiveProfile, PolicyConfig, ProfileOptions};
use arrival_ic::rewards::{RewardEnsemble, RewardInstance};
use serde::Serialize;

use super::{seeded, seeded_policy, Verdict};
use crate::config::{AdaptiveSpec, ExperimentConfig, LengthGrid};
use crate::error::CliError;
use crate::output::{num, opt, OutDir};
use crate::svg::{Chart, Series};

const DEFAULT_LO: usize = 10;
const DEFAULT_POINTS: usize = 20;

#[derive(Serialize)]
struct Learner {
    policy: PolicyConfig,
    profile: AdaptiveProfile,
    max_family_slope: Option<f64>,
}

#[derive(Serialize)]
struct AdaptiveOutput<'a> {
    scenario: &'a str,
    seed: u64,
    lengths: LengthGrid,
    n_seeds: usize,
    policy: Learner,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Learner>,
}

fn adversary(prior: RewardEnsemble) -> Result<RewardInstance, CliError> {
    match prior {
        RewardEnsemble::Finite { mut instances, .. } if instances.len() == 1 => {
            Ok(std::sync::Arc::unwrap_or_clone(instances.remove(0)))
        }
        _ => Err(CliError::Config("adaptive needs an ensemble with exactly one instance".into())),
    }
}

fn profile(policy: PolicyConfig, mu: &RewardInstance, opts: &ProfileOptions) -> Result<Learner, CliError> {
    let profile = adaptive_regret_profile(&policy, mu, opts).map_err(CliError::run)?;
    Ok(Learner { max_family_slope: profile.max_family_slope(), policy, profile })
}

pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    let spec: AdaptiveSpec = cfg.adaptive.clone().ok_or_else(|| CliError::Config("missing key: adaptive".into()))?;
    let mu = adversary(cfg.ensemble()?)?;
    let t = mu.horizon();
    let grid = LengthGrid {
        lo: Some(spec.lengths.lo.unwrap_or(DEFAULT_LO.min(t))),
        hi: Some(spec.lengths.hi.unwrap_or(t).min(t)),
        points: Some(spec.lengths.points.unwrap_or(DEFAULT_POINTS)),
    };
    let (lo, hi, points) = (grid.lo.unwrap_or(1), grid.hi.unwrap_or(t), grid.points.unwrap_or(DEFAULT_POINTS));
    if lo == 0 || lo > hi || points == 0 {
        return Err(CliError::Config(format!(
            "adaptive.lengths: need 1 <= lo <= hi and points > 0 (lo {lo}, hi {hi})"
        )));
    }
    if spec.n_seeds == 0 {
        return Err(CliError::Config("adaptive.n_seeds must be positive".into()));
    }
    let opts = ProfileOptions {
        lengths: log_grid(lo, hi, points),
        n_seeds: spec.n_seeds,
        seed: cfg.seed,
        source: spec.source,
    };

    let main = profile(seeded_policy(cfg)?, &mu, &opts)?;
    let baseline = spec.baseline.clone().map(|b| seeded(cfg, b).and_then(|b| profile(b, &mu, &opts))).transpose()?;

    let mut csv = out.csv("adaptive.csv")?;
    let mut header = vec!["length", "mean_max_regret", "ci"];
    if baseline.is_some() {
        header.extend(["baseline_mean_max_regret", "baseline_ci"]);
    }
    csv.row(header)?;
    for (i, len) in main.profile.lengths.iter().enumerate() {
        let mut row = vec![len.to_string(), num(main.profile.mean_max_regret[i]), num(main.profile.ci_halfwidth[i])];
        if let Some(b) = &baseline {
            row.extend([num(b.profile.mean_max_regret[i]), num(b.profile.ci_halfwidth[i])]);
        }
        csv.row(row)?;
    }
    csv.finish()?;

    let mut fam = out.csv("adaptive_families.csv")?;
    fam.row(["learner", "start", "length", "mean_regret", "slope"])?;
    for (name, l) in std::iter::once(("policy", &main)).chain(baseline.as_ref().map(|b| ("baseline", b))) {
        for f in &l.profile.switch_families {
            for (len, r) in f.lengths.iter().zip(&f.mean_regret) {
                fam.row([name.to_string(), f.start.to_string(), len.to_string(), num(*r), opt(f.slope)])?;
            }
        }
    }
    fam.finish()?;

    if spec.svg {
        let mut series = vec![Series {
            name: format!("{:?}", main.policy.kind).to_lowercase(),
            points: main
                .profile
                .lengths
                .iter()
                .map(|&l| l as f64)
                .zip(main.profile.mean_max_regret.iter().copied())
                .collect(),
        }];
        if let Some(b) = &baseline {
            series.push(Series {
                name: format!("baseline {:?}", b.policy.kind).to_lowercase(),
                points: b
                    .profile
                    .lengths
                    .iter()
                    .map(|&l| l as f64)
                    .zip(b.profile.mean_max_regret.iter().copied())
                    .collect(),
            });
        }
        let chart = Chart {
            title: "max interval regret against interval length",
            x_label: "interval length",
            y_label: "max interval regret",
            log_x: true,
            log_y: true,
        };
        out.text("adaptive.svg", &chart.render(&series))?;
    }

    println!("adaptive: slope {}", opt(main.profile.slope));
    if let Some(b) = &baseline {
        println!("adaptive: baseline slope {}, max family slope {}", opt(b.profile.slope), opt(b.max_family_slope));
    }
    out.json(
        "adaptive.json",
        &AdaptiveOutput {
            scenario: &cfg.scenario,
            seed: cfg.seed,
            lengths: grid,
            n_seeds: spec.n_seeds,
            policy: main,
            baseline,
        },
    )?;
    Ok(Verdict::Ok)
}
