pub mod adaptive;
pub mod bounds;
pub mod ic_check;
pub mod oracle_check;
pub mod regret;

use arrival_ic::learners::PolicyConfig;
use arrival_ic::seed;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Whether every check in a command passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    CheckFailed,
}

impl Verdict {
    pub fn from_failures(any_fail: bool) -> Self {
        if any_fail {
            Verdict::CheckFailed
        } else {
            Verdict::Ok
        }
    }
}

/// The configured policy with its seed folded into the master seed.
pub fn seeded_policy(cfg: &ExperimentConfig) -> Result<PolicyConfig, CliError> {
    seeded(cfg, cfg.policy()?)
}

pub fn seeded(cfg: &ExperimentConfig, policy: PolicyConfig) -> Result<PolicyConfig, CliError> {
    policy.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let s = seed::derive(cfg.seed, &[seed::stream::POLICY, policy.seed]);
    Ok(policy.with_seed(s))
}
