//! Experiment configuration: one JSON document drives every subcommand.

use std::path::{Path, PathBuf};

use arrival_ic::bounds::{BoundInputs, RegretKind, WindowTuning};
use arrival_ic::learners::{PolicyConfig, RegretSource};
use arrival_ic::rewards::io::load_ensemble;
use arrival_ic::rewards::{DriftingGenerator, NoiseFamily, RewardEnsemble, RewardInstance};
use arrival_ic::temporal::TemporalBelief;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: String,
    #[serde(rename = "T", default)]
    pub horizon: Option<usize>,
    #[serde(rename = "K", default)]
    pub arms: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub beliefs: Vec<BeliefSpec>,
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
    #[serde(default)]
    pub assumptions: Option<Assumptions>,
    #[serde(default)]
    pub replications: Replications,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSpec>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    /// Directory relative paths resolve against; set by [`load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Replications {
    /// Instance draws (or strata units) for conditional-gain estimates.
    #[serde(default = "default_outer")]
    pub outer: usize,
    /// Transcripts per instance draw.
    #[serde(default = "default_inner")]
    pub inner: usize,
    /// Independent runs for the `regret` command.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub min_count: Option<usize>,
}

fn default_outer() -> usize {
    100
}

fn default_inner() -> usize {
    5
}

fn default_runs() -> usize {
    100
}

impl Default for Replications {
    fn default() -> Self {
        Self { outer: default_outer(), inner: default_inner(), runs: default_runs(), min_count: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnsembleSpec {
    /// `K` stationary instances; instance `i` has arm `i` at `high`, the rest at `low`.
    Leaders {
        high: f64,
        low: f64,
        #[serde(default)]
        noise: NoiseFamily,
    },
    Instances {
        instances: Vec<InstanceSpec>,
        #[serde(default)]
        noise: NoiseFamily,
    },
    Generative {
        rho: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        noise: NoiseFamily,
    },
    /// A manifest written by `save_ensemble`.
    Manifest { path: PathBuf },
}

/// Exactly one of `means` (stationary), `segments`, or `mu` (full `T × K`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    #[serde(default)]
    pub segments: Option<Vec<Segment>>,
    #[serde(default)]
    pub mu: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub len: usize,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BeliefSpec {
    Uniform {
        #[serde(default = "one")]
        start: usize,
        #[serde(rename = "L", default)]
        len: Option<usize>,
    },
    Point {
        round: usize,
    },
    Pmf {
        pmf: Vec<f64>,
    },
    /// `U_{1,T}` split into uniform blocks of length about `L`.
    Blocks {
        #[serde(rename = "L")]
        len: usize,
    },
}

fn one() -> usize {
    1
}

/// A belief resolved against the horizon.
pub enum Belief {
    Single { label: String, belief: TemporalBelief },
    Blocks { label: String, global: TemporalBelief, blocks: Vec<TemporalBelief> },
}

impl Belief {
    pub fn label(&self) -> &str {
        match self {
            Belief::Single { label, .. } | Belief::Blocks { label, .. } => label,
        }
    }

    /// The belief gains are measured under.
    pub fn target(&self) -> &TemporalBelief {
        match self {
            Belief::Single { belief, .. } => belief,
            Belief::Blocks { global, .. } => global,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Verify(Verify),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verify {
    Verify,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Assumptions {
    pub alpha: Param,
    #[serde(rename = "Delta")]
    pub gap: f64,
    pub rho: Param,
    #[serde(default)]
    pub regret_kind: RegretKind,
    /// Confidence level for the realized-to-pseudo slack; `None` uses the expectation form.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Draws used when verifying against a generative prior.
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
}

fn default_verify_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoundsSpec {
    #[serde(default)]
    pub point: Option<BoundInputs>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SweepSpec {
    #[serde(rename = "T")]
    pub horizons: Vec<usize>,
    /// Explicit window lengths.
    #[serde(rename = "L", default)]
    pub windows: Option<Vec<usize>>,
    /// Window lengths `⌈T^e⌉`.
    #[serde(rename = "L_exponent", default)]
    pub window_exponents: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// Drift levels `c / L`.
    #[serde(rename = "rho_times_L", default)]
    pub rho_times_window: Option<Vec<f64>>,
    #[serde(rename = "K")]
    pub arms: usize,
    pub alpha: f64,
    #[serde(rename = "Delta")]
    pub gap: f64,
    #[serde(default = "unit")]
    pub regret_constant: f64,
    #[serde(default)]
    pub tuning: WindowTuning,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct AdaptiveSpec {
    #[serde(default)]
    pub lengths: LengthGrid,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub source: RegretSource,
    #[serde(default)]
    pub baseline: Option<PolicyConfig>,
    #[serde(default)]
    pub svg: bool,
}

fn default_seeds() -> usize {
    50
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
pub struct LengthGrid {
    #[serde(default)]
    pub lo: Option<usize>,
    #[serde(default)]
    pub hi: Option<usize>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct OracleSpec {
    #[serde(default = "default_transcripts")]
    pub transcripts: usize,
    #[serde(rename = "max_T", default = "default_max_t")]
    pub max_horizon: usize,
    #[serde(rename = "max_K", default = "default_max_k")]
    pub max_arms: usize,
}

fn default_transcripts() -> usize {
    1000
}

fn default_max_t() -> usize {
    50
}

fn default_max_k() -> usize {
    4
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { transcripts: default_transcripts(), max_horizon: default_max_t(), max_arms: default_max_k() }
    }
}

/// Parses a config, collecting every key the schema does not know.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut unknown = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: Result<ExperimentConfig, _> = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()));
    match cfg {
        Ok(_) if !unknown.is_empty() => Err(CliError::UnknownKeys(unknown)),
        Ok(cfg) => Ok(cfg),
        Err(e) if !unknown.is_empty() => Err(CliError::Config(format!("{e}; unknown keys: {}", unknown.join(", ")))),
        Err(e) => Err(CliError::Config(e.to_string())),
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn horizon(&self) -> Result<usize, CliError> {
        self.horizon.ok_or_else(|| CliError::Config("missing key: T".into()))
    }

    pub fn arms(&self) -> Result<usize, CliError> {
        self.arms.ok_or_else(|| CliError::Config("missing key: K".into()))
    }

    pub fn policy(&self) -> Result<PolicyConfig, CliError> {
        let p = self.policy.clone().ok_or_else(|| CliError::Config("missing key: policy".into()))?;
        p.validate().map_err(config_err)?;
        if let Some(k) = self.arms.filter(|&k| k != p.arms) {
            return Err(CliError::Config(format!("policy.K = {} but K = {k}", p.arms)));
        }
        Ok(p)
    }

    pub fn ensemble(&self) -> Result<RewardEnsemble, CliError> {
        let spec = self.ensemble.as_ref().ok_or_else(|| CliError::Config("missing key: ensemble".into()))?;
        let prior = match spec {
            EnsembleSpec::Leaders { high, low, noise } => {
                let (t, k) = (self.horizon()?, self.arms()?);
                let instances = (0..k)
                    .map(|i| {
                        let mut m = vec![*low; k];
                        m[i] = *high;
                        RewardInstance::stationary(&m, t, *noise)
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(config_err)?;
                RewardEnsemble::uniform(instances).map_err(config_err)?
            }
            EnsembleSpec::Instances { instances, noise } => {
                let mut built = Vec::with_capacity(instances.len());
                let mut weights = Vec::with_capacity(instances.len());
                for (i, spec) in instances.iter().enumerate() {
                    built.push(self.instance(i, spec, *noise)?);
                    weights.push(spec.weight.unwrap_or(1.0));
                }
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                RewardEnsemble::finite(built, weights).map_err(config_err)?
            }
            EnsembleSpec::Generative { rho, seed, noise } => RewardEnsemble::generative(DriftingGenerator {
                horizon: self.horizon()?,
                arms: self.arms()?,
                rho: *rho,
                seed: *seed,
                noise: *noise,
            })
            .map_err(config_err)?,
            EnsembleSpec::Manifest { path } => load_ensemble(&self.base_dir.join(path)).map_err(config_err)?,
        };
        if let Some(t) = self.horizon.filter(|&t| t != prior.horizon()) {
            return Err(CliError::Config(format!("ensemble horizon {} but T = {t}", prior.horizon())));
        }
        if let Some(k) = self.arms.filter(|&k| k != prior.arms()) {
            return Err(CliError::Config(format!("ensemble has {} arms but K = {k}", prior.arms())));
        }
        Ok(prior)
    }

    fn instance(&self, index: usize, spec: &InstanceSpec, noise: NoiseFamily) -> Result<RewardInstance, CliError> {
        let bad = |what: &str| CliError::Config(format!("ensemble.instances[{index}]: {what}"));
        let set = [spec.means.is_some(), spec.segments.is_some(), spec.mu.is_some()];
        if set.iter().filter(|&&x| x).count() != 1 {
            return Err(bad("set exactly one of means, segments, mu"));
        }
        let built = if let Some(m) = &spec.means {
            RewardInstance::stationary(m, self.horizon()?, noise)
        } else if let Some(segs) = &spec.segments {
            let segs: Vec<(usize, Vec<f64>)> = segs.iter().map(|s| (s.len, s.means.clone())).collect();
            RewardInstance::piecewise(&segs, noise)
        } else {
            let rows = spec.mu.as_ref().expect("checked above");
            let k = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != k) {
                return Err(bad("ragged mu rows"));
            }
            RewardInstance::new(rows.len(), k, rows.concat(), noise)
        };
        built.map_err(|e| bad(&e.to_string()))
    }

    pub fn beliefs(&self) -> Result<Vec<Belief>, CliError> {
        let t = self.horizon()?;
        if self.beliefs.is_empty() {
            return Err(CliError::Config("beliefs must list at least one arrival belief".into()));
        }
        self.beliefs
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let b = match spec {
                    BeliefSpec::Uniform { start, len } => {
                        let len = len.unwrap_or(t + 1 - start.min(&t));
                        Belief::Single {
                            label: format!("uniform({start},{len})"),
                            belief: TemporalBelief::uniform_window(*start, len, t).map_err(config_err)?,
                        }
                    }
                    BeliefSpec::Point { round } => Belief::Single {
                        label: format!("point({round})"),
                        belief: TemporalBelief::point_mass(*round, t).map_err(config_err)?,
                    },
                    BeliefSpec::Pmf { pmf } => {
                        if pmf.len() != t {
                            return Err(CliError::Config(format!(
                                "beliefs[{i}].pmf has {} entries, T = {t}",
                                pmf.len()
                            )));
                        }
                        Belief::Single {
                            label: format!("pmf#{}", i + 1),
                            belief: TemporalBelief::from_pmf(pmf.clone()).map_err(config_err)?,
                        }
                    }
                    BeliefSpec::Blocks { len } => {
                        let (blocks, _) = TemporalBelief::decompose_uniform(t, *len).map_err(config_err)?;
                        Belief::Blocks {
                            label: format!("blocks({len})"),
                            global: TemporalBelief::uniform_window(1, t, t).map_err(config_err)?,
                            blocks,
                        }
                    }
                };
                Ok(b)
            })
            .collect()
    }

    pub fn assumptions(&self) -> Result<Assumptions, CliError> {
        self.assumptions.ok_or_else(|| CliError::Config("missing key: assumptions".into()))
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        match (flag, &self.out) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.base_dir.join(p),
            (None, None) => PathBuf::from("out"),
        }
    }
}
