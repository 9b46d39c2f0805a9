//! Instance CSV files and ensemble manifests.
//!
//! An instance CSV has `T` rows and `K` columns of means, no header, each
//! value written with 17 significant digits. A manifest is JSON:
//!
//! ```json
//! {"kind": "finite", "noise": {"family": "bernoulli"},
//!  "instances": [{"file": "mu0.csv", "weight": 0.5}, {"file": "mu1.csv", "weight": 0.5}]}
//! {"kind": "generative", "T": 1000, "K": 3, "rho": 0.001, "seed": 7}
//! ```
//!
//! Instance paths are resolved relative to the manifest's directory.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DriftingGenerator, NoiseFamily, RewardEnsemble, RewardError, RewardInstance};
use crate::numeric::fmt_g17;

pub fn write_instance_csv<W: Write>(mu: &RewardInstance, writer: W) -> Result<(), RewardError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for t in 0..mu.horizon() {
        w.write_record(mu.row(t).iter().map(|&x| fmt_g17(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_instance_csv<R: Read>(reader: R, noise: NoiseFamily) -> Result<RewardInstance, RewardError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut means = Vec::new();
    let mut arms = None;
    let mut rows = 0;
    for record in r.records() {
        let record = record?;
        let k = *arms.get_or_insert(record.len());
        if record.len() != k {
            return Err(RewardError::ShapeMismatch { expected: k, got: record.len() });
        }
        for field in record.iter() {
            means.push(field.parse::<f64>().map_err(|e| RewardError::Parse(format!("{field:?}: {e}")))?);
        }
        rows += 1;
    }
    RewardInstance::new(rows, arms.unwrap_or(0), means, noise)
}

pub fn save_instance(mu: &RewardInstance, path: &Path) -> Result<(), RewardError> {
    write_instance_csv(mu, std::fs::File::create(path)?)
}

pub fn load_instance(path: &Path, noise: NoiseFamily) -> Result<RewardInstance, RewardError> {
    read_instance_csv(std::fs::File::open(path)?, noise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Manifest {
    Finite {
        #[serde(default)]
        noise: NoiseFamily,
        instances: Vec<ManifestEntry>,
    },
    Generative {
        #[serde(rename = "T")]
        horizon: usize,
        #[serde(rename = "K")]
        arms: usize,
        rho: f64,
        seed: u64,
        #[serde(default)]
        noise: NoiseFamily,
    },
}

impl Manifest {
    /// Loads the ensemble, resolving instance files against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<RewardEnsemble, RewardError> {
        match self {
            Manifest::Finite { noise, instances } => {
                let mut mus = Vec::with_capacity(instances.len());
                let mut weights = Vec::with_capacity(instances.len());
                for e in instances {
                    mus.push(load_instance(&base_dir.join(&e.file), *noise)?);
                    weights.push(e.weight);
                }
                RewardEnsemble::finite(mus, weights)
            }
            &Manifest::Generative { horizon, arms, rho, seed, noise } => {
                RewardEnsemble::generative(DriftingGenerator { horizon, arms, rho, seed, noise })
            }
        }
    }
}

/// Writes `prior` as `manifest.json` plus one `mu{i}.csv` per finite member.
///
/// Finite ensembles are written with the first member's noise family.
pub fn save_ensemble(prior: &RewardEnsemble, dir: &Path) -> Result<PathBuf, RewardError> {
    std::fs::create_dir_all(dir)?;
    let manifest = match prior {
        RewardEnsemble::Finite { instances, weights } => {
            let mut entries = Vec::with_capacity(instances.len());
            for (i, (mu, &weight)) in instances.iter().zip(weights).enumerate() {
                let file = PathBuf::from(format!("mu{i}.csv"));
                save_instance(mu, &dir.join(&file))?;
                entries.push(ManifestEntry { file, weight });
            }
            Manifest::Finite { noise: instances[0].noise(), instances: entries }
        }
        RewardEnsemble::Generative(g) => {
            Manifest::Generative { horizon: g.horizon, arms: g.arms, rho: g.rho, seed: g.seed, noise: g.noise }
        }
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn load_ensemble(manifest_path: &Path) -> Result<RewardEnsemble, RewardError> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    manifest.resolve(manifest_path.parent().unwrap_or(Path::new(".")))
}
