use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{benchmark_corruption, AblationSpec};
use crate::featuremaps::CorruptionConfig;
use crate::inference::{CandidatePolicy, EnergyConfig};
use crate::losses::LossConfig;
use crate::scene::GeneratorConfig;

use super::Failure;

/// Parameters shared by all subcommands. Read from `--config` (JSON), then
/// overridden field by field by command-line flags.
///
/// The master seed replaces `generator.seed`; the corruption seed is mixed
/// with it per scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads. Never affects output bytes.
    pub jobs: usize,
    pub generator: GeneratorConfig,
    /// Defaults to the benchmark corruption (blur 2 px, 15% holes, erosion
    /// 2 px, 10° angle jitter).
    pub corruption: CorruptionConfig,
    pub energy: EnergyConfig,
    pub candidate_policy: CandidatePolicy,
    pub loss: LossConfig,
    /// Custom ablation rows; when empty `ablate` uses its `--suite`.
    pub specs: Vec<AblationSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            generator: GeneratorConfig::default(),
            corruption: benchmark_corruption(),
            energy: EnergyConfig::default(),
            candidate_policy: CandidatePolicy::default(),
            loss: LossConfig::default(),
            specs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_json(&text, p)
            }
        }
    }

    /// Hex SHA-256 of the canonical JSON form, with `jobs` cleared.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.jobs = 0;
        let json = serde_json::to_string(&c).expect("config serialization cannot fail");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let usage = |e: &dyn std::fmt::Display| Failure::Usage(format!("invalid config: {e}"));
        if self.jobs == 0 {
            return Err(Failure::Usage("jobs must be at least 1".into()));
        }
        self.generator.validate().map_err(|e| usage(&e))?;
        self.corruption.validate().map_err(|e| usage(&e))?;
        self.energy.validate().map_err(|e| usage(&e))?;
        if !(self.loss.lambda_align >= 0.0 && self.loss.lambda_align.is_finite()) {
            return Err(Failure::Usage("loss.lambda_align must be finite and non-negative".into()));
        }
        Ok(())
    }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        Failure::Usage(format!(
            "{}: field `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })
}

pub fn load_corruption(path: &Path) -> Result<CorruptionConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read corruption config {}: {e}", path.display())))?;
    parse_json(&text, path)
}
