use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environments::EnvSpec;
use crate::error::{Error, Result};
use crate::gp::validate_noise;
use crate::kernels::{Context, KernelSpec};
use crate::oracles::{Oracle, OracleKind};
use crate::policy::{Algorithm, ModelSettings, PolicyConfig};

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "GPCB_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_num_inducing")]
    pub num_inducing: usize,
    #[serde(default = "default_true")]
    pub reseed_each_round: bool,
}

fn default_num_inducing() -> usize {
    50
}

fn default_true() -> bool {
    true
}

impl Default for SparseConfig {
    fn default() -> Self {
        SparseConfig {
            enabled: false,
            num_inducing: default_num_inducing(),
            reseed_each_round: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    #[serde(default)]
    pub sparse: SparseConfig,
}

fn default_noise_variance() -> f64 {
    0.01
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            noise_variance: default_noise_variance(),
            sparse: SparseConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub kind: OracleKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Fill the `wall_ms` column. Timings differ between runs, so traces
    /// are only byte-reproducible with this off.
    #[serde(default)]
    pub record_wall_time: bool,
}

/// `[diagnostics]` block for `diagnostics gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Ground set of contexts.
    pub ground_set: Vec<Vec<f64>>,
    /// Horizon `T`.
    pub rounds: usize,
    /// Budget `K`.
    pub budget: usize,
    /// Per-round indices into `ground_set`; every context is available in
    /// every round when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability: Option<Vec<Vec<usize>>>,
}

impl DiagnosticsConfig {
    pub fn available_sets(&self) -> Result<Vec<Vec<Context>>> {
        if self.ground_set.is_empty() {
            return Err(Error::config("diagnostics.ground_set", "must not be empty"));
        }
        if self.rounds == 0 {
            return Err(Error::config("diagnostics.rounds", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::config("diagnostics.budget", "must be at least 1"));
        }
        let ground: Vec<Context> = self.ground_set.iter().cloned().map(Context::new).collect();
        match &self.availability {
            None => Ok(vec![ground; self.rounds]),
            Some(av) => {
                if av.len() != self.rounds {
                    return Err(Error::config(
                        "diagnostics.availability",
                        format!("has {} rounds but diagnostics.rounds = {}", av.len(), self.rounds),
                    ));
                }
                av.iter()
                    .map(|ids| {
                        if ids.is_empty() {
                            return Err(Error::config("diagnostics.availability", "every round needs a context"));
                        }
                        ids.iter()
                            .map(|&i| {
                                ground.get(i).cloned().ok_or_else(|| {
                                    Error::config("diagnostics.availability", format!("index {i} is out of range"))
                                })
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub gp: GpConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub env: EnvSpec,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(toml_error_path(&e), e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        self.kernel.validate()?;
        validate_noise(self.gp.noise_variance)?;
        self.policy.validate()?;
        self.env.validate(self.policy.max_arms)?;
        let sparse = self.gp.sparse.enabled || self.policy.algorithm == Algorithm::Soclok;
        if sparse && self.gp.sparse.num_inducing == 0 {
            return Err(Error::config("gp.sparse.num_inducing", "must be at least 1"));
        }
        if self.env.budget != self.policy.budget {
            return Err(Error::config(
                "env.budget",
                format!("must equal policy.budget = {}", self.policy.budget),
            ));
        }
        Ok(())
    }

    /// Replaces `output_dir` with `$GPCB_OUTPUT_DIR` when that is set.
    pub fn apply_env_overrides(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn model_settings(&self) -> ModelSettings {
        ModelSettings {
            kernel: self.kernel,
            noise_variance: self.gp.noise_variance,
            sparse: self.gp.sparse.enabled,
            num_inducing: self.gp.sparse.num_inducing,
            reseed_each_round: self.gp.sparse.reseed_each_round,
        }
    }

    pub fn oracle(&self) -> Oracle {
        Oracle::new(self.oracle.kind)
    }

    /// Approximation factor used in the regret.
    pub fn alpha(&self) -> f64 {
        match self.oracle.kind {
            OracleKind::ExhaustiveCoverage => 1.0,
            _ => self.env.alpha(),
        }
    }

    /// Effective algorithm name used in file names.
    pub fn algorithm_name(&self) -> &'static str {
        match self.policy.algorithm {
            Algorithm::Oclok if self.gp.sparse.enabled => Algorithm::Soclok.name(),
            a => a.name(),
        }
    }
}

/// The parts of a config file `diagnostics gamma` reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFile {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub gp: GpConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl GammaFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GammaFile = toml::from_str(text).map_err(|e| Error::config(toml_error_path(&e), e.message()))?;
        cfg.kernel.validate()?;
        validate_noise(cfg.gp.noise_variance)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn apply_env_overrides(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }
}

/// Best-effort dotted key for a deserialization error: the name in
/// backquotes when serde reports an unknown or missing field.
fn toml_error_path(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "<config>".to_string()
}
