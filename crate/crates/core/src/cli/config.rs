use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bench::{Preset, TimingModel};
use crate::classifier::{
    BackendKind, ClassTaxonomy, DelayStrategy, Normalization, SubtypeDef, DEFAULT_BATCH_SIZE,
};
use crate::pipeline::DEFAULT_RETRY_LIMIT;

fn default_workspace() -> PathBuf {
    PathBuf::from(".")
}
fn default_backend() -> BackendKind {
    BackendKind::Reference
}
fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}
fn default_retry_limit() -> u32 {
    DEFAULT_RETRY_LIMIT
}
fn default_seed() -> u64 {
    42
}
fn default_time_scale() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyConfig {
    pub majors: Vec<String>,
    pub subtypes: Vec<SubtypeDef>,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        let t = ClassTaxonomy::default();
        Self {
            majors: t.majors().to_vec(),
            subtypes: t.subtype_defs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfig {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        let n = Normalization::default();
        Self {
            mean: n.mean,
            std: n.std,
        }
    }
}

/// Declarative run configuration. Every key is optional.
///
/// ```toml
/// workspace = "."            # holds input/, processed/, failed/, logs/
/// backend = "reference"      # or "simulated"
/// batch_size = 32
/// retry_limit = 1
/// salt = ""
/// seed = 42
/// preset = "table1-exact"    # or "overhead-78"
/// time_scale = 0.01          # wall seconds per model second
/// delay = "sleep"            # or "busy-wait"
///
/// [timing]                   # overrides `preset` when present
/// load_s = 0.4
/// # ...all six TimingModel fields
///
/// [taxonomy]
/// majors = ["Healthy", "Benign", "OPMD", "OralCancer"]
/// subtypes = [{ label = "Healthy-1", major = "Healthy" }, ...]
///
/// [normalization]
/// mean = [0.485, 0.456, 0.406]
/// std = [0.229, 0.224, 0.225]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_workspace")]
    pub workspace: PathBuf,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default)]
    pub salt: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub timing: Option<TimingModel>,
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    #[serde(default)]
    pub delay: DelayStrategy,
    #[serde(default)]
    pub taxonomy: TaxonomyConfig,
    #[serde(default)]
    pub normalization: NormalizationConfig,
}

impl Default for Config {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn taxonomy(&self) -> Result<ClassTaxonomy, CliError> {
        Ok(ClassTaxonomy::new(
            self.taxonomy.majors.clone(),
            self.taxonomy.subtypes.clone(),
        )?)
    }

    pub fn normalization(&self) -> Result<Normalization, CliError> {
        let n = Normalization {
            mean: self.normalization.mean,
            std: self.normalization.std,
        };
        n.validate()?;
        Ok(n)
    }

    /// Explicit `[timing]` if given, else the preset's model.
    pub fn timing_model(&self) -> Result<TimingModel, CliError> {
        let tm = self.timing.unwrap_or_else(|| self.preset.timing_model());
        tm.validate()?;
        Ok(tm)
    }

    pub fn timing_source(&self) -> String {
        match self.timing {
            Some(_) => "explicit [timing]".to_string(),
            None => format!("preset {}", self.preset),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.retry_limit, 1);
        assert_eq!(c.backend, BackendKind::Reference);
        assert_eq!(c.preset, Preset::FolderExact);
        assert_eq!(c.taxonomy().unwrap().len(), 16);
        assert_eq!(c, Config::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("batchsize = 4").is_err());
        assert!(Config::parse("[normalization]\nmean = [0,0,0]\nstd = [1,1,1]\nextra = 1").is_err());
    }

    #[test]
    fn explicit_timing_overrides_preset() {
        let c = Config::parse(
            "preset = \"overhead-78\"\n[timing]\nload_s = 1\nrpa_overhead_uipath_s = 2\n\
             rpa_overhead_aa_s = 2\ncall_overhead_s = 0\nbatch_overhead_s = 0\ninfer_s = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.timing_model().unwrap().load_s, 1.0);
        assert!(Config::parse("preset = \"fastest\"").is_err());
    }

    #[test]
    fn bad_normalization_is_rejected() {
        let c = Config::parse("[normalization]\nmean = [0,0,0]\nstd = [1,0,1]").unwrap();
        assert!(c.normalization().is_err());
    }
}
