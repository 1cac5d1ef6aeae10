//! Run configuration documents and their canonical hash.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::synth::SynthSpec;
use crate::trainer::TrainConfig;

/// 17 significant digits; enough for any `f64` to round-trip through text.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Compact JSON with object keys sorted recursively.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&canonicalize(serde_json::to_value(value)?))?)
}

/// Hex SHA-256 of [`canonical_json`]; stable under key reordering.
pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(canonical_json(value)?.as_bytes())))
}

/// Neighbourhood settings for building fuzzy labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzySettings {
    pub radius: usize,
    pub rho2: f64,
}

impl Default for FuzzySettings {
    fn default() -> Self {
        FuzzySettings { radius: 1, rho2: 0.5 }
    }
}

/// Pre-built FVOL inputs, as an alternative to a synthetic spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    /// Training labels (possibly noisy).
    pub labels: PathBuf,
    /// Reference labels for Dice scoring; defaults to `labels`.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub intensity: Option<PathBuf>,
}

/// Everything `ifl train` needs. With `data` absent the volumes come from
/// `synth`; the corrupted labels are trained on and the clean labels score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    /// Overrides both `synth.seed` and `train.seed` when set.
    pub seed: Option<u64>,
    pub synth: SynthSpec,
    pub data: Option<DataPaths>,
    /// Train on the clean synthetic labels instead of the corrupted ones.
    pub train_on_clean: bool,
    pub fuzzy: FuzzySettings,
    pub train: TrainConfig,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Apply the top-level seed override.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        if let Some(s) = self.seed {
            c.synth.seed = s;
            c.train.seed = s;
        }
        c
    }

    pub fn hash(&self) -> Result<String> {
        canonical_hash(&self.resolved())
    }
}
