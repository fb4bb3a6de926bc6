//! Run configuration as a flat `section.key = value` text file.
//!
//! Every key of [`RunConfig`] may appear; values are parsed as JSON scalars
//! when possible (`150`, `true`, `1e-3`) and as bare strings otherwise.
//! Unknown keys are rejected by name.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::autoencoder::TrainConfig;
use crate::dsp::PreprocessConfig;
use crate::error::{Error, Result};
use crate::eval::{ChannelMask, HeadConfig, Task};
use crate::segment::SegmentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdaConfig {
    pub bins: usize,
}

impl Default for TdaConfig {
    fn default() -> Self {
        Self {
            bins: crate::tda::DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub channel: usize,
    pub annotator: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            channel: 0,
            annotator: "atr".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalConfig {
    pub task: Task,
    pub channels: ChannelMask,
    pub test_size: usize,
    pub train_ratio: f64,
    pub max_folds: Option<usize>,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        Self {
            task: Task::Detection,
            channels: ChannelMask::ALL,
            test_size: 5,
            train_ratio: 0.7,
            max_folds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub ingest: IngestConfig,
    pub preprocess: PreprocessConfig,
    pub segment: SegmentConfig,
    pub tda: TdaConfig,
    pub autoencoder: TrainConfig,
    pub head: HeadConfig,
    pub crossval: CrossvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            ingest: IngestConfig::default(),
            preprocess: PreprocessConfig::default(),
            segment: SegmentConfig::default(),
            tda: TdaConfig::default(),
            autoencoder: TrainConfig::default(),
            head: HeadConfig::default(),
            crossval: CrossvalConfig::default(),
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        _ => out.push((prefix.to_string(), value.clone())),
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_object_mut()
            .expect("known keys address objects")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .expect("known keys address objects")
        .insert(parts[parts.len() - 1].to_string(), value);
}

fn scalar(text: &str) -> Value {
    match serde_json::from_str::<Value>(text) {
        Ok(v @ (Value::Number(_) | Value::Bool(_) | Value::Null | Value::String(_))) => v,
        _ => Value::String(text.to_string()),
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl RunConfig {
    /// Every recognised key, in file order.
    pub fn keys() -> Vec<String> {
        let mut out = Vec::new();
        flatten(
            "",
            &serde_json::to_value(Self::default()).expect("serializable"),
            &mut out,
        );
        out.into_iter().map(|(k, _)| k).collect()
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let known = Self::keys();
        let mut tree = serde_json::to_value(Self::default())?;
        let mut seen: Vec<(String, Value)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected `key = value`, got {line:?}"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !known.iter().any(|k| k == key) {
                return Err(Error::invalid(format!("unknown config key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::invalid(format!("config key `{key}` has no value")));
            }
            let v = scalar(value);
            set_path(&mut tree, key, v.clone());
            seen.push((key.to_string(), v));
        }
        serde_json::from_value(tree).map_err(|e| {
            let default = serde_json::to_value(Self::default()).expect("serializable");
            let bad = seen.iter().find(|(k, v)| {
                let mut probe = default.clone();
                set_path(&mut probe, k, v.clone());
                serde_json::from_value::<Self>(probe).is_err()
            });
            match bad {
                Some((k, v)) => {
                    Error::invalid(format!("bad value {} for config key `{k}`", render(v)))
                }
                None => Error::invalid(format!("config: {e}")),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    /// Sets one key from its text form, as a config line would.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut text = self.to_text();
        writeln!(text, "{key} = {value}").expect("write to string");
        *self = Self::parse(&text, &PathBuf::from("<override>"))?;
        Ok(())
    }

    /// The effective configuration, one `key = value` line per key.
    pub fn to_text(&self) -> String {
        let mut pairs = Vec::new();
        flatten(
            "",
            &serde_json::to_value(self).expect("serializable"),
            &mut pairs,
        );
        let mut out = String::new();
        for (k, v) in pairs {
            writeln!(out, "{k} = {}", render(&v)).expect("write to string");
        }
        out
    }

    /// Copies the global seed into every seeded component.
    pub fn propagate_seed(&mut self) {
        self.autoencoder.seed = self.seed;
        self.head.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.segment.beats_per_window = 5;
        cfg.crossval.channels = "betti,latent".parse().unwrap();
        cfg.crossval.max_folds = Some(3);
        cfg.preprocess.wavelet_name = "db4".into();
        assert_eq!(parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = parse(
            "# run\nseed = 9\n\nautoencoder.epochs = 12 # short\ncrossval.task = classification\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.autoencoder.epochs, 12);
        assert_eq!(cfg.crossval.task, Task::Classification);
        assert_eq!(cfg.tda.bins, 100);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("segment.beats = 3").unwrap_err().to_string();
        assert!(err.contains("segment.beats"), "{err}");
        let err = parse("tda = 3").unwrap_err().to_string();
        assert!(err.contains("`tda`"), "{err}");
    }

    #[test]
    fn bad_value_is_named() {
        let err = parse("seed = 1\ntda.bins = many").unwrap_err().to_string();
        assert!(err.contains("tda.bins"), "{err}");
        let err = parse("crossval.channels = tda").unwrap_err().to_string();
        assert!(err.contains("crossval.channels"), "{err}");
        let err = parse("seed =").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        assert!(matches!(parse("seed 3"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn set_single_key() {
        let mut cfg = RunConfig::default();
        cfg.set("crossval.test_size", "15").unwrap();
        assert_eq!(cfg.crossval.test_size, 15);
        assert!(cfg.set("nope", "1").is_err());
    }
}
