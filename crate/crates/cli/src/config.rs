//! Run configuration files and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Optional override sections, each a partial object merged over defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub planner: Option<Value>,
    #[serde(default)]
    pub energy: Option<Value>,
    #[serde(default)]
    pub sweep: Option<Value>,
    #[serde(default)]
    pub gains: Option<Value>,
    #[serde(default)]
    pub bounds: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = read(p)?;
                serde_json::from_str(&text).with_context(|| format!("config {}", p.display()))
            }
        }
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// `base` with the fields present in `over` replaced.
pub fn apply<T: Serialize + DeserializeOwned>(base: &T, over: Option<&Value>, section: &str) -> Result<T> {
    let Some(over) = over else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut v = serde_json::to_value(base)?;
    merge(&mut v, over);
    serde_json::from_value(v).with_context(|| format!("config section `{section}`"))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, PathBuf>,
    pub overrides: Value,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    pub outputs: Vec<String>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path, seed: u64, workers: Option<usize>) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            overrides: Value::Object(Default::default()),
            out_dir: out_dir.to_path_buf(),
            seed,
            workers,
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn set_override(&mut self, key: &str, value: Value) {
        if let Value::Object(m) = &mut self.overrides {
            m.insert(key.to_string(), value);
        }
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(mut self) -> Result<()> {
        self.outputs.push("manifest.json".into());
        let text = serde_json::to_string_pretty(&self)?;
        let path = self.out_dir.join("manifest.json");
        std::fs::create_dir_all(&self.out_dir)?;
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
