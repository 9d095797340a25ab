//! Artifact names, per-stage sidecars and stale-input detection.
//!
//! Every stage writes `<stage>.meta.json` next to its outputs. The sidecar
//! records the CRC32 of each input and output file, so a later stage can
//! refuse artifacts that were edited or produced from different upstream
//! files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use patsig_core::io::{atomic_write, file_crc32};
use patsig_core::PipelineConfig;
use serde::{Deserialize, Serialize};

pub const CORPUS: &str = "corpus.jsonl";
pub const BIGRAMS: &str = "bigrams.tsv";
pub const TOKENS: &str = "tokens.tsv";
pub const VOCAB: &str = "vocab.tsv";
pub const EMBEDDING: &str = "embedding.psv";
pub const TFIDF: &str = "tfidf.tsv";
pub const VECTORS: &str = "vectors.psv";
pub const INDEX: &str = "index.rpf";
pub const EDGES: &str = "edges.tsv";
pub const INDICATORS: &str = "indicators.tsv";
pub const SERIES: &str = "series.tsv";
pub const FLOWS: &str = "flows.tsv";
pub const STRENGTHS: &str = "strengths.tsv";
pub const METRICS: &str = "metrics.tsv";
pub const METRICS_PLACEBO: &str = "metrics.placebo.tsv";
pub const RELATIONAL: &str = "relational.tsv";

/// Errors the CLI raises itself, on top of the library's.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    MissingInput(PathBuf),
    Stale(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::MissingInput(p) => write!(f, "missing input {}", p.display()),
            CliError::Stale(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub stage: String,
    pub tool_version: String,
    pub config: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub details: serde_json::Value,
}

pub fn crc_hex(path: &Path) -> Result<String> {
    Ok(format!("{:08x}", file_crc32(path)?))
}

/// Working directory holding every artifact of one pipeline.
pub struct Workspace {
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Workspace { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn open(&self, name: &str) -> Result<BufReader<File>> {
        let p = self.path(name);
        let f = File::open(&p).map_err(|_| CliError::MissingInput(p))?;
        Ok(BufReader::new(f))
    }

    fn sidecars(&self) -> Result<Vec<Sidecar>> {
        let mut out = Vec::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
            .collect();
        entries.sort();
        for p in entries {
            let text = std::fs::read_to_string(&p)?;
            let car: Sidecar = serde_json::from_str(&text)
                .map_err(|e| CliError::Stale(format!("unreadable sidecar {}: {e}", p.display())))?;
            out.push(car);
        }
        Ok(out)
    }

    /// Checks that every named input exists, still matches the checksum its
    /// producer recorded, and was produced from the current versions of any
    /// upstream files that are still present.
    pub fn check_inputs(&self, names: &[&str]) -> Result<BTreeMap<String, String>> {
        let mut crcs = BTreeMap::new();
        for name in names {
            let p = self.path(name);
            if !p.is_file() {
                return Err(CliError::MissingInput(p).into());
            }
            crcs.insert(name.to_string(), crc_hex(&p)?);
        }
        let sidecars = self.sidecars()?;
        for name in names {
            let Some(producer) = sidecars.iter().find(|s| s.outputs.contains_key(*name)) else {
                continue;
            };
            if producer.outputs[*name] != crcs[*name] {
                return Err(CliError::Stale(format!(
                    "{name} changed after stage {} wrote it; rerun {}",
                    producer.stage, producer.stage
                ))
                .into());
            }
            for (upstream, recorded) in &producer.inputs {
                let p = self.path(upstream);
                if p.is_file() && crc_hex(&p)? != *recorded {
                    return Err(CliError::Stale(format!(
                        "{name} was built from an older {upstream}; rerun {}",
                        producer.stage
                    ))
                    .into());
                }
            }
        }
        Ok(crcs)
    }

    pub fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> patsig_core::Result<()>) -> Result<()> {
        atomic_write(&self.path(name), f).with_context(|| format!("writing {name}"))
    }

    /// Emits the resolved config and the sidecar; called after all outputs
    /// are in place.
    pub fn finish(
        &self,
        stage: &str,
        config: &PipelineConfig,
        inputs: BTreeMap<String, String>,
        outputs: &[&str],
        details: serde_json::Value,
    ) -> Result<()> {
        let config_name = format!("{stage}.config.toml");
        let text = config.to_toml();
        self.write(&config_name, |w| Ok(w.write_all(text.as_bytes())?))?;
        let mut out = BTreeMap::new();
        for name in outputs {
            out.insert(name.to_string(), crc_hex(&self.path(name))?);
        }
        let car = Sidecar {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config_name,
            inputs,
            outputs: out,
            details,
        };
        let json = serde_json::to_string_pretty(&car)? + "\n";
        self.write(&format!("{stage}.meta.json"), |w| Ok(w.write_all(json.as_bytes())?))
    }

    pub fn sidecar(&self, stage: &str) -> Result<Sidecar> {
        let p = self.path(&format!("{stage}.meta.json"));
        let text = std::fs::read_to_string(&p).map_err(|_| CliError::MissingInput(p.clone()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
    }
}
