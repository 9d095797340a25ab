//! Pipeline configuration: one TOML document covering every stage.
//!
//! Values resolve in three layers: the file, then `PATSIG_*` environment
//! variables, then explicit overrides (command-line flags). Every layer
//! addresses a setting by its dotted path, e.g. `similarity.threshold`.
//! Environment variables spell the path in upper case with `__` between
//! segments: `PATSIG_SIMILARITY__THRESHOLD=0.7`.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ann::ForestParams;
use crate::corpus::FilterPolicy;
use crate::embedding::SgnsParams;
use crate::error::{Error, Result};
use crate::eval::{Condition, MlpConfig};
use crate::indicators::{FlowOptions, TemporalParams};
use crate::similarity::{DEFAULT_K, DEFAULT_THRESHOLD};

pub const ENV_PREFIX: &str = "PATSIG_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(flatten)]
    pub filter: FilterPolicy,
    /// Minimum count for a word pair to be merged into one token.
    pub bigram_threshold: u64,
    /// Minimum corpus frequency for a term to enter the vocabulary.
    pub min_count: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { filter: FilterPolicy::default(), bigram_threshold: 500, min_count: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub k: usize,
    pub threshold: f64,
    /// Candidate items per query; unset means `n_trees * k`.
    pub search_breadth: Option<usize>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { k: DEFAULT_K, threshold: DEFAULT_THRESHOLD, search_breadth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Fraction of labeled vectors held out from classifier training.
    pub holdout: f64,
    /// Positive (and negative) pairs drawn per relational condition.
    pub pairs: usize,
    pub conditions: Vec<String>,
    /// Seed for pair sampling and the held-out split.
    pub seed: u64,
    pub mlp: MlpConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            holdout: 0.1,
            pairs: 10_000,
            conditions: Condition::ALL.iter().map(ToString::to_string).collect(),
            seed: 1,
            mlp: MlpConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn parsed_conditions(&self) -> Result<Vec<Condition>> {
        self.conditions.iter().map(|c| Condition::from_str(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Sequential execution; outputs are identical either way, this only
    /// removes scheduling variance from timing and logs.
    pub deterministic: bool,
    /// When set, replaces every stage seed.
    pub seed: Option<u64>,
    pub corpus: CorpusConfig,
    pub embedding: SgnsParams,
    pub index: ForestParams,
    pub similarity: SimilarityConfig,
    pub indicators: TemporalParams,
    pub flows: FlowOptions,
    pub eval: EvalConfig,
}

fn parse_scalar(raw: &str) -> toml::Value {
    // reuse TOML's own literal grammar; anything else is a bare string
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fully materialized document, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable")
    }

    /// Sets the value at a dotted path. `raw` is read as a TOML literal, so
    /// `0.7`, `true` and `["citation"]` keep their types.
    pub fn set(&mut self, path: &str, raw: &str) -> Result<()> {
        self.set_all([(path, raw)])
    }

    /// Applies several settings, validating only the final result. On error
    /// the config is left unchanged.
    pub fn set_all<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(&mut self, settings: I) -> Result<()> {
        let mut table = toml::Table::try_from(&*self).expect("config is always representable");
        let mut last = String::new();
        for (path, raw) in settings {
            let segments: Vec<&str> = path.split('.').collect();
            if segments.iter().any(|s| s.is_empty()) {
                return Err(Error::Config(format!("bad setting path {path:?}")));
            }
            let mut cursor = &mut table;
            for seg in &segments[..segments.len() - 1] {
                cursor = match cursor.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(Default::default())) {
                    toml::Value::Table(t) => t,
                    _ => return Err(Error::Config(format!("{path}: {seg} is not a section"))),
                };
            }
            cursor.insert(segments[segments.len() - 1].to_string(), parse_scalar(raw));
            last = path.to_string();
        }
        let updated: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{last}: {}", e.message())))?;
        *self = updated.resolved()?;
        Ok(())
    }

    /// Applies every `PATSIG_*` variable from `vars`, in sorted order.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_lowercase().replace("__", "."), v)))
            .collect();
        found.sort();
        self.set_all(found.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Propagates the global seed and checks every value.
    pub fn resolved(mut self) -> Result<Self> {
        if let Some(seed) = self.seed {
            self.embedding.seed = seed;
            self.index.seed = seed;
            self.eval.mlp.seed = seed;
            self.eval.seed = seed;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let s = &self.similarity;
        if !(s.threshold > -1.0 && s.threshold <= 1.0) {
            return fail(format!("similarity.threshold must be in (-1, 1], got {}", s.threshold));
        }
        if s.k == 0 || s.search_breadth == Some(0) {
            return fail("similarity.k and similarity.search_breadth must be >= 1".into());
        }
        let c = &self.corpus;
        if c.min_count == 0 || c.bigram_threshold == 0 {
            return fail("corpus.min_count and corpus.bigram_threshold must be >= 1".into());
        }
        if let (Some(lo), Some(hi)) = (c.filter.min_year, c.filter.max_year) {
            if lo > hi {
                return fail(format!("corpus.min_year {lo} exceeds corpus.max_year {hi}"));
            }
        }
        let e = &self.embedding;
        if e.dim == 0 || e.window == 0 || e.learning_rate.is_nan() || e.learning_rate <= 0.0 {
            return fail("embedding.dim, embedding.window and embedding.learning_rate must be positive".into());
        }
        if self.index.n_trees == 0 || self.index.leaf_capacity == 0 {
            return fail("index.n_trees and index.leaf_capacity must be >= 1".into());
        }
        self.indicators.validate()?;
        if let Some((lo, hi)) = self.flows.period {
            if lo > hi {
                return fail(format!("flows.period starts after it ends ({lo} > {hi})"));
            }
        }
        let v = &self.eval;
        if !(v.holdout > 0.0 && v.holdout < 1.0) {
            return fail(format!("eval.holdout must be in (0, 1), got {}", v.holdout));
        }
        v.parsed_conditions()?;
        Ok(())
    }
}
