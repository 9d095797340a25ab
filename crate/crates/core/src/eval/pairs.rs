//! Shared-attribute pair sampling and the relational comparison table.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::stats::welch_t_test;
use crate::corpus::{IpcLevel, PatentRecord};
use crate::embedding::VectorStore;
use crate::error::{Error, Result};
use crate::similarity::cosine_slices;

/// Predicate over patent pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    SharedIpc(IpcLevel),
    SharedInventor,
    SharedAssignee,
    /// Either patent cites the other.
    Citation,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::SharedIpc(IpcLevel::Class),
        Condition::SharedIpc(IpcLevel::Subclass),
        Condition::SharedIpc(IpcLevel::Group),
        Condition::SharedIpc(IpcLevel::Subgroup),
        Condition::SharedInventor,
        Condition::SharedAssignee,
        Condition::Citation,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::SharedIpc(level) => write!(f, "shared_ipc_{}", level.name()),
            Condition::SharedInventor => f.write_str("shared_inventor"),
            Condition::SharedAssignee => f.write_str("shared_assignee"),
            Condition::Citation => f.write_str("citation"),
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Condition::SharedIpc(IpcLevel::Section),
            Condition::SharedIpc(IpcLevel::Class),
            Condition::SharedIpc(IpcLevel::Subclass),
            Condition::SharedIpc(IpcLevel::Group),
            Condition::SharedIpc(IpcLevel::Subgroup),
            Condition::SharedInventor,
            Condition::SharedAssignee,
            Condition::Citation,
        ];
        all.into_iter().find(|c| c.to_string() == s).ok_or_else(|| Error::Config(format!("unknown condition {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub condition: String,
    pub positives: Vec<ScoredPair>,
    pub negatives: Vec<ScoredPair>,
    pub warnings: Vec<String>,
}

impl PairSample {
    fn empty(condition: Condition) -> Self {
        PairSample { condition: condition.to_string(), positives: vec![], negatives: vec![], warnings: vec![] }
    }
}

fn attribute_keys(r: &PatentRecord, condition: Condition) -> Vec<String> {
    match condition {
        Condition::SharedIpc(level) => r.ipc_codes.iter().map(|c| c.key(level)).collect(),
        Condition::SharedInventor => r.inventors.clone(),
        Condition::SharedAssignee => r.assignees.clone(),
        Condition::Citation => vec![],
    }
}

fn ordered(i: u32, j: u32) -> (u32, u32) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// All unordered pairs of eligible items that satisfy `condition`.
/// Cost is quadratic in the size of the largest attribute bucket.
fn positive_pairs(items: &[&PatentRecord], condition: Condition) -> HashSet<(u32, u32)> {
    let mut set = HashSet::new();
    if condition == Condition::Citation {
        let index: BTreeMap<&str, u32> = items.iter().enumerate().map(|(i, r)| (r.id.as_str(), i as u32)).collect();
        for (i, r) in items.iter().enumerate() {
            for cited in &r.citations {
                if let Some(&j) = index.get(cited.as_str()) {
                    if j != i as u32 {
                        set.insert(ordered(i as u32, j));
                    }
                }
            }
        }
        return set;
    }
    let mut buckets: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (i, r) in items.iter().enumerate() {
        let mut keys = attribute_keys(r, condition);
        keys.sort();
        keys.dedup();
        for k in keys {
            buckets.entry(k).or_default().push(i as u32);
        }
    }
    for members in buckets.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                set.insert((i, j));
            }
        }
    }
    set
}

/// Draws up to `n` pairs satisfying `condition` and an equal number of
/// uniformly drawn pairs violating it. Scores are exact cosines between the
/// stored vectors; records without a usable vector are ignored.
pub fn sample_condition_pairs(
    records: &[PatentRecord],
    store: &VectorStore,
    condition: Condition,
    n: usize,
    seed: u64,
) -> Result<PairSample> {
    let mut sample_out = PairSample::empty(condition);
    if n == 0 {
        return Ok(sample_out);
    }
    let mut items: Vec<&PatentRecord> = Vec::new();
    let mut rows: Vec<usize> = Vec::new();
    let mut seen = HashSet::new();
    for r in records {
        if let Some(pos) = store.position(&r.id) {
            if !store.is_sentinel(pos) && seen.insert(r.id.as_str()) {
                items.push(r);
                rows.push(pos);
            }
        }
    }
    let m = items.len() as u64;
    let total_pairs = m * m.saturating_sub(1) / 2;
    let positives = positive_pairs(&items, condition);
    if positives.is_empty() {
        return Err(Error::InvalidSample(format!("no pair satisfies {condition}")));
    }
    if positives.len() as u64 == total_pairs {
        return Err(Error::ConditionAlwaysTrue(condition.to_string()));
    }
    let available_neg = total_pairs - positives.len() as u64;

    let mut count = n.min(positives.len());
    if count < n {
        sample_out.warnings.push(format!("{condition}: only {} positive pairs, requested {n}", positives.len()));
    }
    if (count as u64) > available_neg {
        count = available_neg as usize;
        sample_out.warnings.push(format!("{condition}: only {available_neg} negative pairs, sample shrunk to match"));
    }

    let mut sorted: Vec<(u32, u32)> = positives.iter().copied().collect();
    sorted.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(u32, u32)> = sample(&mut rng, sorted.len(), count).into_iter().map(|i| sorted[i]).collect();
    chosen.sort_unstable();

    rng.set_stream(1);
    let mut negatives: Vec<(u32, u32)> = Vec::with_capacity(count);
    let mut taken = HashSet::with_capacity(count);
    let mut attempts = 0usize;
    let budget = 50 * count + 1000;
    while negatives.len() < count && attempts < budget {
        attempts += 1;
        let i = rng.random_range(0..m as u32);
        let j = rng.random_range(0..m as u32);
        if i == j {
            continue;
        }
        let p = ordered(i, j);
        if !positives.contains(&p) && taken.insert(p) {
            negatives.push(p);
        }
    }
    if negatives.len() < count {
        // dense predicate: enumerate the complement instead of rejecting
        let mut rest: Vec<(u32, u32)> = (0..m as u32)
            .flat_map(|i| (i + 1..m as u32).map(move |j| (i, j)))
            .filter(|p| !positives.contains(p) && !taken.contains(p))
            .collect();
        let need = count - negatives.len();
        let picks = sample(&mut rng, rest.len(), need).into_vec();
        let mut extra: Vec<(u32, u32)> = picks.into_iter().map(|i| rest[i]).collect();
        extra.sort_unstable();
        rest.clear();
        negatives.extend(extra);
    }

    let score = |pairs: &[(u32, u32)]| -> Vec<ScoredPair> {
        pairs
            .par_iter()
            .map(|&(i, j)| ScoredPair {
                a: items[i as usize].id.clone(),
                b: items[j as usize].id.clone(),
                score: cosine_slices(store.vector(rows[i as usize]), store.vector(rows[j as usize])),
            })
            .collect()
    };
    sample_out.positives = score(&chosen);
    sample_out.negatives = score(&negatives);
    Ok(sample_out)
}

/// Significance level used for the `significant` flag.
pub const SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalRow {
    pub condition: String,
    pub shared: f64,
    pub not_shared: f64,
    pub t: f64,
    pub p: f64,
    pub pairs: usize,
    /// Mean similarity of shared pairs does not exceed the unshared mean.
    pub reversed: bool,
}

impl RelationalRow {
    pub fn significant(&self) -> bool {
        self.p < SIGNIFICANCE
    }
}

/// One Welch comparison per sample.
pub fn relational_report(samples: &[PairSample]) -> Result<Vec<RelationalRow>> {
    samples
        .iter()
        .map(|s| {
            let a: Vec<f64> = s.positives.iter().map(|p| p.score).collect();
            let b: Vec<f64> = s.negatives.iter().map(|p| p.score).collect();
            let w = welch_t_test(&a, &b).map_err(|e| Error::Item { id: s.condition.clone(), source: Box::new(e) })?;
            Ok(RelationalRow {
                condition: s.condition.clone(),
                shared: w.mean_a,
                not_shared: w.mean_b,
                t: w.t,
                p: w.p,
                pairs: a.len(),
                reversed: w.mean_a <= w.mean_b,
            })
        })
        .collect()
}

pub fn write_relational<W: Write>(rows: &[RelationalRow], out: &mut W) -> Result<()> {
    writeln!(out, "condition\tshared\tnot_shared\tt\tp\tpairs\tflag")?;
    for r in rows {
        let flag = match (r.reversed, r.significant()) {
            (true, _) => "reversed",
            (false, true) => "significant",
            (false, false) => "",
        };
        writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.4}\t{:.3e}\t{}\t{flag}",
            r.condition, r.shared, r.not_shared, r.t, r.p, r.pairs
        )?;
    }
    Ok(())
}
