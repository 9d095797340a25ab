//! Temporal similarity indicators and country-level knowledge flows.
//!
//! For a focal patent `i` with retained neighbors `j = 1..m`, scores
//! `s_ij` and lags `Δt = t_j - t_i`:
//!
//! ```text
//! sim_total  = Σ s_ij / m
//! sim_past   = Σ [-τ > Δt ≥ -λ] s_ij / m
//! sim_future = Σ [ τ < Δt ≤  λ] s_ij / m
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::SimilarityGraph;

/// Filing time per patent id, in (possibly fractional) years.
pub type Timeline = HashMap<String, f64>;
/// Inventor-country shares per patent id.
pub type ShareMap = HashMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the neighbor count `m`.
    Mean,
    /// Plain sums over neighbors.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalParams {
    /// Minimum lag in years (exclusive).
    pub tau: f64,
    /// Maximum lag in years (inclusive); may be infinite.
    pub lambda: f64,
    pub normalization: Normalization,
}

impl Default for TemporalParams {
    fn default() -> Self {
        TemporalParams { tau: 1.0, lambda: 5.0, normalization: Normalization::Mean }
    }
}

impl TemporalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite() && self.tau < self.lambda) {
            return Err(Error::Config(format!(
                "temporal window needs 0 <= tau < lambda (tau {}, lambda {})",
                self.tau, self.lambda
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn is_past(&self, dt: f64) -> bool {
        -self.tau > dt && dt >= -self.lambda
    }

    #[inline]
    pub fn is_future(&self, dt: f64) -> bool {
        self.tau < dt && dt <= self.lambda
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatentIndicators {
    pub id: String,
    pub year: f64,
    pub m: usize,
    pub sim_total: f64,
    pub sim_past: f64,
    pub sim_future: f64,
}

fn year_of(years: &Timeline, focal: &str, id: &str) -> Result<f64> {
    years.get(id).copied().ok_or_else(|| Error::MissingYear { focal: focal.to_string(), neighbor: id.to_string() })
}

/// Indicators for every source in `graph`, in graph order.
pub fn compute_indicators(
    graph: &SimilarityGraph,
    years: &Timeline,
    params: &TemporalParams,
) -> Result<Vec<PatentIndicators>> {
    params.validate()?;
    graph
        .nodes
        .iter()
        .map(|node| {
            let t_i = year_of(years, &node.id, &node.id)?;
            let (mut total, mut past, mut future) = (0.0, 0.0, 0.0);
            for nb in &node.neighbors {
                let dt = year_of(years, &node.id, &nb.id)? - t_i;
                total += nb.score;
                if params.is_past(dt) {
                    past += nb.score;
                } else if params.is_future(dt) {
                    future += nb.score;
                }
            }
            let m = node.m();
            let denom = match params.normalization {
                Normalization::Mean if m > 0 => m as f64,
                _ => 1.0,
            };
            Ok(PatentIndicators {
                id: node.id.clone(),
                year: t_i,
                m,
                sim_total: total / denom,
                sim_past: past / denom,
                sim_future: future / denom,
            })
        })
        .collect()
}

/// Appends all-zero rows for ids that have no entry (patents without any
/// retained neighbor never appear in an edge file).
pub fn add_isolated<'a>(
    indicators: &mut Vec<PatentIndicators>,
    ids: impl IntoIterator<Item = &'a str>,
    years: &Timeline,
) -> Result<()> {
    let present: HashSet<String> = indicators.iter().map(|p| p.id.clone()).collect();
    for id in ids {
        if !present.contains(id) {
            indicators.push(PatentIndicators {
                id: id.to_string(),
                year: year_of(years, id, id)?,
                m: 0,
                sim_total: 0.0,
                sim_past: 0.0,
                sim_future: 0.0,
            });
        }
    }
    Ok(())
}

pub fn write_indicators<W: Write>(mut out: W, rows: &[PatentIndicators]) -> Result<()> {
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}", r.id, r.year, r.m, r.sim_total, r.sim_past, r.sim_future)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Global,
    Country,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub group: String,
    pub year: i64,
    /// Share-weighted patent count.
    pub count: f64,
    pub mean_future: f64,
    pub mean_past: f64,
}

/// Per-year, per-group counts and share-weighted mean indicators. Patents
/// without country shares are left out of the country grouping.
pub fn aggregate_time_series(indicators: &[PatentIndicators], group_by: GroupBy, shares: &ShareMap) -> Vec<SeriesRow> {
    let mut acc: BTreeMap<(String, i64), (f64, f64, f64)> = BTreeMap::new();
    let global: BTreeMap<String, f64> = [("global".to_string(), 1.0)].into();
    for p in indicators {
        let weights = match group_by {
            GroupBy::Global => &global,
            GroupBy::Country => match shares.get(&p.id) {
                Some(s) => s,
                None => continue,
            },
        };
        for (g, &w) in weights {
            let e = acc.entry((g.clone(), p.year.floor() as i64)).or_default();
            e.0 += w;
            e.1 += w * p.sim_future;
            e.2 += w * p.sim_past;
        }
    }
    acc.into_iter()
        .filter(|(_, (c, _, _))| *c > 0.0)
        .map(|((group, year), (count, fut, past))| SeriesRow {
            group,
            year,
            count,
            mean_future: fut / count,
            mean_past: past / count,
        })
        .collect()
}

pub fn write_series<W: Write>(mut out: W, rows: &[SeriesRow]) -> Result<()> {
    for r in rows {
        writeln!(out, "{}\t{}\t{:.6}\t{:.6}\t{:.6}", r.group, r.year, r.count, r.mean_future, r.mean_past)?;
    }
    Ok(())
}

/// Directed flows between countries; `flow(a, b)` is knowledge flowing from
/// earlier patents in `a` to later similar patents in `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryFlowMatrix {
    pub countries: Vec<String>,
    flows: Vec<f64>,
    /// Inclusive source-year range the matrix covers.
    pub period: Option<(i32, i32)>,
}

impl CountryFlowMatrix {
    fn new(countries: Vec<String>, period: Option<(i32, i32)>) -> Self {
        let n = countries.len();
        CountryFlowMatrix { countries, flows: vec![0.0; n * n], period }
    }

    fn index(&self, c: &str) -> Option<usize> {
        self.countries.binary_search_by(|x| x.as_str().cmp(c)).ok()
    }

    pub fn get(&self, from: &str, to: &str) -> f64 {
        match (self.index(from), self.index(to)) {
            (Some(a), Some(b)) => self.flows[a * self.countries.len() + b],
            _ => 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.flows.iter().sum()
    }

    pub fn period_label(&self) -> String {
        match self.period {
            Some((a, b)) => format!("{a}-{b}"),
            None => "all".to_string(),
        }
    }

    /// `src_country \t dst_country \t flow` for every non-zero entry.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.countries.len();
        for a in 0..n {
            for b in 0..n {
                let f = self.flows[a * n + b];
                if f != 0.0 {
                    writeln!(out, "{}\t{}\t{:.6}", self.countries[a], self.countries[b], f)?;
                }
            }
        }
        Ok(())
    }

    /// Per-country `(out, in, domestic)` totals; cross-border flows only in
    /// the first two.
    pub fn strengths(&self) -> Vec<(String, f64, f64, f64)> {
        let n = self.countries.len();
        (0..n)
            .map(|a| {
                let out: f64 = (0..n).filter(|&b| b != a).map(|b| self.flows[a * n + b]).sum();
                let inc: f64 = (0..n).filter(|&b| b != a).map(|b| self.flows[b * n + a]).sum();
                (self.countries[a].clone(), out, inc, self.flows[a * n + a])
            })
            .collect()
    }

    /// `country \t out \t in \t domestic`.
    pub fn write_strengths<W: Write>(&self, mut out: W) -> Result<()> {
        for (c, o, i, d) in self.strengths() {
            writeln!(out, "{c}\t{o:.6}\t{i:.6}\t{d:.6}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Inclusive source-year range.
    pub period: Option<(i32, i32)>,
    /// Count each unordered patent pair at most once.
    pub dedup_pairs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub matrix: CountryFlowMatrix,
    pub qualifying_edges: usize,
    /// Qualifying edges skipped because an endpoint has no country shares.
    pub missing_shares: usize,
}

/// Accumulates `share_i(a) · share_j(b) · s_ij` into `F[a][b]` for every
/// stored edge `i → j` with `τ < Δt ≤ λ` whose source year lies in the period.
pub fn compute_country_flows(
    graph: &SimilarityGraph,
    years: &Timeline,
    shares: &ShareMap,
    params: &TemporalParams,
    options: &FlowOptions,
) -> Result<FlowReport> {
    params.validate()?;
    let countries: BTreeSet<String> = shares.values().flat_map(|s| s.keys().cloned()).collect();
    let mut matrix = CountryFlowMatrix::new(countries.into_iter().collect(), options.period);
    let n = matrix.countries.len();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    let (mut qualifying, mut missing) = (0, 0);
    for node in &graph.nodes {
        let t_i = year_of(years, &node.id, &node.id)?;
        if let Some((lo, hi)) = options.period {
            if t_i < lo as f64 || t_i >= hi as f64 + 1.0 {
                continue;
            }
        }
        for nb in &node.neighbors {
            let dt = year_of(years, &node.id, &nb.id)? - t_i;
            if !params.is_future(dt) {
                continue;
            }
            if options.dedup_pairs {
                let key =
                    if node.id <= nb.id { (node.id.clone(), nb.id.clone()) } else { (nb.id.clone(), node.id.clone()) };
                if !seen_pairs.insert(key) {
                    continue;
                }
            }
            qualifying += 1;
            let (Some(si), Some(sj)) = (shares.get(&node.id), shares.get(&nb.id)) else {
                missing += 1;
                continue;
            };
            if si.is_empty() || sj.is_empty() {
                missing += 1;
                continue;
            }
            for (a, wa) in si {
                let ia = matrix.index(a).expect("country collected above");
                for (b, wb) in sj {
                    let ib = matrix.index(b).expect("country collected above");
                    matrix.flows[ia * n + ib] += wa * wb * nb.score;
                }
            }
        }
    }
    Ok(FlowReport { matrix, qualifying_edges: qualifying, missing_shares: missing })
}
