//! Patent records, ingestion filters, tokenization, bigram promotion and the
//! vocabulary.

mod ipc;
mod text;
mod vocab;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use ipc::{IpcCode, IpcLevel, IpcParseError};
pub use text::{apply_bigrams, detect_bigrams, tokenize, BigramTable};
pub use vocab::{build_vocabulary, Vocabulary};

use crate::error::{Error, LineError, Result};

/// Tolerance on the sum of `country_shares` accepted at parse time.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-6;

/// One patent application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    pub granted: bool,
    pub is_priority: bool,
    #[serde(rename = "ipc")]
    pub ipc_codes: Vec<IpcCode>,
    /// Inventor-location shares keyed by ISO 3166 alpha-2 code.
    pub country_shares: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inventors: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assignees: Vec<String>,
    /// Ids of patents this one cites.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
}

impl PatentRecord {
    /// First-listed IPC subclass, the single-label classification target.
    pub fn primary_subclass(&self) -> Option<String> {
        self.ipc_codes.first().map(|c| c.key(IpcLevel::Subclass))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if !self.country_shares.is_empty() {
            if let Some((c, v)) = self.country_shares.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(format!("share for {c} outside [0, 1]: {v}"));
            }
            let sum: f64 = self.country_shares.values().sum();
            if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
                return Err(format!("shares sum {}", round_for_message(sum)));
            }
        }
        Ok(())
    }
}

fn round_for_message(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Reads line-delimited JSON patent records.
///
/// Blank lines are skipped. Every malformed line is collected and reported
/// together; a duplicate id is reported immediately with both line numbers.
pub fn parse_patents<R: BufRead>(reader: R) -> Result<Vec<PatentRecord>> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PatentRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError { line: line_no, message: e.to_string() });
                continue;
            }
        };
        if let Err(message) = record.validate() {
            errors.push(LineError { line: line_no, message });
            continue;
        }
        if let Some(&first) = seen.get(&record.id) {
            return Err(Error::DuplicateId { id: record.id, first, second: line_no });
        }
        seen.insert(record.id.clone(), line_no);
        records.push(record);
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(Error::Malformed(errors))
    }
}

pub fn write_patents<W: Write>(mut out: W, records: &[PatentRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Data-selection predicates applied at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterPolicy {
    /// Inclusive filing-year range; `None` disables the bound.
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
    pub granted_only: bool,
    pub priority_only: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy { min_year: Some(1980), max_year: Some(2017), granted_only: true, priority_only: true }
    }
}

impl FilterPolicy {
    pub fn permissive() -> Self {
        FilterPolicy { min_year: None, max_year: None, granted_only: false, priority_only: false }
    }

    pub fn accepts(&self, r: &PatentRecord) -> bool {
        self.min_year.is_none_or(|y| r.year >= y)
            && self.max_year.is_none_or(|y| r.year <= y)
            && (!self.granted_only || r.granted)
            && (!self.priority_only || r.is_priority)
    }
}

pub fn filter_corpus(records: Vec<PatentRecord>, policy: &FilterPolicy) -> Vec<PatentRecord> {
    records.into_iter().filter(|r| policy.accepts(r)).collect()
}

/// Tokenizes every abstract and applies the bigram table, in record order.
pub fn preprocess(records: &[PatentRecord], bigrams: &BigramTable) -> Vec<Vec<String>> {
    use rayon::prelude::*;
    records.par_iter().map(|r| apply_bigrams(&tokenize(&r.abstract_text), bigrams)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(id: &str, shares: &str) -> String {
        format!(
            r#"{{"id":"{id}","abstract":"Fuel cell stack","year":2001,"granted":true,"is_priority":true,"ipc":["B60L 11/18","H01M 8/04"],"country_shares":{shares}}}"#
        )
    }

    fn record(year: i32, granted: bool, is_priority: bool) -> PatentRecord {
        PatentRecord {
            id: format!("P{year}{granted}{is_priority}"),
            abstract_text: String::new(),
            year,
            granted,
            is_priority,
            ipc_codes: vec![],
            country_shares: BTreeMap::new(),
            inventors: vec![],
            assignees: vec![],
            citations: vec![],
        }
    }

    #[test]
    fn parses_one_record_with_two_codes() {
        let input = line("EP1", r#"{"DE":0.5,"FR":0.5}"#);
        let recs = parse_patents(input.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].ipc_codes.len(), 2);
        assert_eq!(recs[0].ipc_codes[1].to_string(), "H01M 8/04");
        assert_eq!(recs[0].primary_subclass().as_deref(), Some("B60L"));
    }

    #[test]
    fn empty_stream() {
        assert!(parse_patents("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn share_sum_error() {
        let input = line("X", r#"{"US":0.5,"JP":0.6}"#);
        match parse_patents(input.as_bytes()) {
            Err(Error::Malformed(errs)) => {
                assert_eq!(errs.len(), 1);
                assert_eq!(errs[0].line, 1);
                assert!(errs[0].message.contains("shares sum 1.1"), "{}", errs[0].message);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_reported_with_numbers() {
        let input = format!("{}\nnot json\n\n{}\n", line("A", "{}"), line("B", r#"{"US":2.0}"#));
        match parse_patents(input.as_bytes()) {
            Err(Error::Malformed(errs)) => {
                let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
                assert_eq!(lines, vec![2, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_ipc_is_record_error() {
        let input = line("A", "{}").replace("B60L 11/18", "nonsense");
        assert!(matches!(parse_patents(input.as_bytes()), Err(Error::Malformed(_))));
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let input = format!("{}\n{}\n{}\n", line("A", "{}"), line("B", "{}"), line("A", "{}"));
        match parse_patents(input.as_bytes()) {
            Err(Error::DuplicateId { id, first, second }) => {
                assert_eq!((id.as_str(), first, second), ("A", 1, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_then_parse() {
        let input = line("EP1", r#"{"DE":0.25,"FR":0.75}"#);
        let recs = parse_patents(input.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_patents(&mut buf, &recs).unwrap();
        assert_eq!(parse_patents(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn default_policy_drops_1979_and_ungranted() {
        let p = FilterPolicy::default();
        assert!(!p.accepts(&record(1979, true, true)));
        assert!(p.accepts(&record(1980, true, true)));
        assert!(p.accepts(&record(2017, true, true)));
        assert!(!p.accepts(&record(2018, true, true)));
        assert!(!p.accepts(&record(2000, false, true)));
        assert!(!p.accepts(&record(2000, true, false)));
    }

    #[test]
    fn permissive_policy_is_identity() {
        let recs = vec![record(1900, false, false), record(2000, true, true), record(2050, false, true)];
        assert_eq!(filter_corpus(recs.clone(), &FilterPolicy::permissive()), recs);
    }

    fn arb_policy() -> impl Strategy<Value = FilterPolicy> {
        (proptest::option::of(1970..2030i32), proptest::option::of(1970..2030i32), any::<bool>(), any::<bool>())
            .prop_map(|(min_year, max_year, granted_only, priority_only)| FilterPolicy {
                min_year,
                max_year,
                granted_only,
                priority_only,
            })
    }

    proptest! {
        #[test]
        fn tightening_never_adds(
            recs in proptest::collection::vec((1970..2030i32, any::<bool>(), any::<bool>()), 0..40),
            policy in arb_policy(),
            bump in 0..5i32,
        ) {
            let recs: Vec<_> = recs.into_iter().enumerate().map(|(i, (y, g, p))| {
                let mut r = record(y, g, p);
                r.id = i.to_string();
                r
            }).collect();
            let loose = filter_corpus(recs.clone(), &policy);
            let tight_policy = FilterPolicy {
                min_year: Some(policy.min_year.unwrap_or(1970) + bump),
                max_year: policy.max_year.map(|y| y - bump),
                granted_only: true,
                priority_only: policy.priority_only,
            };
            let tight = filter_corpus(recs.clone(), &tight_policy);
            prop_assert!(tight.len() <= loose.len());
            for r in &tight {
                prop_assert!(loose.contains(r));
                prop_assert!(tight_policy.accepts(r));
            }
            // order preserved
            let positions: Vec<usize> = loose.iter().map(|r| recs.iter().position(|x| x == r).unwrap()).collect();
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
