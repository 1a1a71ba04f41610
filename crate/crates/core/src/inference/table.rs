use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    check_query, normalize_event, InferenceBackend, InferenceCandidate, InferenceError, InferenceResponse, Relation,
};
use crate::scalar::Score;

/// What a table does when asked about an event it has never seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingKeyPolicy {
    /// Zero candidates, anchor 1.0.
    #[default]
    Empty,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry<S> {
    /// Sorted by descending likelihood, ties by tail.
    pub candidates: Vec<InferenceCandidate<S>>,
    pub anchor: Option<S>,
}

impl<S> Default for TableEntry<S> {
    fn default() -> Self {
        Self {
            candidates: Vec::new(),
            anchor: None,
        }
    }
}

/// In-memory commonsense knowledge keyed by (normalized event, relation).
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeTable<S> {
    entries: BTreeMap<(String, Relation), TableEntry<S>>,
    missing: MissingKeyPolicy,
}

impl<S: Score> Default for KnowledgeTable<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Score> KnowledgeTable<S> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
            missing: MissingKeyPolicy::default(),
        }
    }

    pub fn with_missing_policy(mut self, policy: MissingKeyPolicy) -> Self {
        self.missing = policy;
        self
    }

    pub fn missing_policy(&self) -> MissingKeyPolicy {
        self.missing
    }

    /// Number of distinct (event, relation) keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, event: &str, relation: Relation) -> Option<&TableEntry<S>> {
        self.entries.get(&(normalize_event(event), relation))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, Relation), &TableEntry<S>)> {
        self.entries.iter()
    }

    /// Adds one candidate. A tail already present under the key keeps the
    /// higher of the two likelihoods.
    pub fn insert(&mut self, event: &str, relation: Relation, tail: &str, likelihood: S) -> Result<(), String> {
        let key = normalize_event(event);
        if key.is_empty() {
            return Err("empty event".into());
        }
        let tail = tail.split_whitespace().collect::<Vec<_>>().join(" ");
        if tail.is_empty() {
            return Err("empty tail".into());
        }
        if !likelihood.is_probability() {
            return Err(format!("likelihood {likelihood} outside (0, 1]"));
        }
        let entry = self.entries.entry((key, relation)).or_default();
        let tail_key = normalize_event(&tail);
        match entry
            .candidates
            .iter_mut()
            .find(|c| normalize_event(&c.tail) == tail_key)
        {
            Some(existing) => {
                if likelihood > existing.likelihood {
                    existing.likelihood = likelihood;
                }
            }
            None => entry.candidates.push(InferenceCandidate { tail, likelihood }),
        }
        entry.candidates.sort_by(|a, b| {
            b.likelihood
                .partial_cmp(&a.likelihood)
                .expect("likelihoods are finite")
                .then_with(|| a.tail.cmp(&b.tail))
        });
        Ok(())
    }

    /// Sets the anchor likelihood; a different anchor already set for the key
    /// is a conflict.
    pub fn set_anchor(&mut self, event: &str, relation: Relation, anchor: S) -> Result<(), String> {
        let key = normalize_event(event);
        if key.is_empty() {
            return Err("empty event".into());
        }
        if !anchor.is_probability() {
            return Err(format!("anchor {anchor} outside (0, 1]"));
        }
        let entry = self.entries.entry((key, relation)).or_default();
        match entry.anchor {
            Some(existing) if existing != anchor => {
                Err(format!("conflicting anchor {anchor}, already set to {existing}"))
            }
            _ => {
                entry.anchor = Some(anchor);
                Ok(())
            }
        }
    }

    /// Parses the tab-separated table format:
    /// `event<TAB>relation<TAB>tail<TAB>likelihood[<TAB>anchor]`.
    ///
    /// Lines starting with `#` and blank lines are skipped, as is a leading
    /// `event\trelation...` header. A row may leave tail and likelihood empty
    /// to set only the anchor. Row numbers in errors are 1-based line numbers.
    pub fn parse(source: &str) -> Result<Self, InferenceError> {
        let mut table = Self::new();
        let mut seen_data = false;
        for (idx, raw) in source.lines().enumerate() {
            let row = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !seen_data && cols.first().is_some_and(|c| c.eq_ignore_ascii_case("event")) {
                seen_data = true;
                continue;
            }
            seen_data = true;
            if !(4..=5).contains(&cols.len()) {
                return Err(InferenceError::Schema {
                    row,
                    message: format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
                });
            }
            let relation: Relation = cols[1].parse().map_err(|_| InferenceError::Schema {
                row,
                message: format!("unknown relation {:?}", cols[1]),
            })?;
            let score = |raw: &str, what: &str| -> Result<S, InferenceError> {
                raw.parse::<S>().map_err(|_| InferenceError::Schema {
                    row,
                    message: format!("{what} {raw:?} is not a number"),
                })
            };
            let invalid = |message: String| InferenceError::Validation { row, message };

            match (cols[2].is_empty(), cols[3].is_empty()) {
                (false, false) => {
                    let likelihood = score(cols[3], "likelihood")?;
                    table.insert(cols[0], relation, cols[2], likelihood).map_err(invalid)?;
                }
                (true, true) if cols.get(4).is_some_and(|a| !a.is_empty()) => {}
                _ => {
                    return Err(InferenceError::Schema {
                        row,
                        message: "tail and likelihood must both be present (or both empty on an anchor-only row)"
                            .into(),
                    })
                }
            }
            if let Some(raw) = cols.get(4).filter(|a| !a.is_empty()) {
                let anchor = score(raw, "anchor")?;
                table.set_anchor(cols[0], relation, anchor).map_err(invalid)?;
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InferenceError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|source| InferenceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&source)
    }
}

impl<S: Score> InferenceBackend<S> for KnowledgeTable<S> {
    fn infer(&self, event: &str, relation: Relation, k: usize) -> Result<InferenceResponse<S>, InferenceError> {
        check_query(event, k)?;
        match self.entry(event, relation) {
            Some(entry) => Ok(InferenceResponse {
                candidates: entry.candidates.iter().take(k).cloned().collect(),
                anchor_likelihood: entry.anchor.unwrap_or_else(S::one),
            }),
            None => match self.missing {
                MissingKeyPolicy::Empty => Ok(InferenceResponse::empty()),
                MissingKeyPolicy::Error => Err(InferenceError::MissingKey {
                    event: event.to_string(),
                    relation,
                }),
            },
        }
    }

    fn anchor_probability(&self, event: &str, relation: Relation) -> Result<S, InferenceError> {
        check_query(event, 1)?;
        match self.entry(event, relation) {
            Some(entry) => Ok(entry.anchor.unwrap_or_else(S::one)),
            None => match self.missing {
                MissingKeyPolicy::Empty => Ok(S::one()),
                MissingKeyPolicy::Error => Err(InferenceError::MissingKey {
                    event: event.to_string(),
                    relation,
                }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(src: &str) -> KnowledgeTable<f64> {
        KnowledgeTable::parse(src).unwrap()
    }

    #[test]
    fn infer_returns_stored_candidate() {
        let t = table("X tried to get away\twants\tto be free\t0.6\n");
        let r = t.infer("x tried to get away", Relation::Wants, 3).unwrap();
        assert_eq!(
            r.candidates,
            vec![InferenceCandidate {
                tail: "to be free".into(),
                likelihood: 0.6
            }]
        );
        assert_eq!(r.anchor_likelihood, 1.0);
    }

    #[test]
    fn missing_key_policies() {
        let t = table("a\twants\tb\t0.5\n");
        let r = t.infer("zzz", Relation::Wants, 3).unwrap();
        assert!(r.candidates.is_empty());
        assert_eq!(r.anchor_likelihood, 1.0);
        // the same event under the other relation is also missing
        assert!(t.infer("a", Relation::Needs, 3).unwrap().candidates.is_empty());

        let strict = t.with_missing_policy(MissingKeyPolicy::Error);
        assert!(matches!(
            strict.infer("zzz", Relation::Wants, 3),
            Err(InferenceError::MissingKey { .. })
        ));
        assert!(strict.anchor_probability("zzz", Relation::Wants).is_err());
    }

    #[test]
    fn k_truncates_to_best() {
        let t = table("e\twants\tlow\t0.1\ne\twants\thigh\t0.9\ne\twants\tmid\t0.5\n");
        let r = t.infer("e", Relation::Wants, 1).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.candidates[0].tail, "high");
        assert!(matches!(
            t.infer("e", Relation::Wants, 0),
            Err(InferenceError::Argument(_))
        ));
        assert!(matches!(
            t.infer("  ", Relation::Wants, 1),
            Err(InferenceError::Argument(_))
        ));
    }

    #[test]
    fn anchors() {
        let t = table("e\tneeds\tt\t0.5\t0.25\nf\tneeds\tt\t0.5\n");
        assert_eq!(t.anchor_probability("e", Relation::Needs).unwrap(), 0.25);
        assert_eq!(t.anchor_probability("e", Relation::Needs).unwrap(), 0.25);
        assert_eq!(t.anchor_probability("f", Relation::Needs).unwrap(), 1.0);
        assert_eq!(t.infer("e", Relation::Needs, 1).unwrap().anchor_likelihood, 0.25);
    }

    #[test]
    fn anchor_only_row() {
        let t = table("e\twants\t\t\t0.2\n");
        assert_eq!(t.anchor_probability("e", Relation::Wants).unwrap(), 0.2);
        assert!(t.infer("e", Relation::Wants, 3).unwrap().candidates.is_empty());
    }

    #[test]
    fn counts_rows_as_entries() {
        let t = table("# comment\nevent\trelation\ttail\tlikelihood\tanchor\na\twants\tb\t0.5\nb\twants\tc\t0.5\n\nc\tneeds\tb\t0.4\n");
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn validation_errors_name_the_row() {
        let err = KnowledgeTable::<f64>::parse("a\twants\tb\t0.5\na\twants\tc\t1.5\n").unwrap_err();
        assert!(matches!(err, InferenceError::Validation { row: 2, .. }), "{err}");
        let err = KnowledgeTable::<f64>::parse("a\twants\tb\t0\n").unwrap_err();
        assert!(matches!(err, InferenceError::Validation { row: 1, .. }));
        let err = KnowledgeTable::<f64>::parse("a\twants\tb\n").unwrap_err();
        assert!(matches!(err, InferenceError::Schema { row: 1, .. }));
        let err = KnowledgeTable::<f64>::parse("a\teffects\tb\t0.5\n").unwrap_err();
        assert!(matches!(err, InferenceError::Schema { row: 1, .. }));
        let err = KnowledgeTable::<f64>::parse("a\twants\tb\tmany\n").unwrap_err();
        assert!(matches!(err, InferenceError::Schema { row: 1, .. }));
        let err = KnowledgeTable::<f64>::parse("a\twants\tb\t0.5\t0.1\na\twants\tc\t0.5\t0.2\n").unwrap_err();
        assert!(matches!(err, InferenceError::Validation { row: 2, .. }));
    }

    #[test]
    fn duplicate_keys_merge_and_resort() {
        // Two rows with one key: candidates {b: 0.3} then {c: 0.7} merge to [c, b].
        let t = table("Walk home\twants\tb\t0.3\nwalk   home.\twants\tc\t0.7\n");
        assert_eq!(t.len(), 1);
        let r = t.infer("walk home", Relation::Wants, 5).unwrap();
        let tails: Vec<_> = r.candidates.iter().map(|c| (c.tail.as_str(), c.likelihood)).collect();
        assert_eq!(tails, [("c", 0.7), ("b", 0.3)]);
        // a repeated tail keeps its best score
        let t = table("a\twants\tb\t0.3\na\twants\tb\t0.6\n");
        assert_eq!(t.infer("a", Relation::Wants, 5).unwrap().candidates.len(), 1);
        assert_eq!(t.infer("a", Relation::Wants, 5).unwrap().candidates[0].likelihood, 0.6);
    }

    #[test]
    fn works_with_f32() {
        let t: KnowledgeTable<f32> = KnowledgeTable::parse("a\twants\tb\t0.5\n").unwrap();
        assert_eq!(
            t.infer("a", Relation::Wants, 1).unwrap().candidates[0].likelihood,
            0.5f32
        );
    }

    proptest! {
        #[test]
        fn smaller_k_is_a_prefix(scores in proptest::collection::vec(1u32..=1000, 1..12), k in 1usize..12, extra in 0usize..6) {
            let mut t = KnowledgeTable::<f64>::new();
            for (i, s) in scores.iter().enumerate() {
                t.insert("e", Relation::Wants, &format!("tail {i}"), *s as f64 / 1000.0).unwrap();
            }
            let small = t.infer("e", Relation::Wants, k).unwrap();
            let large = t.infer("e", Relation::Wants, k + extra).unwrap();
            prop_assert!(small.candidates.len() <= k);
            prop_assert_eq!(&small.candidates[..], &large.candidates[..small.candidates.len()]);
            prop_assert!(small.validate(k).is_ok());
            prop_assert_eq!(small, t.infer("e", Relation::Wants, k).unwrap());
        }
    }
}
