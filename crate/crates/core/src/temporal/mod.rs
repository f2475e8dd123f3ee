//! Rule-based temporal expression tagging.
//!
//! Every rule in a [`RuleSet`] is run over the sentence; the resulting
//! candidates are reduced to a non-overlapping set by [`resolve_overlaps`].

mod rules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use rules::{Rule, RuleDef, RuleFile, RuleSet, DEFAULT_RULES};

use crate::error::Error;
use crate::ingest::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalType {
    Date,
    Duration,
    Set,
    Time,
}

impl TemporalType {
    pub const ALL: [TemporalType; 4] = [
        TemporalType::Date,
        TemporalType::Duration,
        TemporalType::Set,
        TemporalType::Time,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemporalType::Date => "date",
            TemporalType::Duration => "duration",
            TemporalType::Set => "set",
            TemporalType::Time => "time",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TemporalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemporalType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        TemporalType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown temporal type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalSpan {
    pub sent_id: String,
    #[serde(rename = "type")]
    pub kind: TemporalType,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub rule_id: String,
}

impl TemporalSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &TemporalSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A rule match before overlap resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub span: TemporalSpan,
    pub priority: i32,
    /// Position of the firing rule in its rule set; the final tie-break.
    pub order: usize,
}

/// Tags `text` with non-overlapping temporal spans sorted by start.
/// The returned spans carry an empty `sent_id`.
pub fn parse_temporal(text: &str, rules: &RuleSet) -> Vec<TemporalSpan> {
    let boundaries: Option<Vec<usize>> =
        (!text.is_ascii()).then(|| text.char_indices().map(|(b, _)| b).collect());
    let to_char = |byte: usize| match &boundaries {
        None => byte,
        Some(b) => b.partition_point(|&x| x < byte),
    };

    let mut candidates = Vec::new();
    for rule in rules.rules() {
        for m in rule.regex.find_iter(text) {
            if m.is_empty() {
                continue;
            }
            candidates.push(Candidate {
                span: TemporalSpan {
                    sent_id: String::new(),
                    kind: rule.def.kind,
                    start: to_char(m.start()),
                    end: to_char(m.end()),
                    surface: m.as_str().to_owned(),
                    rule_id: rule.def.rule_id.clone(),
                },
                priority: rule.def.priority,
                order: rule.order,
            });
        }
    }
    resolve_overlaps(candidates)
}

/// [`parse_temporal`] with the sentence id filled in.
pub fn parse_sentence(sentence: &Sentence, rules: &RuleSet) -> Vec<TemporalSpan> {
    let mut spans = parse_temporal(&sentence.text, rules);
    for span in &mut spans {
        span.sent_id.clone_from(&sentence.sent_id);
    }
    spans
}

/// Greedy selection: longer spans first, then higher priority, then the
/// leftmost, then the earlier rule. Output is non-overlapping and sorted.
pub fn resolve_overlaps(mut candidates: Vec<Candidate>) -> Vec<TemporalSpan> {
    candidates.sort_by(|a, b| {
        b.span
            .len()
            .cmp(&a.span.len())
            .then(b.priority.cmp(&a.priority))
            .then(a.span.start.cmp(&b.span.start))
            .then(a.order.cmp(&b.order))
    });
    let mut kept: Vec<TemporalSpan> = Vec::new();
    for candidate in candidates {
        // `kept` stays sorted by start, so only the neighbours can overlap.
        let idx = kept.partition_point(|s| s.start < candidate.span.start);
        let clashes_left = idx > 0 && kept[idx - 1].overlaps(&candidate.span);
        let clashes_right = idx < kept.len() && kept[idx].overlaps(&candidate.span);
        if !clashes_left && !clashes_right {
            kept.insert(idx, candidate.span);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(text: &str) -> Vec<(TemporalType, String)> {
        parse_temporal(text, RuleSet::builtin())
            .into_iter()
            .map(|s| (s.kind, s.surface))
            .collect()
    }

    fn candidate(
        surface: &str,
        kind: TemporalType,
        start: usize,
        end: usize,
        priority: i32,
    ) -> Candidate {
        Candidate {
            span: TemporalSpan {
                sent_id: String::new(),
                kind,
                start,
                end,
                surface: surface.into(),
                rule_id: format!("r{start}"),
            },
            priority,
            order: start,
        }
    }

    #[test]
    fn four_canonical_types() {
        use TemporalType::*;
        assert_eq!(
            tags("See you next Monday."),
            vec![(Time, "next Monday".into())]
        );
        assert_eq!(tags("It took 3 days."), vec![(Duration, "3 days".into())]);
        assert_eq!(
            tags("Elections are held every 4 years."),
            vec![(Set, "every 4 years".into())]
        );
        assert_eq!(
            tags("She was born on January 1."),
            vec![(Date, "January 1".into())]
        );
        assert!(tags("No temporal content here.").is_empty());
    }

    #[test]
    fn containment_keeps_longest() {
        use TemporalType::*;
        let got = resolve_overlaps(vec![
            candidate("1990", Date, 11, 15, 10),
            candidate("January 1, 1990", Date, 0, 15, 10),
        ]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].surface, "January 1, 1990");

        let got = resolve_overlaps(vec![
            candidate("4 years", Duration, 6, 13, 20),
            candidate("every 4 years", Set, 0, 13, 40),
        ]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].surface, "every 4 years");
        assert!(resolve_overlaps(Vec::new()).is_empty());
    }

    #[test]
    fn equal_length_ties() {
        use TemporalType::*;
        // Same extent: higher priority wins regardless of input order.
        let got = resolve_overlaps(vec![
            candidate("abc", Date, 0, 3, 1),
            candidate("abc", Time, 0, 3, 5),
        ]);
        assert_eq!(got[0].kind, Time);
        // Same length and priority, partial overlap: leftmost wins.
        let got = resolve_overlaps(vec![
            candidate("bcd", Date, 1, 4, 1),
            candidate("abc", Date, 0, 3, 1),
        ]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].start, 0);
    }

    #[test]
    fn disjoint_candidates_sorted() {
        use TemporalType::*;
        let got = resolve_overlaps(vec![
            candidate("x", Date, 10, 12, 1),
            candidate("y", Date, 0, 2, 1),
            candidate("z", Date, 5, 9, 1),
        ]);
        let starts: Vec<_> = got.iter().map(|s| s.start).collect();
        assert_eq!(starts, vec![0, 5, 10]);
    }

    #[test]
    fn non_ascii_offsets() {
        let text = "Zoë left in 1969 for three days.";
        let spans = parse_temporal(text, RuleSet::builtin());
        assert_eq!(spans.len(), 2);
        for s in &spans {
            assert_eq!(
                crate::text::char_slice(text, s.start, s.end),
                Some(s.surface.as_str())
            );
        }
        assert_eq!(spans[0].start, 12);
    }

    #[test]
    fn type_serialization() {
        assert_eq!(
            serde_json::to_string(&TemporalType::Duration).unwrap(),
            "\"duration\""
        );
        assert_eq!("set".parse::<TemporalType>().unwrap(), TemporalType::Set);
        assert!("era".parse::<TemporalType>().is_err());
    }
}
