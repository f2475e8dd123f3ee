//! Sentence-level span statistics.
//!
//! Every count is a number of sentences containing at least one span of the
//! given kind, not a number of spans.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::JsonlReader;
use crate::salient::{SalientKind, SalientSpan};
use crate::temporal::{TemporalSpan, TemporalType};

/// Which span kinds one sentence contains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SentenceFlags {
    temporal: u8,
    salient: u8,
}

impl SentenceFlags {
    pub fn with_temporal(mut self, t: TemporalType) -> Self {
        self.temporal |= 1 << t.index();
        self
    }

    pub fn with_salient(mut self, k: SalientKind) -> Self {
        self.salient |= 1 << k as u8;
        self
    }

    pub fn has_temporal(self, t: TemporalType) -> bool {
        self.temporal & (1 << t.index()) != 0
    }

    pub fn has_any_temporal(self) -> bool {
        self.temporal != 0
    }

    pub fn has_salient(self, k: SalientKind) -> bool {
        self.salient & (1 << k as u8) != 0
    }

    pub fn from_spans<'a>(
        temporal: impl IntoIterator<Item = &'a TemporalSpan>,
        salient: impl IntoIterator<Item = &'a SalientSpan>,
    ) -> Self {
        let mut f = SentenceFlags::default();
        for t in temporal {
            f = f.with_temporal(t.kind);
        }
        for s in salient {
            f = f.with_salient(s.kind);
        }
        f
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
    /// `numerator / denominator`, or 0 when the denominator is 0.
    pub value: f64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        let value = if denominator == 0 {
            0.0
        } else {
            numerator as f64 / denominator as f64
        };
        Fraction {
            numerator,
            denominator,
            value,
        }
    }

    pub fn percent(&self) -> String {
        format!("{:.2}%", self.value * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_sentences: u64,
    pub sentences_with_type: BTreeMap<TemporalType, u64>,
    pub sentences_with_any_temporal: u64,
    pub sentences_with_entity: u64,
    pub sentences_with_regex_date: u64,
    pub sentences_with_salient: u64,
    /// Sentences containing both a salient kind and a temporal type.
    pub cooccurrence: BTreeMap<SalientKind, BTreeMap<TemporalType, u64>>,
    /// Entity-bearing sentences with at least one temporal span of any type.
    pub fraction_entity_sentences_with_temporal: Fraction,
    /// The same over sentences with any salient span, i.e. one per SSM example.
    pub fraction_salient_sentences_with_temporal: Fraction,
}

impl Default for CorpusStats {
    fn default() -> Self {
        let per_type = || {
            TemporalType::ALL
                .into_iter()
                .map(|t| (t, 0))
                .collect::<BTreeMap<_, _>>()
        };
        CorpusStats {
            total_sentences: 0,
            sentences_with_type: per_type(),
            sentences_with_any_temporal: 0,
            sentences_with_entity: 0,
            sentences_with_regex_date: 0,
            sentences_with_salient: 0,
            cooccurrence: SalientKind::ALL
                .into_iter()
                .map(|k| (k, per_type()))
                .collect(),
            fraction_entity_sentences_with_temporal: Fraction::default(),
            fraction_salient_sentences_with_temporal: Fraction::default(),
        }
    }
}

impl CorpusStats {
    pub fn add_sentence(&mut self, flags: SentenceFlags) {
        self.total_sentences += 1;
        let any_temporal = flags.has_any_temporal();
        if any_temporal {
            self.sentences_with_any_temporal += 1;
        }
        for t in TemporalType::ALL {
            if flags.has_temporal(t) {
                *self.sentences_with_type.entry(t).or_default() += 1;
            }
        }
        let entity = flags.has_salient(SalientKind::Entity);
        let date = flags.has_salient(SalientKind::RegexDate);
        self.sentences_with_entity += entity as u64;
        self.sentences_with_regex_date += date as u64;
        self.sentences_with_salient += (entity || date) as u64;
        for k in SalientKind::ALL {
            if !flags.has_salient(k) {
                continue;
            }
            let row = self.cooccurrence.entry(k).or_default();
            for t in TemporalType::ALL {
                if flags.has_temporal(t) {
                    *row.entry(t).or_default() += 1;
                }
            }
        }
        let f = &mut self.fraction_entity_sentences_with_temporal;
        *f = Fraction::new(
            f.numerator + (entity && any_temporal) as u64,
            self.sentences_with_entity,
        );
        let f = &mut self.fraction_salient_sentences_with_temporal;
        *f = Fraction::new(
            f.numerator + ((entity || date) && any_temporal) as u64,
            self.sentences_with_salient,
        );
    }

    /// Combines counts from disjoint shards.
    pub fn merge(&mut self, other: &CorpusStats) {
        self.total_sentences += other.total_sentences;
        self.sentences_with_any_temporal += other.sentences_with_any_temporal;
        for (t, n) in &other.sentences_with_type {
            *self.sentences_with_type.entry(*t).or_default() += n;
        }
        self.sentences_with_entity += other.sentences_with_entity;
        self.sentences_with_regex_date += other.sentences_with_regex_date;
        self.sentences_with_salient += other.sentences_with_salient;
        for (k, row) in &other.cooccurrence {
            let mine = self.cooccurrence.entry(*k).or_default();
            for (t, n) in row {
                *mine.entry(*t).or_default() += n;
            }
        }
        self.fraction_entity_sentences_with_temporal = Fraction::new(
            self.fraction_entity_sentences_with_temporal.numerator
                + other.fraction_entity_sentences_with_temporal.numerator,
            self.sentences_with_entity,
        );
        self.fraction_salient_sentences_with_temporal = Fraction::new(
            self.fraction_salient_sentences_with_temporal.numerator
                + other.fraction_salient_sentences_with_temporal.numerator,
            self.sentences_with_salient,
        );
    }

    pub fn type_count(&self, t: TemporalType) -> u64 {
        self.sentences_with_type.get(&t).copied().unwrap_or(0)
    }

    pub fn cooccurrence_count(&self, k: SalientKind, t: TemporalType) -> u64 {
        self.cooccurrence
            .get(&k)
            .and_then(|r| r.get(&t))
            .copied()
            .unwrap_or(0)
    }

    /// Temporal types from most to least frequent; ties keep type order.
    pub fn type_ranking(&self) -> Vec<(TemporalType, u64)> {
        let mut ranked: Vec<_> = TemporalType::ALL
            .iter()
            .map(|&t| (t, self.type_count(t)))
            .collect();
        ranked.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
        ranked
    }

    /// A warning when dates are not the most frequent temporal type, which
    /// is unusual for encyclopedic text.
    pub fn ordering_warning(&self) -> Option<String> {
        let date = self.type_count(TemporalType::Date);
        let top = self.type_ranking()[0];
        (top.0 != TemporalType::Date && top.1 > date).then(|| {
            format!(
                "date is not the most frequent temporal type: {} sentences have {} spans vs {} with date",
                top.1, top.0, date
            )
        })
    }

    /// Human-readable table: rows are temporal types, columns salient kinds.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>14} {:>14} {:>14}",
            "Temporal", "Sentences", "Named Entity", "Date"
        );
        for t in TemporalType::ALL {
            let _ = writeln!(
                out,
                "{:<10} {:>14} {:>14} {:>14}",
                t.as_str(),
                self.type_count(t),
                self.cooccurrence_count(SalientKind::Entity, t),
                self.cooccurrence_count(SalientKind::RegexDate, t),
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Sentences: {}", self.total_sentences);
        let _ = writeln!(
            out,
            "Sentences with any temporal span: {}",
            self.sentences_with_any_temporal
        );
        let _ = writeln!(
            out,
            "Sentences with at least one named entity: {}",
            self.sentences_with_entity
        );
        let _ = writeln!(
            out,
            "Sentences with at least one date: {}",
            self.sentences_with_regex_date
        );
        let f = &self.fraction_entity_sentences_with_temporal;
        let _ = writeln!(
            out,
            "Entity sentences with a temporal span: {}/{} ({})",
            f.numerator,
            f.denominator,
            f.percent()
        );
        let f = &self.fraction_salient_sentences_with_temporal;
        let _ = writeln!(
            out,
            "Salient sentences with a temporal span: {}/{} ({})",
            f.numerator,
            f.denominator,
            f.percent()
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Counts span kinds per sentence in a single pass over the sentence ids.
///
/// Spans are folded into per-sentence flags first; any span whose sentence
/// never appears is reported as dangling.
pub fn compute_stats<I, S>(
    sent_ids: I,
    temporal: impl IntoIterator<Item = TemporalSpan>,
    salient: impl IntoIterator<Item = SalientSpan>,
) -> Result<CorpusStats>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut flags: HashMap<String, SentenceFlags> = HashMap::new();
    for t in temporal {
        let f = flags.entry(t.sent_id).or_default();
        *f = f.with_temporal(t.kind);
    }
    for s in salient {
        let f = flags.entry(s.sent_id).or_default();
        *f = f.with_salient(s.kind);
    }
    let mut stats = CorpusStats::default();
    for id in sent_ids {
        stats.add_sentence(flags.remove(id.as_ref()).unwrap_or_default());
    }
    if !flags.is_empty() {
        let mut dangling: Vec<String> = flags.into_keys().collect();
        dangling.sort();
        return Err(Error::DanglingSentences(dangling));
    }
    Ok(stats)
}

#[derive(Deserialize)]
struct SentIdOnly {
    sent_id: String,
}

/// [`compute_stats`] over jsonl files of sentences, temporal spans and
/// salient spans.
pub fn compute_stats_files(
    sentences: &Path,
    temporal: &Path,
    salient: &Path,
) -> Result<CorpusStats> {
    let temporal: Vec<TemporalSpan> = JsonlReader::open(temporal)?
        .map(|r| r.map(|(_, s)| s))
        .collect::<Result<_>>()?;
    let salient: Vec<SalientSpan> = JsonlReader::open(salient)?
        .map(|r| r.map(|(_, s)| s))
        .collect::<Result<_>>()?;
    let mut ids = Vec::new();
    for r in JsonlReader::<_, SentIdOnly>::open(sentences)? {
        ids.push(r?.1.sent_id);
    }
    compute_stats(ids, temporal, salient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::salient::SpanSource;

    fn t(sent: &str, kind: TemporalType) -> TemporalSpan {
        TemporalSpan {
            sent_id: sent.into(),
            kind,
            start: 0,
            end: 1,
            surface: "x".into(),
            rule_id: "r".into(),
        }
    }

    fn s(sent: &str, kind: SalientKind) -> SalientSpan {
        SalientSpan {
            sent_id: sent.into(),
            kind,
            start: 0,
            end: 1,
            surface: "x".into(),
            label: None,
            source: SpanSource::Annotation,
        }
    }

    #[test]
    fn two_sentence_example() {
        let stats = compute_stats(
            ["a", "b"],
            vec![t("a", TemporalType::Date)],
            vec![s("a", SalientKind::Entity)],
        )
        .unwrap();
        assert_eq!(stats.total_sentences, 2);
        assert_eq!(stats.type_count(TemporalType::Date), 1);
        assert_eq!(stats.sentences_with_entity, 1);
        assert_eq!(
            stats.cooccurrence_count(SalientKind::Entity, TemporalType::Date),
            1
        );
        assert_eq!(stats.fraction_entity_sentences_with_temporal.value, 1.0);

        let table = stats.render_table();
        let date_row = table.lines().find(|l| l.starts_with("date")).unwrap();
        assert_eq!(
            date_row.split_whitespace().collect::<Vec<_>>(),
            vec!["date", "1", "1", "0"]
        );
        for row in ["duration", "set", "time"] {
            let line = table.lines().find(|l| l.starts_with(row)).unwrap();
            assert_eq!(
                line.split_whitespace().skip(1).collect::<Vec<_>>(),
                vec!["0", "0", "0"]
            );
        }
    }

    #[test]
    fn empty_corpus() {
        let stats = compute_stats(Vec::<String>::new(), vec![], vec![]).unwrap();
        assert_eq!(stats, CorpusStats::default());
        assert_eq!(stats.fraction_entity_sentences_with_temporal.value, 0.0);
        assert!(stats.render_table().contains("(0.00%)"));
    }

    #[test]
    fn counts_sentences_not_spans() {
        let stats = compute_stats(
            ["a"],
            vec![t("a", TemporalType::Date), t("a", TemporalType::Date)],
            vec![
                s("a", SalientKind::RegexDate),
                s("a", SalientKind::RegexDate),
            ],
        )
        .unwrap();
        assert_eq!(stats.type_count(TemporalType::Date), 1);
        assert_eq!(stats.sentences_with_regex_date, 1);
        assert_eq!(
            stats.fraction_salient_sentences_with_temporal,
            Fraction::new(1, 1)
        );
        assert_eq!(
            stats.fraction_entity_sentences_with_temporal,
            Fraction::new(0, 0)
        );
    }

    #[test]
    fn dangling_ids_are_listed() {
        let err = compute_stats(
            ["a"],
            vec![t("zz", TemporalType::Time)],
            vec![s("yy", SalientKind::Entity)],
        )
        .unwrap_err();
        match err {
            Error::DanglingSentences(ids) => assert_eq!(ids, vec!["yy", "zz"]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn merge_is_commutative_and_matches_whole() {
        let sents: Vec<String> = (0..12).map(|i| format!("s{i}")).collect();
        let spans_t: Vec<_> = (0..12)
            .filter(|i| i % 2 == 0)
            .map(|i| t(&format!("s{i}"), TemporalType::ALL[i % 4]))
            .collect();
        let spans_s: Vec<_> = (0..12)
            .filter(|i| i % 3 == 0)
            .map(|i| s(&format!("s{i}"), SalientKind::ALL[i % 2]))
            .collect();
        let whole = compute_stats(&sents, spans_t.clone(), spans_s.clone()).unwrap();
        let part = |range: std::ops::Range<usize>| {
            let ids: Vec<_> = sents[range].to_vec();
            let keep = |id: &str| ids.iter().any(|x| x == id);
            compute_stats(
                &ids,
                spans_t.iter().filter(|x| keep(&x.sent_id)).cloned(),
                spans_s.iter().filter(|x| keep(&x.sent_id)).cloned(),
            )
            .unwrap()
        };
        let (a, b) = (part(0..5), part(5..12));
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab, whole);
    }

    #[test]
    fn json_round_trip() {
        let stats = compute_stats(
            ["a", "b", "c"],
            vec![t("a", TemporalType::Set), t("b", TemporalType::Date)],
            vec![s("a", SalientKind::Entity), s("c", SalientKind::Entity)],
        )
        .unwrap();
        let back: CorpusStats = serde_json::from_str(&stats.to_json()).unwrap();
        assert_eq!(back, stats);
        assert_eq!(
            stats.fraction_entity_sentences_with_temporal,
            Fraction::new(1, 2)
        );
    }

    #[test]
    fn ordering_warning() {
        let stats = compute_stats(
            ["a", "b"],
            vec![
                t("a", TemporalType::Duration),
                t("b", TemporalType::Duration),
            ],
            vec![],
        )
        .unwrap();
        assert!(stats.ordering_warning().is_some());
        let stats = compute_stats(["a"], vec![t("a", TemporalType::Date)], vec![]).unwrap();
        assert!(stats.ordering_warning().is_none());
    }
}
