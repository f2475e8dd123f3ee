#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tempspan_core::ingest::Sentence;
use tempspan_core::salient::{SalientKind, SalientSpan, SpanSource};
use tempspan_core::temporal::{TemporalSpan, TemporalType};

/// The core crate directory; this module is also compiled into sibling crates.
fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

pub fn data(name: &str) -> PathBuf {
    core_dir().join("tests/data").join(name)
}

pub fn sample_path() -> PathBuf {
    core_dir().join("../../data/sample/encyclopedia.jsonl")
}

#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct GoldTemporal {
    #[serde(rename = "type")]
    pub kind: TemporalType,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GoldEntity {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub surface: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GoldSentence {
    pub id: String,
    pub text: String,
    pub temporal: Vec<GoldTemporal>,
    pub entities: Vec<GoldEntity>,
}

impl GoldSentence {
    pub fn sentence(&self) -> Sentence {
        Sentence {
            sent_id: format!("{}:0", self.id),
            doc_id: self.id.clone(),
            ordinal: 0,
            text: self.text.clone(),
            start: 0,
            end: self.text.chars().count(),
            over_length: false,
        }
    }

    pub fn entity_spans(&self) -> Vec<SalientSpan> {
        self.entities
            .iter()
            .map(|e| SalientSpan {
                sent_id: format!("{}:0", self.id),
                kind: SalientKind::Entity,
                start: e.start,
                end: e.end,
                surface: e.surface.clone(),
                label: Some(e.label.clone()),
                source: SpanSource::Annotation,
            })
            .collect()
    }
}

pub fn golden() -> Vec<GoldSentence> {
    std::fs::read_to_string(data("golden.jsonl"))
        .expect("golden corpus present")
        .lines()
        .map(|l| serde_json::from_str(l).expect("golden line parses"))
        .collect()
}

/// Brute-force sentence-level recount: every sentence scans the full span
/// lists. Quadratic on purpose.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub total: u64,
    pub with_type: BTreeMap<TemporalType, u64>,
    pub with_any_temporal: u64,
    pub with_entity: u64,
    pub with_regex_date: u64,
    pub with_salient: u64,
    pub cooccurrence: BTreeMap<(SalientKind, TemporalType), u64>,
    pub entity_with_temporal: u64,
    pub salient_with_temporal: u64,
}

pub fn oracle(
    sent_ids: &[String],
    temporal: &[TemporalSpan],
    salient: &[SalientSpan],
) -> OracleCounts {
    let mut o = OracleCounts {
        total: sent_ids.len() as u64,
        ..Default::default()
    };
    let unique: BTreeSet<&String> = sent_ids.iter().collect();
    assert_eq!(unique.len(), sent_ids.len(), "oracle expects unique ids");
    for id in sent_ids {
        let mut types = [false; 4];
        let (mut ent, mut date) = (false, false);
        for s in temporal.iter().filter(|s| &s.sent_id == id) {
            types[TemporalType::ALL.iter().position(|t| *t == s.kind).unwrap()] = true;
        }
        for s in salient.iter().filter(|s| &s.sent_id == id) {
            match s.kind {
                SalientKind::Entity => ent = true,
                SalientKind::RegexDate => date = true,
            }
        }
        let any_t = types.iter().any(|b| *b);
        for (t, present) in TemporalType::ALL.into_iter().zip(types) {
            if !present {
                continue;
            }
            *o.with_type.entry(t).or_default() += 1;
            for (k, has) in [(SalientKind::Entity, ent), (SalientKind::RegexDate, date)] {
                if has {
                    *o.cooccurrence.entry((k, t)).or_default() += 1;
                }
            }
        }
        o.with_any_temporal += u64::from(any_t);
        o.with_entity += u64::from(ent);
        o.with_regex_date += u64::from(date);
        o.with_salient += u64::from(ent || date);
        o.entity_with_temporal += u64::from(ent && any_t);
        o.salient_with_temporal += u64::from((ent || date) && any_t);
    }
    o
}

/// Lists every field where `stats` disagrees with the oracle.
pub fn stats_mismatches(stats: &tempspan_core::CorpusStats, o: &OracleCounts) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |name: String, got: u64, want: u64| {
        if got != want {
            bad.push(format!("{name}: got {got}, oracle {want}"));
        }
    };
    check("total".into(), stats.total_sentences, o.total);
    check(
        "any_temporal".into(),
        stats.sentences_with_any_temporal,
        o.with_any_temporal,
    );
    check("entity".into(), stats.sentences_with_entity, o.with_entity);
    check(
        "regex_date".into(),
        stats.sentences_with_regex_date,
        o.with_regex_date,
    );
    check(
        "salient".into(),
        stats.sentences_with_salient,
        o.with_salient,
    );
    for t in TemporalType::ALL {
        check(
            format!("type {t}"),
            stats.type_count(t),
            o.with_type.get(&t).copied().unwrap_or(0),
        );
        for k in [SalientKind::Entity, SalientKind::RegexDate] {
            check(
                format!("{} x {t}", k.as_str()),
                stats.cooccurrence_count(k, t),
                o.cooccurrence.get(&(k, t)).copied().unwrap_or(0),
            );
        }
    }
    let f = &stats.fraction_entity_sentences_with_temporal;
    check(
        "entity fraction numerator".into(),
        f.numerator,
        o.entity_with_temporal,
    );
    check(
        "entity fraction denominator".into(),
        f.denominator,
        o.with_entity,
    );
    let g = &stats.fraction_salient_sentences_with_temporal;
    check(
        "salient fraction numerator".into(),
        g.numerator,
        o.salient_with_temporal,
    );
    check(
        "salient fraction denominator".into(),
        g.denominator,
        o.with_salient,
    );
    let want = if o.with_entity == 0 {
        0.0
    } else {
        o.entity_with_temporal as f64 / o.with_entity as f64
    };
    if f.value.to_bits() != want.to_bits() {
        bad.push(format!(
            "entity fraction value: got {:?}, oracle {want:?}",
            f.value
        ));
    }
    bad
}
