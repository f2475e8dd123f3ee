//! Salient spans: regex-detected dates and named entities.
//!
//! Entities normally come from an external NER annotation file. When none is
//! available [`heuristic_entities`] approximates them with capitalization
//! runs; spans produced that way are tagged [`SpanSource::Heuristic`].

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Sentence;
use crate::jsonl::{self, JsonlReader};
use crate::temporal::{parse_temporal, RuleSet, TemporalType};
use crate::text::{char_len, char_slice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SalientKind {
    Entity,
    RegexDate,
}

impl SalientKind {
    pub const ALL: [SalientKind; 2] = [SalientKind::Entity, SalientKind::RegexDate];

    pub fn as_str(self) -> &'static str {
        match self {
            SalientKind::Entity => "entity",
            SalientKind::RegexDate => "regex_date",
        }
    }
}

/// Where a salient span came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanSource {
    Annotation,
    /// Capitalization heuristic; approximate.
    Heuristic,
    Regex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SalientSpan {
    pub sent_id: String,
    pub kind: SalientKind,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub source: SpanSource,
}

impl SalientSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// Longest first, entities before dates on ties, then leftmost.
/// Output is non-overlapping and sorted by start.
pub fn resolve_salient(mut spans: Vec<SalientSpan>) -> Vec<SalientSpan> {
    spans.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(a.kind.cmp(&b.kind))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<SalientSpan> = Vec::with_capacity(spans.len());
    for span in spans {
        if kept.iter().all(|k| !k.overlaps(span.start, span.end)) {
            kept.push(span);
        }
    }
    kept.sort_by_key(|s| s.start);
    kept
}

/// Regex dates under the built-in grammar.
pub fn detect_dates(text: &str) -> Vec<SalientSpan> {
    detect_dates_with(text, RuleSet::builtin())
}

/// Date spans produced by the rules flagged `salient_date`.
///
/// Detection runs the whole rule set and keeps only those spans, so the
/// result is always a subset of the temporal tagger's date output.
pub fn detect_dates_with(text: &str, rules: &RuleSet) -> Vec<SalientSpan> {
    parse_temporal(text, rules)
        .into_iter()
        .filter(|s| s.kind == TemporalType::Date && rules.is_salient_date(&s.rule_id))
        .map(|s| SalientSpan {
            sent_id: s.sent_id,
            kind: SalientKind::RegexDate,
            start: s.start,
            end: s.end,
            surface: s.surface,
            label: None,
            source: SpanSource::Regex,
        })
        .collect()
}

const TEMPORAL_NAMES: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
    "jan",
    "feb",
    "mar",
    "apr",
    "jun",
    "jul",
    "aug",
    "sep",
    "sept",
    "oct",
    "nov",
    "dec",
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
    "mondays",
    "tuesdays",
    "wednesdays",
    "thursdays",
    "fridays",
    "saturdays",
    "sundays",
    "today",
    "tomorrow",
    "yesterday",
];

/// Capitalized words that commonly open a sentence without naming anything.
const INITIAL_FUNCTION_WORDS: &[&str] = &[
    "A", "After", "Although", "An", "And", "As", "At", "Because", "Before", "But", "By", "During",
    "Each", "Every", "For", "From", "He", "Her", "Here", "His", "How", "However", "If", "In", "It",
    "Its", "Many", "Most", "My", "No", "Of", "On", "One", "Or", "Our", "She", "Since", "Some",
    "That", "The", "Their", "There", "These", "They", "This", "Those", "Though", "To", "Under",
    "Unlike", "We", "What", "When", "Where", "While", "With", "You", "Your",
];

struct Token {
    start: usize,
    end: usize,
    text: String,
}

fn tokenize(chars: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i];
            let joiner = matches!(c, '\'' | '’' | '-')
                && i + 1 < chars.len()
                && chars[i + 1].is_alphanumeric();
            if c.is_alphanumeric() || (joiner && i > start) {
                i += 1;
            } else {
                break;
            }
        }
        tokens.push(Token {
            start,
            end: i,
            text: chars[start..i].iter().collect(),
        });
    }
    tokens
}

fn is_name_token(token: &Token) -> bool {
    let first = token.text.chars().next().unwrap_or(' ');
    first.is_uppercase()
        && token.text != "I"
        && !TEMPORAL_NAMES.contains(&token.text.to_lowercase().as_str())
}

/// Approximate entity spans: maximal runs of capitalized words separated by
/// single spaces.
///
/// Month, weekday and relative-day names break runs. A run made only of the
/// sentence-initial word is dropped, and a leading sentence-initial function
/// word ("The", "In", ...) is trimmed from a longer run.
pub fn heuristic_entities(text: &str) -> Vec<SalientSpan> {
    let chars: Vec<char> = text.chars().collect();
    let tokens = tokenize(&chars);
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_name_token(&tokens[i]) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < tokens.len()
            && is_name_token(&tokens[j])
            && tokens[j].start == tokens[j - 1].end + 1
            && chars[tokens[j - 1].end] == ' '
        {
            j += 1;
        }
        let mut first = i;
        if i == 0 {
            if j - i == 1 {
                i = j;
                continue;
            }
            if INITIAL_FUNCTION_WORDS.contains(&tokens[0].text.as_str()) {
                first = 1;
            }
        }
        let (start, end) = (tokens[first].start, tokens[j - 1].end);
        out.push(SalientSpan {
            sent_id: String::new(),
            kind: SalientKind::Entity,
            start,
            end,
            surface: chars[start..end].iter().collect(),
            label: None,
            source: SpanSource::Heuristic,
        });
        i = j;
    }
    out
}

fn with_sent_id(mut spans: Vec<SalientSpan>, sent_id: &str) -> Vec<SalientSpan> {
    for s in &mut spans {
        s.sent_id = sent_id.to_owned();
    }
    spans
}

pub fn sentence_dates(sentence: &Sentence, rules: &RuleSet) -> Vec<SalientSpan> {
    with_sent_id(detect_dates_with(&sentence.text, rules), &sentence.sent_id)
}

pub fn sentence_heuristic_entities(sentence: &Sentence) -> Vec<SalientSpan> {
    with_sent_id(heuristic_entities(&sentence.text), &sentence.sent_id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSpan {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// One line of an entity annotation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sent_id: String,
    pub spans: Vec<AnnotatedSpan>,
}

/// Entity annotations keyed by sentence id, not yet checked against text.
#[derive(Debug, Clone, Default)]
pub struct RawAnnotations {
    records: HashMap<String, Vec<AnnotatedSpan>>,
    /// Records rejected while reading (parse errors, duplicate ids).
    pub skipped: usize,
}

impl RawAnnotations {
    pub fn read(path: &Path, strict: bool) -> Result<Self> {
        let mut out = RawAnnotations::default();
        for item in JsonlReader::<_, AnnotationRecord>::open(path)? {
            let record = match item {
                Ok((_, record)) => record,
                Err(e) if !strict && matches!(e, Error::Record { .. }) => {
                    log::warn!("skipping annotation record: {e}");
                    out.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if out.records.contains_key(&record.sent_id) {
                let err = Error::Config(format!("duplicate annotation for {}", record.sent_id));
                if strict {
                    return Err(err);
                }
                log::warn!("{err}");
                out.skipped += 1;
                continue;
            }
            out.records.insert(record.sent_id, record.spans);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, sent_id: &str) -> bool {
        self.records.contains_key(sent_id)
    }

    pub fn sent_ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Validates the annotation for one sentence. Returns `None` when the
    /// sentence has no record, otherwise the resolved entity spans plus one
    /// error per rejected span.
    pub fn resolve(&self, sent_id: &str, text: &str) -> Option<(Vec<SalientSpan>, Vec<Error>)> {
        let raw = self.records.get(sent_id)?;
        let len = char_len(text);
        let mut spans = Vec::with_capacity(raw.len());
        let mut errors = Vec::new();
        for a in raw {
            match (a.start < a.end && a.end <= len).then(|| char_slice(text, a.start, a.end)) {
                Some(Some(surface)) => spans.push(SalientSpan {
                    sent_id: sent_id.to_owned(),
                    kind: SalientKind::Entity,
                    start: a.start,
                    end: a.end,
                    surface: surface.to_owned(),
                    label: a.label.clone(),
                    source: SpanSource::Annotation,
                }),
                _ => errors.push(Error::SpanBounds {
                    sent_id: sent_id.to_owned(),
                    start: a.start,
                    end: a.end,
                    len,
                }),
            }
        }
        Some((resolve_salient(spans), errors))
    }
}

/// Entity spans per sentence after validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityAnnotations {
    pub spans: BTreeMap<String, Vec<SalientSpan>>,
    /// Rejected records and spans.
    pub errors: usize,
}

/// Loads and validates an annotation file against sentence texts.
///
/// Unknown sentence ids and out-of-bounds spans are counted and skipped, or
/// returned as the first error in strict mode.
pub fn load_entity_annotations(
    path: &Path,
    sentences: &HashMap<String, String>,
    strict: bool,
) -> Result<EntityAnnotations> {
    let raw = RawAnnotations::read(path, strict)?;
    let mut out = EntityAnnotations {
        errors: raw.skipped,
        ..Default::default()
    };
    let mut ids: Vec<&str> = raw.sent_ids().collect();
    ids.sort_unstable();
    for sent_id in ids {
        let Some(text) = sentences.get(sent_id) else {
            if strict {
                return Err(Error::DanglingSentences(vec![sent_id.to_owned()]));
            }
            log::warn!("annotation for unknown sentence {sent_id}");
            out.errors += 1;
            continue;
        };
        let (spans, errors) = raw.resolve(sent_id, text).expect("id taken from raw");
        out.errors += errors.len();
        if let (true, Some(first)) = (strict, errors.into_iter().next()) {
            return Err(first);
        }
        out.spans.insert(sent_id.to_owned(), spans);
    }
    Ok(out)
}

/// Writes spans back out in the annotation file format.
pub fn write_entity_annotations(
    path: &Path,
    spans: &BTreeMap<String, Vec<SalientSpan>>,
) -> Result<()> {
    let mut writer = jsonl::create(path)?;
    for (sent_id, list) in spans {
        writer.write(&AnnotationRecord {
            sent_id: sent_id.clone(),
            spans: list
                .iter()
                .map(|s| AnnotatedSpan {
                    start: s.start,
                    end: s.end,
                    label: s.label.clone(),
                })
                .collect(),
        })?;
    }
    writer.finish()?;
    Ok(())
}
