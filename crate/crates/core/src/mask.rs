//! Single-span corruption into `inputs`/`targets` training pairs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::Sentence;
use crate::salient::{resolve_salient, SalientKind, SalientSpan};
use crate::temporal::TemporalSpan;
use crate::text::{byte_index, char_len};

/// Placeholder substituted for the masked span.
pub const SENTINEL: &str = "_X_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Tsm,
    Ssm,
    Entities,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Tsm, Strategy::Ssm, Strategy::Entities];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Tsm => "tsm",
            Strategy::Ssm => "ssm",
            Strategy::Entities => "entities",
        }
    }

    /// Whether example selection draws from the seeded generator.
    pub fn needs_seed(self) -> bool {
        !matches!(self, Strategy::Tsm)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy {s:?} (expected tsm, ssm or entities)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskedExample {
    pub example_id: String,
    pub sent_id: String,
    pub strategy: Strategy,
    pub span_type: String,
    pub inputs: String,
    pub targets: String,
    pub span_start: usize,
    pub span_end: usize,
}

impl MaskedExample {
    /// The source sentence, recovered by filling the sentinel back in.
    pub fn reconstruct(&self) -> String {
        self.inputs.replacen(SENTINEL, &self.targets, 1)
    }
}

/// Replaces scalar range `[start, end)` of `text` with [`SENTINEL`].
/// Returns `(inputs, targets)`.
pub fn corrupt(text: &str, start: usize, end: usize) -> Result<(String, String)> {
    corrupt_named(&preview(text), text, start, end)
}

fn preview(text: &str) -> String {
    let mut p: String = text.chars().take(40).collect();
    if p.len() < text.len() {
        p.push('…');
    }
    format!("{p:?}")
}

fn corrupt_named(name: &str, text: &str, start: usize, end: usize) -> Result<(String, String)> {
    let bounds = || Error::SpanBounds {
        sent_id: name.to_owned(),
        start,
        end,
        len: char_len(text),
    };
    if start >= end {
        return Err(bounds());
    }
    let b0 = byte_index(text, start).ok_or_else(bounds)?;
    let b1 = b0 + byte_index(&text[b0..], end - start).ok_or_else(bounds)?;
    let mut inputs = String::with_capacity(text.len() - (b1 - b0) + SENTINEL.len());
    inputs.push_str(&text[..b0]);
    inputs.push_str(SENTINEL);
    inputs.push_str(&text[b1..]);
    Ok((inputs, text[b0..b1].to_owned()))
}

/// Why a sentence yields no examples regardless of its spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    OverLength,
    ContainsSentinel,
}

pub fn skip_reason(sentence: &Sentence) -> Option<SkipReason> {
    if sentence.over_length {
        Some(SkipReason::OverLength)
    } else if sentence.text.contains(SENTINEL) {
        Some(SkipReason::ContainsSentinel)
    } else {
        None
    }
}

/// Per-sentence seed so that selection does not depend on processing order.
pub fn sentence_seed(global_seed: u64, sent_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(sent_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

fn example(
    sentence: &Sentence,
    strategy: Strategy,
    id_suffix: &str,
    span_type: &str,
    start: usize,
    end: usize,
) -> Result<MaskedExample> {
    let (inputs, targets) = corrupt_named(&sentence.sent_id, &sentence.text, start, end)?;
    Ok(MaskedExample {
        example_id: format!("{}:{}{}", sentence.sent_id, strategy, id_suffix),
        sent_id: sentence.sent_id.clone(),
        strategy,
        span_type: span_type.to_owned(),
        inputs,
        targets,
        span_start: start,
        span_end: end,
    })
}

/// One example per temporal span, each masking exactly that span.
pub fn make_tsm_examples(
    sentence: &Sentence,
    spans: &[TemporalSpan],
) -> Result<Vec<MaskedExample>> {
    spans
        .iter()
        .enumerate()
        .map(|(k, span)| {
            example(
                sentence,
                Strategy::Tsm,
                &format!(":{k}"),
                span.kind.as_str(),
                span.start,
                span.end,
            )
        })
        .collect()
}

fn pick_one(
    sentence: &Sentence,
    strategy: Strategy,
    candidates: Vec<SalientSpan>,
    seed: u64,
) -> Result<Option<MaskedExample>> {
    let merged = resolve_salient(candidates);
    if merged.is_empty() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sentence_seed(seed, &sentence.sent_id));
    let chosen = &merged[rng.random_range(0..merged.len())];
    example(
        sentence,
        strategy,
        "",
        chosen.kind.as_str(),
        chosen.start,
        chosen.end,
    )
    .map(Some)
}

/// Merges entity and date spans, resolves overlaps, and masks one of them
/// chosen uniformly under the per-sentence seed.
pub fn make_ssm_example(
    sentence: &Sentence,
    entity_spans: &[SalientSpan],
    date_spans: &[SalientSpan],
    seed: u64,
) -> Result<Option<MaskedExample>> {
    let merged = entity_spans.iter().chain(date_spans).cloned().collect();
    pick_one(sentence, Strategy::Ssm, merged, seed)
}

/// SSM restricted to entity spans. Any span not of kind entity is ignored.
pub fn make_entities_example(
    sentence: &Sentence,
    entity_spans: &[SalientSpan],
    seed: u64,
) -> Result<Option<MaskedExample>> {
    let entities = entity_spans
        .iter()
        .filter(|s| s.kind == SalientKind::Entity)
        .cloned()
        .collect();
    pick_one(sentence, Strategy::Entities, entities, seed)
}
