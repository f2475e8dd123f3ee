//! Browser bindings for the demo page. Every export takes plain strings and
//! numbers and returns a JSON string.

use serde::Serialize;
use tempspan_core::ingest::{segment_sentences, Document};
use tempspan_core::mask::{MaskedExample, Strategy};
use tempspan_core::mixture::{Apportionment, Weight};
use tempspan_core::pipeline::DocProcessor;
use tempspan_core::temporal::{parse_sentence, RuleSet, TemporalSpan};
use wasm_bindgen::prelude::*;

pub const MAX_SCHEDULE: u32 = 10_000;

#[derive(Serialize)]
struct SentenceView {
    start: usize,
    end: usize,
    spans: Vec<TemporalSpan>,
}

#[derive(Serialize)]
struct Parsed {
    /// Normalized text; all offsets count its Unicode scalars.
    text: String,
    sentences: Vec<SentenceView>,
}

#[derive(Serialize)]
struct Masked {
    examples: Vec<MaskedExample>,
    skipped: u64,
}

#[derive(Serialize)]
struct Schedule {
    picks: Vec<usize>,
    counts: Vec<u128>,
    /// Largest |count - n * w / W| over all prefixes and components.
    max_deviation: f64,
}

/// Tags temporal spans. Span offsets are document-level.
pub fn parse_json(text: &str) -> String {
    let doc = Document::new("demo", "", text);
    let rules = RuleSet::builtin();
    let sentences = segment_sentences(&doc)
        .into_iter()
        .map(|s| {
            let spans = parse_sentence(&s, rules)
                .into_iter()
                .map(|mut t| {
                    t.start += s.start;
                    t.end += s.start;
                    t
                })
                .collect();
            SentenceView {
                start: s.start,
                end: s.end,
                spans,
            }
        })
        .collect();
    serde_json::to_string(&Parsed {
        text: doc.text,
        sentences,
    })
    .expect("plain data serializes")
}

/// Builds examples for one strategy with heuristic entity spans.
pub fn mask_json(text: &str, strategy: &str, seed: u64) -> Result<String, String> {
    let strategy: Strategy = strategy
        .parse()
        .map_err(|e: tempspan_core::Error| e.to_string())?;
    let doc = Document::new("demo", "", text);
    let strategies = [strategy];
    let processor = DocProcessor::new(RuleSet::builtin(), None, true, &strategies, seed, false);
    let mut out = processor.process(&doc);
    if let Some(e) = out.error {
        return Err(e.to_string());
    }
    let masked = Masked {
        examples: out.examples.swap_remove(0),
        skipped: out.counts.sentences_over_length + out.counts.sentences_with_sentinel,
    };
    Ok(serde_json::to_string(&masked).expect("plain data serializes"))
}

/// First `n` picks of the interleaving schedule for comma-separated weights
/// such as `3,1` or `1/2, 0.25`.
pub fn mix_schedule_json(weights: &str, n: u32) -> Result<String, String> {
    if n > MAX_SCHEDULE {
        return Err(format!("at most {MAX_SCHEDULE} steps"));
    }
    let weights: Vec<Weight> = weights
        .split(',')
        .map(|w| w.trim().parse::<Weight>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let schedule = Apportionment::from_ratios(&weights).map_err(|e| e.to_string())?;
    let total: f64 = weights.iter().map(ratio_f64).sum();
    let mut counts = vec![0u128; weights.len()];
    let mut picks = Vec::with_capacity(n as usize);
    let mut max_deviation = 0.0f64;
    for (step, idx) in schedule.take(n as usize).enumerate() {
        counts[idx] += 1;
        picks.push(idx);
        for (c, w) in counts.iter().zip(&weights) {
            let expected = (step + 1) as f64 * ratio_f64(w) / total;
            max_deviation = max_deviation.max((*c as f64 - expected).abs());
        }
    }
    Ok(serde_json::to_string(&Schedule {
        picks,
        counts,
        max_deviation,
    })
    .expect("plain data serializes"))
}

fn ratio_f64(w: &Weight) -> f64 {
    *w.0.numer() as f64 / *w.0.denom() as f64
}

#[wasm_bindgen]
pub fn parse(text: &str) -> String {
    parse_json(text)
}

#[wasm_bindgen]
pub fn mask(text: &str, strategy: &str, seed: u64) -> Result<String, JsValue> {
    mask_json(text, strategy, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mix_schedule(weights: &str, n: u32) -> Result<String, JsValue> {
    mix_schedule_json(weights, n).map_err(|e| JsValue::from_str(&e))
}
