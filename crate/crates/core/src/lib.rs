//! Data construction for temporal and salient span masking.
//!
//! The crate turns raw document text into single-span masked-language-model
//! training examples:
//!
//! * **TSM** masks one temporal expression (date, duration, set or time) per
//!   example, so a sentence with four temporal spans yields four examples.
//! * **SSM** masks one salient span (a named entity or a regex-detected date)
//!   per sentence.
//! * **Entities** is SSM with every regex-detected date removed.
//!
//! The pipeline is `ingest` (documents to sentences), `temporal` (rule-based
//! tagging), `salient` (date regex and entity spans), `mask` (corruption into
//! `inputs`/`targets` pairs), `mixture` (proportional interleaving of example
//! streams) and `stats` (sentence-level span statistics). [`pipeline`] wires
//! them together.
//!
//! All character offsets are counted in Unicode scalar values.

pub mod error;
pub mod ingest;
pub mod jsonl;
pub mod mask;
pub mod mixture;
pub mod pipeline;
pub mod salient;
pub mod stats;
pub mod temporal;
pub mod text;

pub use error::{Error, Result};
pub use ingest::{
    read_documents, segment_sentences, Document, DocumentReader, InputFormat, Sentence,
};
pub use mask::{corrupt, MaskedExample, Strategy, SENTINEL};
pub use mixture::{mix, MixMode, MixtureSpec};
pub use salient::{
    detect_dates, heuristic_entities, load_entity_annotations, SalientKind, SalientSpan,
};
pub use stats::{compute_stats, CorpusStats};
pub use temporal::{parse_temporal, resolve_overlaps, RuleSet, TemporalSpan, TemporalType};
