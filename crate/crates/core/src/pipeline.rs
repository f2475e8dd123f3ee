//! End-to-end corpus processing: ingest, tag, mask, count.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{
    read_documents, segment_sentences, Document, DocumentReader, InputFormat, Sentence,
};
use crate::jsonl::{self, JsonlWriter};
use crate::mask::{
    make_entities_example, make_ssm_example, make_tsm_examples, skip_reason, MaskedExample,
    SkipReason, Strategy,
};
use crate::salient::{
    sentence_heuristic_entities, RawAnnotations, SalientKind, SalientSpan, SpanSource,
};
use crate::stats::{CorpusStats, SentenceFlags};
use crate::temporal::{parse_sentence, RuleSet, TemporalSpan, TemporalType};

/// Where entity spans come from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "path")]
pub enum EntitySource {
    File(PathBuf),
    /// Capitalization-run approximation.
    Heuristic,
    #[default]
    None,
}

impl FromStr for EntitySource {
    type Err = Error;

    /// `heuristic`, `none`, or a path to an annotation file.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "" => return Err(Error::Config("empty entity source".into())),
            "heuristic" => EntitySource::Heuristic,
            "none" => EntitySource::None,
            path => EntitySource::File(PathBuf::from(path)),
        })
    }
}

impl fmt::Display for EntitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntitySource::File(p) => write!(f, "file:{}", p.display()),
            EntitySource::Heuristic => f.write_str("heuristic (approximate)"),
            EntitySource::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    /// Rule file; the built-in grammar when absent.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub entities: EntitySource,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub strict: bool,
    /// Drop examples repeating an earlier (inputs, targets) pair.
    #[serde(default)]
    pub dedup: bool,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl PipelineConfig {
    /// Checks the configuration without touching the filesystem.
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if let Some(s) = self.strategies.iter().find(|s| s.needs_seed()) {
            if self.seed.is_none() {
                return Err(Error::Config(format!("strategy {s} requires a seed")));
            }
        }
        if self.strategies.contains(&Strategy::Entities) && self.entities == EntitySource::None {
            return Err(Error::Config(
                "strategy entities requires an entity source (annotation file or heuristic)".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.strategies.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("strategy {dup} listed twice")));
        }
        Ok(())
    }

    fn load_rules(&self) -> Result<RuleSet> {
        match &self.rules {
            Some(path) => RuleSet::from_path(path),
            None => Ok(RuleSet::builtin().clone()),
        }
    }

    fn load_annotations(&self) -> Result<Option<RawAnnotations>> {
        match &self.entities {
            EntitySource::File(path) => RawAnnotations::read(path, self.strict).map(Some),
            _ => Ok(None),
        }
    }
}

/// Per-stage counters recorded in the manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub documents: u64,
    pub documents_skipped: u64,
    pub sentences: u64,
    pub sentences_over_length: u64,
    pub sentences_with_sentinel: u64,
    pub temporal_spans: u64,
    pub regex_dates: u64,
    pub entity_spans: u64,
    pub annotation_errors: u64,
    pub annotations_unmatched: u64,
    pub examples_tsm: u64,
    pub examples_ssm: u64,
    pub examples_entities: u64,
    pub duplicates_dropped: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.documents += o.documents;
        self.documents_skipped += o.documents_skipped;
        self.sentences += o.sentences;
        self.sentences_over_length += o.sentences_over_length;
        self.sentences_with_sentinel += o.sentences_with_sentinel;
        self.temporal_spans += o.temporal_spans;
        self.regex_dates += o.regex_dates;
        self.entity_spans += o.entity_spans;
        self.annotation_errors += o.annotation_errors;
        self.annotations_unmatched += o.annotations_unmatched;
        self.examples_tsm += o.examples_tsm;
        self.examples_ssm += o.examples_ssm;
        self.examples_entities += o.examples_entities;
        self.duplicates_dropped += o.duplicates_dropped;
    }

    fn examples_mut(&mut self, s: Strategy) -> &mut u64 {
        match s {
            Strategy::Tsm => &mut self.examples_tsm,
            Strategy::Ssm => &mut self.examples_ssm,
            Strategy::Entities => &mut self.examples_entities,
        }
    }
}

/// Everything one document contributes to the outputs.
#[derive(Debug, Default)]
pub struct DocOutput {
    pub sentences: Vec<Sentence>,
    pub temporal: Vec<TemporalSpan>,
    pub salient: Vec<SalientSpan>,
    /// Examples per requested strategy, in config order.
    pub examples: Vec<Vec<MaskedExample>>,
    pub stats: CorpusStats,
    pub counts: Counts,
    /// Annotation ids consumed by this document.
    pub matched_annotations: Vec<String>,
    pub error: Option<Error>,
}

/// Stateless per-document worker; safe to share across threads.
pub struct DocProcessor<'a> {
    rules: &'a RuleSet,
    annotations: Option<&'a RawAnnotations>,
    heuristic: bool,
    strategies: &'a [Strategy],
    seed: u64,
    strict: bool,
}

impl<'a> DocProcessor<'a> {
    pub fn new(
        rules: &'a RuleSet,
        annotations: Option<&'a RawAnnotations>,
        heuristic: bool,
        strategies: &'a [Strategy],
        seed: u64,
        strict: bool,
    ) -> Self {
        DocProcessor {
            rules,
            annotations,
            heuristic,
            strategies,
            seed,
            strict,
        }
    }

    pub fn process(&self, doc: &Document) -> DocOutput {
        let mut out = self.process_sentences(segment_sentences(doc));
        out.counts.documents = 1;
        out
    }

    /// Tags and masks already segmented sentences.
    pub fn process_sentences(&self, sentences: impl IntoIterator<Item = Sentence>) -> DocOutput {
        let mut out = DocOutput {
            examples: vec![Vec::new(); self.strategies.len()],
            ..Default::default()
        };
        for sentence in sentences {
            if let Err(e) = self.process_sentence(&sentence, &mut out) {
                out.error = Some(e);
                break;
            }
            out.sentences.push(sentence);
        }
        out
    }

    fn entities(&self, sentence: &Sentence, out: &mut DocOutput) -> Result<Vec<SalientSpan>> {
        if let Some(ann) = self.annotations {
            let Some((spans, errors)) = ann.resolve(&sentence.sent_id, &sentence.text) else {
                return Ok(Vec::new());
            };
            out.matched_annotations.push(sentence.sent_id.clone());
            out.counts.annotation_errors += errors.len() as u64;
            if let (true, Some(first)) = (self.strict, errors.into_iter().next()) {
                return Err(first);
            }
            return Ok(spans);
        }
        if self.heuristic {
            return Ok(sentence_heuristic_entities(sentence));
        }
        Ok(Vec::new())
    }

    fn process_sentence(&self, sentence: &Sentence, out: &mut DocOutput) -> Result<()> {
        out.counts.sentences += 1;
        let temporal = parse_sentence(sentence, self.rules);
        let dates: Vec<SalientSpan> = temporal
            .iter()
            .filter(|s| s.kind == TemporalType::Date && self.rules.is_salient_date(&s.rule_id))
            .map(|s| SalientSpan {
                sent_id: s.sent_id.clone(),
                kind: SalientKind::RegexDate,
                start: s.start,
                end: s.end,
                surface: s.surface.clone(),
                label: None,
                source: SpanSource::Regex,
            })
            .collect();
        let entities = self.entities(sentence, out)?;

        out.counts.temporal_spans += temporal.len() as u64;
        out.counts.regex_dates += dates.len() as u64;
        out.counts.entity_spans += entities.len() as u64;
        out.stats.add_sentence(SentenceFlags::from_spans(
            &temporal,
            entities.iter().chain(&dates),
        ));

        match skip_reason(sentence) {
            Some(SkipReason::OverLength) => out.counts.sentences_over_length += 1,
            Some(SkipReason::ContainsSentinel) => out.counts.sentences_with_sentinel += 1,
            None => {
                for (slot, strategy) in self.strategies.iter().enumerate() {
                    let made = match strategy {
                        Strategy::Tsm => make_tsm_examples(sentence, &temporal)?,
                        Strategy::Ssm => make_ssm_example(sentence, &entities, &dates, self.seed)?
                            .into_iter()
                            .collect(),
                        Strategy::Entities => {
                            make_entities_example(sentence, &entities, self.seed)?
                                .into_iter()
                                .collect()
                        }
                    };
                    out.examples[slot].extend(made);
                }
            }
        }
        out.temporal.extend(temporal);
        out.salient.extend(entities);
        out.salient.extend(dates);
        Ok(())
    }
}

/// Drops repeated (inputs, targets) pairs when enabled.
#[derive(Default)]
struct Dedup {
    seen: Option<HashSet<[u8; 16]>>,
}

impl Dedup {
    fn new(enabled: bool) -> Self {
        Dedup {
            seen: enabled.then(HashSet::new),
        }
    }

    fn keep(&mut self, strategy: Strategy, ex: &MaskedExample) -> bool {
        let Some(seen) = &mut self.seen else {
            return true;
        };
        let mut h = Sha256::new();
        h.update([strategy as u8]);
        h.update(ex.inputs.as_bytes());
        h.update([0]);
        h.update(ex.targets.as_bytes());
        seen.insert(h.finalize()[..16].try_into().expect("digest is 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesInfo {
    /// `builtin` or the rule file path.
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical runs.
    pub created_unix: u64,
    pub seed: Option<u64>,
    pub strategies: Vec<Strategy>,
    pub entity_source: String,
    pub format: InputFormat,
    pub input: FileDigest,
    pub rules: RulesInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities_file: Option<FileDigest>,
    pub outputs: Vec<(String, OutputFile)>,
    pub counts: Counts,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

const BATCH: usize = 256;

type Writer = JsonlWriter<std::io::BufWriter<File>>;

struct Sinks {
    sentences: Writer,
    temporal: Writer,
    salient: Writer,
    examples: Vec<Writer>,
}

pub fn output_name(strategy: Strategy) -> String {
    format!("{}.jsonl", strategy.as_str())
}

/// Runs the whole pipeline and writes `manifest.json` into the output
/// directory. Outputs depend only on the inputs and the seed, never on
/// `jobs`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let rules = config.load_rules().map_err(|e| e.in_stage("rules"))?;
    let annotations = config
        .load_annotations()
        .map_err(|e| e.in_stage("entities"))?;
    let mut docs = read_documents(&config.input, config.format, config.strict)
        .map_err(|e| e.in_stage("ingest"))?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;

    let dir = &config.out_dir;
    let mut sinks = Sinks {
        sentences: jsonl::create(&dir.join("sentences.jsonl"))?,
        temporal: jsonl::create(&dir.join("temporal.jsonl"))?,
        salient: jsonl::create(&dir.join("salient.jsonl"))?,
        examples: config
            .strategies
            .iter()
            .map(|s| jsonl::create(&dir.join(output_name(*s))))
            .collect::<Result<_>>()?,
    };

    let processor = DocProcessor::new(
        &rules,
        annotations.as_ref(),
        config.entities == EntitySource::Heuristic,
        &config.strategies,
        config.seed.unwrap_or(0),
        config.strict,
    );
    let mut counts = Counts::default();
    let mut stats = CorpusStats::default();
    let mut dedup = Dedup::new(config.dedup);
    let mut matched: HashSet<String> = HashSet::new();

    let pool = build_pool(config.jobs)?;
    loop {
        let batch = next_batch(&mut docs).map_err(|e| e.in_stage("ingest"))?;
        if batch.is_empty() {
            break;
        }
        let outputs = process_batch(&processor, &batch, pool.as_ref());
        for out in outputs {
            if let Some(e) = out.error {
                return Err(e.in_stage("mask"));
            }
            for s in &out.sentences {
                sinks.sentences.write(s)?;
            }
            for s in &out.temporal {
                sinks.temporal.write(s)?;
            }
            for s in &out.salient {
                sinks.salient.write(s)?;
            }
            let mut doc_counts = out.counts;
            for ((strategy, writer), examples) in config
                .strategies
                .iter()
                .zip(&mut sinks.examples)
                .zip(&out.examples)
            {
                for ex in examples {
                    if dedup.keep(*strategy, ex) {
                        writer.write(ex)?;
                        *doc_counts.examples_mut(*strategy) += 1;
                    } else {
                        doc_counts.duplicates_dropped += 1;
                    }
                }
            }
            counts.add(&doc_counts);
            stats.merge(&out.stats);
            matched.extend(out.matched_annotations);
        }
    }
    counts.documents_skipped = docs.skipped() as u64;
    if let Some(ann) = &annotations {
        counts.annotation_errors += ann.skipped as u64;
        counts.annotations_unmatched =
            ann.sent_ids().filter(|id| !matched.contains(*id)).count() as u64;
        if config.strict && counts.annotations_unmatched > 0 {
            let mut ids: Vec<String> = ann
                .sent_ids()
                .filter(|id| !matched.contains(*id))
                .map(str::to_owned)
                .collect();
            ids.sort();
            return Err(Error::DanglingSentences(ids).in_stage("entities"));
        }
    }

    let mut outputs = Vec::new();
    let mut finish = |name: &str, writer: Writer| -> Result<()> {
        let records = writer.written();
        writer.finish()?;
        let path = dir.join(name);
        outputs.push((
            name.to_owned(),
            OutputFile {
                sha256: sha256_file(&path)?,
                path,
                records,
            },
        ));
        Ok(())
    };
    finish("sentences.jsonl", sinks.sentences)?;
    finish("temporal.jsonl", sinks.temporal)?;
    finish("salient.jsonl", sinks.salient)?;
    for (strategy, writer) in config.strategies.iter().zip(sinks.examples) {
        finish(&output_name(*strategy), writer)?;
    }

    std::fs::write(dir.join("stats.json"), stats.to_json())
        .map_err(|e| Error::io(dir.join("stats.json"), e))?;
    std::fs::write(dir.join("stats.txt"), stats.render_table())
        .map_err(|e| Error::io(dir.join("stats.txt"), e))?;
    if let Some(w) = stats.ordering_warning() {
        log::warn!("{w}");
    }

    let manifest = Manifest {
        tool: "tempspan".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: config.seed,
        strategies: config.strategies.clone(),
        entity_source: config.entities.to_string(),
        format: config.format,
        input: FileDigest {
            path: config.input.clone(),
            sha256: sha256_file(&config.input)?,
        },
        rules: RulesInfo {
            source: config
                .rules
                .as_ref()
                .map_or_else(|| "builtin".to_owned(), |p| p.display().to_string()),
            sha256: rules.fingerprint().to_owned(),
        },
        entities_file: match &config.entities {
            EntitySource::File(p) => Some(FileDigest {
                path: p.clone(),
                sha256: sha256_file(p)?,
            }),
            _ => None,
        },
        outputs,
        counts,
    };
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn next_batch<R: std::io::BufRead>(docs: &mut DocumentReader<R>) -> Result<Vec<Document>> {
    let mut batch = Vec::with_capacity(BATCH);
    for doc in docs.by_ref() {
        batch.push(doc?);
        if batch.len() == BATCH {
            break;
        }
    }
    Ok(batch)
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

#[cfg(feature = "parallel")]
fn build_pool(jobs: usize) -> Result<Option<Pool>> {
    if jobs <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map(Some)
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn build_pool(_jobs: usize) -> Result<Option<Pool>> {
    Ok(None)
}

fn process_batch(
    processor: &DocProcessor<'_>,
    batch: &[Document],
    pool: Option<&Pool>,
) -> Vec<DocOutput> {
    #[cfg(feature = "parallel")]
    if let Some(pool) = pool {
        use rayon::prelude::*;
        return pool.install(|| batch.par_iter().map(|d| processor.process(d)).collect());
    }
    let _ = pool;
    batch.iter().map(|d| processor.process(d)).collect()
}

/// Lazily yields the examples a pipeline run would write, for in-process
/// consumers. Examples of each sentence come in config strategy order; with
/// a single strategy the sequence equals that strategy's output file.
pub struct ExampleStream {
    docs: DocumentReader<BufReader<File>>,
    rules: RuleSet,
    annotations: Option<RawAnnotations>,
    config: PipelineConfig,
    dedup: Dedup,
    pending: std::collections::VecDeque<MaskedExample>,
    failed: bool,
}

impl ExampleStream {
    pub fn open(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let rules = config.load_rules().map_err(|e| e.in_stage("rules"))?;
        let annotations = config
            .load_annotations()
            .map_err(|e| e.in_stage("entities"))?;
        let docs = read_documents(&config.input, config.format, config.strict)
            .map_err(|e| e.in_stage("ingest"))?;
        Ok(ExampleStream {
            docs,
            rules,
            annotations,
            dedup: Dedup::new(config.dedup),
            config,
            pending: Default::default(),
            failed: false,
        })
    }
}

impl Iterator for ExampleStream {
    type Item = Result<MaskedExample>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.failed {
                return None;
            }
            if let Some(ex) = self.pending.pop_front() {
                return Some(Ok(ex));
            }
            let doc = match self.docs.next()? {
                Ok(doc) => doc,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.in_stage("ingest")));
                }
            };
            let processor = DocProcessor::new(
                &self.rules,
                self.annotations.as_ref(),
                self.config.entities == EntitySource::Heuristic,
                &self.config.strategies,
                self.config.seed.unwrap_or(0),
                self.config.strict,
            );
            let out = processor.process(&doc);
            if let Some(e) = out.error {
                self.failed = true;
                return Some(Err(e.in_stage("mask")));
            }
            // Interleave per sentence so multi-strategy streams stay local.
            let mut per_sentence: Vec<(usize, usize, MaskedExample)> = Vec::new();
            for (slot, examples) in out.examples.into_iter().enumerate() {
                for ex in examples {
                    let ordinal = ex
                        .sent_id
                        .rsplit(':')
                        .next()
                        .and_then(|o| o.parse().ok())
                        .unwrap_or(0);
                    per_sentence.push((ordinal, slot, ex));
                }
            }
            per_sentence.sort_by_key(|(ordinal, slot, _)| (*ordinal, *slot));
            for (_, slot, ex) in per_sentence {
                if self.dedup.keep(self.config.strategies[slot], &ex) {
                    self.pending.push_back(ex);
                }
            }
        }
    }
}
