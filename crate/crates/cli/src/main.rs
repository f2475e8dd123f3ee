use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tempspan_core::ingest::{read_documents, segment_sentences, InputFormat, Sentence};
use tempspan_core::jsonl::{self, JsonlReader};
use tempspan_core::mask::Strategy;
use tempspan_core::mixture::{mix, MixtureSpec};
use tempspan_core::pipeline::{
    run_pipeline, DocOutput, DocProcessor, EntitySource, PipelineConfig,
};
use tempspan_core::salient::RawAnnotations;
use tempspan_core::stats::{compute_stats_files, CorpusStats};
use tempspan_core::temporal::{parse_sentence, RuleSet};

#[derive(Parser)]
#[command(
    name = "tempspan",
    version,
    about = "Temporal and salient span masking corpus toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment documents into sentences.
    Ingest(IngestArgs),
    /// Tag temporal expressions in sentences.
    Parse(ParseArgs),
    /// Emit regex-date and entity spans for sentences.
    Salient(SalientArgs),
    /// Build single-span masked examples from sentences.
    Mask(MaskArgs),
    /// Interleave example files by weight.
    Mix(MixArgs),
    /// Sentence-level span statistics.
    Stats(StatsArgs),
    /// Run ingest, parse, salient, mask and stats in one pass.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct RulesArg {
    /// Rule file (TOML or JSON); the built-in grammar when omitted.
    #[arg(long, env = "TEMPSPAN_RULES")]
    rules: Option<PathBuf>,
}

impl RulesArg {
    fn load(&self) -> Result<RuleSet> {
        match &self.rules {
            Some(p) => {
                RuleSet::from_path(p).with_context(|| format!("loading rules from {}", p.display()))
            }
            None => Ok(RuleSet::builtin().clone()),
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: InputFormat,
    #[arg(long)]
    out: PathBuf,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    rules: RulesArg,
    /// Sentence jsonl.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SalientArgs {
    #[command(flatten)]
    rules: RulesArg,
    #[arg(long = "in")]
    input: PathBuf,
    /// Annotation file, `heuristic` or `none`.
    #[arg(long, default_value = "none")]
    entities: EntitySource,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    rules: RulesArg,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "in")]
    input: PathBuf,
    /// Annotation file, `heuristic` or `none`.
    #[arg(long, default_value = "none")]
    entities: EntitySource,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Drop repeated (inputs, targets) pairs even if the spec does not ask to.
    #[arg(long)]
    dedup_inputs: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    sents: PathBuf,
    #[arg(long)]
    temporal: PathBuf,
    #[arg(long)]
    salient: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also print the summary table.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    rules: RulesArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: InputFormat,
    /// Annotation file, `heuristic` or `none`.
    #[arg(long, default_value = "none")]
    entities: EntitySource,
    /// Strategies to emit; repeat or comma-separate.
    #[arg(long = "strategy", value_delimiter = ',', required = true)]
    strategies: Vec<Strategy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    strict: bool,
    /// Drop examples whose (inputs, targets) pair was already written.
    #[arg(long)]
    dedup: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

const CHUNK: usize = 1024;

/// Feeds sentence jsonl through the processor in bounded chunks.
fn for_each_chunk(
    input: &Path,
    processor: &DocProcessor<'_>,
    mut sink: impl FnMut(DocOutput) -> Result<()>,
) -> Result<()> {
    let mut reader = JsonlReader::<_, Sentence>::open(input)?;
    loop {
        let chunk = reader
            .by_ref()
            .take(CHUNK)
            .map(|r| r.map(|(_, s)| s))
            .collect::<tempspan_core::Result<Vec<_>>>()?;
        if chunk.is_empty() {
            return Ok(());
        }
        let out = processor.process_sentences(chunk);
        if let Some(e) = out.error {
            return Err(e.into());
        }
        sink(out)?;
    }
}

fn load_annotations(source: &EntitySource, strict: bool) -> Result<Option<RawAnnotations>> {
    match source {
        EntitySource::File(p) => Ok(Some(
            RawAnnotations::read(p, strict)
                .with_context(|| format!("reading entities from {}", p.display()))?,
        )),
        _ => Ok(None),
    }
}

fn ingest(args: IngestArgs) -> Result<()> {
    let mut docs = read_documents(&args.input, args.format, args.strict)?;
    let mut writer = jsonl::create(&args.out)?;
    let mut over_length = 0u64;
    for doc in docs.by_ref() {
        for sentence in segment_sentences(&doc?) {
            over_length += u64::from(sentence.over_length);
            writer.write(&sentence)?;
        }
    }
    log::info!(
        "{} sentences, {} over length, {} documents skipped",
        writer.written(),
        over_length,
        docs.skipped()
    );
    writer.finish()?;
    Ok(())
}

fn parse(args: ParseArgs) -> Result<()> {
    let rules = args.rules.load()?;
    let mut writer = jsonl::create(&args.out)?;
    for record in JsonlReader::<_, Sentence>::open(&args.input)? {
        let (_, sentence) = record?;
        for span in parse_sentence(&sentence, &rules) {
            writer.write(&span)?;
        }
    }
    log::info!("{} temporal spans", writer.written());
    writer.finish()?;
    Ok(())
}

fn salient(args: SalientArgs) -> Result<()> {
    let rules = args.rules.load()?;
    let annotations = load_annotations(&args.entities, args.strict)?;
    let processor = DocProcessor::new(
        &rules,
        annotations.as_ref(),
        args.entities == EntitySource::Heuristic,
        &[],
        0,
        args.strict,
    );
    let mut writer = jsonl::create(&args.out)?;
    for_each_chunk(&args.input, &processor, |out| {
        for span in &out.salient {
            writer.write(span)?;
        }
        Ok(())
    })?;
    log::info!("{} salient spans", writer.written());
    writer.finish()?;
    Ok(())
}

fn mask(args: MaskArgs) -> Result<()> {
    let check = PipelineConfig {
        input: args.input.clone(),
        format: InputFormat::Jsonl,
        rules: args.rules.rules.clone(),
        entities: args.entities.clone(),
        strategies: vec![args.strategy],
        seed: args.seed,
        out_dir: PathBuf::new(),
        strict: args.strict,
        dedup: false,
        jobs: 1,
    };
    check.validate()?;
    let rules = args.rules.load()?;
    let annotations = load_annotations(&args.entities, args.strict)?;
    let strategies = [args.strategy];
    let processor = DocProcessor::new(
        &rules,
        annotations.as_ref(),
        args.entities == EntitySource::Heuristic,
        &strategies,
        args.seed.unwrap_or(0),
        args.strict,
    );
    let mut writer = jsonl::create(&args.out)?;
    let (mut over_length, mut sentinel) = (0, 0);
    for_each_chunk(&args.input, &processor, |out| {
        over_length += out.counts.sentences_over_length;
        sentinel += out.counts.sentences_with_sentinel;
        for ex in &out.examples[0] {
            writer.write(ex)?;
        }
        Ok(())
    })?;
    log::info!(
        "{} {} examples; skipped {} over-length and {} sentinel-bearing sentences",
        writer.written(),
        args.strategy,
        over_length,
        sentinel
    );
    writer.finish()?;
    Ok(())
}

fn run_mix(args: MixArgs) -> Result<()> {
    let mut spec = MixtureSpec::from_path(&args.spec)?;
    spec.dedup_inputs |= args.dedup_inputs;
    let mut mixer = mix(&spec)?;
    let mut writer = jsonl::create(&args.out)?;
    for item in mixer.by_ref() {
        writer.write(&item?)?;
    }
    log::info!(
        "{} examples mixed, {} duplicates dropped",
        writer.written(),
        mixer.duplicates
    );
    writer.finish()?;
    Ok(())
}

fn write_stats(stats: &CorpusStats, out: &Path, table: bool) -> Result<()> {
    std::fs::write(out, stats.to_json()).with_context(|| format!("writing {}", out.display()))?;
    if table {
        print!("{}", stats.render_table());
    }
    if let Some(w) = stats.ordering_warning() {
        log::warn!("{w}");
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let stats = compute_stats_files(&args.sents, &args.temporal, &args.salient)?;
    write_stats(&stats, &args.out, args.table)
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let config = PipelineConfig {
        input: args.input,
        format: args.format,
        rules: args.rules.rules,
        entities: args.entities,
        strategies: args.strategies,
        seed: args.seed,
        out_dir: args.out_dir,
        strict: args.strict,
        dedup: args.dedup,
        jobs: args.jobs,
    };
    if config.jobs > 1 && !cfg!(feature = "parallel") {
        bail!("this build has no parallel support; use --jobs 1");
    }
    let manifest = run_pipeline(&config)?;
    let c = &manifest.counts;
    log::info!(
        "{} documents, {} sentences, {} temporal spans; examples tsm={} ssm={} entities={}",
        c.documents,
        c.sentences,
        c.temporal_spans,
        c.examples_tsm,
        c.examples_ssm,
        c.examples_entities
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Parse(a) => parse(a),
        Command::Salient(a) => salient(a),
        Command::Mask(a) => mask(a),
        Command::Mix(a) => run_mix(a),
        Command::Stats(a) => stats(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
