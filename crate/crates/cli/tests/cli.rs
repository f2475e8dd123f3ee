use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempspan_core::ingest::InputFormat;
use tempspan_core::jsonl::read_all;
use tempspan_core::mask::{MaskedExample, Strategy};
use tempspan_core::pipeline::{EntitySource, ExampleStream, PipelineConfig};
use tempspan_core::temporal::TemporalSpan;

const TOY: &str = r#"{"id":"a","title":"Alpha","text":"Next Monday she leaves for 3 days, as she does every 4 years since January 1. Anna Berg stayed home."}
{"id":"b","title":"Beta","text":"The Maritime Museum opened in March 1921. It closes at 6 pm daily.\n\nNothing else happened."}
{"id":"c","title":"Gamma","text":"Carl Moreau was born on 8 June 1850 in Lyon. He lived there for twenty years."}
"#;

fn tempspan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempspan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("TEMPSPAN_RULES")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tempspan(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Toy {
    dir: tempfile::TempDir,
}

impl Toy {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("docs.jsonl"), TOY).unwrap();
        Toy { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn staged_commands_agree_with_pipeline() {
    let t = Toy::new();
    let (docs, sents, spans, sal) = (
        t.path("docs.jsonl"),
        t.path("s.jsonl"),
        t.path("t.jsonl"),
        t.path("sal.jsonl"),
    );
    ok(&["ingest", "--in", s(&docs), "--out", s(&sents)]);
    ok(&["parse", "--in", s(&sents), "--out", s(&spans)]);
    ok(&[
        "salient",
        "--in",
        s(&sents),
        "--entities",
        "heuristic",
        "--out",
        s(&sal),
    ]);
    ok(&[
        "mask",
        "--strategy",
        "tsm",
        "--in",
        s(&sents),
        "--out",
        s(&t.path("tsm.jsonl")),
    ]);
    ok(&[
        "mask",
        "--strategy",
        "ssm",
        "--seed",
        "3",
        "--entities",
        "heuristic",
        "--in",
        s(&sents),
        "--out",
        s(&t.path("ssm.jsonl")),
    ]);
    let table = ok(&[
        "stats",
        "--sents",
        s(&sents),
        "--temporal",
        s(&spans),
        "--salient",
        s(&sal),
        "--out",
        s(&t.path("report.json")),
        "--table",
    ]);
    assert!(
        String::from_utf8_lossy(&table.stdout).contains("Entity sentences with a temporal span")
    );

    let out = t.path("out");
    ok(&[
        "pipeline",
        "--in",
        s(&docs),
        "--strategy",
        "tsm,ssm",
        "--seed",
        "3",
        "--entities",
        "heuristic",
        "--out-dir",
        s(&out),
    ]);
    for (staged, piped) in [
        ("s.jsonl", "sentences.jsonl"),
        ("t.jsonl", "temporal.jsonl"),
        ("sal.jsonl", "salient.jsonl"),
        ("tsm.jsonl", "tsm.jsonl"),
        ("ssm.jsonl", "ssm.jsonl"),
        ("report.json", "stats.json"),
    ] {
        assert_eq!(
            std::fs::read(t.path(staged)).unwrap(),
            std::fs::read(out.join(piped)).unwrap(),
            "{staged} vs {piped}"
        );
    }

    let temporal: Vec<TemporalSpan> = read_all(&spans).unwrap();
    let tsm: Vec<MaskedExample> = read_all(&t.path("tsm.jsonl")).unwrap();
    assert_eq!(tsm.len(), temporal.len());
    assert!(temporal.len() >= 9, "{temporal:?}");
}

#[test]
fn missing_seed_fails_before_io() {
    let t = Toy::new();
    let out = t.path("never");
    let res = tempspan(&[
        "pipeline",
        "--in",
        s(&t.path("docs.jsonl")),
        "--strategy",
        "ssm",
        "--out-dir",
        s(&out),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("requires a seed"));
    assert!(!out.exists());

    let res = tempspan(&[
        "mask",
        "--strategy",
        "entities",
        "--seed",
        "1",
        "--in",
        s(&t.path("docs.jsonl")),
        "--out",
        s(&out),
    ]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("entity source"));
    assert!(!out.exists());
}

#[test]
fn errors_name_the_stage() {
    let t = Toy::new();
    let res = tempspan(&[
        "pipeline",
        "--in",
        s(&t.path("absent.jsonl")),
        "--strategy",
        "tsm",
        "--out-dir",
        s(&t.path("o")),
    ]);
    assert!(!res.status.success());
    assert!(
        String::from_utf8_lossy(&res.stderr).contains("error: ingest:"),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    std::fs::write(
        t.path("bad.jsonl"),
        "{\"id\":\"x\",\"text\":\"Fine.\"}\nnot json\n",
    )
    .unwrap();
    let res = tempspan(&[
        "pipeline",
        "--in",
        s(&t.path("bad.jsonl")),
        "--strategy",
        "tsm",
        "--strict",
        "--out-dir",
        s(&t.path("o2")),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.jsonl:2"));
    ok(&[
        "pipeline",
        "--in",
        s(&t.path("bad.jsonl")),
        "--strategy",
        "tsm",
        "--out-dir",
        s(&t.path("o3")),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(t.path("o3/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["counts"]["documents_skipped"], 1);
}

#[test]
fn rules_come_from_the_environment() {
    let t = Toy::new();
    std::fs::write(
        t.path("rules.toml"),
        "[[rules]]\nrule_id = \"only.years\"\ntype = \"date\"\npriority = 1\npattern = '\\b1\\d{3}\\b'\n",
    )
    .unwrap();
    ok(&[
        "ingest",
        "--in",
        s(&t.path("docs.jsonl")),
        "--out",
        s(&t.path("s.jsonl")),
    ]);
    let res = Command::new(env!("CARGO_BIN_EXE_tempspan"))
        .args([
            "parse",
            "--in",
            s(&t.path("s.jsonl")),
            "--out",
            s(&t.path("t.jsonl")),
        ])
        .env("TEMPSPAN_RULES", t.path("rules.toml"))
        .output()
        .unwrap();
    assert!(res.status.success());
    let spans: Vec<TemporalSpan> = read_all(&t.path("t.jsonl")).unwrap();
    let surfaces: Vec<&str> = spans.iter().map(|s| s.surface.as_str()).collect();
    assert_eq!(surfaces, ["1921", "1850"]);
    assert!(spans.iter().all(|s| s.rule_id == "only.years"));
}

#[test]
fn entity_file_drives_entities_strategy() {
    let t = Toy::new();
    std::fs::write(
        t.path("ents.jsonl"),
        "{\"sent_id\":\"a:1\",\"spans\":[{\"start\":0,\"end\":9,\"label\":\"PER\"}]}\n{\"sent_id\":\"c:0\",\"spans\":[{\"start\":0,\"end\":11,\"label\":\"PER\"},{\"start\":40,\"end\":44,\"label\":\"LOC\"}]}\n",
    )
    .unwrap();
    let out = t.path("out");
    ok(&[
        "pipeline",
        "--in",
        s(&t.path("docs.jsonl")),
        "--strategy",
        "entities",
        "--seed",
        "9",
        "--entities",
        s(&t.path("ents.jsonl")),
        "--out-dir",
        s(&out),
    ]);
    let ex: Vec<MaskedExample> = read_all(&out.join("entities.jsonl")).unwrap();
    assert_eq!(ex.len(), 2);
    assert_eq!(ex[0].targets, "Anna Berg");
    assert!(["Carl Moreau", "Lyon"].contains(&ex[1].targets.as_str()));
    assert!(ex.iter().all(|e| e.span_type == "entity"));
}

#[test]
fn mix_command_reads_spec() {
    let t = Toy::new();
    let out = t.path("out");
    ok(&[
        "pipeline",
        "--in",
        s(&t.path("docs.jsonl")),
        "--strategy",
        "tsm,ssm",
        "--seed",
        "1",
        "--out-dir",
        s(&out),
    ]);
    std::fs::write(
        out.join("mix.toml"),
        "mode = \"exhaust\"\n[[components]]\nname = \"tsm\"\npath = \"tsm.jsonl\"\nweight = 1\n[[components]]\nname = \"ssm\"\npath = \"ssm.jsonl\"\nweight = 1\n",
    )
    .unwrap();
    ok(&[
        "mix",
        "--spec",
        s(&out.join("mix.toml")),
        "--out",
        s(&out.join("mixed.jsonl")),
    ]);
    let mixed: Vec<MaskedExample> = read_all(&out.join("mixed.jsonl")).unwrap();
    let tsm: Vec<MaskedExample> = read_all(&out.join("tsm.jsonl")).unwrap();
    assert!(mixed.len() >= tsm.len());
    assert_eq!(mixed[0].strategy, Strategy::Tsm);
    assert_eq!(mixed[1].strategy, Strategy::Ssm);
}

fn stream_config(input: &Path, out: &Path, strategy: Strategy, dedup: bool) -> PipelineConfig {
    PipelineConfig {
        input: input.into(),
        format: InputFormat::Jsonl,
        rules: None,
        entities: EntitySource::Heuristic,
        strategies: vec![strategy],
        seed: Some(11),
        out_dir: out.into(),
        strict: false,
        dedup,
        jobs: 1,
    }
}

#[test]
fn example_stream_matches_cli_output() {
    let t = Toy::new();
    let docs = t.path("docs.jsonl");
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample/encyclopedia.jsonl");
    for input in [docs.as_path(), sample.as_path()] {
        for strategy in [Strategy::Tsm, Strategy::Ssm, Strategy::Entities] {
            for dedup in [false, true] {
                let out = t.path(&format!("o-{strategy}-{dedup}"));
                let mut args = vec![
                    "pipeline",
                    "--in",
                    s(input),
                    "--strategy",
                    strategy.as_str(),
                    "--seed",
                    "11",
                    "--entities",
                    "heuristic",
                    "--out-dir",
                    s(&out),
                ];
                if dedup {
                    args.push("--dedup");
                }
                ok(&args);
                let cli: Vec<MaskedExample> =
                    read_all(&out.join(format!("{strategy}.jsonl"))).unwrap();
                let streamed: Vec<MaskedExample> =
                    ExampleStream::open(stream_config(input, &out, strategy, dedup))
                        .unwrap()
                        .collect::<Result<_, _>>()
                        .unwrap();
                assert!(!cli.is_empty());
                assert_eq!(
                    streamed,
                    cli,
                    "{strategy} dedup={dedup} on {}",
                    input.display()
                );
            }
        }
    }
}

#[test]
fn example_stream_rejects_invalid_config() {
    let t = Toy::new();
    let mut config = stream_config(&t.path("docs.jsonl"), &t.path("o"), Strategy::Ssm, false);
    config.seed = None;
    let err = ExampleStream::open(config).err().expect("invalid");
    assert!(err.to_string().contains("requires a seed"));
}

#[test]
fn manifest_hash_tracks_input_bytes() {
    let t = Toy::new();
    let run = |name: &str| {
        let out = t.path(name);
        ok(&[
            "pipeline",
            "--in",
            s(&t.path("docs.jsonl")),
            "--strategy",
            "tsm",
            "--out-dir",
            s(&out),
        ]);
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        m["input"]["sha256"].as_str().unwrap().to_owned()
    };
    let first = run("m1");
    assert_eq!(run("m2"), first);
    std::fs::write(t.path("docs.jsonl"), TOY.replace("Alpha", "Alphb")).unwrap();
    assert_ne!(run("m3"), first);
}

#[test]
fn mix_flag_enables_dedup() {
    let t = Toy::new();
    let out = t.path("out");
    ok(&[
        "pipeline",
        "--in",
        s(&t.path("docs.jsonl")),
        "--strategy",
        "tsm",
        "--out-dir",
        s(&out),
    ]);
    std::fs::write(
        out.join("twice.toml"),
        "[[components]]\nname = \"x\"\npath = \"tsm.jsonl\"\n[[components]]\nname = \"y\"\npath = \"tsm.jsonl\"\n",
    )
    .unwrap();
    let spec = out.join("twice.toml");
    ok(&[
        "mix",
        "--spec",
        s(&spec),
        "--out",
        s(&out.join("all.jsonl")),
    ]);
    ok(&[
        "mix",
        "--spec",
        s(&spec),
        "--dedup-inputs",
        "--out",
        s(&out.join("dedup.jsonl")),
    ]);
    let tsm: Vec<MaskedExample> = read_all(&out.join("tsm.jsonl")).unwrap();
    let all: Vec<MaskedExample> = read_all(&out.join("all.jsonl")).unwrap();
    let dedup: Vec<MaskedExample> = read_all(&out.join("dedup.jsonl")).unwrap();
    assert_eq!(all.len(), 2 * tsm.len());
    assert_eq!(dedup.len(), tsm.len());
}
