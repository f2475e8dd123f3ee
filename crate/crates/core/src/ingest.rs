//! Document ingestion and sentence segmentation.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Sentences longer than this many scalars are flagged and never masked.
pub const MAX_SENTENCE_CHARS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

impl Document {
    /// Builds a document with normalized title and text.
    pub fn new(doc_id: impl Into<String>, title: &str, text: &str) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: normalize(title),
            text: normalize(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub over_length: bool,
}

impl Sentence {
    pub fn sent_id_for(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}:{ordinal}")
    }

    pub fn char_len(&self) -> usize {
        self.end - self.start
    }
}

/// NUL stripping, CRLF to LF, then NFC.
pub fn normalize(text: &str) -> String {
    let cleaned: String = text.replace("\r\n", "\n").replace('\0', "");
    cleaned.nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Plain,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "plain" | "txt" => Ok(InputFormat::Plain),
            other => Err(Error::Config(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    title: Option<String>,
    text: String,
}

/// Streaming document reader over jsonl or blank-line-separated plain text.
///
/// In lenient mode malformed records are skipped and counted; in strict mode
/// the first one is returned as an error and iteration stops.
pub struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    format: InputFormat,
    source: PathBuf,
    source_name: String,
    strict: bool,
    line: usize,
    ordinal: usize,
    seen: HashSet<String>,
    skipped: usize,
    failed: bool,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R, format: InputFormat, source: impl Into<PathBuf>, strict: bool) -> Self {
        let source = source.into();
        let source_name = source
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| source.display().to_string());
        DocumentReader {
            lines: reader.lines(),
            format,
            source,
            source_name,
            strict,
            line: 0,
            ordinal: 0,
            seen: HashSet::new(),
            skipped: 0,
            failed: false,
        }
    }

    /// Malformed records skipped so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn reject(&mut self, message: String) -> Option<Result<Document>> {
        let err = Error::Record {
            path: self.source.display().to_string(),
            line: self.line,
            message,
        };
        if self.strict {
            self.failed = true;
            return Some(Err(err));
        }
        log::warn!("skipping record: {err}");
        self.skipped += 1;
        None
    }

    fn next_jsonl(&mut self) -> Option<Result<Document>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::io(&self.source, e)));
                }
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = match serde_json::from_str(&line) {
                Ok(raw) => raw,
                Err(e) => match self.reject(e.to_string()) {
                    Some(err) => return Some(err),
                    None => continue,
                },
            };
            if raw.id.is_empty() {
                match self.reject("empty document id".into()) {
                    Some(err) => return Some(err),
                    None => continue,
                }
            }
            if !self.seen.insert(raw.id.clone()) {
                match self.reject(format!("duplicate document id {:?}", raw.id)) {
                    Some(err) => return Some(err),
                    None => continue,
                }
            }
            return Some(Ok(Document::new(
                raw.id,
                raw.title.as_deref().unwrap_or(""),
                &raw.text,
            )));
        }
    }

    fn next_plain(&mut self) -> Option<Result<Document>> {
        let mut body = String::new();
        loop {
            match self.lines.next() {
                Some(Ok(line)) => {
                    self.line += 1;
                    let line = line.strip_suffix('\r').unwrap_or(&line);
                    if line.trim().is_empty() {
                        if body.is_empty() {
                            continue;
                        }
                        break;
                    }
                    if !body.is_empty() {
                        body.push('\n');
                    }
                    body.push_str(line);
                }
                Some(Err(e)) => {
                    self.failed = true;
                    return Some(Err(Error::io(&self.source, e)));
                }
                None => break,
            }
        }
        if body.is_empty() {
            return None;
        }
        let doc_id = format!("{}:{}", self.source_name, self.ordinal);
        self.ordinal += 1;
        Some(Ok(Document::new(doc_id, "", &body)))
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.format {
            InputFormat::Jsonl => self.next_jsonl(),
            InputFormat::Plain => self.next_plain(),
        }
    }
}

/// Opens `path` and streams its documents in file order.
pub fn read_documents(
    path: &Path,
    format: InputFormat,
    strict: bool,
) -> Result<DocumentReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(DocumentReader::new(
        BufReader::new(file),
        format,
        path,
        strict,
    ))
}

const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', ')', ']', '»'];
const OPENERS: &[char] = &['"', '\'', '“', '‘', '(', '[', '«'];

/// Tokens that end in a period without ending the sentence.
const ABBREVIATIONS: &[&str] = &[
    "Dr", "Mr", "Mrs", "Ms", "St", "Jr", "Sr", "Prof", "Rev", "Gen", "Col", "Lt", "Sgt", "Capt",
    "Cmdr", "Gov", "Sen", "Rep", "Mt", "Ft", "No", "Nos", "Vol", "vol", "pp", "c", "ca", "approx",
    "etc", "vs", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov",
    "Dec",
];

fn is_abbreviation(token: &str) -> bool {
    if ABBREVIATIONS.contains(&token) {
        return true;
    }
    // Initials and dotted forms: "J", "U.S", "e.g".
    !token.is_empty()
        && token
            .split('.')
            .all(|part| part.chars().count() == 1 && part.chars().all(char::is_alphabetic))
}

/// Splits a document into sentences on `.`, `!` or `?` followed by
/// whitespace and an uppercase letter, digit or opening quote, and on blank
/// lines. Known abbreviations and initials do not end a sentence.
///
/// Only whitespace falls between consecutive sentences, and every sentence
/// is trimmed.
pub fn segment_sentences(doc: &Document) -> Vec<Sentence> {
    let chars: Vec<char> = doc.text.chars().collect();
    let n = chars.len();
    let mut cuts: Vec<(usize, usize)> = Vec::new();
    let mut seg_start = 0;

    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c == '\n' {
            // A blank line (newline, optional spaces, newline) is a hard break.
            let mut k = i + 1;
            while k < n && chars[k] != '\n' && chars[k].is_whitespace() {
                k += 1;
            }
            if k < n && chars[k] == '\n' {
                cuts.push((seg_start, i));
                seg_start = k + 1;
                i = k + 1;
                continue;
            }
            i += 1;
            continue;
        }
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && TERMINATORS.contains(&chars[j]) {
            j += 1;
        }
        while j < n && CLOSERS.contains(&chars[j]) {
            j += 1;
        }
        if j >= n || !chars[j].is_whitespace() {
            i = j.max(i + 1);
            continue;
        }
        let mut k = j;
        while k < n && chars[k].is_whitespace() {
            k += 1;
        }
        if k >= n {
            break;
        }
        let next = chars[k];
        let starts_new = next.is_uppercase() || next.is_ascii_digit() || OPENERS.contains(&next);
        if starts_new && !(c == '.' && j == i + 1 && ends_with_abbreviation(&chars, seg_start, i)) {
            cuts.push((seg_start, j));
            seg_start = j;
        }
        i = j;
    }
    cuts.push((seg_start, n));

    let mut out = Vec::with_capacity(cuts.len());
    for (mut start, mut end) in cuts {
        while start < end && chars[start].is_whitespace() {
            start += 1;
        }
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if start == end {
            continue;
        }
        let ordinal = out.len();
        out.push(Sentence {
            sent_id: Sentence::sent_id_for(&doc.doc_id, ordinal),
            doc_id: doc.doc_id.clone(),
            ordinal,
            text: chars[start..end].iter().collect(),
            start,
            end,
            over_length: end - start > MAX_SENTENCE_CHARS,
        });
    }
    out
}

/// Whether the token immediately before the period at `dot` is an abbreviation.
fn ends_with_abbreviation(chars: &[char], floor: usize, dot: usize) -> bool {
    let mut w = dot;
    while w > floor && (chars[w - 1].is_alphanumeric() || chars[w - 1] == '.') {
        w -= 1;
    }
    let token: String = chars[w..dot].iter().collect();
    is_abbreviation(&token)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_slice;

    fn doc(text: &str) -> Document {
        Document::new("d", "", text)
    }

    fn spans(text: &str) -> Vec<(String, usize, usize)> {
        segment_sentences(&doc(text))
            .into_iter()
            .map(|s| (s.text, s.start, s.end))
            .collect()
    }

    #[test]
    fn two_sentences_with_offsets() {
        // "It rained." occupies 0..10, the space is 10, "It stopped." is 11..22.
        assert_eq!(
            spans("It rained. It stopped."),
            vec![("It rained.".into(), 0, 10), ("It stopped.".into(), 11, 22)]
        );
    }

    #[test]
    fn no_terminator_is_one_sentence() {
        assert_eq!(
            spans("One sentence only"),
            vec![("One sentence only".into(), 0, 17)]
        );
    }

    #[test]
    fn honorific_does_not_split() {
        let got = spans("Dr. Smith arrived on January 1. He left.");
        assert_eq!(
            got,
            vec![
                ("Dr. Smith arrived on January 1.".into(), 0, 31),
                ("He left.".into(), 32, 40)
            ]
        );
    }

    #[test]
    fn month_abbreviations_and_initials() {
        let got = spans("It opened on Jan. 5 in the U.S. Capitol. J. R. R. Tolkien wrote it.");
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].0, "J. R. R. Tolkien wrote it.");
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(spans("Prices rose 3.5 percent. then fell.").len(), 1);
    }

    #[test]
    fn quotes_and_multiple_terminators() {
        let got = spans("\"Stop!\" he said. Really?! \"Yes.\"");
        let texts: Vec<_> = got.iter().map(|s| s.0.as_str()).collect();
        assert_eq!(texts, vec!["\"Stop!\" he said.", "Really?!", "\"Yes.\""]);
    }

    #[test]
    fn blank_line_is_a_break() {
        let got = spans("Heading without stop\n\nBody text here.\nContinues");
        let texts: Vec<_> = got.iter().map(|s| s.0.as_str()).collect();
        assert_eq!(
            texts,
            vec!["Heading without stop", "Body text here.", "Continues"]
        );
    }

    #[test]
    fn empty_and_whitespace_documents() {
        assert!(spans("").is_empty());
        assert!(spans("   \n\n  ").is_empty());
    }

    #[test]
    fn offsets_count_scalars() {
        let d = doc("Café opened. Über closed.");
        for s in segment_sentences(&d) {
            assert_eq!(char_slice(&d.text, s.start, s.end), Some(s.text.as_str()));
        }
        assert_eq!(segment_sentences(&d)[1].start, 13);
    }

    #[test]
    fn over_length_sentences_are_flagged() {
        let long = format!("A{}", "a".repeat(MAX_SENTENCE_CHARS));
        let got = segment_sentences(&doc(&format!("Short one. {long}")));
        assert!(!got[0].over_length);
        assert!(got[1].over_length);
    }

    #[test]
    fn normalization() {
        let d = Document::new("x", "", "Cafe\u{301}\r\nline\0two");
        assert_eq!(d.text, "Café\nlinetwo");
    }

    #[test]
    fn jsonl_reader_lenient_and_strict() {
        let input = "{\"id\":\"d1\",\"title\":\"T\",\"text\":\"Hello.\"}\nnot json\n\n{\"id\":\"d1\",\"text\":\"dup\"}\n";
        let mut reader =
            DocumentReader::new(input.as_bytes(), InputFormat::Jsonl, "in.jsonl", false);
        let docs: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(docs, vec![Document::new("d1", "T", "Hello.")]);
        assert_eq!(reader.skipped(), 2);

        let strict = DocumentReader::new(input.as_bytes(), InputFormat::Jsonl, "in.jsonl", true);
        let results: Vec<_> = strict.collect();
        assert_eq!(results.len(), 2);
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(Error::Record { line: 2, .. })));
    }

    #[test]
    fn plain_reader_numbers_documents() {
        let input = "First doc.\nStill first.\n\n\nSecond doc.\n";
        let docs: Vec<_> = DocumentReader::new(
            input.as_bytes(),
            InputFormat::Plain,
            "/tmp/corpus.txt",
            true,
        )
        .collect::<Result<_>>()
        .unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "corpus.txt:0");
        assert_eq!(docs[0].text, "First doc.\nStill first.");
        assert_eq!(docs[1].doc_id, "corpus.txt:1");
    }
}
