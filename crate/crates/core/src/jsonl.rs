//! Line-delimited JSON reading and writing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<JsonlWriter<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(JsonlWriter::new(BufWriter::new(file), path))
}

/// Streams typed records from a jsonl source, skipping blank lines.
/// Each item carries its 1-based line number.
pub struct JsonlReader<R, T> {
    lines: std::io::Lines<R>,
    path: PathBuf,
    line: usize,
    _marker: PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        JsonlReader {
            lines: reader.lines(),
            path: path.into(),
            line: 0,
            _marker: PhantomData,
        }
    }
}

impl<T: DeserializeOwned> JsonlReader<BufReader<File>, T> {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(JsonlReader::new(open(path)?, path))
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&line)
                    .map(|record| (self.line, record))
                    .map_err(|e| Error::Record {
                        path: self.path.display().to_string(),
                        line: self.line,
                        message: e.to_string(),
                    }),
            );
        }
    }
}

pub struct JsonlWriter<W> {
    inner: W,
    path: PathBuf,
    written: u64,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(inner: W, path: impl Into<PathBuf>) -> Self {
        JsonlWriter {
            inner,
            path: path.into(),
            written: 0,
        }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.inner)
    }
}

/// Reads an entire jsonl file into memory. Test and tooling helper.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    JsonlReader::open(path)?
        .map(|r| r.map(|(_, record)| record))
        .collect()
}
