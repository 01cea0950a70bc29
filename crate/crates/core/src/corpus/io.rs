//! Readers and writers for the games, tweets, lexicon and released-id files.
//!
//! Readers collect malformed lines instead of stopping at the first one, so
//! callers can report every problem with its line number and decide whether
//! to continue.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Corpus, CorpusError, GameRecord, HashtagLexicon, ReleasedEntry, TweetRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub issues: Vec<LineIssue>,
}

impl<T> Parsed<T> {
    /// Fails on the first malformed line.
    pub fn strict(self, path: &Path) -> Result<Vec<T>, CorpusError> {
        match self.issues.into_iter().next() {
            Some(issue) => Err(CorpusError::Parse {
                path: path.to_path_buf(),
                line: issue.line,
                message: issue.message,
            }),
            None => Ok(self.records),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, CorpusError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn is_json_lines(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json" | "ndjson"))
}

fn delimiter(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv" | "tab") => b'\t',
        _ => b',',
    }
}

fn read_json_lines<T: DeserializeOwned>(path: &Path) -> Result<Parsed<T>, CorpusError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => records.push(r),
            Err(e) => issues.push(LineIssue { line: i + 1, message: e.to_string() }),
        }
    }
    Ok(Parsed { records, issues })
}

fn read_delimited<T: DeserializeOwned>(path: &Path) -> Result<Parsed<T>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter(path))
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(open(path)?);
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for row in reader.deserialize() {
        match row {
            Ok(r) => records.push(r),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                issues.push(LineIssue { line, message: e.to_string() });
            }
        }
    }
    Ok(Parsed { records, issues })
}

/// Games from a delimited file (`.csv`, `.tsv`) with a header row, or from
/// JSON lines (`.jsonl`). Records failing [`GameRecord::validate`] are
/// reported as issues.
pub fn read_games(path: &Path) -> Result<Parsed<GameRecord>, CorpusError> {
    let parsed: Parsed<GameRecord> =
        if is_json_lines(path) { read_json_lines(path)? } else { read_delimited(path)? };
    let mut records = Vec::with_capacity(parsed.records.len());
    let mut issues = parsed.issues;
    for g in parsed.records {
        match g.validate() {
            Ok(()) => records.push(g),
            Err(e) => issues.push(LineIssue { line: 0, message: e.to_string() }),
        }
    }
    issues.sort_by_key(|i| i.line);
    Ok(Parsed { records, issues })
}

/// Tweets as JSON lines `{"tweet_id", "timestamp", "text"}`.
pub fn read_tweets(path: &Path) -> Result<Parsed<TweetRecord>, CorpusError> {
    read_json_lines(path)
}

/// Released id lists: delimited `team,game_id,tweet_id` with a header.
pub fn read_released(path: &Path) -> Result<Parsed<ReleasedEntry>, CorpusError> {
    read_delimited(path)
}

/// Lexicon as a JSON object mapping team to a list of hashtags.
pub fn read_lexicon(path: &Path) -> Result<HashtagLexicon, CorpusError> {
    serde_json::from_reader(open(path)?).map_err(|e| CorpusError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_games(path: &Path, games: &[GameRecord]) -> Result<(), CorpusError> {
    if is_json_lines(path) {
        return write_json_lines(path, games);
    }
    let mut w = csv::WriterBuilder::new().delimiter(delimiter(path)).from_writer(create(path)?);
    for g in games {
        w.serialize(g).map_err(|e| CorpusError::Format(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_tweets(path: &Path, tweets: &[TweetRecord]) -> Result<(), CorpusError> {
    write_json_lines(path, tweets)
}

pub fn write_lexicon(path: &Path, lexicon: &HashtagLexicon) -> Result<(), CorpusError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, lexicon).map_err(|e| CorpusError::Format(e.to_string()))?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CorpusError::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    let mut w = create(path)?;
    corpus.to_json_writer(&mut w)?;
    w.flush().map_err(io_err(path))
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    Corpus::from_json_reader(open(path)?)
}
