//! Corpus files.
//!
//! Raw corpora are UTF-8 CSV (RFC 4180 quoting) with header `id,text,label`.
//! Cleaned corpora use `id,tokens,label`, tokens joined by single spaces.
//! [`load_task`] accepts either and cleans raw text on the fly.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::preprocess::{clean_text, tokenize, CleanPost, LabelError, RawPost};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unexpected header {found:?}; expected id,text,label or id,tokens,label")]
    Header { found: Vec<String> },
    #[error("line {line}: {source}")]
    Label {
        line: u64,
        #[source]
        source: LabelError,
    },
    #[error("task {task}: {message}")]
    Task { task: String, message: String },
}

/// One labelled dataset: name, ordered label set, and source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub labels: Vec<String>,
    pub path: PathBuf,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let err = |message: &str| DataError::Task {
            task: self.name.clone(),
            message: message.to_string(),
        };
        if self.labels.len() < 2 {
            return Err(err("needs at least two labels"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Err(err(&format!("duplicate label {l:?}")));
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Raw,
    Clean,
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    DataError::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Reads `id,<text|tokens>,label` rows. The second column is returned as-is.
/// Data rows with their 1-based line numbers.
type Rows = Vec<(u64, [String; 3])>;

fn read_rows<R: Read>(reader: R) -> Result<(CorpusFormat, Rows), DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let format = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["id", "text", "label"] => CorpusFormat::Raw,
        ["id", "tokens", "label"] => CorpusFormat::Clean,
        _ => return Err(DataError::Header { found: header }),
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((
            line,
            [rec[0].to_string(), rec[1].to_string(), rec[2].to_string()],
        ));
    }
    Ok((format, rows))
}

pub fn read_raw<R: Read>(reader: R, task: &str) -> Result<Vec<RawPost>, DataError> {
    let (format, rows) = read_rows(reader)?;
    if format != CorpusFormat::Raw {
        return Err(DataError::Malformed {
            line: 1,
            message: "expected a raw corpus with a text column".into(),
        });
    }
    rows.into_iter()
        .map(|(line, [id, text, label])| {
            if id.is_empty() {
                return Err(DataError::Malformed {
                    line,
                    message: "empty id".into(),
                });
            }
            Ok(RawPost {
                id,
                text,
                label,
                task: task.to_string(),
            })
        })
        .collect()
}

/// Loads a task's corpus (raw or cleaned) and resolves labels.
pub fn read_task<R: Read>(reader: R, spec: &TaskSpec) -> Result<Vec<CleanPost>, DataError> {
    let (format, rows) = read_rows(reader)?;
    rows.into_iter()
        .map(|(line, [id, body, label])| {
            let raw = RawPost {
                id,
                text: body,
                label,
                task: spec.name.clone(),
            };
            let post = match format {
                CorpusFormat::Raw => raw.into_clean(&spec.labels),
                CorpusFormat::Clean => {
                    let tokens = tokenize(&raw.text);
                    raw.into_clean(&spec.labels).map(|mut p| {
                        p.tokens = tokens;
                        p
                    })
                }
            };
            post.map_err(|source| DataError::Label { line, source })
        })
        .collect()
}

pub fn load_task(spec: &TaskSpec) -> Result<Vec<CleanPost>, DataError> {
    spec.validate()?;
    let file = std::fs::File::open(&spec.path).map_err(|source| DataError::Io {
        path: spec.path.clone(),
        source,
    })?;
    read_task(file, spec)
}

/// Cleans a raw corpus into `id,tokens,label` rows. Row count is preserved.
pub fn preprocess_corpus<R: Read, W: Write>(reader: R, writer: W) -> Result<usize, DataError> {
    let posts = read_raw(reader, "")?;
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DataError::Malformed {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(["id", "tokens", "label"]).map_err(io)?;
    for p in &posts {
        let tokens = tokenize(&clean_text(&p.text)).join(" ");
        w.write_record([p.id.as_str(), tokens.as_str(), p.label.as_str()])
            .map_err(io)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: PathBuf::from("<output>"),
        source,
    })?;
    Ok(posts.len())
}

pub fn preprocess_file(input: &Path, output: &Path) -> Result<usize, DataError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    let r = std::fs::File::open(input).map_err(io(input))?;
    let w = std::fs::File::create(output).map_err(io(output))?;
    preprocess_corpus(r, std::io::BufWriter::new(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> TaskSpec {
        TaskSpec {
            name: "t".into(),
            labels: vec!["a".into(), "b".into()],
            path: PathBuf::new(),
        }
    }

    #[test]
    fn raw_and_clean_formats() {
        let raw = "id,text,label\n1,\"Hi, there!!\",a\n2,,b\n";
        let posts = read_task(raw.as_bytes(), &spec()).unwrap();
        assert_eq!(posts[0].tokens, vec!["Hi", ",", "there", "!"]);
        assert!(posts[1].tokens.is_empty());
        let clean = "id,tokens,label\n1,\"Hi , there !\",a\n";
        let posts2 = read_task(clean.as_bytes(), &spec()).unwrap();
        assert_eq!(posts2[0].tokens, posts[0].tokens);
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let raw = "id,text,label\n1,ok,a\n2,missing\n";
        match read_task(raw.as_bytes(), &spec()) {
            Err(DataError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let raw = "id,text,label\n1,ok,a\n2,hm,zzz\n";
        match read_task(raw.as_bytes(), &spec()) {
            Err(DataError::Label { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_task("x,y\n".as_bytes(), &spec()),
            Err(DataError::Header { .. })
        ));
    }

    #[test]
    fn preprocess_keeps_rows() {
        let raw = "id,text,label\n1,so ridiculous...... http://t.co/xyz !!!,a\n2,,b\n3,x,a\n";
        let mut out = Vec::new();
        assert_eq!(preprocess_corpus(raw.as_bytes(), &mut out).unwrap(), 3);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "id,tokens,label\n1,so ridiculous . !,a\n2,,b\n3,x,a\n");
    }

    #[test]
    fn task_spec_validation() {
        let mut s = spec();
        s.labels = vec!["a".into()];
        assert!(s.validate().is_err());
        s.labels = vec!["a".into(), "a".into()];
        assert!(s.validate().is_err());
    }
}
