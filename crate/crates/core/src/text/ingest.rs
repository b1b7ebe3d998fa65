use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{Document, TextError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimitedOptions {
    pub delimiter: u8,
    pub id_column: String,
    pub text_column: String,
    /// Columns copied into document metadata. Empty means every column other
    /// than the id and text columns.
    pub metadata_columns: Vec<String>,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            id_column: "id".into(),
            text_column: "text".into(),
            metadata_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormat {
    /// A directory of `*.txt` files (or a single `.txt` file); id is the file stem.
    TxtDir,
    Delimited(DelimitedOptions),
}

/// Anything that can produce a document collection.
pub trait DocumentSource {
    fn load(&self) -> Result<Vec<Document>, TextError>;
}

/// A file or directory read with [`load_documents`].
#[derive(Debug, Clone)]
pub struct PathSource {
    pub path: PathBuf,
    pub format: SourceFormat,
}

impl DocumentSource for PathSource {
    fn load(&self) -> Result<Vec<Document>, TextError> {
        load_documents(&self.path, &self.format)
    }
}

/// Adapter for formats the engine does not parse itself (PDF, for example).
///
/// For every file with extension `input_extension` in `input_dir` the
/// command is run as `program [args...] <input file> <output .txt file>`;
/// the resulting text directory is then loaded as [`SourceFormat::TxtDir`].
#[derive(Debug, Clone)]
pub struct CommandConverter {
    pub program: String,
    pub args: Vec<String>,
    pub input_dir: PathBuf,
    pub input_extension: String,
    pub output_dir: PathBuf,
}

impl DocumentSource for CommandConverter {
    fn load(&self) -> Result<Vec<Document>, TextError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| TextError::Io { path, source }
        };
        std::fs::create_dir_all(&self.output_dir).map_err(io_err(&self.output_dir))?;
        for input in list_files(&self.input_dir, &self.input_extension)? {
            let stem = input.file_stem().unwrap_or_default();
            let output = self.output_dir.join(stem).with_extension("txt");
            let status = Command::new(&self.program)
                .args(&self.args)
                .arg(&input)
                .arg(&output)
                .status()
                .map_err(|e| TextError::Converter(format!("{}: {e}", self.program)))?;
            if !status.success() {
                return Err(TextError::Converter(format!(
                    "{} exited with {status} on {}",
                    self.program,
                    input.display()
                )));
            }
        }
        load_documents(&self.output_dir, &SourceFormat::TxtDir)
    }
}

fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, TextError> {
    if !dir.exists() {
        return Err(TextError::MissingPath(dir.to_path_buf()));
    }
    let entries = std::fs::read_dir(dir).map_err(|source| TextError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| TextError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn read_utf8(path: &Path) -> Result<String, TextError> {
    let bytes = std::fs::read(path).map_err(|source| TextError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| TextError::InvalidUtf8(path.to_path_buf()))
}

/// Loads documents sorted by id. Invalid UTF-8 is an error, never replaced.
pub fn load_documents(path: &Path, format: &SourceFormat) -> Result<Vec<Document>, TextError> {
    if !path.exists() {
        return Err(TextError::MissingPath(path.to_path_buf()));
    }
    let docs = match format {
        SourceFormat::TxtDir => load_txt(path)?,
        SourceFormat::Delimited(opts) => {
            let text = read_utf8(path)?;
            parse_delimited(&text, opts, path)?
        }
    };
    finish(docs, path)
}

fn load_txt(path: &Path) -> Result<Vec<Document>, TextError> {
    let files = if path.is_dir() {
        list_files(path, "txt")?
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|f| {
            let id = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Document::new(id, read_utf8(&f)?))
        })
        .collect()
}

/// Parses delimited text already known to be UTF-8. `origin` is only used
/// in error messages.
pub(crate) fn parse_delimited(
    text: &str,
    opts: &DelimitedOptions,
    origin: &Path,
) -> Result<Vec<Document>, TextError> {
    let malformed = |e: csv::Error| TextError::Delimited {
        path: origin.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(malformed)?
        .iter()
        .map(str::to_string)
        .collect();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TextError::MissingColumn {
                path: origin.to_path_buf(),
                column: name.to_string(),
            })
    };
    let id_col = column(&opts.id_column)?;
    let text_col = column(&opts.text_column)?;
    let meta_cols: Vec<(String, usize)> = if opts.metadata_columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != id_col && *i != text_col)
            .map(|(i, h)| (h.to_lowercase(), i))
            .collect()
    } else {
        opts.metadata_columns
            .iter()
            .map(|c| Ok((c.to_lowercase(), column(c)?)))
            .collect::<Result<_, TextError>>()?
    };

    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        let field = |i: usize| record.get(i).unwrap_or_default().to_string();
        let metadata: BTreeMap<String, String> =
            meta_cols.iter().map(|(k, i)| (k.clone(), field(*i))).collect();
        docs.push(Document {
            id: field(id_col),
            text: field(text_col),
            metadata,
        });
    }
    Ok(docs)
}

fn finish(mut docs: Vec<Document>, origin: &Path) -> Result<Vec<Document>, TextError> {
    let mut seen = BTreeSet::new();
    for d in &docs {
        if d.id.is_empty() {
            return Err(TextError::EmptyId(origin.to_path_buf()));
        }
        if !seen.insert(d.id.as_str()) {
            return Err(TextError::DuplicateId(d.id.clone()));
        }
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(docs)
}

/// Parses delimited bytes held in memory (uploads, bundled samples).
pub fn load_delimited_bytes(
    bytes: &[u8],
    opts: &DelimitedOptions,
    origin: &Path,
) -> Result<Vec<Document>, TextError> {
    let text = std::str::from_utf8(bytes).map_err(|_| TextError::InvalidUtf8(origin.to_path_buf()))?;
    finish(parse_delimited(text, opts, origin)?, origin)
}
