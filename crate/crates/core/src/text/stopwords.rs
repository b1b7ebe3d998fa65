use std::collections::BTreeSet;
use std::path::Path;

use super::TextError;

const DEFAULT_ENGLISH: &str = include_str!("../../assets/stopwords_en.txt");

/// Set of lowercase words removed during tokenization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Self::default();
        for w in words {
            list.insert(w.as_ref())?;
        }
        Ok(list)
    }

    /// Parses the one-word-per-line format. Blank lines and `#` comments are
    /// skipped; surrounding whitespace is trimmed.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        if !path.exists() {
            return Err(TextError::MissingPath(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|source| TextError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| TextError::InvalidUtf8(path.to_path_buf()))?;
        Self::parse(&text)
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_ENGLISH).expect("bundled stopword list is well formed")
    }

    pub const fn default_english_source() -> &'static str {
        DEFAULT_ENGLISH
    }

    pub fn insert(&mut self, word: &str) -> Result<bool, TextError> {
        if word.chars().any(char::is_whitespace) {
            return Err(TextError::InvalidStopword(word.to_string()));
        }
        Ok(self.words.insert(word.to_lowercase()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// One word per line, sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }
}
