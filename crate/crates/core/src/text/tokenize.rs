use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{porter::porter_stem, Document, StopwordList, TextError, TokenizedDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    #[default]
    Porter,
    None,
}

impl Stemmer {
    pub fn name(self) -> &'static str {
        match self {
            Stemmer::Porter => "porter",
            Stemmer::None => "none",
        }
    }
}

impl FromStr for Stemmer {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "porter" => Ok(Stemmer::Porter),
            "none" => Ok(Stemmer::None),
            other => Err(TextError::UnknownStemmer(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerOptions {
    pub lowercase: bool,
    /// Minimum length in characters, checked before stemming.
    pub min_token_length: usize,
    pub stemmer: Stemmer,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_length: 2,
            stemmer: Stemmer::Porter,
        }
    }
}

/// Split, case-fold, length filter, and stopword filter, but no stemming.
pub fn pre_stem_tokens(text: &str, stopwords: &StopwordList, opts: &TokenizerOptions) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= opts.min_token_length)
        .filter_map(|t| {
            let lower = t.to_lowercase();
            if stopwords.contains(&lower) {
                None
            } else if opts.lowercase {
                Some(lower)
            } else {
                Some(t.to_string())
            }
        })
        .collect()
}

pub fn tokenize(doc: &Document, stopwords: &StopwordList, opts: &TokenizerOptions) -> TokenizedDoc {
    let tokens = pre_stem_tokens(&doc.text, stopwords, opts)
        .into_iter()
        .map(|t| match opts.stemmer {
            Stemmer::Porter => porter_stem(&t),
            Stemmer::None => t,
        })
        .collect();
    TokenizedDoc::new(doc.id.clone(), tokens)
}

/// Tokenizes a collection in parallel; output order equals input order.
pub fn tokenize_all(
    docs: &[Document],
    stopwords: &StopwordList,
    opts: &TokenizerOptions,
) -> Vec<TokenizedDoc> {
    docs.par_iter().map(|d| tokenize(d, stopwords, opts)).collect()
}
