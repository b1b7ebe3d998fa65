//! Regex removal filters.
//!
//! Patterns use the syntax of the `regex` crate (RE2-like: no backreferences
//! or lookaround, Unicode-aware classes).

use regex::Regex;

use super::TextError;

/// A compiled removal rule: every match is replaced by a single space.
#[derive(Debug, Clone)]
pub struct RegexFilter {
    regex: Regex,
}

impl RegexFilter {
    pub fn new(pattern: &str) -> Result<Self, TextError> {
        compile(0, pattern)
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }

    pub fn apply(&self, text: &str) -> String {
        self.regex.replace_all(text, " ").into_owned()
    }
}

fn compile(index: usize, pattern: &str) -> Result<RegexFilter, TextError> {
    Regex::new(pattern)
        .map(|regex| RegexFilter { regex })
        .map_err(|e| TextError::InvalidPattern {
            index,
            pattern: pattern.to_string(),
            message: e.to_string(),
        })
}

/// Compiles a filter list, reporting the first bad pattern with its index.
pub fn compile_filters<S: AsRef<str>>(patterns: &[S]) -> Result<Vec<RegexFilter>, TextError> {
    patterns
        .iter()
        .enumerate()
        .map(|(i, p)| compile(i, p.as_ref()))
        .collect()
}

/// Applies the filters in order.
pub fn clean_text(text: &str, filters: &[RegexFilter]) -> String {
    let mut out = text.to_string();
    for f in filters {
        out = f.apply(&out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_runs() {
        let f = compile_filters(&[r"\d+"]).unwrap();
        assert_eq!(clean_text("page 12 of 99", &f), "page   of  ");
    }

    #[test]
    fn empty_filter_list_is_identity() {
        assert_eq!(clean_text("anything <b>", &[]), "anything <b>");
    }

    #[test]
    fn tag_strip() {
        let f = compile_filters(&["<[^>]*>"]).unwrap();
        assert_eq!(clean_text("<p>Dante</p>", &f), " Dante ");
    }

    #[test]
    fn filters_apply_in_order() {
        let f = compile_filters(&["ab", "a"]).unwrap();
        assert_eq!(clean_text("aab", &f), "  ");
        let f = compile_filters(&["a", "ab"]).unwrap();
        assert_eq!(clean_text("aab", &f), "  b");
    }

    #[test]
    fn bad_pattern_reports_index() {
        let err = compile_filters(&["ok", "(unclosed"]).unwrap_err();
        match err {
            TextError::InvalidPattern { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
