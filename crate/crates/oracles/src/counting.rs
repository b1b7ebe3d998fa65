//! Nested-loop counters over raw token lists.

/// Number of documents in which `term` appears at least once.
pub fn doc_freq(docs: &[Vec<String>], term: &str) -> usize {
    let mut n = 0;
    for doc in docs {
        let mut found = false;
        for t in doc {
            if t == term {
                found = true;
            }
        }
        if found {
            n += 1;
        }
    }
    n
}

/// Total occurrences of `term` across every document.
pub fn collection_freq(docs: &[Vec<String>], term: &str) -> usize {
    let mut n = 0;
    for doc in docs {
        for t in doc {
            if t == term {
                n += 1;
            }
        }
    }
    n
}

/// Number of documents containing both terms.
pub fn co_doc_freq(docs: &[Vec<String>], a: &str, b: &str) -> usize {
    let mut n = 0;
    for doc in docs {
        let has_a = doc.iter().any(|t| t == a);
        let has_b = doc.iter().any(|t| t == b);
        if has_a && has_b {
            n += 1;
        }
    }
    n
}

/// Tallies tokens against an explicit `(term, id)` vocabulary, returning
/// `(id, count)` pairs for every id with a non-zero count, ascending by id.
pub fn tally(tokens: &[String], vocab: &[(String, u32)]) -> Vec<(u32, u32)> {
    let max_id = vocab.iter().map(|(_, id)| *id).max().map_or(0, |m| m as usize + 1);
    let mut counts = vec![0u32; max_id];
    for t in tokens {
        for (term, id) in vocab {
            if term == t {
                counts[*id as usize] += 1;
            }
        }
    }
    let mut out = Vec::new();
    for (id, c) in counts.into_iter().enumerate() {
        if c > 0 {
            out.push((id as u32, c));
        }
    }
    out
}
