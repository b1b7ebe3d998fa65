//! Table-driven Porter stemmer written straight from the published rule
//! lists, including the two departures of the author's reference C release
//! (`bli -> ble` and `logi -> log` in step 2).
//!
//! It works on `Vec<char>` and ordered rule tables, which is deliberately a
//! different shape from the engine's byte-cursor implementation.

fn is_consonant(w: &[char], i: usize) -> bool {
    match w[i] {
        'a' | 'e' | 'i' | 'o' | 'u' => false,
        'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC)^m[V]`.
fn measure(w: &[char]) -> usize {
    let pattern: Vec<bool> = (0..w.len()).map(|i| is_consonant(w, i)).collect();
    // collapse runs
    let mut runs: Vec<bool> = Vec::new();
    for c in pattern {
        if runs.last() != Some(&c) {
            runs.push(c);
        }
    }
    let start = usize::from(runs.first() == Some(&true));
    runs[start..]
        .windows(2)
        .filter(|p| !p[0] && p[1])
        .count()
}

fn has_vowel(w: &[char]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[char]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

fn ends_cvc(w: &[char]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], 'w' | 'x' | 'y')
}

fn strip<'a>(w: &'a [char], suffix: &str) -> Option<&'a [char]> {
    let s: Vec<char> = suffix.chars().collect();
    if w.len() >= s.len() && w[w.len() - s.len()..] == s[..] {
        Some(&w[..w.len() - s.len()])
    } else {
        None
    }
}

fn join(stem: &[char], tail: &str) -> Vec<char> {
    let mut out = stem.to_vec();
    out.extend(tail.chars());
    out
}

const STEP2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("bli", "ble"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("logi", "log"),
];

const STEP3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

/// Longest-suffix rule application: the longest matching suffix is chosen
/// and, if its stem fails the measure condition, nothing else is tried.
fn apply_table(w: Vec<char>, table: &[(&str, &str)], min_m: usize) -> Vec<char> {
    let best = table
        .iter()
        .filter(|(suf, _)| strip(&w, suf).is_some())
        .max_by_key(|(suf, _)| suf.len());
    match best {
        Some((suf, rep)) => {
            let stem = strip(&w, suf).unwrap();
            if measure(stem) > min_m {
                join(stem, rep)
            } else {
                w
            }
        }
        None => w,
    }
}

fn step1a(w: Vec<char>) -> Vec<char> {
    if let Some(s) = strip(&w, "sses") {
        return join(s, "ss");
    }
    if let Some(s) = strip(&w, "ies") {
        return join(s, "i");
    }
    if strip(&w, "ss").is_some() {
        return w;
    }
    if let Some(s) = strip(&w, "s") {
        return s.to_vec();
    }
    w
}

fn step1b(w: Vec<char>) -> Vec<char> {
    if let Some(s) = strip(&w, "eed") {
        return if measure(s) > 0 { join(s, "ee") } else { w };
    }
    let stem = strip(&w, "ed")
        .filter(|s| has_vowel(s))
        .or_else(|| strip(&w, "ing").filter(|s| has_vowel(s)));
    let Some(stem) = stem else { return w };
    let stem = stem.to_vec();
    for (suf, rep) in [("at", "ate"), ("bl", "ble"), ("iz", "ize")] {
        if let Some(s) = strip(&stem, suf) {
            return join(s, rep);
        }
    }
    if ends_double_consonant(&stem) && !matches!(stem[stem.len() - 1], 'l' | 's' | 'z') {
        return stem[..stem.len() - 1].to_vec();
    }
    if measure(&stem) == 1 && ends_cvc(&stem) {
        return join(&stem, "e");
    }
    stem
}

fn step1c(w: Vec<char>) -> Vec<char> {
    match strip(&w, "y") {
        Some(s) if has_vowel(s) => join(s, "i"),
        _ => w,
    }
}

fn step4(w: Vec<char>) -> Vec<char> {
    let best = STEP4
        .iter()
        .filter(|suf| strip(&w, suf).is_some())
        .max_by_key(|suf| suf.len());
    let Some(suf) = best else { return w };
    let stem = strip(&w, suf).unwrap();
    if *suf == "ion" && !matches!(stem.last(), Some('s') | Some('t')) {
        return w;
    }
    if measure(stem) > 1 {
        stem.to_vec()
    } else {
        w
    }
}

fn step5(w: Vec<char>) -> Vec<char> {
    let mut w = w;
    if let Some(s) = strip(&w, "e") {
        let m = measure(s);
        if m > 1 || (m == 1 && !ends_cvc(s)) {
            w = s.to_vec();
        }
    }
    if measure(&w) > 1 && ends_double_consonant(&w) && w[w.len() - 1] == 'l' {
        w.pop();
    }
    w
}

/// Stems a lowercase ASCII word.
pub fn stem(word: &str) -> String {
    let w: Vec<char> = word.chars().collect();
    if w.len() <= 2 {
        return word.to_string();
    }
    let w = step1a(w);
    let w = step1b(w);
    let w = step1c(w);
    let w = apply_table(w, STEP2, 0);
    let w = apply_table(w, STEP3, 0);
    let w = step4(w);
    let w = step5(w);
    w.into_iter().collect()
}
