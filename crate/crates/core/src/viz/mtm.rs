use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DocsXTopics, VizError, SCHEMA_VERSION};

/// Group collecting documents without the grouping attribute. Always last.
pub const UNKNOWN_GROUP: &str = "unknown";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MtmMode {
    /// Fraction of the group's documents whose dominant topic is k.
    #[default]
    Dominant,
    /// Mean theta over the group's documents.
    MeanTheta,
}

impl MtmMode {
    pub fn name(self) -> &'static str {
        match self {
            MtmMode::Dominant => "dominant",
            MtmMode::MeanTheta => "mean-theta",
        }
    }
}

impl fmt::Display for MtmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MtmMode {
    type Err = VizError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dominant" => Ok(MtmMode::Dominant),
            "mean-theta" => Ok(MtmMode::MeanTheta),
            other => Err(VizError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtmGroup {
    pub value: String,
    pub doc_count: usize,
    /// Indexed by topic id minus one.
    pub shares: Vec<f64>,
}

/// Payload of the metadata-by-topic view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtmData {
    pub schema_version: u32,
    pub grouping_key: String,
    pub mode: MtmMode,
    pub num_topics: usize,
    pub groups: Vec<MtmGroup>,
}

pub fn mtm_data(table: &DocsXTopics, grouping_key: &str, mode: MtmMode) -> Result<MtmData, VizError> {
    let key = grouping_key.to_lowercase();
    let k = table.num_topics;
    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut unknown = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        match row.metadata.get(&key).map(|v| v.trim()).filter(|v| !v.is_empty()) {
            Some(v) => members.entry(v.to_string()).or_default().push(i),
            None => unknown.push(i),
        }
    }
    if members.is_empty() {
        return Err(VizError::MissingGroupingKey(grouping_key.to_string()));
    }
    let mut ordered: Vec<(String, Vec<usize>)> = members.into_iter().collect();
    ordered.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    if !unknown.is_empty() {
        ordered.push((UNKNOWN_GROUP.to_string(), unknown));
    }
    let groups = ordered
        .into_iter()
        .map(|(value, rows)| {
            let n = rows.len() as f64;
            let mut shares = vec![0.0; k];
            for &i in &rows {
                let row = &table.rows[i];
                match mode {
                    MtmMode::Dominant => shares[row.dominant_topic - 1] += 1.0,
                    MtmMode::MeanTheta => {
                        for (s, x) in shares.iter_mut().zip(&row.theta) {
                            *s += x;
                        }
                    }
                }
            }
            for s in &mut shares {
                *s /= n;
            }
            MtmGroup {
                value,
                doc_count: rows.len(),
                shares,
            }
        })
        .collect();
    Ok(MtmData {
        schema_version: SCHEMA_VERSION,
        grouping_key: key,
        mode,
        num_topics: k,
        groups,
    })
}

enum Chunk<'a> {
    Digits(&'a str),
    Text(&'a str),
}

fn chunks(s: &str) -> Vec<Chunk<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut digit = None;
    for (i, c) in s.char_indices() {
        let d = c.is_ascii_digit();
        if digit.is_some_and(|prev| prev != d) {
            out.push(if digit == Some(true) {
                Chunk::Digits(&s[start..i])
            } else {
                Chunk::Text(&s[start..i])
            });
            start = i;
        }
        digit = Some(d);
    }
    if let Some(d) = digit {
        out.push(if d {
            Chunk::Digits(&s[start..])
        } else {
            Chunk::Text(&s[start..])
        });
    }
    out
}

fn cmp_digits(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Orders digit runs by numeric value and everything else by code point,
/// so "2" < "10" and "vol2" < "vol10".
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let o = match (x, y) {
            (Chunk::Digits(p), Chunk::Digits(q)) => cmp_digits(p, q),
            (Chunk::Text(p), Chunk::Text(q)) => p.cmp(q),
            (Chunk::Digits(_), Chunk::Text(_)) => Ordering::Less,
            (Chunk::Text(_), Chunk::Digits(_)) => Ordering::Greater,
        };
        if o != Ordering::Equal {
            return o;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Share in `[0, 1]` as a percentage with two decimals, rounding half up on
/// the shortest decimal form of the value (0.15625 -> "15.63%").
pub fn format_percent(share: f64) -> String {
    if !share.is_finite() {
        return format!("{share}%");
    }
    let text = format!("{}", share.abs());
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let mut digits: Vec<u8> = frac.bytes().map(|b| b - b'0').collect();
    digits.resize(digits.len().max(5), 0);
    // hundredths of a percent
    let mut units: u128 = int.parse::<u128>().unwrap_or(0) * 10_000;
    for (i, &d) in digits[..4].iter().enumerate() {
        units += d as u128 * 10u128.pow(3 - i as u32);
    }
    if digits[4] >= 5 {
        units += 1;
    }
    let sign = if share < 0.0 && units > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}%", units / 100, units % 100)
}
