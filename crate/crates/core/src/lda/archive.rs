//! Single-file model archive.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "TFLDAMOD"
//! header_len u64
//! header     header_len bytes of JSON (ArchiveHeader)
//! phi        K*V f64, row-major
//! theta      D*K f64, row-major
//! z          sum(doc_lengths) u32 topic assignments
//! ```

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{LdaConfig, LdaError, LdaModel};

pub const ARCHIVE_MAGIC: &[u8; 8] = b"TFLDAMOD";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub format_version: u32,
    pub engine_version: String,
    pub num_topics: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub seed: u64,
    pub config: LdaConfig,
    pub dictionary_hash: String,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<usize>,
    pub log_likelihood_trace: Vec<f64>,
}

pub fn write_archive<W: Write>(model: &LdaModel, mut out: W) -> Result<(), LdaError> {
    let header = ArchiveHeader {
        format_version: FORMAT_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        num_topics: model.num_topics(),
        vocab_size: model.vocab_size(),
        num_docs: model.num_docs(),
        seed: model.config.seed,
        config: model.config,
        dictionary_hash: model.dictionary_hash.clone(),
        doc_ids: model.doc_ids.clone(),
        doc_lengths: model.assignments.iter().map(Vec::len).collect(),
        log_likelihood_trace: model.log_likelihood_trace.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| LdaError::Archive(e.to_string()))?;
    out.write_all(ARCHIVE_MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(8 * (model.phi.len() + model.theta.len()));
    for x in model.phi.iter().chain(model.theta.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for z in model.assignments.iter().flatten() {
        buf.extend_from_slice(&z.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, n: usize, what: &str) -> Result<Vec<u8>, LdaError> {
    let mut buf = vec![0u8; n];
    input
        .read_exact(&mut buf)
        .map_err(|_| LdaError::Archive(format!("truncated {what}")))?;
    Ok(buf)
}

fn read_matrix<R: Read>(input: &mut R, rows: usize, cols: usize, what: &str) -> Result<Array2<f64>, LdaError> {
    let bytes = read_exact(input, rows * cols * 8, what)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|e| LdaError::Archive(e.to_string()))
}

pub fn read_archive<R: Read>(mut input: R) -> Result<LdaModel, LdaError> {
    let magic = read_exact(&mut input, 8, "magic")?;
    if magic != ARCHIVE_MAGIC {
        return Err(LdaError::Archive("not a model archive".into()));
    }
    let len = u64::from_le_bytes(read_exact(&mut input, 8, "header length")?.try_into().unwrap());
    let json = read_exact(&mut input, len as usize, "header")?;
    let header: ArchiveHeader =
        serde_json::from_slice(&json).map_err(|e| LdaError::Archive(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(LdaError::Archive(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    if header.doc_ids.len() != header.num_docs || header.doc_lengths.len() != header.num_docs {
        return Err(LdaError::Archive("document count mismatch in header".into()));
    }
    let phi = read_matrix(&mut input, header.num_topics, header.vocab_size, "phi")?;
    let theta = read_matrix(&mut input, header.num_docs, header.num_topics, "theta")?;
    let mut assignments = Vec::with_capacity(header.num_docs);
    for &n in &header.doc_lengths {
        let bytes = read_exact(&mut input, n * 4, "assignments")?;
        assignments.push(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect(),
        );
    }
    Ok(LdaModel {
        config: header.config,
        doc_ids: header.doc_ids,
        dictionary_hash: header.dictionary_hash,
        phi,
        theta,
        assignments,
        log_likelihood_trace: header.log_likelihood_trace,
    })
}
