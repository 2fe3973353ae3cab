//! Binary on-disk format for trained pipelines.
//!
//! Layout: 8-byte magic, little-endian u32 version, length-prefixed UTF-8
//! JSON header, raw little-endian f64 arrays in declared order (idf,
//! components row-major, singular_values, mean, scale, centroids row-major),
//! then a CRC32 of all preceding bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::{ClusterPipeline, Scaler};
use super::svd::Projection;
use super::tfidf::Vectorizer;
use super::ClusterError;

pub const ARTIFACT_MAGIC: &[u8; 8] = b"XRPIPE01";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    k: usize,
    dim: usize,
    vocab_size: usize,
    n_docs: usize,
    checksum: String,
    stopwords: Vec<String>,
    /// vocabulary terms in column order
    vocab: Vec<String>,
}

/// Serialize a trained pipeline to `path`.
pub fn pipeline_save(p: &ClusterPipeline, path: &Path) -> Result<(), ClusterError> {
    let mut vocab = vec![String::new(); p.vectorizer.vocabulary.len()];
    for (term, &col) in &p.vectorizer.vocabulary {
        vocab[col] = term.clone();
    }
    let header = Header {
        k: p.k,
        dim: p.projection.dim,
        vocab_size: vocab.len(),
        n_docs: p.vectorizer.n_docs,
        checksum: "crc32".into(),
        stopwords: p.stopwords.clone(),
        vocab,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");

    let mut buf = Vec::new();
    buf.extend_from_slice(ARTIFACT_MAGIC);
    buf.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for arr in [
        &p.vectorizer.idf,
        &p.projection.components,
        &p.projection.singular_values,
        &p.scaler.mean,
        &p.scaler.scale,
        &p.centroids,
    ] {
        for v in arr.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, buf)?;
    Ok(())
}

/// Load a pipeline written by [`pipeline_save`], verifying version and
/// checksum.
pub fn pipeline_load(path: &Path) -> Result<ClusterPipeline, ClusterError> {
    let buf = fs::read(path)?;
    if buf.len() < ARTIFACT_MAGIC.len() + 8 + 4 {
        return Err(ClusterError::CorruptFile("file too short".into()));
    }
    let (body, crc_bytes) = buf.split_at(buf.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(ClusterError::CorruptFile("checksum mismatch".into()));
    }
    if &body[..8] != ARTIFACT_MAGIC {
        return Err(ClusterError::CorruptFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != ARTIFACT_VERSION {
        return Err(ClusterError::VersionMismatch { found: version, expected: ARTIFACT_VERSION });
    }
    let header_len = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let header_end = 16 + header_len;
    if body.len() < header_end {
        return Err(ClusterError::CorruptFile("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&body[16..header_end])
        .map_err(|e| ClusterError::CorruptFile(format!("bad header: {e}")))?;
    if header.vocab.len() != header.vocab_size {
        return Err(ClusterError::CorruptFile("vocab size mismatch".into()));
    }

    let mut cursor = header_end;
    let mut read_arr = |len: usize| -> Result<Vec<f64>, ClusterError> {
        let bytes = len * 8;
        if body.len() < cursor + bytes {
            return Err(ClusterError::CorruptFile("truncated float data".into()));
        }
        let out = body[cursor..cursor + bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        cursor += bytes;
        Ok(out)
    };

    let idf = read_arr(header.vocab_size)?;
    let components = read_arr(header.dim * header.vocab_size)?;
    let singular_values = read_arr(header.dim)?;
    let mean = read_arr(header.dim)?;
    let scale = read_arr(header.dim)?;
    let centroids = read_arr(header.k * header.dim)?;
    if cursor != body.len() {
        return Err(ClusterError::CorruptFile("trailing bytes".into()));
    }

    let vocabulary: BTreeMap<String, usize> =
        header.vocab.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
    Ok(ClusterPipeline {
        vectorizer: Vectorizer { vocabulary, idf, n_docs: header.n_docs },
        projection: Projection {
            components,
            dim: header.dim,
            n_features: header.vocab_size,
            singular_values,
        },
        scaler: Scaler { mean, scale },
        centroids,
        k: header.k,
        stopwords: header.stopwords,
        version,
    })
}
