//! TF-IDF vectorization with smoothed IDF and L2 normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Vocabulary and per-term inverse document frequencies learned from a
/// training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vectorizer {
    /// term → dense column index in [0, |vocab|)
    pub vocabulary: BTreeMap<String, usize>,
    /// idf weight per column, |idf| = |vocabulary|
    pub idf: Vec<f64>,
    /// number of training documents
    pub n_docs: usize,
}

/// Fit a vectorizer on a tokenized corpus.
///
/// Vocabulary indices follow lexicographic term order. IDF uses the smoothed
/// form `ln((1 + n) / (1 + df)) + 1`, which keeps every weight finite and
/// at least 1 even for terms present in all documents.
pub fn tfidf_fit(corpus: &[Vec<String>]) -> Result<Vectorizer, ClusterError> {
    if corpus.is_empty() {
        return Err(ClusterError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n_docs = corpus.len();
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (col, (term, d)) in df.iter().enumerate() {
        vocabulary.insert((*term).to_string(), col);
        idf.push(((1 + n_docs) as f64 / (1 + d) as f64).ln() + 1.0);
    }
    Ok(Vectorizer { vocabulary, idf, n_docs })
}

/// Transform a token list into a dense TF-IDF vector of length |vocab|.
///
/// Out-of-vocabulary tokens are ignored. The result is L2-normalized unless
/// every entry is zero, in which case the zero vector is returned as-is.
pub fn tfidf_transform(v: &Vectorizer, tokens: &[String]) -> Vec<f64> {
    let mut out = vec![0.0; v.idf.len()];
    for t in tokens {
        if let Some(&col) = v.vocabulary.get(t.as_str()) {
            out[col] += v.idf[col];
        }
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut out {
            *x /= norm;
        }
    }
    out
}
