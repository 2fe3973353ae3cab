//! Categorized prompt corpus (JSON-lines, eight categories).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;

pub const NUM_CATEGORIES: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub category: usize,
}

/// Validated corpus plus per-category word pools for prompt construction.
#[derive(Debug, Clone)]
pub struct CorpusBundle {
    documents: Vec<Document>,
    words_by_category: Vec<Vec<String>>,
}

impl CorpusBundle {
    pub fn new(documents: Vec<Document>) -> Result<CorpusBundle, BenchError> {
        let mut words_by_category = vec![Vec::new(); NUM_CATEGORIES];
        for doc in &documents {
            if doc.category >= NUM_CATEGORIES {
                return Err(BenchError::Parse(format!("category {} out of range", doc.category)));
            }
            words_by_category[doc.category]
                .extend(doc.text.split_whitespace().map(str::to_string));
        }
        for (c, words) in words_by_category.iter().enumerate() {
            if words.is_empty() {
                return Err(BenchError::MissingCategory(c));
            }
        }
        Ok(CorpusBundle { documents, words_by_category })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn texts(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.text.clone()).collect()
    }

    pub fn category_words(&self, category: usize) -> &[String] {
        &self.words_by_category[category]
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Write the corpus back out as JSONL, one document per line.
    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc).expect("document serialization"));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Tiny deterministic themed corpus for unit tests.
    pub fn synthetic_for_tests() -> CorpusBundle {
        let topics: [&[&str]; NUM_CATEGORIES] = [
            &["engine", "torque", "piston", "crankshaft", "ignition", "valve", "turbo"],
            &["diagnosis", "therapy", "symptom", "vaccine", "clinical", "dosage", "patient"],
            &["goalkeeper", "tournament", "sprint", "marathon", "league", "referee", "stadium"],
            &["saucepan", "simmer", "marinade", "garlic", "roast", "seasoning", "dough"],
            &["dividend", "portfolio", "equity", "hedge", "liquidity", "bond", "yield"],
            &["compiler", "runtime", "thread", "kernel", "latency", "debugger", "protocol"],
            &["itinerary", "passport", "hostel", "voyage", "landmark", "excursion", "visa"],
            &["melody", "chord", "violin", "tempo", "rhythm", "orchestra", "sonata"],
        ];
        let mut documents = Vec::new();
        for (cat, words) in topics.iter().enumerate() {
            for i in 0..6 {
                let mut text = Vec::new();
                for j in 0..10 {
                    text.push(words[(i + j) % words.len()]);
                }
                documents.push(Document { text: text.join(" "), category: cat });
            }
        }
        CorpusBundle::new(documents).unwrap()
    }
}

/// Load and validate a JSONL corpus: one `{"text": ..., "category": ...}`
/// object per line.
pub fn ingest_corpus(path: &Path) -> Result<CorpusBundle, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let mut documents = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line)
            .map_err(|e| BenchError::Parse(format!("line {}: {e}", lineno + 1)))?;
        if doc.category >= NUM_CATEGORIES {
            return Err(BenchError::Parse(format!(
                "line {}: category {} out of range [0,{})",
                lineno + 1,
                doc.category,
                NUM_CATEGORIES
            )));
        }
        documents.push(doc);
    }
    CorpusBundle::new(documents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn ingest_valid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for c in 0..NUM_CATEGORIES {
            writeln!(f, r#"{{"text":"some words here {c}","category":{c}}}"#).unwrap();
        }
        drop(f);
        let bundle = ingest_corpus(&path).unwrap();
        assert_eq!(bundle.len(), 8);
        assert_eq!(bundle.category_words(3).len(), 4);
    }

    #[test]
    fn missing_category_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for c in 0..NUM_CATEGORIES {
            if c != 5 {
                writeln!(f, r#"{{"text":"words","category":{c}}}"#).unwrap();
            }
        }
        drop(f);
        assert!(matches!(ingest_corpus(&path), Err(BenchError::MissingCategory(5))));
    }

    #[test]
    fn out_of_range_category_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "{\"text\":\"w\",\"category\":8}\n").unwrap();
        match ingest_corpus(&path) {
            Err(BenchError::Parse(msg)) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "{\"text\":\"w\",\"category\":0}\nnot json\n").unwrap();
        match ingest_corpus(&path) {
            Err(BenchError::Parse(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
