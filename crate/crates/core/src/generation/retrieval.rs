//! Nearest-prompt retrieval: answer with the response of the training prompt
//! closest to the query under TF-IDF cosine similarity.

use std::collections::BTreeMap;

use super::{finish_response, GenerationError, GenerationRequest, GeneratorBackend};
use crate::corpus::{is_special, Corpus, ExamplePair};

#[derive(Debug, Clone)]
struct Entry {
    norm: f64,
    response: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    entries: Vec<Entry>,
    /// term -> (entry, weight), entries ascending
    postings: BTreeMap<String, Vec<(usize, f64)>>,
    df: BTreeMap<String, usize>,
}

fn term_frequencies(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut tf = BTreeMap::new();
    for t in tokens.iter().filter(|t| !is_special(t)) {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    tf
}

impl RetrievalIndex {
    /// One entry per pair, in order.
    pub fn from_pairs(pairs: &[ExamplePair]) -> Result<Self, GenerationError> {
        if pairs.is_empty() {
            return Err(GenerationError::EmptyIndex);
        }
        let n = pairs.len() as f64;
        let tfs: Vec<BTreeMap<&str, usize>> = pairs.iter().map(|p| term_frequencies(&p.prompt)).collect();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for tf in &tfs {
            for term in tf.keys() {
                *df.entry(term.to_string()).or_default() += 1;
            }
        }
        let mut postings: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
        let mut entries = Vec::with_capacity(pairs.len());
        for (i, (tf, pair)) in tfs.iter().zip(pairs).enumerate() {
            let mut sq = 0.0;
            for (term, &count) in tf {
                let w = (1.0 + count as f64).ln() * (n / df[*term] as f64).ln();
                sq += w * w;
                postings.entry(term.to_string()).or_default().push((i, w));
            }
            entries.push(Entry { norm: sq.sqrt(), response: pair.response.clone() });
        }
        Ok(RetrievalIndex { entries, postings, df })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cosine similarity of the query against every entry.
    pub fn similarities(&self, query: &[String]) -> Vec<f64> {
        let n = self.entries.len() as f64;
        let mut dots = vec![0.0; self.entries.len()];
        let mut q_sq = 0.0;
        for (term, count) in term_frequencies(query) {
            let Some(&df) = self.df.get(term) else { continue };
            let w = (1.0 + count as f64).ln() * (n / df as f64).ln();
            q_sq += w * w;
            for &(i, dw) in &self.postings[term] {
                dots[i] += w * dw;
            }
        }
        let q_norm = q_sq.sqrt();
        dots.iter()
            .zip(&self.entries)
            .map(|(dot, e)| if q_norm > 0.0 && e.norm > 0.0 { dot / (q_norm * e.norm) } else { 0.0 })
            .collect()
    }

    /// Index of the most similar entry; the earliest wins ties.
    pub fn best_match(&self, query: &[String]) -> usize {
        let sims = self.similarities(query);
        let mut best = 0;
        for (i, &s) in sims.iter().enumerate() {
            if s > sims[best] {
                best = i;
            }
        }
        best
    }

    pub fn response(&self, i: usize) -> &[String] {
        &self.entries[i].response
    }
}

pub fn build_retrieval_index(corpus: &Corpus) -> Result<RetrievalIndex, GenerationError> {
    RetrievalIndex::from_pairs(&corpus.train)
}

impl GeneratorBackend for RetrievalIndex {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        req.validate()?;
        let best = self.best_match(&req.prompt);
        Ok(finish_response(self.entries[best].response.clone(), req.max_tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EOS;
    use crate::grammar::StrategyKind;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn pair(prompt: &str, response: &str) -> ExamplePair {
        let mut r = v(response);
        r.push(EOS.into());
        ExamplePair {
            prompt: v(prompt),
            response: r,
            strategy: StrategyKind::Complex,
            tree_id: "t".into(),
            node_ids: vec![],
            split_index: 1,
        }
    }

    #[test]
    fn exact_prompt_returns_its_response() {
        let idx = RetrievalIndex::from_pairs(&[pair("cats purr", "r1"), pair("dogs bark loudly", "r2")]).unwrap();
        let out = idx.generate(&GenerationRequest::new(v("dogs bark loudly"))).unwrap();
        assert_eq!(out, v("r2 <eos>"));
        let sims = idx.similarities(&v("dogs bark loudly"));
        assert!((sims[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_falls_back_to_first() {
        let idx = RetrievalIndex::from_pairs(&[pair("a b", "first"), pair("c d", "second")]).unwrap();
        assert_eq!(idx.generate(&GenerationRequest::new(v("zzz"))).unwrap(), v("first <eos>"));
    }

    #[test]
    fn overlap_with_second_pair() {
        // N = 2. "c" appears only in pair 2 (idf ln 2); pair 1 shares nothing.
        let idx = RetrievalIndex::from_pairs(&[pair("a b", "first"), pair("c d", "second")]).unwrap();
        let sims = idx.similarities(&v("c"));
        assert_eq!(sims[0], 0.0);
        // query vector (w) vs doc (w, w): cos = w*w / (w * w*sqrt 2)
        assert!((sims[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(idx.generate(&GenerationRequest::new(v("c"))).unwrap(), v("second <eos>"));
    }

    #[test]
    fn similarities_stay_in_unit_interval() {
        let idx = RetrievalIndex::from_pairs(&[pair("a a b", "1"), pair("b c", "2"), pair("c c c d", "3")]).unwrap();
        for q in ["a", "b c", "d d a", "a b c d"] {
            for s in idx.similarities(&v(q)) {
                assert!((0.0..=1.0 + 1e-12).contains(&s), "{q}: {s}");
            }
        }
    }

    #[test]
    fn empty_index() {
        assert!(matches!(RetrievalIndex::from_pairs(&[]), Err(GenerationError::EmptyIndex)));
    }
}
