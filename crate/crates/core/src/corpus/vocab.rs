use std::collections::{BTreeMap, HashMap};

use super::{CorpusError, ExamplePair, SPECIALS, UNK};

pub const DEFAULT_MIN_COUNT: u64 = 10;

/// Token inventory. The five special tokens always occupy ids 0..5; other
/// tokens follow by descending training count, then lexically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    /// Training-split counts of every non-special token, before filtering.
    counts: BTreeMap<String, u64>,
    prompt_types: usize,
    response_types: usize,
    min_count: u64,
}

pub fn is_special(token: &str) -> bool {
    SPECIALS.contains(&token)
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_tokens(Vec::<String>::new())
    }
}

impl Vocabulary {
    /// Specials followed by `tokens` in the given order (duplicates and
    /// specials in `tokens` are skipped).
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            counts: BTreeMap::new(),
            prompt_types: 0,
            response_types: 0,
            min_count: 1,
        };
        for s in SPECIALS {
            v.push(s.to_string());
        }
        for t in tokens {
            v.push(t.into());
        }
        v
    }

    /// Exactly `tokens`, in order, with no specials added. Used by language
    /// models trained on raw streams.
    pub fn from_ordered<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::from_tokens(Vec::<String>::new());
        v.tokens.clear();
        v.index.clear();
        for t in tokens {
            v.push(t.into());
        }
        v
    }

    fn push(&mut self, token: String) {
        if !self.index.contains_key(&token) {
            self.index.insert(token.clone(), self.tokens.len() as u32);
            self.tokens.push(token);
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Distinct non-special tokens in training prompts, before filtering.
    pub fn prompt_dictionary_size(&self) -> usize {
        self.prompt_types
    }

    pub fn response_dictionary_size(&self) -> usize {
        self.response_types
    }

    pub(crate) fn set_dictionary_sizes(&mut self, prompt: usize, response: usize) {
        self.prompt_types = prompt;
        self.response_types = response;
    }

    pub(crate) fn set_min_count(&mut self, min_count: u64) {
        self.min_count = min_count;
    }

    /// `vocab.txt` contents: one token per line, id = line number.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < SPECIALS.len() || lines[..SPECIALS.len()] != SPECIALS {
            return Err(CorpusError::Format("vocab.txt must start with the special tokens".into()));
        }
        let v = Vocabulary::from_tokens(lines[SPECIALS.len()..].iter().copied());
        if v.len() != lines.len() {
            return Err(CorpusError::Format("vocab.txt contains duplicate tokens".into()));
        }
        Ok(v)
    }
}

/// Keeps every token seen at least `min_count` times across training
/// prompts and responses.
pub fn build_vocabulary(train: &[ExamplePair], min_count: u64) -> Result<Vocabulary, CorpusError> {
    if train.is_empty() {
        return Err(CorpusError::EmptyTraining);
    }
    if min_count == 0 {
        return Err(CorpusError::Config("min_count must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut prompt_types: BTreeMap<&str, ()> = BTreeMap::new();
    let mut response_types: BTreeMap<&str, ()> = BTreeMap::new();
    for ex in train {
        for t in ex.prompt.iter().filter(|t| !is_special(t)) {
            *counts.entry(t.clone()).or_default() += 1;
            prompt_types.insert(t, ());
        }
        for t in ex.response.iter().filter(|t| !is_special(t)) {
            *counts.entry(t.clone()).or_default() += 1;
            response_types.insert(t, ());
        }
    }
    let mut kept: Vec<(&String, u64)> = counts.iter().filter(|(_, &c)| c >= min_count).map(|(t, &c)| (t, c)).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t.clone()));
    vocab.set_dictionary_sizes(prompt_types.len(), response_types.len());
    vocab.counts = counts;
    vocab.min_count = min_count;
    Ok(vocab)
}

/// Replaces out-of-vocabulary tokens with `<unk>`.
pub fn encode_tokens(tokens: &[String], vocab: &Vocabulary) -> Vec<String> {
    tokens
        .iter()
        .map(|t| if vocab.contains(t) { t.clone() } else { UNK.to_string() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::StrategyKind;

    fn pair(prompt: &[&str], response: &[&str]) -> ExamplePair {
        ExamplePair {
            prompt: prompt.iter().map(|s| s.to_string()).collect(),
            response: response.iter().map(|s| s.to_string()).collect(),
            strategy: StrategyKind::Complex,
            tree_id: "t".into(),
            node_ids: vec!["a".into(), "b".into()],
            split_index: 1,
        }
    }

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn threshold_filters() {
        let train = [pair(&["the", "cat"], &["the", "the", "<eos>"])];
        let vocab = build_vocabulary(&train, 2).unwrap();
        assert!(vocab.contains("the"));
        assert!(!vocab.contains("cat"));
        assert_eq!(vocab.len(), SPECIALS.len() + 1);
        assert_eq!(vocab.counts()["cat"], 1);
        assert_eq!(vocab.counts()["the"], 3);

        let all = build_vocabulary(&train, 1).unwrap();
        assert!(all.contains("cat"));
        assert_eq!(all.prompt_dictionary_size(), 2);
        assert_eq!(all.response_dictionary_size(), 1);
    }

    #[test]
    fn specials_have_fixed_ids() {
        let vocab = build_vocabulary(&[pair(&["x"], &["y", "<eos>"])], 1).unwrap();
        for (i, s) in SPECIALS.iter().enumerate() {
            assert_eq!(vocab.id(s), Some(i as u32));
        }
        assert!(!vocab.counts().contains_key("<eos>"));
    }

    #[test]
    fn empty_training() {
        assert!(matches!(build_vocabulary(&[], 1), Err(CorpusError::EmptyTraining)));
    }

    #[test]
    fn encoding() {
        let vocab = Vocabulary::from_tokens(["the"]);
        assert_eq!(encode_tokens(&v(&["the", "cat"]), &vocab), v(&["the", "<unk>"]));
        assert_eq!(encode_tokens(&v(&["the", "the"]), &vocab), v(&["the", "the"]));
        assert_eq!(encode_tokens(&v(&["a", "b", "c", "d", "e"]), &vocab), vec!["<unk>".to_string(); 5]);
    }

    #[test]
    fn text_round_trip() {
        let vocab = Vocabulary::from_tokens(["the", "cat"]);
        let back = Vocabulary::from_text(&vocab.to_text()).unwrap();
        assert_eq!(back.tokens(), vocab.tokens());
        assert!(Vocabulary::from_text("the\n").is_err());
    }
}
