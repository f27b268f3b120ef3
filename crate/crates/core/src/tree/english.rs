//! Stopword-fraction language filter.

use std::collections::HashSet;

use super::{DebateTree, TreeError};
use crate::corpus::tokenize::{tokenize, TokenizerConfig};

pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.12;

static DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// The 50 shipped English function words.
pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Scores how likely a tree is to be written in the target language.
pub trait LanguageScorer: Send + Sync {
    fn score(&self, tree: &DebateTree) -> Result<f64, TreeError>;
}

#[derive(Debug, Clone)]
pub struct StopwordScorer {
    stopwords: HashSet<String>,
}

impl StopwordScorer {
    pub fn new(stopwords: HashSet<String>) -> Self {
        StopwordScorer { stopwords }
    }
}

impl Default for StopwordScorer {
    fn default() -> Self {
        StopwordScorer::new(default_stopwords())
    }
}

impl LanguageScorer for StopwordScorer {
    fn score(&self, tree: &DebateTree) -> Result<f64, TreeError> {
        english_score(tree, &self.stopwords)
    }
}

/// Fraction of word tokens (lowercased, punctuation dropped) across all node
/// texts that are in `stopwords`.
pub fn english_score(tree: &DebateTree, stopwords: &HashSet<String>) -> Result<f64, TreeError> {
    if stopwords.is_empty() {
        return Err(TreeError::EmptyStopwords);
    }
    let cfg = TokenizerConfig::default();
    let (mut hits, mut total) = (0usize, 0usize);
    for node in tree.nodes.values() {
        for tok in tokenize(&node.text, &cfg) {
            if !tok.chars().any(char::is_alphanumeric) {
                continue;
            }
            total += 1;
            if stopwords.contains(&tok) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(TreeError::EmptyTree);
    }
    Ok(hits as f64 / total as f64)
}

pub fn is_english(tree: &DebateTree, scorer: &dyn LanguageScorer, threshold: f64) -> Result<bool, TreeError> {
    Ok(scorer.score(tree)? >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::ArgumentNode;

    fn single(text: &str) -> DebateTree {
        let mut t = DebateTree::new("t", text);
        t.insert(ArgumentNode::root("r", text));
        t
    }

    fn set(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn hand_counted_fraction() {
        let s = english_score(&single("the cat is on the mat"), &set(&["the", "is", "on"])).unwrap();
        assert!((s - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn french_scores_zero() {
        let s = english_score(&single("chat chien oiseau"), &default_stopwords()).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn case_and_punctuation() {
        let s = english_score(&single("The cat. THE mat!"), &set(&["the"])).unwrap();
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shipped_list_has_fifty_words() {
        assert_eq!(default_stopwords().len(), 50);
    }

    #[test]
    fn errors() {
        assert!(matches!(english_score(&single("x"), &HashSet::new()), Err(TreeError::EmptyStopwords)));
        assert!(matches!(english_score(&single("?!"), &set(&["the"])), Err(TreeError::EmptyTree)));
    }
}
