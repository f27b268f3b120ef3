use std::collections::HashSet;

use super::ENT;
use crate::tree::english::default_stopwords;

/// Replaces named-entity mentions with the `<ent>` placeholder. Taggers see
/// tokens with their original casing.
pub trait EntityTagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Vec<String>;
}

/// Collapses each maximal run of capitalized tokens into one `<ent>`.
///
/// A capitalized token standing alone is kept when it is a common function
/// word ("The" opening a sentence, the pronoun "I").
#[derive(Debug, Clone)]
pub struct CapitalizationTagger {
    function_words: HashSet<String>,
}

impl Default for CapitalizationTagger {
    fn default() -> Self {
        CapitalizationTagger { function_words: default_stopwords() }
    }
}

impl CapitalizationTagger {
    pub fn new(function_words: HashSet<String>) -> Self {
        CapitalizationTagger { function_words }
    }

    fn capitalized(tok: &str) -> bool {
        tok.chars().next().is_some_and(char::is_uppercase)
    }
}

impl EntityTagger for CapitalizationTagger {
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if !Self::capitalized(&tokens[i]) {
                out.push(tokens[i].clone());
                i += 1;
                continue;
            }
            let start = i;
            while i < tokens.len() && Self::capitalized(&tokens[i]) {
                i += 1;
            }
            if i - start == 1 && self.function_words.contains(&tokens[start].to_lowercase()) {
                out.push(tokens[start].clone());
            } else {
                out.push(ENT.to_string());
            }
        }
        out
    }
}
