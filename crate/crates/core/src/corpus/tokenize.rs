use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub punctuation_is_token: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig { lowercase: true, punctuation_is_token: true }
    }
}

impl TokenizerConfig {
    pub fn cased(self) -> Self {
        TokenizerConfig { lowercase: false, ..self }
    }
}

fn is_punctuation(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Whitespace tokenization; with `punctuation_is_token` every non-alphanumeric
/// character becomes its own token.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if !cfg.punctuation_is_token {
            out.push(chunk.to_string());
            continue;
        }
        let mut word = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    if cfg.lowercase {
        for tok in &mut out {
            *tok = tok.to_lowercase();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, &TokenizerConfig::default())
    }

    #[test]
    fn examples() {
        assert_eq!(toks("Dogs bark."), ["dogs", "bark", "."]);
        assert!(toks("").is_empty());
        assert_eq!(toks("a—b"), ["a", "—", "b"]);
    }

    #[test]
    fn options() {
        let cfg = TokenizerConfig { lowercase: false, punctuation_is_token: false };
        assert_eq!(tokenize("Dogs  bark.\n", &cfg), ["Dogs", "bark."]);
        assert_eq!(tokenize("Don't!", &TokenizerConfig::default().cased()), ["Don", "'", "t", "!"]);
    }
}
