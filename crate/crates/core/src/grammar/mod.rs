//! Stance grammars and debate-path extraction.
//!
//! A [`ParsingStrategy`] pairs a prompt pattern with a response pattern. A
//! debate path is a downward chain of arguments whose stance sequence splits
//! into a prefix matching the prompt pattern and a suffix matching the
//! response pattern.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod paths;
pub mod pattern;

pub use paths::{enumerate_debate_paths, Anchor, DebatePath, PathLimits};
pub use pattern::{compile_stance_pattern, pattern_matches, PatternError, PatternExpr, StancePattern, SymbolClass};

use crate::tree::Stance;

/// Any first argument followed by supporting arguments.
pub const OPENING_PATTERN: &str = "[Pro|Con][Pro]*";
pub const SUPPORTIVE_RESPONSE: &str = "[Pro]+";
pub const CONTRADICTING_RESPONSE: &str = "[Con][Pro]*";
pub const COMPLEX_RESPONSE: &str = "[Pro|Con][Pro]*";
pub const MULTI_TURN_PROMPT: &str = "[Pro|Con][Pro]*([Con][Pro]*)*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Supportive,
    Contradicting,
    Complex,
    MultiTurn,
    Custom,
}

impl StrategyKind {
    pub const BUILTIN: [StrategyKind; 4] = [
        StrategyKind::Supportive,
        StrategyKind::Contradicting,
        StrategyKind::Complex,
        StrategyKind::MultiTurn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Supportive => "supportive",
            StrategyKind::Contradicting => "contradicting",
            StrategyKind::Complex => "complex",
            StrategyKind::MultiTurn => "multi-turn",
            StrategyKind::Custom => "custom",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("unknown strategy `{0}`")]
    Unknown(String),
    #[error("custom strategy must be `custom:<prompt>/<response>`")]
    CustomSyntax,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "supportive" => Ok(StrategyKind::Supportive),
            "contradicting" => Ok(StrategyKind::Contradicting),
            "complex" => Ok(StrategyKind::Complex),
            "multi-turn" | "multiturn" => Ok(StrategyKind::MultiTurn),
            "custom" => Ok(StrategyKind::Custom),
            other => Err(StrategyError::Unknown(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsingStrategy {
    pub kind: StrategyKind,
    pub prompt: StancePattern,
    pub response: StancePattern,
}

impl ParsingStrategy {
    /// One of the four built-in grammars.
    ///
    /// # Panics
    /// On [`StrategyKind::Custom`], which has no fixed patterns.
    pub fn builtin(kind: StrategyKind) -> Self {
        let (prompt, response) = match kind {
            StrategyKind::Supportive => (OPENING_PATTERN, SUPPORTIVE_RESPONSE),
            StrategyKind::Contradicting => (OPENING_PATTERN, CONTRADICTING_RESPONSE),
            StrategyKind::Complex => (OPENING_PATTERN, COMPLEX_RESPONSE),
            StrategyKind::MultiTurn => (MULTI_TURN_PROMPT, CONTRADICTING_RESPONSE),
            StrategyKind::Custom => panic!("custom strategies need explicit patterns"),
        };
        ParsingStrategy {
            kind,
            prompt: StancePattern::compile(prompt).expect("built-in pattern"),
            response: StancePattern::compile(response).expect("built-in pattern"),
        }
    }

    pub fn supportive() -> Self {
        Self::builtin(StrategyKind::Supportive)
    }

    pub fn contradicting() -> Self {
        Self::builtin(StrategyKind::Contradicting)
    }

    pub fn complex() -> Self {
        Self::builtin(StrategyKind::Complex)
    }

    pub fn multi_turn() -> Self {
        Self::builtin(StrategyKind::MultiTurn)
    }

    pub fn custom(prompt: &str, response: &str) -> Result<Self, PatternError> {
        Ok(ParsingStrategy {
            kind: StrategyKind::Custom,
            prompt: StancePattern::compile(prompt)?,
            response: StancePattern::compile(response)?,
        })
    }

    pub fn all_builtin() -> Vec<Self> {
        StrategyKind::BUILTIN.into_iter().map(Self::builtin).collect()
    }
}

impl FromStr for ParsingStrategy {
    type Err = StrategyError;

    /// A built-in name, or `custom:<prompt>/<response>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("custom:") {
            let (p, r) = rest.split_once('/').ok_or(StrategyError::CustomSyntax)?;
            return Ok(ParsingStrategy::custom(p, r)?);
        }
        match s.parse::<StrategyKind>()? {
            StrategyKind::Custom => Err(StrategyError::CustomSyntax),
            kind => Ok(ParsingStrategy::builtin(kind)),
        }
    }
}

/// Every split index `i` in `1..len` where `seq[..i]` matches the prompt
/// pattern and `seq[i..]` matches the response pattern, ascending.
pub fn find_splits(strategy: &ParsingStrategy, seq: &[Stance]) -> Vec<usize> {
    if seq.len() < 2 {
        return Vec::new();
    }
    // prefix_ok[i]: seq[..i] is in the prompt language.
    let mut prefix_ok = vec![false; seq.len()];
    let mut state = Some(strategy.prompt.start());
    for (i, &s) in seq.iter().enumerate().take(seq.len() - 1) {
        state = state.and_then(|st| strategy.prompt.step(st, s));
        match state {
            Some(st) => prefix_ok[i + 1] = strategy.prompt.is_accepting(st),
            None => break,
        }
    }
    (1..seq.len())
        .filter(|&i| prefix_ok[i] && strategy.response.matches(&seq[i..]))
        .collect()
}

/// Splits a stance sequence into speaker turns: a new block starts at index
/// 0 and at every later `Con`.
pub fn turn_blocks(seq: &[Stance]) -> Vec<Range<usize>> {
    let starts = turn_starts(seq);
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| s..starts.get(k + 1).copied().unwrap_or(seq.len()))
        .collect()
}

pub fn turn_starts(seq: &[Stance]) -> Vec<usize> {
    if seq.is_empty() {
        return Vec::new();
    }
    std::iter::once(0)
        .chain((1..seq.len()).filter(|&i| seq[i] == Stance::Con))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Stance::{Con as C, Pro as P};

    #[test]
    fn builtin_patterns() {
        let s = ParsingStrategy::supportive();
        assert!(s.response.matches(&[P]));
        let c = ParsingStrategy::contradicting();
        assert!(!c.response.matches(&[P, C]));
        assert_eq!(ParsingStrategy::multi_turn().prompt.source(), MULTI_TURN_PROMPT);
    }

    #[test]
    fn split_examples() {
        assert_eq!(find_splits(&ParsingStrategy::contradicting(), &[P, C, P]), vec![1]);
        assert_eq!(find_splits(&ParsingStrategy::supportive(), &[P, P, P]), vec![1, 2]);
        assert!(find_splits(&ParsingStrategy::multi_turn(), &[P, P]).is_empty());
        assert!(find_splits(&ParsingStrategy::complex(), &[P]).is_empty());
    }

    #[test]
    fn multi_turn_splits_at_last_con() {
        assert_eq!(find_splits(&ParsingStrategy::multi_turn(), &[P, C, P, C, P]), vec![3]);
        assert_eq!(find_splits(&ParsingStrategy::multi_turn(), &[C, C]), vec![1]);
    }

    #[test]
    fn blocks() {
        assert_eq!(turn_blocks(&[P, C, P, C]), vec![0..1, 1..3, 3..4]);
        assert_eq!(turn_blocks(&[P, P, P]), vec![0..3]);
        assert_eq!(turn_blocks(&[C]), vec![0..1]);
        assert!(turn_blocks(&[]).is_empty());
    }

    #[test]
    fn strategy_names() {
        for kind in StrategyKind::BUILTIN {
            assert_eq!(kind.as_str().parse::<StrategyKind>().unwrap(), kind);
        }
        assert_eq!("MultiTurn".parse::<StrategyKind>().unwrap(), StrategyKind::MultiTurn);
        let custom: ParsingStrategy = "custom:[Pro]/[Con]+".parse().unwrap();
        assert_eq!(custom.kind, StrategyKind::Custom);
        assert!("custom".parse::<ParsingStrategy>().is_err());
        assert!("custom:[Pro]".parse::<ParsingStrategy>().is_err());
    }
}
