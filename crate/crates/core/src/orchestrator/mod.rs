//! Multi-turn debates: each generated response is fed back, together with
//! the history so far, as the prompt for the next turn.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{tokenize, TokenizerConfig, EOA, EOS, TURN, UNK};
use crate::generation::{GenerationError, GenerationRequest, GeneratorBackend, DEFAULT_MAX_TOKENS};

mod repl;

pub use repl::run_repl;

pub const DEFAULT_MAX_PROMPT_TOKENS: usize = 512;
pub const EVAL_TURNS: std::ops::RangeInclusive<usize> = 5..=15;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("subject contains no tokens")]
    EmptySubject,
    #[error("human turn contains no tokens")]
    EmptyTurn,
    #[error("debate already has {0} turns")]
    DebateFull(usize),
    #[error("two human turns in a row")]
    ConsecutiveHuman,
    #[error("invalid debate config: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] GenerationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Alice,
    Bob,
    Human,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::Alice => "Alice",
            Speaker::Bob => "Bob",
            Speaker::Human => "Human",
        })
    }
}

/// Which part of the history becomes the next prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryMode {
    /// Subject and every turn so far, joined by `<turn>`.
    #[default]
    Full,
    /// Only the previous turn.
    LastResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebateConfig {
    pub max_turns: usize,
    pub backend: String,
    pub seed: u64,
    pub history: HistoryMode,
    pub temperature: f64,
    pub max_tokens: usize,
    pub max_prompt_tokens: usize,
    /// Restrict `max_turns` to the 5..=15 range used in the human evaluation.
    pub eval_protocol: bool,
}

impl Default for DebateConfig {
    fn default() -> Self {
        DebateConfig {
            max_turns: 10,
            backend: "default".into(),
            seed: 0,
            history: HistoryMode::Full,
            temperature: 1.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            max_prompt_tokens: DEFAULT_MAX_PROMPT_TOKENS,
            eval_protocol: false,
        }
    }
}

impl DebateConfig {
    pub fn new(max_turns: usize, seed: u64) -> Self {
        DebateConfig { max_turns, seed, ..Default::default() }
    }

    pub fn with_backend(mut self, backend: impl Into<String>) -> Self {
        self.backend = backend.into();
        self
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.max_turns == 0 {
            return Err(OrchestratorError::Config("max_turns must be at least 1".into()));
        }
        if self.eval_protocol && !EVAL_TURNS.contains(&self.max_turns) {
            return Err(OrchestratorError::Config(format!(
                "max_turns {} outside {}..={}",
                self.max_turns,
                EVAL_TURNS.start(),
                EVAL_TURNS.end()
            )));
        }
        if self.max_tokens == 0 || self.max_prompt_tokens == 0 {
            return Err(OrchestratorError::Config("token limits must be positive".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(OrchestratorError::Config(format!("bad temperature {}", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTurn {
    pub speaker: Speaker,
    pub tokens: Vec<String>,
    pub display_text: String,
}

impl DebateTurn {
    /// Trailing `<eos>` is dropped.
    pub fn new(speaker: Speaker, mut tokens: Vec<String>) -> Self {
        if tokens.last().map(String::as_str) == Some(EOS) {
            tokens.pop();
        }
        let display_text = display_text(&tokens);
        DebateTurn { speaker, tokens, display_text }
    }
}

fn attaches_left(t: &str) -> bool {
    matches!(t, "." | "," | "!" | "?" | ";" | ":" | ")" | "]" | "%" | "'")
}

fn attaches_right(t: &str) -> bool {
    matches!(t, "(" | "[" | "'")
}

/// Human-readable form of a turn: `<unk>` becomes `___`, `<eoa>` and
/// `<turn>` start a new line, and punctuation hugs its neighbour.
pub fn display_text(tokens: &[String]) -> String {
    let mut out = String::new();
    let mut glue = true;
    for t in tokens {
        if t == EOA || t == TURN {
            out.push('\n');
            glue = true;
            continue;
        }
        let word = if t == UNK { "___" } else { t.as_str() };
        if !glue && !attaches_left(word) {
            out.push(' ');
        }
        out.push_str(word);
        glue = attaches_right(word);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub debate_id: String,
    pub subject: String,
    pub config: DebateConfig,
    pub turns: Vec<DebateTurn>,
}

/// Stable id derived from what determines the debate.
pub fn debate_id(subject: &str, config: &DebateConfig) -> String {
    let mut h = Sha256::new();
    h.update(subject.as_bytes());
    h.update([0]);
    h.update(config.backend.as_bytes());
    h.update([0]);
    h.update(config.seed.to_le_bytes());
    h.update((config.max_turns as u64).to_le_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl DebateTranscript {
    pub fn subject_tokens(&self) -> Vec<String> {
        tokenize(&self.subject, &TokenizerConfig::default())
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.turns.len() >= self.config.max_turns
    }

    /// Agent whose side the next turn takes: Alice on even indices.
    pub fn next_side(&self) -> Speaker {
        if self.turns.len().is_multiple_of(2) {
            Speaker::Alice
        } else {
            Speaker::Bob
        }
    }

    /// The prompt the backend sees for the next turn.
    pub fn next_prompt(&self) -> Vec<String> {
        let subject = self.subject_tokens();
        match (self.config.history, self.turns.last()) {
            (_, None) => subject,
            (HistoryMode::LastResponse, Some(last)) if !last.tokens.is_empty() => last.tokens.clone(),
            (HistoryMode::LastResponse, Some(_)) => subject,
            (HistoryMode::Full, Some(_)) => {
                // drop the oldest turns until the prompt fits, always keeping
                // the subject and the latest turn
                let mut first = 0;
                let mut total: usize = subject.len() + self.turns.iter().map(|t| t.tokens.len() + 1).sum::<usize>();
                while total > self.config.max_prompt_tokens && first + 1 < self.turns.len() {
                    total -= self.turns[first].tokens.len() + 1;
                    first += 1;
                }
                let mut prompt = subject;
                for t in &self.turns[first..] {
                    prompt.push(TURN.to_string());
                    prompt.extend(t.tokens.iter().cloned());
                }
                prompt
            }
        }
    }

    fn request(&self, prompt: Vec<String>) -> GenerationRequest {
        GenerationRequest {
            prompt,
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
            seed: self.config.seed.wrapping_add(self.turns.len() as u64),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}

/// Turn 1: the backend's answer to the tokenized subject, spoken by Alice.
pub fn new_debate<B>(subject: &str, backend: &B, config: DebateConfig) -> Result<DebateTranscript, OrchestratorError>
where
    B: GeneratorBackend + ?Sized,
{
    config.validate()?;
    let t = DebateTranscript { debate_id: debate_id(subject, &config), subject: subject.to_string(), config, turns: vec![] };
    if t.subject_tokens().is_empty() {
        return Err(OrchestratorError::EmptySubject);
    }
    advance_turn(&t, backend, None)
}

/// Appends one turn. With `human_text` the text becomes the turn verbatim
/// (tokenized) and the backend is not called.
pub fn advance_turn<B>(
    t: &DebateTranscript,
    backend: &B,
    human_text: Option<&str>,
) -> Result<DebateTranscript, OrchestratorError>
where
    B: GeneratorBackend + ?Sized,
{
    if t.is_full() {
        return Err(OrchestratorError::DebateFull(t.config.max_turns));
    }
    let turn = match human_text {
        Some(text) => {
            if t.turns.last().map(|x| x.speaker) == Some(Speaker::Human) {
                return Err(OrchestratorError::ConsecutiveHuman);
            }
            let tokens = tokenize(text, &TokenizerConfig::default());
            if tokens.is_empty() {
                return Err(OrchestratorError::EmptyTurn);
            }
            DebateTurn::new(Speaker::Human, tokens)
        }
        None => {
            let out = backend.generate(&t.request(t.next_prompt()))?;
            DebateTurn::new(t.next_side(), out)
        }
    };
    let mut next = t.clone();
    next.turns.push(turn);
    Ok(next)
}

/// New debate followed by automatic turns until `config.max_turns`.
pub fn run_debate<B>(subject: &str, backend: &B, config: DebateConfig) -> Result<DebateTranscript, OrchestratorError>
where
    B: GeneratorBackend + ?Sized,
{
    let mut t = new_debate(subject, backend, config)?;
    while !t.is_full() {
        t = advance_turn(&t, backend, None)?;
    }
    Ok(t)
}
