//! Evaluation: perplexity tables, blinded rating packets, rating aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ExamplePair;
use crate::generation::SequenceScorer;

mod packets;
mod ratings;

pub use packets::{
    chains_of_length, make_rating_packets, read_key, transcript_from_nodes, write_key, write_packets, KeyEntry,
    PacketTurn, RatingPacket, Source, CRITERIA,
};
pub use ratings::{aggregate_ratings, read_ratings, write_ratings, AggregateReport, CriterionStats, RatingRecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptySet,
    #[error("debate {debate_id} has {found} turns, expected {expected}")]
    LengthMismatch { debate_id: String, expected: usize, found: usize },
    #[error("rating for unknown packet {0}")]
    UnknownPacket(String),
    #[error("duplicate report row {0}")]
    DuplicateRow(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Token-level perplexity of the responses, each conditioned on its prompt:
/// `exp(-Σ ln p / Σ |response|)`.
pub fn perplexity<M: SequenceScorer + ?Sized>(model: &M, examples: &[ExamplePair]) -> Result<f64, EvalError> {
    let mut log_prob = 0.0;
    let mut tokens = 0usize;
    for ex in examples {
        log_prob += model.score_response(&ex.prompt, &ex.response);
        tokens += ex.response.len();
    }
    if tokens == 0 {
        return Err(EvalError::EmptySet);
    }
    Ok((-log_prob / tokens as f64).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityRow {
    pub model: String,
    pub strategy: String,
    pub ner: bool,
    pub perplexity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub rows: Vec<PerplexityRow>,
}

impl PerplexityReport {
    /// Rows are keyed by (model, strategy, ner).
    pub fn push(&mut self, row: PerplexityRow) -> Result<(), EvalError> {
        if self.rows.iter().any(|r| r.model == row.model && r.strategy == row.strategy && r.ner == row.ner) {
            return Err(EvalError::DuplicateRow(format!("{}/{}/ner={}", row.model, row.strategy, row.ner)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let header = ["model", "strategy", "ner", "perplexity"];
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [r.model.clone(), r.strategy.clone(), if r.ner { "yes" } else { "no" }.into(), format!("{:.3}", r.perplexity)]
            })
            .collect();
        aligned(&header, &cells)
    }
}

/// Left-aligned text columns separated by two spaces.
pub(crate) fn aligned<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut width = header.map(str::len);
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == N {
                s.push_str(c);
            } else {
                let _ = write!(s, "{c:<w$}  ", w = width[i]);
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}
