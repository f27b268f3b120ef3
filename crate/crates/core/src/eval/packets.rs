use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{tokenize, TokenizerConfig};
use crate::orchestrator::{DebateConfig, DebateTranscript, DebateTurn, Speaker};
use crate::tree::DebateTree;

/// Rating criteria with the question shown to raters.
pub const CRITERIA: [(&str, &str); 4] = [
    ("style", "How clear and well written are the arguments?"),
    ("content", "How relevant and informative are the arguments?"),
    ("strategy", "How well does each side respond to the other?"),
    ("overall", "How good is this debate overall?"),
];

const UNK_NOTE: &str = "___ marks a word that was omitted.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Generated,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Generated => "generated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketTurn {
    /// "A" or "B" by position; the original speaker is not revealed.
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub question: String,
}

/// What a rater sees. Nothing in it depends on where the debate came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingPacket {
    pub packet_id: String,
    pub subject: String,
    pub turns: Vec<PacketTurn>,
    pub criteria: Vec<Criterion>,
    pub scale: [u8; 2],
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub packet_id: String,
    pub source: Source,
}

fn packet(packet_id: String, t: &DebateTranscript) -> RatingPacket {
    RatingPacket {
        packet_id,
        subject: t.subject.clone(),
        turns: t
            .turns
            .iter()
            .enumerate()
            .map(|(i, turn)| PacketTurn { speaker: if i % 2 == 0 { "A" } else { "B" }.into(), text: turn.display_text.clone() })
            .collect(),
        criteria: CRITERIA.iter().map(|(n, q)| Criterion { name: n.to_string(), question: q.to_string() }).collect(),
        scale: [1, 4],
        note: UNK_NOTE.into(),
    }
}

/// Shuffles human and generated debates together and assigns fresh ids
/// `packet-001`, `packet-002`, ... in shuffled order.
pub fn make_rating_packets(
    human: &[DebateTranscript],
    generated: &[DebateTranscript],
    target_len: usize,
    seed: u64,
) -> Result<(Vec<RatingPacket>, Vec<KeyEntry>), EvalError> {
    let mut all: Vec<(Source, &DebateTranscript)> = human
        .iter()
        .map(|t| (Source::Human, t))
        .chain(generated.iter().map(|t| (Source::Generated, t)))
        .collect();
    for (_, t) in &all {
        if t.turns.len() != target_len {
            return Err(EvalError::LengthMismatch { debate_id: t.debate_id.clone(), expected: target_len, found: t.turns.len() });
        }
    }
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let width = all.len().to_string().len().max(3);
    let mut packets = Vec::with_capacity(all.len());
    let mut key = Vec::with_capacity(all.len());
    for (i, (source, t)) in all.into_iter().enumerate() {
        let id = format!("packet-{:0width$}", i + 1);
        packets.push(packet(id.clone(), t));
        key.push(KeyEntry { packet_id: id, source });
    }
    Ok((packets, key))
}

/// Writes `<packet_id>.json` for each packet into `dir`.
pub fn write_packets(packets: &[RatingPacket], dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    for p in packets {
        fs::write(dir.join(format!("{}.json", p.packet_id)), serde_json::to_string_pretty(p)? + "\n")?;
    }
    Ok(())
}

/// `packet_id,source` CSV.
pub fn write_key(key: &[KeyEntry], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    for k in key {
        w.serialize(k)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_key(path: &Path) -> Result<BTreeMap<String, Source>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut key = BTreeMap::new();
    for row in r.deserialize() {
        let k: KeyEntry = row?;
        key.insert(k.packet_id, k.source);
    }
    Ok(key)
}

/// A human-written debate: the parent of the first node is the subject and
/// every node on the chain is one turn, sides alternating.
pub fn transcript_from_nodes<S: AsRef<str>>(tree: &DebateTree, ids: &[S]) -> Option<DebateTranscript> {
    let first = tree.node(ids.first()?.as_ref())?;
    let subject = match &first.parent_id {
        Some(p) => tree.node(p)?.text.clone(),
        None => tree.title.clone(),
    };
    let cfg = TokenizerConfig::default();
    let mut turns = Vec::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        let node = tree.node(id.as_ref())?;
        let speaker = if i % 2 == 0 { Speaker::Alice } else { Speaker::Bob };
        turns.push(DebateTurn::new(speaker, tokenize(&node.text, &cfg)));
    }
    let config = DebateConfig { max_turns: ids.len(), backend: "human".into(), ..DebateConfig::default() };
    Some(DebateTranscript { debate_id: format!("{}:{}", tree.tree_id, ids.last()?.as_ref()), subject, config, turns })
}

/// Every downward chain of exactly `len` arguments starting at a child of
/// the thesis, in id order.
pub fn chains_of_length(tree: &DebateTree, len: usize) -> Vec<Vec<String>> {
    let children = tree.children();
    let Some(root) = tree.root() else { return vec![] };
    let mut out = Vec::new();
    let mut stack: Vec<Vec<&str>> = children.get(root.id.as_str()).into_iter().flatten().rev().map(|c| vec![*c]).collect();
    while let Some(chain) = stack.pop() {
        if chain.len() == len {
            out.push(chain.iter().map(|s| s.to_string()).collect());
            continue;
        }
        let last = *chain.last().expect("non-empty chain");
        for c in children.get(last).into_iter().flatten().rev() {
            let mut next = chain.clone();
            next.push(c);
            stack.push(next);
        }
    }
    out
}
