//! A ten-turn debate between two retrieval agents.
//!
//!     cargo run --example retrieval_debate ["subject"]

use std::path::PathBuf;

use debate_forge::corpus::{build_corpus, CorpusConfig};
use debate_forge::generation::build_retrieval_index;
use debate_forge::grammar::ParsingStrategy;
use debate_forge::orchestrator::{run_debate, DebateConfig};
use debate_forge::tree::read_trees;

fn main() -> anyhow::Result<()> {
    let subject = std::env::args().nth(1).unwrap_or_else(|| "Homework should be banned.".into());
    let trees = read_trees(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees"))?;
    let corpus = build_corpus(&trees, &ParsingStrategy::multi_turn(), &CorpusConfig { min_count: 1, ..CorpusConfig::default() })?;
    let index = build_retrieval_index(&corpus)?;
    let config = DebateConfig { eval_protocol: true, ..DebateConfig::new(10, 7).with_backend("retrieval") };
    let t = run_debate(&subject, &index, config)?;
    println!("{}\n", t.subject);
    for (i, turn) in t.turns.iter().enumerate() {
        println!("{:>2} {:?}: {}", i + 1, turn.speaker, turn.display_text);
    }
    Ok(())
}
