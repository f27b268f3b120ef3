//! Blind a mix of human and generated debates into rating packets, then
//! aggregate the fixture ratings.
//!
//!     cargo run --example ratings

use std::path::PathBuf;

use debate_forge::corpus::{build_corpus, CorpusConfig};
use debate_forge::eval::{aggregate_ratings, chains_of_length, make_rating_packets, read_key, read_ratings, transcript_from_nodes};
use debate_forge::generation::build_retrieval_index;
use debate_forge::grammar::ParsingStrategy;
use debate_forge::orchestrator::{run_debate, DebateConfig};
use debate_forge::tree::read_trees;

fn main() -> anyhow::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let trees = read_trees(&root.join("trees"))?;
    let len = 4;

    let human: Vec<_> = trees
        .iter()
        .flat_map(|t| chains_of_length(t, len).into_iter().take(1).filter_map(|c| transcript_from_nodes(t, &c)))
        .collect();
    let corpus = build_corpus(&trees, &ParsingStrategy::multi_turn(), &CorpusConfig { min_count: 1, ..CorpusConfig::default() })?;
    let index = build_retrieval_index(&corpus)?;
    let generated = human
        .iter()
        .enumerate()
        .map(|(i, h)| run_debate(&h.subject, &index, DebateConfig::new(len, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    let (packets, key) = make_rating_packets(&human, &generated, len, 11)?;
    println!("{} packets; first one:\n{}", packets.len(), serde_json::to_string_pretty(&packets[0])?);
    println!("key: {:?}\n", key.iter().map(|k| k.source.as_str()).collect::<Vec<_>>());

    let report = aggregate_ratings(&read_ratings(&root.join("eval/ratings.csv"))?, &read_key(&root.join("eval/key.csv"))?, false)?;
    print!("{}", report.to_text());
    Ok(())
}
