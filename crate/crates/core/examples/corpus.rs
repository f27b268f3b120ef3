//! Build a multi-turn corpus from the fixture trees and write it out.
//!
//!     cargo run --example corpus [out_dir]

use std::path::PathBuf;

use debate_forge::corpus::{build_corpus, write_corpus, CorpusConfig, SplitRatios};
use debate_forge::grammar::ParsingStrategy;
use debate_forge::tree::read_trees;

fn main() -> anyhow::Result<()> {
    let trees = read_trees(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees"))?;
    let cfg = CorpusConfig { min_count: 2, ratios: SplitRatios::new(0.6, 0.2, 0.2)?, ..CorpusConfig::default() };
    let corpus = build_corpus(&trees, &ParsingStrategy::multi_turn(), &cfg)?;
    println!("{:?}", corpus.stats);
    if let Some(ex) = corpus.train.first() {
        println!("prompt:   {}", ex.prompt.join(" "));
        println!("response: {}", ex.response.join(" "));
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_corpus(&corpus, &PathBuf::from(&dir))?;
        println!("written to {dir}");
    }
    Ok(())
}
