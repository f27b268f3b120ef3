//! Train a stupid-backoff trigram model, report perplexity, and sample.
//!
//!     cargo run --example ngram

use std::path::PathBuf;

use debate_forge::corpus::{build_corpus, tokenize, CorpusConfig, SplitRatios, TokenizerConfig};
use debate_forge::eval::perplexity;
use debate_forge::generation::{train_ngram, GenerationRequest, GeneratorBackend};
use debate_forge::grammar::ParsingStrategy;
use debate_forge::tree::read_trees;

fn main() -> anyhow::Result<()> {
    let trees = read_trees(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees"))?;
    let cfg = CorpusConfig { min_count: 2, ratios: SplitRatios::new(0.6, 0.2, 0.2)?, ..CorpusConfig::default() };
    let corpus = build_corpus(&trees, &ParsingStrategy::complex(), &cfg)?;

    for order in 1..=4 {
        let model = train_ngram(&corpus, order, 0.4)?;
        println!("order {order}: train {:.2}  test {:.2}", perplexity(&model, &corpus.train)?, perplexity(&model, &corpus.test)?);
    }

    let model = train_ngram(&corpus, 3, 0.4)?;
    let prompt = tokenize("Cats are independent animals.", &TokenizerConfig::default());
    for (temperature, seed) in [(0.0, 0), (1.0, 1), (1.0, 2)] {
        let req = GenerationRequest::new(prompt.clone()).with_seed(seed).with_temperature(temperature);
        println!("t={temperature} seed={seed}: {}", model.generate(&req)?.join(" "));
    }
    Ok(())
}
