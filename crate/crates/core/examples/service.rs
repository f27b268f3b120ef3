//! Run the HTTP API with a retrieval backend on 127.0.0.1:8080.
//!
//!     cargo run --example service
//!     curl -X POST localhost:8080/api/debates -d '{"subject":"Cats are better than dogs."}'
//!     curl -X POST localhost:8080/api/debates/<id>/turns -d '{"text":"Dogs are loyal."}'

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use debate_forge::corpus::{build_corpus, CorpusConfig};
use debate_forge::generation::{build_retrieval_index, train_ngram, GeneratorBackend};
use debate_forge::grammar::ParsingStrategy;
use debate_forge::service::{router, AppState};
use debate_forge::tree::read_trees;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let trees = read_trees(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees"))?;
    let corpus = build_corpus(&trees, &ParsingStrategy::multi_turn(), &CorpusConfig { min_count: 1, ..CorpusConfig::default() })?;
    let mut backends: HashMap<String, Arc<dyn GeneratorBackend>> = HashMap::new();
    backends.insert("retrieval".into(), Arc::new(build_retrieval_index(&corpus)?));
    backends.insert("ngram".into(), Arc::new(train_ngram(&corpus, 3, 0.4)?));

    let data = std::env::temp_dir().join("debate-forge-example");
    let state = AppState::new(&data, backends, "retrieval")?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
    println!("listening on http://127.0.0.1:8080, data in {}", data.display());
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}
