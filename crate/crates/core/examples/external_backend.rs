//! Serve an n-gram model over the NDJSON wire protocol on a local TCP port
//! and talk to it through `ExternalBackend`.
//!
//!     cargo run --example external_backend

use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use debate_forge::corpus::{build_corpus, CorpusConfig};
use debate_forge::generation::wire::serve_backend_tcp;
use debate_forge::generation::{train_ngram, Endpoint, ExternalBackend, GenerationRequest, GeneratorBackend};
use debate_forge::grammar::ParsingStrategy;
use debate_forge::orchestrator::{run_debate, DebateConfig};
use debate_forge::tree::read_trees;

fn main() -> anyhow::Result<()> {
    let trees = read_trees(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees"))?;
    let corpus = build_corpus(&trees, &ParsingStrategy::multi_turn(), &CorpusConfig { min_count: 1, ..CorpusConfig::default() })?;
    let model = Arc::new(train_ngram(&corpus, 3, 0.4)?);

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let endpoint = Endpoint::Tcp(listener.local_addr()?.to_string());
    let served: Arc<dyn GeneratorBackend> = model.clone();
    std::thread::spawn(move || serve_backend_tcp(served, listener));
    println!("serving on {endpoint}");

    let remote = ExternalBackend::new(endpoint).with_timeout(Duration::from_secs(5)).with_deterministic(true);
    let req = GenerationRequest::new(vec!["school".into(), "is".into()]).with_seed(3);
    assert_eq!(remote.generate(&req)?, model.generate(&req)?);
    println!("remote and local agree: {}", remote.generate(&req)?.join(" "));

    let t = run_debate("Remote work is better.", &remote, DebateConfig::new(4, 1))?;
    for turn in &t.turns {
        println!("{:?}: {}", turn.speaker, turn.display_text);
    }
    Ok(())
}
