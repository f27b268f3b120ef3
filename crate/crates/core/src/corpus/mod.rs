//! Training corpora built from debate paths.
//!
//! The pipeline partitions trees into train/valid/test, extracts paths with a
//! [`ParsingStrategy`], renders each path as a prompt/response token pair,
//! optionally tags entities, builds a vocabulary from the training split, and
//! replaces rare tokens with `<unk>`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod entities;
pub mod io;
pub mod tokenize;
pub mod vocab;

pub use entities::{CapitalizationTagger, EntityTagger};
pub use io::{export_parallel_text, read_corpus, write_corpus};
pub use tokenize::{tokenize, TokenizerConfig};
pub use vocab::{build_vocabulary, encode_tokens, is_special, Vocabulary, DEFAULT_MIN_COUNT};

use crate::grammar::{enumerate_debate_paths, turn_blocks, DebatePath, ParsingStrategy, PathLimits, StrategyKind};
use crate::tree::DebateTree;

pub const UNK: &str = "<unk>";
pub const EOA: &str = "<eoa>";
pub const TURN: &str = "<turn>";
pub const EOS: &str = "<eos>";
pub const ENT: &str = "<ent>";

/// Special tokens in id order.
pub const SPECIALS: [&str; 5] = [UNK, EOA, TURN, EOS, ENT];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("training split is empty")]
    EmptyTraining,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed corpus file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One rendered training pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExamplePair {
    pub prompt: Vec<String>,
    pub response: Vec<String>,
    pub strategy: StrategyKind,
    pub tree_id: String,
    pub node_ids: Vec<String>,
    pub split_index: usize,
}

fn node_tokens(
    tree: &DebateTree,
    id: &str,
    cfg: &TokenizerConfig,
    tagger: Option<&dyn EntityTagger>,
) -> Vec<String> {
    let text = tree.nodes.get(id).map(|n| n.text.as_str()).unwrap_or_default();
    let mut toks = tokenize(text, &cfg.cased());
    if let Some(tagger) = tagger {
        toks = tagger.tag(&toks);
    }
    if cfg.lowercase {
        for t in toks.iter_mut().filter(|t| !is_special(t)) {
            *t = t.to_lowercase();
        }
    }
    toks
}

fn join(parts: impl IntoIterator<Item = Vec<String>>, sep: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        if i > 0 {
            out.push(sep.to_string());
        }
        out.extend(part);
    }
    out
}

/// Renders a path as a token pair. Arguments within one speaker turn are
/// separated by `<eoa>`; multi-turn prompts separate turns with `<turn>`;
/// the response ends with `<eos>`.
pub fn render_example(path: &DebatePath, tree: &DebateTree, strategy: StrategyKind, cfg: &TokenizerConfig) -> ExamplePair {
    render_example_with(path, tree, strategy, cfg, None)
}

pub fn render_example_with(
    path: &DebatePath,
    tree: &DebateTree,
    strategy: StrategyKind,
    cfg: &TokenizerConfig,
    tagger: Option<&dyn EntityTagger>,
) -> ExamplePair {
    let stances = tree.stances(&path.node_ids[..path.split_index]).unwrap_or_default();
    let args = |range: std::ops::Range<usize>| -> Vec<String> {
        join(path.node_ids[range].iter().map(|id| node_tokens(tree, id, cfg, tagger)), EOA)
    };
    let turn_sep = if strategy == StrategyKind::MultiTurn { TURN } else { EOA };
    let prompt = join(turn_blocks(&stances).into_iter().map(args), turn_sep);
    let mut response = args(path.split_index..path.node_ids.len());
    response.push(EOS.to_string());

    ExamplePair {
        prompt,
        response,
        strategy,
        tree_id: path.tree_id.clone(),
        node_ids: path.node_ids.clone(),
        split_index: path.split_index,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.90, valid: 0.05, test: 0.05 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self, CorpusError> {
        let r = SplitRatios { train, valid, test };
        r.check()?;
        Ok(r)
    }

    fn check(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(CorpusError::InvalidRatios(format!("{parts:?} has a negative or non-finite part")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(format!("{parts:?} does not sum to 1")));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` items; ties go to the earlier split.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let targets = [self.train, self.valid, self.test].map(|r| r * n as f64);
        let mut sizes = targets.map(|t| t.floor() as usize);
        let assigned: usize = sizes.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = targets[a] - targets[a].floor();
            let rb = targets[b] - targets[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().take(n.saturating_sub(assigned)) {
            sizes[k] += 1;
        }
        sizes
    }
}

/// Tree ids per split, each sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

/// Assigns whole trees to splits with a seeded shuffle.
pub fn partition_trees(trees: &[DebateTree], ratios: SplitRatios, seed: u64) -> Result<Partition, CorpusError> {
    ratios.check()?;
    let mut ids: Vec<String> = trees.iter().map(|t| t.tree_id.clone()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() != trees.len() {
        return Err(CorpusError::Config("tree ids must be unique".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let [n_train, n_valid, _] = ratios.sizes(ids.len());
    let mut test = ids.split_off(n_train + n_valid);
    let mut valid = ids.split_off(n_train);
    let mut train = ids;
    train.sort();
    valid.sort();
    test.sort();
    Ok(Partition { train, valid, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub tokenizer: TokenizerConfig,
    pub min_count: u64,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub limits: PathLimits,
    /// Run the entity tagger before lowercasing.
    pub tag_entities: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            tokenizer: TokenizerConfig::default(),
            min_count: DEFAULT_MIN_COUNT,
            seed: 0,
            ratios: SplitRatios::default(),
            limits: PathLimits::default(),
            tag_entities: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub prompt_dictionary_size: usize,
    pub response_dictionary_size: usize,
    /// Vocabulary cutoff the corpus was built with.
    #[serde(default = "one")]
    pub min_count: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub train: Vec<ExamplePair>,
    pub valid: Vec<ExamplePair>,
    pub test: Vec<ExamplePair>,
    pub vocab: Vocabulary,
    pub stats: CorpusStats,
}

impl Corpus {
    pub fn splits(&self) -> [(&'static str, &[ExamplePair]); 3] {
        [("train", &self.train), ("valid", &self.valid), ("test", &self.test)]
    }
}

pub fn corpus_statistics(corpus: &Corpus) -> CorpusStats {
    CorpusStats {
        train: corpus.train.len(),
        valid: corpus.valid.len(),
        test: corpus.test.len(),
        prompt_dictionary_size: corpus.vocab.prompt_dictionary_size(),
        response_dictionary_size: corpus.vocab.response_dictionary_size(),
        min_count: corpus.vocab.min_count(),
    }
}

fn dedup(pairs: Vec<ExamplePair>) -> Vec<ExamplePair> {
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .filter(|p| seen.insert((p.prompt.clone(), p.response.clone())))
        .collect()
}

/// Builds a corpus with the built-in capitalization tagger when
/// `cfg.tag_entities` is set.
pub fn build_corpus(trees: &[DebateTree], strategy: &ParsingStrategy, cfg: &CorpusConfig) -> Result<Corpus, CorpusError> {
    let tagger = CapitalizationTagger::default();
    build_corpus_with_tagger(trees, strategy, cfg, cfg.tag_entities.then_some(&tagger as &dyn EntityTagger))
}

pub fn build_corpus_with_tagger(
    trees: &[DebateTree],
    strategy: &ParsingStrategy,
    cfg: &CorpusConfig,
    tagger: Option<&dyn EntityTagger>,
) -> Result<Corpus, CorpusError> {
    let partition = partition_trees(trees, cfg.ratios, cfg.seed)?;
    let mut sorted: Vec<&DebateTree> = trees.iter().collect();
    sorted.sort_by(|a, b| a.tree_id.cmp(&b.tree_id));

    let render_split = |ids: &[String]| -> Vec<ExamplePair> {
        sorted
            .iter()
            .filter(|t| ids.binary_search(&t.tree_id).is_ok())
            .flat_map(|tree| {
                enumerate_debate_paths(tree, strategy, cfg.limits)
                    .into_iter()
                    .map(|p| render_example_with(&p, tree, strategy.kind, &cfg.tokenizer, tagger))
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let raw_train = render_split(&partition.train);
    let raw_valid = render_split(&partition.valid);
    let raw_test = render_split(&partition.test);

    let vocab = build_vocabulary(&raw_train, cfg.min_count)?;
    let encode = |pairs: Vec<ExamplePair>| -> Vec<ExamplePair> {
        dedup(
            pairs
                .into_iter()
                .map(|mut p| {
                    p.prompt = encode_tokens(&p.prompt, &vocab);
                    p.response = encode_tokens(&p.response, &vocab);
                    p
                })
                .collect(),
        )
    };
    let mut corpus = Corpus {
        train: encode(raw_train),
        valid: encode(raw_valid),
        test: encode(raw_test),
        vocab: vocab.clone(),
        stats: CorpusStats::default(),
    };
    corpus.stats = corpus_statistics(&corpus);
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{ArgumentNode, Stance};

    fn tree(id: &str) -> DebateTree {
        let mut t = DebateTree::new(id, "T");
        t.insert(ArgumentNode::root("r", "T"));
        t
    }

    #[test]
    fn largest_remainder() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(20), [18, 1, 1]);
        assert_eq!(r.sizes(1), [1, 0, 0]);
        assert_eq!(r.sizes(0), [0, 0, 0]);
        assert_eq!(r.sizes(30), [27, 2, 1]);
        assert_eq!(SplitRatios::new(1.0, 0.0, 0.0).unwrap().sizes(7), [7, 0, 0]);
    }

    #[test]
    fn bad_ratios() {
        assert!(SplitRatios::new(0.5, 0.5, 0.5).is_err());
        assert!(SplitRatios::new(1.5, -0.5, 0.0).is_err());
    }

    #[test]
    fn partition_is_seeded_and_disjoint() {
        let trees: Vec<DebateTree> = (0..20).map(|i| tree(&format!("t{i:02}"))).collect();
        let a = partition_trees(&trees, SplitRatios::default(), 7).unwrap();
        let b = partition_trees(&trees, SplitRatios::default(), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.valid.len(), a.test.len()), (18, 1, 1));
        let mut all: Vec<_> = a.train.iter().chain(&a.valid).chain(&a.test).cloned().collect();
        all.sort();
        assert_eq!(all.len(), 20);
        all.dedup();
        assert_eq!(all.len(), 20);

        let one = partition_trees(&trees[..1], SplitRatios::default(), 0).unwrap();
        assert_eq!(one.train, vec!["t00".to_string()]);
    }

    #[test]
    fn duplicate_tree_ids_rejected() {
        assert!(partition_trees(&[tree("a"), tree("a")], SplitRatios::default(), 0).is_err());
    }

    #[test]
    fn single_node_sides_have_no_eoa() {
        let mut t = tree("x");
        t.insert(ArgumentNode::argument("a", "r", Stance::Pro, "Yes."));
        t.insert(ArgumentNode::argument("b", "a", Stance::Con, "No."));
        let path = DebatePath { tree_id: "x".into(), node_ids: vec!["a".into(), "b".into()], split_index: 1, turn_starts: vec![0, 1] };
        let ex = render_example(&path, &t, StrategyKind::Contradicting, &TokenizerConfig::default());
        assert_eq!(ex.prompt, ["yes", "."]);
        assert_eq!(ex.response, ["no", ".", EOS]);
    }
}
