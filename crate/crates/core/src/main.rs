use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use debate_forge::corpus::{build_corpus, export_parallel_text, read_corpus, write_corpus, CorpusConfig, SplitRatios, DEFAULT_MIN_COUNT};
use debate_forge::eval::{
    aggregate_ratings, chains_of_length, make_rating_packets, perplexity, read_key, read_ratings, transcript_from_nodes,
    write_key, write_packets,
};
use debate_forge::generation::{
    serve_backend, train_ngram, wire::serve_backend_tcp, BackendSpec, GenerationRequest, GeneratorBackend,
};
use debate_forge::grammar::{enumerate_debate_paths, Anchor, ParsingStrategy, PathLimits};
use debate_forge::orchestrator::{run_debate, run_repl, DebateConfig, DebateTranscript, HistoryMode};
use debate_forge::service::{serve, ServiceConfig};
use debate_forge::tree::{
    default_stopwords, is_english, read_tree_file, read_trees, save_tree, tree_files, StopwordScorer, TreeFormat,
    DEFAULT_ENGLISH_THRESHOLD,
};

#[derive(Parser)]
#[command(name = "debate-forge", version, about = "Debate corpora and generated debates from argument trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PathArgs {
    /// supportive, contradicting, complex, multi-turn, or custom:<prompt>/<response>
    #[arg(long, default_value = "complex")]
    strategy: ParsingStrategy,
    /// Where paths may start: any (any argument) or root (children of the thesis)
    #[arg(long, default_value = "any")]
    anchor: Anchor,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
}

impl PathArgs {
    fn limits(&self) -> PathLimits {
        PathLimits { max_len: self.max_len, anchor: self.anchor }
    }
}

#[derive(Args, Clone)]
struct BackendArgs {
    /// echo, ngram:<model.json>, retrieval:<corpus dir>, cmd:<program args>, tcp:<host:port>
    #[arg(long, default_value = "echo")]
    backend: BackendSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 60)]
    max_tokens: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw tree files, drop non-English ones, write canonical JSON
    Ingest {
        /// Tree files or directories
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENGLISH_THRESHOLD)]
        threshold: f64,
    },
    /// Print the debate paths of one tree as JSON lines
    Extract {
        tree: PathBuf,
        #[command(flatten)]
        paths: PathArgs,
    },
    /// Build a train/valid/test corpus from trees
    Corpus {
        /// Tree file or directory
        trees: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        paths: PathArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
        min_count: u64,
        /// Collapse capitalized names into <ent>
        #[arg(long)]
        ner: bool,
        /// train,valid,test proportions
        #[arg(long, default_value = "0.9,0.05,0.05", value_parser = parse_ratios)]
        ratios: SplitRatios,
        /// Also write <split>.source / <split>.target files
        #[arg(long)]
        parallel: bool,
    },
    /// Show corpus statistics
    Stats { corpus: PathBuf },
    /// Train an n-gram model on a corpus
    Train {
        corpus: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
    },
    /// Token-level perplexity of an n-gram model on a corpus split
    Perplexity {
        model: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Generate one response
    Generate {
        prompt: String,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Run a debate, automatically or interactively
    Debate {
        subject: String,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = 10)]
        turns: usize,
        /// Prompt with only the previous turn instead of the whole history
        #[arg(long)]
        last_response: bool,
        /// Read human turns from stdin
        #[arg(long, short)]
        interactive: bool,
        /// Save the transcript as JSON
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Register a backend as name=spec (repeatable)
        #[arg(long, value_parser = parse_named_backend)]
        backend: Vec<(String, BackendSpec)>,
    },
    /// Build blinded rating packets from human and generated debates
    EvalPack {
        /// Trees supplying human debates and generation subjects
        trees: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = 10)]
        turns: usize,
        #[arg(long, default_value_t = 50)]
        human: usize,
        #[arg(long, default_value_t = 56)]
        generated: usize,
    },
    /// Aggregate a ratings CSV against a packet key
    EvalAggregate {
        ratings: PathBuf,
        key: PathBuf,
        /// Population instead of sample standard deviation
        #[arg(long)]
        population: bool,
        #[arg(long)]
        json: bool,
    },
    /// Answer wire-protocol requests on stdin/stdout (or a TCP port)
    Backend {
        #[arg(long, default_value = "echo")]
        spec: BackendSpec,
        #[arg(long)]
        listen: Option<String>,
    },
}

fn parse_named_backend(s: &str) -> Result<(String, BackendSpec), String> {
    let (name, spec) = s.split_once('=').ok_or("expected name=spec")?;
    Ok((name.to_string(), spec.parse().map_err(|e| format!("{e}"))?))
}

fn parse_ratios(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let [train, valid, test] = parts[..] else { return Err("expected three comma-separated numbers".into()) };
    SplitRatios::new(train, valid, test).map_err(|e| e.to_string())
}

fn request(prompt: Vec<String>, b: &BackendArgs) -> GenerationRequest {
    GenerationRequest { prompt, max_tokens: b.max_tokens, temperature: b.temperature, seed: b.seed }
}

fn debate_config(b: &BackendArgs, turns: usize) -> DebateConfig {
    DebateConfig {
        max_turns: turns,
        backend: b.backend.to_string(),
        seed: b.seed,
        temperature: b.temperature,
        max_tokens: b.max_tokens,
        ..DebateConfig::default()
    }
}

fn ingest(inputs: &[PathBuf], out: &Path, threshold: f64) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let scorer = StopwordScorer::new(default_stopwords());
    let (mut kept, mut foreign, mut invalid) = (0, 0, 0);
    for input in inputs {
        let files = if input.is_dir() { tree_files(input)? } else { vec![input.clone()] };
        for file in files {
            let tree = match read_tree_file(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("skip: {e}");
                    invalid += 1;
                    continue;
                }
            };
            if !is_english(&tree, &scorer, threshold).unwrap_or(false) {
                foreign += 1;
                continue;
            }
            std::fs::write(out.join(format!("{}.json", tree.tree_id)), save_tree(&tree, TreeFormat::CanonicalJson))?;
            kept += 1;
        }
    }
    println!("kept {kept}, not English {foreign}, invalid {invalid}");
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe (e.g. `| head`) is not a failure
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { inputs, out, threshold } => ingest(&inputs, &out, threshold)?,
        Command::Extract { tree, paths } => {
            let tree = read_tree_file(&tree)?;
            let mut stdout = io::stdout().lock();
            for p in enumerate_debate_paths(&tree, &paths.strategy, paths.limits()) {
                serde_json::to_writer(&mut stdout, &p)?;
                writeln!(stdout)?;
            }
        }
        Command::Corpus { trees, out, paths, seed, min_count, ner, ratios, parallel } => {
            let trees = read_trees(&trees)?;
            let cfg = CorpusConfig { min_count, seed, limits: paths.limits(), tag_entities: ner, ratios, ..CorpusConfig::default() };
            let corpus = build_corpus(&trees, &paths.strategy, &cfg)?;
            write_corpus(&corpus, &out)?;
            if parallel {
                export_parallel_text(&corpus, &out)?;
            }
            println!("{}", serde_json::to_string_pretty(&corpus.stats)?);
        }
        Command::Stats { corpus } => {
            let corpus = read_corpus(&corpus)?;
            println!("{}", serde_json::to_string_pretty(&corpus.stats)?);
            println!("vocabulary: {} types (min count {})", corpus.vocab.len(), corpus.vocab.min_count());
        }
        Command::Train { corpus, out, order, alpha } => {
            let corpus = read_corpus(&corpus)?;
            let model = train_ngram(&corpus, order, alpha)?;
            model.save(&out)?;
            println!("{}-gram model over {} types -> {}", model.order(), model.vocab_size(), out.display());
        }
        Command::Perplexity { model, corpus, split } => {
            let model = debate_forge::generation::NgramModel::load(&model)?;
            let corpus = read_corpus(&corpus)?;
            let Some((_, pairs)) = corpus.splits().into_iter().find(|(name, _)| *name == split) else {
                bail!("unknown split {split:?}");
            };
            println!("{:.4}", perplexity(&model, pairs)?);
        }
        Command::Generate { prompt, backend } => {
            let b = backend.backend.build()?;
            let tokens = debate_forge::corpus::tokenize(&prompt, &Default::default());
            let out = b.generate(&request(tokens, &backend))?;
            println!("{}", out.join(" "));
        }
        Command::Debate { subject, backend, turns, last_response, interactive, out } => {
            let b = backend.backend.build()?;
            let mut cfg = debate_config(&backend, turns);
            if last_response {
                cfg.history = HistoryMode::LastResponse;
            }
            let t = if interactive {
                run_repl(&subject, b.as_ref(), cfg, io::stdin().lock(), io::stdout())?
            } else {
                let t = run_debate(&subject, b.as_ref(), cfg)?;
                for turn in &t.turns {
                    println!("{}: {}", turn.speaker, turn.display_text.replace('\n', " / "));
                }
                t
            };
            if let Some(path) = out {
                std::fs::write(path, t.to_json() + "\n")?;
            }
        }
        Command::Serve { config, port, data_dir, backend } => {
            let mut cfg = match config {
                Some(path) => ServiceConfig::load(&path)?,
                None => ServiceConfig::default(),
            };
            if let Some(p) = port {
                cfg.port = p;
            }
            if let Some(d) = data_dir {
                cfg.data_dir = d;
            }
            cfg.backends.extend(backend);
            if cfg.backends.is_empty() {
                cfg.backends.insert("echo".into(), BackendSpec::Echo);
            }
            eprintln!("listening on port {}", cfg.port);
            tokio::runtime::Runtime::new()?.block_on(serve(cfg))?;
        }
        Command::EvalPack { trees, out, backend, turns, human, generated } => {
            let trees = read_trees(&trees)?;
            let human_debates: Vec<DebateTranscript> = trees
                .iter()
                .flat_map(|t| chains_of_length(t, turns).into_iter().filter_map(move |c| transcript_from_nodes(t, &c)))
                .take(human)
                .collect();
            let subjects: Vec<&str> = trees.iter().filter_map(|t| t.root()).map(|r| r.text.as_str()).collect();
            if subjects.is_empty() && generated > 0 {
                bail!("no theses to generate debates from");
            }
            let b = backend.backend.build()?;
            let mut generated_debates = Vec::with_capacity(generated);
            for i in 0..generated {
                let mut cfg = debate_config(&backend, turns);
                cfg.seed = backend.seed.wrapping_add(1000 * i as u64);
                generated_debates.push(run_debate(subjects[i % subjects.len()], b.as_ref(), cfg)?);
            }
            let (packets, key) = make_rating_packets(&human_debates, &generated_debates, turns, backend.seed)?;
            write_packets(&packets, &out.join("packets"))?;
            write_key(&key, &out.join("key.csv"))?;
            println!("{} packets ({} human, {} generated)", packets.len(), human_debates.len(), generated_debates.len());
        }
        Command::EvalAggregate { ratings, key, population, json } => {
            let report = aggregate_ratings(&read_ratings(&ratings)?, &read_key(&key)?, population)?;
            if json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Backend { spec, listen } => {
            let b: Arc<dyn GeneratorBackend> = spec.build()?;
            match listen {
                Some(addr) => {
                    let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
                    eprintln!("backend listening on {}", listener.local_addr()?);
                    serve_backend_tcp(b, listener)?;
                }
                None => {
                    serve_backend(b.as_ref(), BufReader::new(io::stdin().lock()), io::stdout().lock())?;
                }
            }
        }
    }
    Ok(())
}
