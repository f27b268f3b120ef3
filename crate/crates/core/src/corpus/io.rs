//! On-disk corpus layout:
//!
//! ```text
//! train.jsonl valid.jsonl test.jsonl   one ExamplePair per line
//! vocab.txt                            one token per line, id = line number
//! stats.json                           CorpusStats
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Corpus, CorpusError, CorpusStats, ExamplePair, Vocabulary};

fn write_jsonl(path: &Path, pairs: &[ExamplePair]) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_jsonl(path: &Path) -> Result<Vec<ExamplePair>, CorpusError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Format(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    for (name, pairs) in corpus.splits() {
        write_jsonl(&dir.join(format!("{name}.jsonl")), pairs)?;
    }
    fs::write(dir.join("vocab.txt"), corpus.vocab.to_text())?;
    let mut stats = serde_json::to_vec_pretty(&corpus.stats)?;
    stats.push(b'\n');
    fs::write(dir.join("stats.json"), stats)?;
    Ok(())
}

/// Loads a corpus written by [`write_corpus`]. Training counts are not
/// stored on disk; dictionary sizes come from `stats.json`.
pub fn read_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let mut vocab = Vocabulary::from_text(&fs::read_to_string(dir.join("vocab.txt"))?)?;
    let stats: CorpusStats = serde_json::from_str(&fs::read_to_string(dir.join("stats.json"))?)?;
    vocab.set_dictionary_sizes(stats.prompt_dictionary_size, stats.response_dictionary_size);
    vocab.set_min_count(stats.min_count);
    Ok(Corpus {
        train: read_jsonl(&dir.join("train.jsonl"))?,
        valid: read_jsonl(&dir.join("valid.jsonl"))?,
        test: read_jsonl(&dir.join("test.jsonl"))?,
        vocab,
        stats,
    })
}

/// Writes `<split>.source` / `<split>.target` with space-joined tokens.
pub fn export_parallel_text(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    for (name, pairs) in corpus.splits() {
        let mut source = fs::File::create(dir.join(format!("{name}.source")))?;
        let mut target = fs::File::create(dir.join(format!("{name}.target")))?;
        for p in pairs {
            writeln!(source, "{}", p.prompt.join(" "))?;
            writeln!(target, "{}", p.response.join(" "))?;
        }
    }
    Ok(())
}
