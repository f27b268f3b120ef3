//! Stupid-backoff n-gram language model.
//!
//! Scores are relative frequencies at the longest history seen with the
//! token, multiplied by `alpha` for every backoff step, bottoming out in
//! add-one smoothed unigrams. They are not normalized; the sampler
//! normalizes over the vocabulary before drawing.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{finish_response, GenerationError, GenerationRequest, GeneratorBackend};
use crate::corpus::{Corpus, Vocabulary, EOS, TURN, UNK};

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.4;

const UNSEEN: u32 = u32::MAX;

/// Log-probability of a response given its prompt.
pub trait SequenceScorer {
    /// Natural-log probability of `response`, conditioned on `prompt`.
    fn score_response(&self, prompt: &[String], response: &[String]) -> f64;
}

type Successors = HashMap<Vec<u32>, Vec<(u32, u64)>>;

#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    /// `counts[k]`: occurrences of each (k+1)-gram.
    counts: Vec<HashMap<Vec<u32>, u64>>,
    /// `context[k]`: occurrences of each k-token history followed by a token.
    context: Vec<HashMap<Vec<u32>, u64>>,
    total: u64,
    /// Trained on `prompt <turn> response` streams; generation then
    /// continues from `prompt <turn>`.
    paired: bool,
    /// `successors[k]`: tokens seen after each k-token history, with counts.
    successors: Vec<Successors>,
    unigram: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    alpha: f64,
    paired: bool,
    vocab: Vec<String>,
    /// `(ids, count)` for every n-gram of every order, sorted.
    ngrams: Vec<(Vec<u32>, u64)>,
}

impl NgramModel {
    fn empty(vocab: Vocabulary, order: usize, alpha: f64, paired: bool) -> Self {
        NgramModel {
            order,
            alpha,
            vocab,
            counts: vec![HashMap::new(); order],
            context: vec![HashMap::new(); order],
            total: 0,
            paired,
            successors: vec![HashMap::new(); order],
            unigram: Vec::new(),
        }
    }

    /// Builds the lookup tables used for sampling. Call once counting is done.
    fn index(mut self) -> Self {
        self.unigram = vec![0; self.vocab.len()];
        for (gram, &c) in &self.counts[0] {
            if let Some(slot) = self.unigram.get_mut(gram[0] as usize) {
                *slot = c;
            }
        }
        for k in 1..self.order {
            let mut succ: HashMap<Vec<u32>, Vec<(u32, u64)>> = HashMap::new();
            for (gram, &c) in &self.counts[k] {
                succ.entry(gram[..k].to_vec()).or_default().push((gram[k], c));
            }
            for list in succ.values_mut() {
                list.sort_unstable();
            }
            self.successors[k] = succ;
        }
        self
    }

    fn add_ngram(&mut self, gram: &[u32], count: u64) {
        let k = gram.len() - 1;
        *self.counts[k].entry(gram.to_vec()).or_default() += count;
        if k == 0 {
            self.total += count;
        } else {
            *self.context[k].entry(gram[..k].to_vec()).or_default() += count;
        }
    }

    fn add_stream(&mut self, ids: &[u32]) {
        for end in 1..=ids.len() {
            for k in 1..=self.order.min(end) {
                self.add_ngram(&ids[end - k..end], 1);
            }
        }
    }

    /// Trains on raw token streams. The vocabulary is `vocab` followed by any
    /// stream token it lacks.
    pub fn from_streams<S: AsRef<[String]>>(
        streams: &[S],
        vocab: &[&str],
        order: usize,
        alpha: f64,
    ) -> Result<Self, GenerationError> {
        check_params(order, alpha)?;
        let mut tokens: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
        for s in streams {
            tokens.extend(s.as_ref().iter().cloned());
        }
        let mut seen = std::collections::HashSet::new();
        tokens.retain(|t| seen.insert(t.clone()));
        let vocab = plain_vocabulary(tokens);
        let mut model = NgramModel::empty(vocab, order, alpha, false);
        for s in streams {
            let ids = model.encode(s.as_ref());
            model.add_stream(&ids);
        }
        Ok(model.index())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_paired(&self) -> bool {
        self.paired
    }

    /// Count of an n-gram given as tokens; 0 for unknown tokens.
    pub fn count(&self, gram: &[&str]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<u32>> = gram.iter().map(|t| self.vocab.id(t)).collect();
        ids.and_then(|ids| self.counts[ids.len() - 1].get(&ids).copied()).unwrap_or(0)
    }

    /// Unknown tokens map to `<unk>`, or to an id with no counts when the
    /// vocabulary has no `<unk>`.
    fn encode(&self, tokens: &[String]) -> Vec<u32> {
        let unk = self.vocab.id(UNK).unwrap_or(UNSEEN);
        tokens.iter().map(|t| self.vocab.id(t).unwrap_or(unk)).collect()
    }

    /// Backoff score of `token` after `history` (only the last `order - 1`
    /// ids matter).
    fn prob(&self, history: &[u32], token: u32) -> f64 {
        let hist = &history[history.len().saturating_sub(self.order - 1)..];
        let mut factor = 1.0;
        let mut gram: Vec<u32> = Vec::with_capacity(hist.len() + 1);
        for k in (1..=hist.len()).rev() {
            let h = &hist[hist.len() - k..];
            gram.clear();
            gram.extend_from_slice(h);
            gram.push(token);
            if let Some(&c) = self.counts[k].get(&gram) {
                let ctx = self.context[k][h];
                return factor * c as f64 / ctx as f64;
            }
            factor *= self.alpha;
        }
        let c = self.counts[0].get(&[token][..]).copied().unwrap_or(0);
        factor * (c + 1) as f64 / (self.total + self.vocab.len() as u64) as f64
    }

    /// Sum of `ln p(token | history)` over `tokens`, where the history starts
    /// with `context`.
    pub fn score_with_context(&self, context: &[String], tokens: &[String]) -> f64 {
        let mut history = self.encode(context);
        let mut total = 0.0;
        for id in self.encode(tokens) {
            total += self.prob(&history, id).ln();
            history.push(id);
        }
        total
    }

    fn candidates(&self) -> impl Iterator<Item = u32> + '_ {
        let turn = self.vocab.id(TURN);
        (0..self.vocab.len() as u32).filter(move |&id| Some(id) != turn)
    }

    /// Normalized next-token distribution after `history` (token ids in
    /// ascending order; the turn separator is never proposed).
    pub fn next_distribution(&self, history: &[String]) -> Vec<(u32, f64)> {
        self.distribution(&self.encode(history))
    }

    /// Same values as calling `prob` for every id, but only visits the
    /// observed continuations of each history suffix.
    fn all_probs(&self, history: &[u32]) -> Vec<f64> {
        let hist = &history[history.len().saturating_sub(self.order - 1)..];
        let l = hist.len();
        let floor = self.alpha.powi(l as i32) / (self.total + self.vocab.len() as u64) as f64;
        let mut probs: Vec<f64> = self.unigram.iter().map(|&c| floor * (c + 1) as f64).collect();
        for k in 1..=l {
            let h = &hist[l - k..];
            if let Some(succ) = self.successors[k].get(h) {
                let factor = self.alpha.powi((l - k) as i32) / self.context[k][h] as f64;
                for &(t, c) in succ {
                    probs[t as usize] = factor * c as f64;
                }
            }
        }
        probs
    }

    fn distribution(&self, history: &[u32]) -> Vec<(u32, f64)> {
        let probs = self.all_probs(history);
        let mut scores: Vec<(u32, f64)> = self.candidates().map(|id| (id, probs[id as usize])).collect();
        let sum: f64 = scores.iter().map(|(_, p)| p).sum();
        if sum > 0.0 {
            for s in &mut scores {
                s.1 /= sum;
            }
        }
        scores
    }

    fn sample(&self, history: &[u32], temperature: f64, rng: &mut ChaCha8Rng) -> u32 {
        let dist = self.distribution(history);
        if temperature == 0.0 {
            // max_by keeps the last maximum; reverse so ties go to the lowest id
            return dist
                .iter()
                .rev()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|&(id, _)| id)
                .unwrap_or(0);
        }
        let weights: Vec<f64> = dist.iter().map(|(_, p)| p.powf(1.0 / temperature)).collect();
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return self.sample(history, 0.0, rng);
        }
        let mut r = rng.random::<f64>() * sum;
        for (i, w) in weights.iter().enumerate() {
            r -= w;
            if r < 0.0 {
                return dist[i].0;
            }
        }
        dist.last().map(|&(id, _)| id).unwrap_or(0)
    }

    /// Samples up to `max_tokens` tokens, stopping early at `<eos>`.
    pub fn generate_tokens(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        req.validate()?;
        let mut history = self.encode(&req.prompt);
        if self.paired {
            history.extend(self.vocab.id(TURN));
        }
        let eos = self.vocab.id(EOS);
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let mut out = Vec::new();
        for _ in 0..req.max_tokens {
            let id = self.sample(&history, req.temperature, &mut rng);
            history.push(id);
            out.push(self.vocab.token(id).unwrap_or(UNK).to_string());
            if Some(id) == eos {
                break;
            }
        }
        Ok(finish_response(out, req.max_tokens))
    }

    pub fn save(&self, path: &Path) -> Result<(), GenerationError> {
        let mut ngrams: Vec<(Vec<u32>, u64)> = self
            .counts
            .iter()
            .flat_map(|m| m.iter().map(|(k, &v)| (k.clone(), v)))
            .collect();
        ngrams.sort();
        let file = ModelFile {
            order: self.order,
            alpha: self.alpha,
            paired: self.paired,
            vocab: self.vocab.tokens().to_vec(),
            ngrams,
        };
        let bytes = serde_json::to_vec(&file).map_err(|e| GenerationError::Load(e.to_string()))?;
        fs::write(path, bytes).map_err(|e| GenerationError::Load(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, GenerationError> {
        let bytes = fs::read(path).map_err(|e| GenerationError::Load(format!("{}: {e}", path.display())))?;
        let file: ModelFile = serde_json::from_slice(&bytes).map_err(|e| GenerationError::Load(e.to_string()))?;
        check_params(file.order, file.alpha)?;
        let vocab = plain_vocabulary(file.vocab);
        let mut model = NgramModel::empty(vocab, file.order, file.alpha, file.paired);
        for (gram, count) in file.ngrams {
            if gram.is_empty() || gram.len() > model.order || gram.iter().any(|&id| id as usize >= model.vocab.len()) {
                return Err(GenerationError::Load("n-gram outside model order or vocabulary".into()));
            }
            model.add_ngram(&gram, count);
        }
        Ok(model.index())
    }
}

fn check_params(order: usize, alpha: f64) -> Result<(), GenerationError> {
    if order == 0 {
        return Err(GenerationError::InvalidRequest("n-gram order must be at least 1".into()));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(GenerationError::InvalidRequest(format!("bad backoff factor {alpha}")));
    }
    Ok(())
}

fn plain_vocabulary(tokens: Vec<String>) -> Vocabulary {
    Vocabulary::from_ordered(tokens)
}

/// Trains on `prompt <turn> response` for every training pair.
pub fn train_ngram(corpus: &Corpus, order: usize, alpha: f64) -> Result<NgramModel, GenerationError> {
    check_params(order, alpha)?;
    if corpus.train.is_empty() {
        return Err(GenerationError::EmptyCorpus);
    }
    let mut model = NgramModel::empty(corpus.vocab.clone(), order, alpha, true);
    for pair in &corpus.train {
        let mut stream = pair.prompt.clone();
        stream.push(TURN.to_string());
        stream.extend(pair.response.iter().cloned());
        let ids = model.encode(&stream);
        model.add_stream(&ids);
    }
    Ok(model.index())
}

/// Total natural-log probability of `tokens` with an empty history.
pub fn ngram_score(model: &NgramModel, tokens: &[String]) -> f64 {
    model.score_with_context(&[], tokens)
}

impl SequenceScorer for NgramModel {
    fn score_response(&self, prompt: &[String], response: &[String]) -> f64 {
        let mut context = prompt.to_vec();
        if self.paired {
            context.push(TURN.to_string());
        }
        self.score_with_context(&context, response)
    }
}

impl GeneratorBackend for NgramModel {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        self.generate_tokens(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn xy(order: usize, alpha: f64) -> NgramModel {
        NgramModel::from_streams(&[v(&["x", "y", "x", "y"])], &["x", "y", "z"], order, alpha).unwrap()
    }

    #[test]
    fn indexed_probs_match_backoff() {
        let streams = [v(&["a", "b", "c", "a", "b", "d"]), v(&["b", "c", "c", "a"])];
        for order in 1..=4 {
            let m = NgramModel::from_streams(&streams, &["e"], order, 0.4).unwrap();
            for hist in [vec![], vec![0], vec![0, 1], vec![1, 2, 2], vec![4, 0, 1], vec![UNSEEN, 1]] {
                let fast = m.all_probs(&hist);
                for (id, p) in fast.iter().enumerate() {
                    assert!((p - m.prob(&hist, id as u32)).abs() < 1e-15, "order {order} {hist:?} {id}");
                }
            }
        }
    }

    #[test]
    fn bigram_counts() {
        let m = xy(2, 0.4);
        assert_eq!(m.count(&["x", "y"]), 2);
        assert_eq!(m.count(&["y", "x"]), 1);
        assert_eq!(m.count(&["x"]), 2);
        assert_eq!(m.count(&["z"]), 0);
    }

    #[test]
    fn unigram_only() {
        let m = xy(1, 0.4);
        assert_eq!(m.count(&["x"]), 2);
        assert_eq!(m.count(&["x", "y"]), 0);
    }

    #[test]
    fn hand_computed_scores() {
        let m = xy(2, 0.4);
        // y after x: 2/2
        assert_eq!(m.score_with_context(&v(&["x"]), &v(&["y"])), 0.0);
        // z never seen: (0 + 1) / (4 + 3)
        assert!((ngram_score(&m, &v(&["z"])) - (1.0f64 / 7.0).ln()).abs() < 1e-12);
        // x after x: backoff to unigram, 0.4 * 3/7
        assert!((m.score_with_context(&v(&["x"]), &v(&["x"])) - (0.4 * 3.0 / 7.0f64).ln()).abs() < 1e-12);
        assert_eq!(ngram_score(&m, &[]), 0.0);
    }

    #[test]
    fn zero_alpha_kills_backoff() {
        let m = xy(2, 0.0);
        assert_eq!(m.score_with_context(&v(&["x"]), &v(&["x"])), f64::NEG_INFINITY);
        assert_eq!(m.score_with_context(&v(&["x"]), &v(&["y"])), 0.0);
    }

    #[test]
    fn greedy_chain() {
        let m = xy(2, 0.4);
        let req = GenerationRequest::new(v(&["x"])).with_temperature(0.0).with_max_tokens(5);
        assert_eq!(m.generate(&req).unwrap(), v(&["y", "x", "y", "x", "y", EOS]));
        let one = GenerationRequest::new(v(&["x"])).with_temperature(0.0).with_max_tokens(1);
        assert_eq!(m.generate(&one).unwrap(), v(&["y", EOS]));
    }

    #[test]
    fn seeded_sampling_repeats() {
        let m = xy(2, 0.4);
        let req = GenerationRequest::new(v(&["x"])).with_seed(11).with_max_tokens(20);
        assert_eq!(m.generate(&req).unwrap(), m.generate(&req).unwrap());
    }

    #[test]
    fn distribution_normalizes() {
        let m = xy(3, 0.4);
        for h in [v(&[]), v(&["x"]), v(&["y", "x"]), v(&["z", "z"])] {
            let d = m.next_distribution(&h);
            let s: f64 = d.iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(d.iter().all(|(_, p)| *p > 0.0));
        }
    }

    #[test]
    fn save_and_load() {
        let m = xy(3, 0.4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = NgramModel::load(&path).unwrap();
        assert_eq!(back.counts, m.counts);
        assert_eq!(back.context, m.context);
        assert_eq!(back.vocab.tokens(), m.vocab.tokens());
        assert_eq!(back.total, m.total);
    }

    #[test]
    fn bad_parameters() {
        assert!(NgramModel::from_streams(&[v(&["x"])], &[], 0, 0.4).is_err());
        assert!(NgramModel::from_streams(&[v(&["x"])], &[], 2, -1.0).is_err());
        assert!(matches!(train_ngram(&Corpus::default(), 3, 0.4), Err(GenerationError::EmptyCorpus)));
    }
}
