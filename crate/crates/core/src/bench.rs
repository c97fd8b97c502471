//! Synthetic tracking benchmark with controlled lexical drift.
//!
//! A first slice of topics with disjoint vocabularies is sampled from an
//! embedding store. The second slice copies every topic, replacing a fraction
//! of its tokens by their nearest neighbour in embedding space (a synonym
//! stand-in) and jittering weights. Ground truth links each topic to its own
//! copy, so both measures can be scored on how many links they recover.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Topic, TopicSlice, WeightedToken};
use crate::divergence::Method;
use crate::embedding::EmbeddingStore;
use crate::tracker::{
    track, MethodSelection, TrackConfig, TrackError, DEFAULT_JS_THRESHOLD, DEFAULT_SD_THRESHOLD,
};

pub const DEFAULT_WORDS_PER_TOPIC: usize = 10;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Track(#[from] TrackError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftConfig {
    /// Fraction of each topic's tokens replaced by a neighbour.
    pub drift_rate: f64,
    /// Weights are multiplied by `1 + U(-weight_noise, weight_noise)`.
    pub weight_noise: f64,
    pub seed: u64,
}

impl DriftConfig {
    pub fn new(drift_rate: f64, weight_noise: f64, seed: u64) -> Result<Self, BenchError> {
        let cfg = DriftConfig {
            drift_rate,
            weight_noise,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(0.0..=1.0).contains(&self.drift_rate) {
            return Err(BenchError::Config(format!(
                "drift rate must be in [0, 1], got {}",
                self.drift_rate
            )));
        }
        if !(self.weight_noise.is_finite() && self.weight_noise >= 0.0) {
            return Err(BenchError::Config(format!(
                "weight noise must be >= 0, got {}",
                self.weight_noise
            )));
        }
        Ok(())
    }

    /// Number of tokens replaced in a topic of `token_count` tokens.
    pub fn replacements(&self, token_count: usize) -> usize {
        // The epsilon keeps products like 0.3 * 10 from rounding up to 4.
        let k = (self.drift_rate * token_count as f64 - 1e-9).ceil();
        (k.max(0.0) as usize).min(token_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub js: f64,
    pub sd: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            js: DEFAULT_JS_THRESHOLD,
            sd: DEFAULT_SD_THRESHOLD,
        }
    }
}

/// Copy of `topic` with `cfg.replacements(n)` tokens swapped for embedding
/// neighbours and weights jittered. The id and slice label are kept.
///
/// Replacements never reuse a token the topic held before or has gained
/// since. A token with no usable neighbour is kept as is.
pub fn generate_drifted_pair<R: Rng + ?Sized>(
    topic: &Topic,
    cfg: &DriftConfig,
    store: &EmbeddingStore,
    rng: &mut R,
) -> Topic {
    let mut tokens: Vec<WeightedToken> = topic.tokens().cloned().collect();
    let n_words = topic.words().len();
    let n = tokens.len();

    let mut chosen = index::sample(rng, n, cfg.replacements(n)).into_vec();
    chosen.sort_unstable();

    let mut taken: HashSet<String> = tokens.iter().map(|t| t.token().to_string()).collect();
    for pos in chosen {
        let original = tokens[pos].token().to_string();
        let query = store.lookup(&original);
        match store.nearest(&query, |t| taken.contains(t)) {
            Some(neighbour) => {
                let neighbour = neighbour.to_string();
                taken.insert(neighbour.clone());
                tokens[pos] = tokens[pos].with_token(neighbour);
            }
            None => log::debug!("no replacement for `{original}` in topic `{}`", topic.id()),
        }
    }

    if cfg.weight_noise > 0.0 {
        for tok in tokens.iter_mut() {
            let jitter: f64 = rng.random_range(-cfg.weight_noise..=cfg.weight_noise);
            *tok = tok.scaled(1.0 + jitter);
        }
    }

    let entities = tokens.split_off(n_words);
    topic.replace_tokens(tokens, entities)
}

/// Benchmark scores for one method at one drift setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub method: Method,
    pub drift_rate: f64,
    pub weight_noise: f64,
    pub n_topics: usize,
    pub threshold: f64,
    /// Recovered ground-truth links over all ground-truth links.
    pub accuracy: f64,
    /// Correct links over all produced links; absent when nothing was linked.
    pub precision: Option<f64>,
    pub recall: f64,
    pub links: usize,
    pub correct_links: usize,
    pub mean_correct_score: Option<f64>,
    /// Mean and minimum score between each topic and its own drifted copy.
    pub mean_true_pair_score: Option<f64>,
    pub min_true_pair_score: Option<f64>,
}

/// Synthetic benchmark setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Benchmark {
    pub n_topics: usize,
    pub words_per_topic: usize,
    pub thresholds: Thresholds,
}

impl Benchmark {
    pub fn new(n_topics: usize, thresholds: Thresholds) -> Self {
        Benchmark {
            n_topics,
            words_per_topic: DEFAULT_WORDS_PER_TOPIC,
            thresholds,
        }
    }

    fn validate(&self, store: &EmbeddingStore) -> Result<(), BenchError> {
        if self.n_topics < 2 {
            return Err(BenchError::Config(format!(
                "at least 2 topics are needed, got {}",
                self.n_topics
            )));
        }
        if self.words_per_topic < 1 {
            return Err(BenchError::Config("topics need at least one word".into()));
        }
        let needed = self.n_topics.saturating_mul(self.words_per_topic);
        let available = usable_vocabulary(store).len();
        if needed > available {
            return Err(BenchError::Config(format!(
                "{} topics of {} words need {needed} distinct tokens, the store has {available}",
                self.n_topics, self.words_per_topic
            )));
        }
        Ok(())
    }

    /// Builds the original slice and its drifted copy.
    pub fn generate_slices(
        &self,
        cfg: &DriftConfig,
        store: &EmbeddingStore,
    ) -> Result<(TopicSlice, TopicSlice), BenchError> {
        cfg.validate()?;
        self.validate(store)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let mut vocab = usable_vocabulary(store);
        vocab.shuffle(&mut rng);

        let originals: Vec<Topic> = vocab
            .chunks(self.words_per_topic)
            .take(self.n_topics)
            .enumerate()
            .map(|(i, chunk)| {
                // Zipf-shaped weights, like a typical topic-word distribution.
                let words = chunk
                    .iter()
                    .enumerate()
                    .map(|(rank, tok)| {
                        WeightedToken::new(*tok, 1.0 / (rank + 1) as f64)
                            .expect("store tokens are non-empty")
                    })
                    .collect();
                Topic::new(format!("topic-{i:03}"), 1, words, Vec::new())
                    .expect("generated topic is valid")
            })
            .collect();
        let drifted: Vec<Topic> = originals
            .iter()
            .map(|t| generate_drifted_pair(t, cfg, store, &mut rng))
            .collect();

        let a = TopicSlice::new("original", originals).expect("ids are distinct");
        let b = TopicSlice::new("drifted", drifted).expect("ids are distinct");
        Ok((a, b))
    }

    /// Tracks the drifted slice under both methods and scores the links.
    pub fn run(
        &self,
        cfg: &DriftConfig,
        store: &EmbeddingStore,
    ) -> Result<Vec<BenchResult>, BenchError> {
        let (a, b) = self.generate_slices(cfg, store)?;
        let config = TrackConfig {
            methods: MethodSelection::Both,
            js_threshold: self.thresholds.js,
            sd_threshold: self.thresholds.sd,
            top_words: self.words_per_topic.max(crate::tracker::DEFAULT_TOP_WORDS),
            ..TrackConfig::default()
        };
        let outcome = track(&a, &b, &config, Some(store))?;

        let mut results = Vec::new();
        for method in [Method::Js, Method::Sd] {
            let matching = outcome.matching(method).expect("both methods ran");
            let correct: Vec<f64> = matching
                .pairs
                .iter()
                .filter(|p| p.topic_a == p.topic_b)
                .map(|p| p.score)
                .collect();
            let true_scores = true_pair_scores(&a, &b, method, store);
            let n = self.n_topics as f64;
            let accuracy = correct.len() as f64 / n;
            results.push(BenchResult {
                method,
                drift_rate: cfg.drift_rate,
                weight_noise: cfg.weight_noise,
                n_topics: self.n_topics,
                threshold: config.threshold(method),
                accuracy,
                precision: (!matching.pairs.is_empty())
                    .then(|| correct.len() as f64 / matching.pairs.len() as f64),
                recall: accuracy,
                links: matching.pairs.len(),
                correct_links: correct.len(),
                mean_correct_score: mean(&correct),
                mean_true_pair_score: mean(&true_scores),
                min_true_pair_score: true_scores.iter().copied().reduce(f64::min),
            });
        }
        Ok(results)
    }
}

/// Runs the benchmark with the default number of words per topic.
pub fn run_benchmark(
    n_topics: usize,
    cfg: &DriftConfig,
    store: &EmbeddingStore,
    thresholds: Thresholds,
) -> Result<Vec<BenchResult>, BenchError> {
    Benchmark::new(n_topics, thresholds).run(cfg, store)
}

/// Score between each topic of `a` and the topic with the same id in `b`.
pub fn true_pair_scores(
    a: &TopicSlice,
    b: &TopicSlice,
    method: Method,
    store: &EmbeddingStore,
) -> Vec<f64> {
    a.topics()
        .iter()
        .filter_map(|t| {
            let u = b.get(t.id())?;
            let s = match method {
                Method::Js => crate::divergence::js_divergence(t, u),
                Method::Sd => crate::divergence::semantic_divergence(store, t, u),
            };
            s.ok().map(|s| s.value)
        })
        .collect()
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn usable_vocabulary(store: &EmbeddingStore) -> Vec<&str> {
    store
        .tokens()
        .iter()
        .filter(|t| store.get(t).is_some_and(|v| v.iter().any(|&x| x != 0.0)))
        .map(String::as_str)
        .collect()
}

/// Shape of a generated clustered embedding store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticStoreConfig {
    /// Number of concepts; every concept gets `variants` surface forms.
    pub concepts: usize,
    pub variants: usize,
    pub dimension: usize,
    /// Gaussian spread of a surface form around its concept centre,
    /// relative to the centre's norm.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SyntheticStoreConfig {
    fn default() -> Self {
        SyntheticStoreConfig {
            concepts: 400,
            variants: 3,
            dimension: 32,
            spread: 0.35,
            seed: 20190101,
        }
    }
}

/// Generates a store of `concepts * variants` tokens in which tokens of the
/// same concept are near neighbours. Tokens are named `c0042v1` and so on.
pub fn synthetic_store(cfg: &SyntheticStoreConfig) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dimension;
    let unit_noise = cfg.spread / (dim as f64).sqrt();
    let mut rows = Vec::with_capacity(cfg.concepts * cfg.variants);
    for c in 0..cfg.concepts {
        let centre: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = centre.iter().map(|x| x * x).sum::<f64>().sqrt();
        for v in 0..cfg.variants {
            let vector: Vec<f32> = centre
                .iter()
                .map(|&x| {
                    let noise: f64 = rng.sample(StandardNormal);
                    (x / norm + unit_noise * noise) as f32
                })
                .collect();
            rows.push((format!("c{c:04}v{v}"), vector));
        }
    }
    EmbeddingStore::from_rows(dim, rows).expect("generated rows have the configured dimension")
}

/// Results table as tab-separated text.
pub fn results_tsv(results: &[BenchResult]) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::from(
        "method\tdrift_rate\tweight_noise\tn_topics\tthreshold\taccuracy\tprecision\trecall\tlinks\tmean_true_pair_score\n",
    );
    for r in results {
        out.push_str(&format!(
            "{}\t{:.2}\t{:.2}\t{}\t{}\t{:.4}\t{}\t{:.4}\t{}\t{}\n",
            r.method,
            r.drift_rate,
            r.weight_noise,
            r.n_topics,
            r.threshold,
            r.accuracy,
            opt(r.precision),
            r.recall,
            r.links,
            opt(r.mean_true_pair_score),
        ));
    }
    out
}
