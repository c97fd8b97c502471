//! Topic distance measures and pairwise score matrices.
//!
//! Two measures are provided:
//!
//! * Jensen-Shannon divergence (base 2, range `[0, 1]`) between the merged
//!   word/entity distributions of two topics. Purely lexical.
//! * Semantic divergence: the cosine distance (range `[0, 2]`) between the
//!   probability-weighted embedding sums of two topics.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{combined_distribution, CorpusError, Distribution, Topic};
use crate::embedding::{topic_embedding, EmbeddingError, EmbeddingStore, TopicEmbedding};

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error("cosine distance is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("vectors have different dimensions ({0} and {1})")]
    DimensionMismatch(usize, usize),
    #[error("semantic divergence requires an embedding store")]
    MissingStore,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Jensen-Shannon divergence.
    Js,
    /// Semantic divergence.
    Sd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Js => "js",
            Method::Sd => "sd",
        }
    }

    /// Largest value the measure can take.
    pub fn upper_bound(self) -> f64 {
        match self {
            Method::Js => 1.0,
            Method::Sd => 2.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    pub method: Method,
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, DivergenceError> {
    if u.len() != v.len() {
        return Err(DivergenceError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(DivergenceError::ZeroNorm);
    }
    if u == v {
        return Ok(0.0);
    }
    let d = 1.0 - dot / (nu.sqrt() * nv.sqrt());
    Ok(d.clamp(0.0, 2.0))
}

/// Base-2 Jensen-Shannon divergence of two distributions.
///
/// Tokens missing from one side have probability 0 there; `0 * log(0/x)`
/// contributes nothing. Disjoint supports give exactly 1; otherwise the
/// result is clamped to `[0, 1]`.
pub fn js_distributions(p: &Distribution, q: &Distribution) -> f64 {
    let mut total = 0.0;
    let mut overlap = false;
    let mut pi = p.iter().peekable();
    let mut qi = q.iter().peekable();
    loop {
        let (pp, qq) = match (pi.peek(), qi.peek()) {
            (None, None) => break,
            (Some(&(_, a)), None) => {
                pi.next();
                (a, 0.0)
            }
            (None, Some(&(_, b))) => {
                qi.next();
                (0.0, b)
            }
            (Some(&(ta, a)), Some(&(tb, b))) => match ta.cmp(tb) {
                std::cmp::Ordering::Less => {
                    pi.next();
                    (a, 0.0)
                }
                std::cmp::Ordering::Greater => {
                    qi.next();
                    (0.0, b)
                }
                std::cmp::Ordering::Equal => {
                    pi.next();
                    qi.next();
                    overlap = true;
                    (a, b)
                }
            },
        };
        let m = (pp + qq) / 2.0;
        total += kl_term(pp, m) + kl_term(qq, m);
    }
    if !overlap {
        return 1.0;
    }
    (total / 2.0).clamp(0.0, 1.0)
}

fn kl_term(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).log2()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence between the merged word/entity distributions.
pub fn js_divergence(t1: &Topic, t2: &Topic) -> Result<Score, DivergenceError> {
    let p = combined_distribution(t1)?;
    let q = combined_distribution(t2)?;
    Ok(Score {
        value: js_distributions(&p, &q),
        method: Method::Js,
    })
}

/// Cosine distance between the topic embeddings of two topics.
pub fn semantic_divergence(
    store: &EmbeddingStore,
    t1: &Topic,
    t2: &Topic,
) -> Result<Score, DivergenceError> {
    let e1 = topic_embedding(store, t1)?;
    let e2 = topic_embedding(store, t2)?;
    Ok(Score {
        value: cosine_distance(&e1.vector, &e2.vector)?,
        method: Method::Sd,
    })
}

/// A topic that could not be scored, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incomparable {
    pub topic: String,
    pub reason: String,
}

/// Pairwise scores between two topic lists under one method.
///
/// `None` entries are incomparable pairs (a topic with a degenerate
/// distribution or zero embedding) and never take part in matching.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix {
    pub method: Method,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub scores: Vec<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub incomparable_rows: Vec<Incomparable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub incomparable_cols: Vec<Incomparable>,
}

impl ScoreMatrix {
    /// Matrix over plain ids, every entry comparable. Mostly for tests and bindings.
    pub fn from_dense(
        method: Method,
        rows: Vec<String>,
        cols: Vec<String>,
        scores: Vec<Vec<f64>>,
    ) -> ScoreMatrix {
        assert_eq!(rows.len(), scores.len(), "one score row per row id");
        assert!(
            scores.iter().all(|r| r.len() == cols.len()),
            "one score per column id"
        );
        ScoreMatrix {
            method,
            rows,
            cols,
            scores: scores
                .into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
            incomparable_rows: Vec::new(),
            incomparable_cols: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.scores[i][j]
    }

    /// Comparable entries as `(row, col, score)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.scores.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, s)| s.map(|s| (i, j, s)))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("score matrix always serializes")
    }
}

enum Prepared {
    Js(Result<Distribution, CorpusError>),
    Sd(Result<TopicEmbedding, EmbeddingError>),
}

impl Prepared {
    fn new(topic: &Topic, method: Method, store: Option<&EmbeddingStore>) -> Prepared {
        match (method, store) {
            (Method::Js, _) => Prepared::Js(combined_distribution(topic)),
            (Method::Sd, Some(s)) => Prepared::Sd(topic_embedding(s, topic)),
            (Method::Sd, None) => unreachable!("store checked by caller"),
        }
    }

    fn failure(&self) -> Option<String> {
        match self {
            Prepared::Js(Err(e)) => Some(e.to_string()),
            Prepared::Sd(Err(e)) => Some(e.to_string()),
            _ => None,
        }
    }

    fn distance(&self, other: &Prepared) -> Option<f64> {
        match (self, other) {
            (Prepared::Js(Ok(p)), Prepared::Js(Ok(q))) => Some(js_distributions(p, q)),
            (Prepared::Sd(Ok(a)), Prepared::Sd(Ok(b))) => {
                cosine_distance(&a.vector, &b.vector).ok()
            }
            _ => None,
        }
    }
}

fn prepare_all(
    topics: &[Topic],
    method: Method,
    store: Option<&EmbeddingStore>,
) -> (Vec<Prepared>, Vec<Incomparable>) {
    let prepared: Vec<Prepared> = topics
        .iter()
        .map(|t| Prepared::new(t, method, store))
        .collect();
    let bad = topics
        .iter()
        .zip(&prepared)
        .filter_map(|(t, p)| {
            p.failure().map(|reason| Incomparable {
                topic: t.id().to_string(),
                reason,
            })
        })
        .collect();
    (prepared, bad)
}

/// Scores every pair `(a, b)` with `a` from `topics_a` and `b` from `topics_b`.
///
/// Each topic's distribution or embedding is computed once.
pub fn score_matrix(
    topics_a: &[Topic],
    topics_b: &[Topic],
    method: Method,
    store: Option<&EmbeddingStore>,
) -> Result<ScoreMatrix, DivergenceError> {
    if method == Method::Sd && store.is_none() {
        return Err(DivergenceError::MissingStore);
    }
    let (prep_a, incomparable_rows) = prepare_all(topics_a, method, store);
    let (prep_b, incomparable_cols) = prepare_all(topics_b, method, store);
    let scores = prep_a
        .iter()
        .map(|a| prep_b.iter().map(|b| a.distance(b)).collect())
        .collect();
    Ok(ScoreMatrix {
        method,
        rows: topics_a.iter().map(|t| t.id().to_string()).collect(),
        cols: topics_b.iter().map(|t| t.id().to_string()).collect(),
        scores,
        incomparable_rows,
        incomparable_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::load_vectors;

    fn topic(id: &str, words: &[(&str, f64)]) -> Topic {
        Topic::from_words(id, words).unwrap()
    }

    #[test]
    fn cosine_distance_examples() {
        assert_eq!(cosine_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(DivergenceError::ZeroNorm)
        ));
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 0.0]),
            Err(DivergenceError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn js_identical_and_disjoint() {
        let a = topic("a", &[("x", 0.2), ("y", 0.8)]);
        let b = topic("b", &[("u", 0.5), ("v", 0.5)]);
        assert_eq!(js_divergence(&a, &a).unwrap().value, 0.0);
        assert_eq!(js_divergence(&a, &b).unwrap().value, 1.0);
    }

    #[test]
    fn js_hand_value() {
        // M = {a: 0.75, b: 0.25}
        // KL(P||M) = 0.5*log2(0.5/0.75) + 0.5*log2(0.5/0.25) = 0.2075187496
        // KL(Q||M) = log2(1/0.75) = 0.4150374993
        let p = topic("p", &[("a", 0.5), ("b", 0.5)]);
        let q = topic("q", &[("a", 1.0)]);
        let js = js_divergence(&p, &q).unwrap().value;
        assert!((js - 0.311_278_124_459_132_8).abs() < 1e-12, "{js}");
    }

    #[test]
    fn js_degenerate_topic_errors() {
        let z = topic("z", &[("a", 0.0)]);
        let a = topic("a", &[("a", 1.0)]);
        assert!(matches!(
            js_divergence(&z, &a),
            Err(DivergenceError::Corpus(CorpusError::DegenerateTopic(_)))
        ));
    }

    #[test]
    fn sd_examples() {
        let store = load_vectors("a 1 0\nb 0 1\n").unwrap();
        let t1 = topic("t1", &[("a", 1.0)]);
        let t2 = topic("t2", &[("b", 1.0)]);
        assert_eq!(semantic_divergence(&store, &t1, &t1).unwrap().value, 0.0);
        assert_eq!(semantic_divergence(&store, &t1, &t2).unwrap().value, 1.0);

        let mixed = topic("m", &[("a", 0.3), ("b", 0.7)]);
        let base = semantic_divergence(&store, &mixed, &t2).unwrap().value;
        let scaled = semantic_divergence(&store, &mixed.scale_weights(3.0), &t2)
            .unwrap()
            .value;
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn matrix_without_store_for_sd_is_config_error() {
        let t = topic("t", &[("a", 1.0)]);
        assert!(matches!(
            score_matrix(
                std::slice::from_ref(&t),
                std::slice::from_ref(&t),
                Method::Sd,
                None
            ),
            Err(DivergenceError::MissingStore)
        ));
    }

    #[test]
    fn matrix_self_distance_is_zero() {
        let store = load_vectors("a 1 0\nb 0 1\n").unwrap();
        let t = topic("t", &[("a", 0.4), ("b", 0.6)]);
        for method in [Method::Js, Method::Sd] {
            let m = score_matrix(
                std::slice::from_ref(&t),
                std::slice::from_ref(&t),
                method,
                Some(&store),
            )
            .unwrap();
            assert_eq!(m.scores, vec![vec![Some(0.0)]]);
        }
    }

    #[test]
    fn matrix_shape_and_incomparable_entries() {
        let store = load_vectors("a 1 0\nb 0 1\nc 1 1\n").unwrap();
        let a = vec![topic("a1", &[("a", 1.0)]), topic("a2", &[("qqqq", 1.0)])];
        let b = vec![
            topic("b1", &[("a", 1.0)]),
            topic("b2", &[("b", 1.0)]),
            topic("b3", &[("c", 1.0)]),
        ];
        let m = score_matrix(&a, &b, Method::Sd, Some(&store)).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert!(m.scores[1].iter().all(Option::is_none));
        assert_eq!(m.incomparable_rows.len(), 1);
        assert_eq!(m.incomparable_rows[0].topic, "a2");
        assert_eq!(m.entries().count(), 3);
        for (_, _, s) in m.entries() {
            assert!((0.0..=2.0).contains(&s));
        }
    }
}
