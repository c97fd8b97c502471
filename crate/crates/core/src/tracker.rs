//! Linking topics of two time slices.
//!
//! All comparable topic pairs are ranked by score and swept greedily: a pair
//! is accepted when neither topic is already linked and its score is strictly
//! below the method's threshold. Topics of every tracked level compete in a
//! single pool; the tree structure is not used.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{flatten_tree, truncate_topic, Topic, TopicSlice, DEFAULT_MAX_LEVEL};
use crate::divergence::{score_matrix, DivergenceError, Incomparable, Method, ScoreMatrix};
use crate::embedding::EmbeddingStore;

pub const DEFAULT_TOP_WORDS: usize = 100;
pub const DEFAULT_TOP_ENTITIES: usize = 15;
pub const DEFAULT_JS_THRESHOLD: f64 = 0.4;
pub const DEFAULT_SD_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("matchings are over different topic sets")]
    TopicSetMismatch,
    #[error("scoring slice `{slice_a}` against `{slice_b}` with {method}: {source}")]
    Scoring {
        slice_a: String,
        slice_b: String,
        method: Method,
        #[source]
        source: Box<DivergenceError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkedPair {
    pub topic_a: String,
    pub topic_b: String,
    pub score: f64,
    pub method: Method,
}

impl LinkedPair {
    fn endpoints(&self) -> (&str, &str) {
        (&self.topic_a, &self.topic_b)
    }
}

/// One-to-one links between two topic sets under one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pub method: Method,
    pub threshold: f64,
    /// Accepted pairs in acceptance order (ascending score).
    pub pairs: Vec<LinkedPair>,
    /// Unlinked topics of the earlier slice, in matrix row order.
    pub unmatched_a: Vec<String>,
    /// Unlinked topics of the later slice, in matrix column order.
    pub unmatched_b: Vec<String>,
}

impl Matching {
    pub fn topics_a(&self) -> BTreeSet<&str> {
        self.pairs
            .iter()
            .map(|p| p.topic_a.as_str())
            .chain(self.unmatched_a.iter().map(String::as_str))
            .collect()
    }

    pub fn topics_b(&self) -> BTreeSet<&str> {
        self.pairs
            .iter()
            .map(|p| p.topic_b.as_str())
            .chain(self.unmatched_b.iter().map(String::as_str))
            .collect()
    }

    pub fn contains(&self, topic_a: &str, topic_b: &str) -> bool {
        self.pairs
            .iter()
            .any(|p| p.topic_a == topic_a && p.topic_b == topic_b)
    }
}

/// Greedy one-to-one matching over the comparable entries of `matrix`.
///
/// Entries are ranked by score, then row id, then column id. A threshold
/// that is not positive yields an empty matching.
pub fn greedy_match(matrix: &ScoreMatrix, threshold: f64) -> Matching {
    let mut ranked: Vec<(usize, usize, f64)> = matrix.entries().collect();
    ranked.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then_with(|| matrix.rows[a.0].cmp(&matrix.rows[b.0]))
            .then_with(|| matrix.cols[a.1].cmp(&matrix.cols[b.1]))
    });

    let (n_rows, n_cols) = matrix.shape();
    let mut row_used = vec![false; n_rows];
    let mut col_used = vec![false; n_cols];
    let mut pairs = Vec::new();
    for (i, j, score) in ranked {
        if score >= threshold || score.is_nan() {
            // Sorted ascending: nothing further can pass.
            break;
        }
        if row_used[i] || col_used[j] {
            continue;
        }
        row_used[i] = true;
        col_used[j] = true;
        pairs.push(LinkedPair {
            topic_a: matrix.rows[i].clone(),
            topic_b: matrix.cols[j].clone(),
            score,
            method: matrix.method,
        });
    }

    let unmatched = |ids: &[String], used: &[bool]| {
        ids.iter()
            .zip(used)
            .filter(|(_, &u)| !u)
            .map(|(id, _)| id.clone())
            .collect()
    };
    Matching {
        method: matrix.method,
        threshold,
        pairs,
        unmatched_a: unmatched(&matrix.rows, &row_used),
        unmatched_b: unmatched(&matrix.cols, &col_used),
    }
}

/// A link found by both methods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharedPair {
    pub topic_a: String,
    pub topic_b: String,
    pub js_score: f64,
    pub sd_score: f64,
}

/// A JS link and an SD link that agree on exactly one topic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictingPair {
    pub js: LinkedPair,
    pub sd: LinkedPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverlapCounts {
    pub shared: usize,
    pub conflicting: usize,
    pub exclusive_js: usize,
    pub exclusive_sd: usize,
}

/// Comparison of a JS matching with an SD matching over the same topics.
///
/// Every link of either matching lands in exactly one category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub counts: OverlapCounts,
    pub shared: Vec<SharedPair>,
    pub conflicting: Vec<ConflictingPair>,
    pub exclusive_js: Vec<LinkedPair>,
    pub exclusive_sd: Vec<LinkedPair>,
}

/// Sorts the links of two matchings into shared, conflicting and exclusive.
///
/// Conflicting links are paired greedily: candidate `(js, sd)` combinations
/// sharing one topic are visited by JS score, then SD score, then ids, and
/// each link is used at most once. Leftover single-method links are
/// exclusive.
pub fn categorize_overlap(m_js: &Matching, m_sd: &Matching) -> Result<OverlapReport, TrackError> {
    if m_js.topics_a() != m_sd.topics_a() || m_js.topics_b() != m_sd.topics_b() {
        return Err(TrackError::TopicSetMismatch);
    }

    let sd_set: HashSet<(&str, &str)> = m_sd.pairs.iter().map(LinkedPair::endpoints).collect();
    let js_set: HashSet<(&str, &str)> = m_js.pairs.iter().map(LinkedPair::endpoints).collect();

    let mut shared = Vec::new();
    let mut js_only = Vec::new();
    for p in &m_js.pairs {
        if sd_set.contains(&p.endpoints()) {
            let sd = m_sd
                .pairs
                .iter()
                .find(|q| q.endpoints() == p.endpoints())
                .expect("present in set");
            shared.push(SharedPair {
                topic_a: p.topic_a.clone(),
                topic_b: p.topic_b.clone(),
                js_score: p.score,
                sd_score: sd.score,
            });
        } else {
            js_only.push(p);
        }
    }
    let sd_only: Vec<&LinkedPair> = m_sd
        .pairs
        .iter()
        .filter(|q| !js_set.contains(&q.endpoints()))
        .collect();

    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (i, p) in js_only.iter().enumerate() {
        for (j, q) in sd_only.iter().enumerate() {
            if (p.topic_a == q.topic_a) != (p.topic_b == q.topic_b) {
                candidates.push((i, j));
            }
        }
    }
    candidates.sort_by(|&(i1, j1), &(i2, j2)| {
        let (p1, q1, p2, q2) = (js_only[i1], sd_only[j1], js_only[i2], sd_only[j2]);
        p1.score
            .total_cmp(&p2.score)
            .then_with(|| q1.score.total_cmp(&q2.score))
            .then_with(|| p1.endpoints().cmp(&p2.endpoints()))
            .then_with(|| q1.endpoints().cmp(&q2.endpoints()))
    });

    let mut js_used = vec![false; js_only.len()];
    let mut sd_used = vec![false; sd_only.len()];
    let mut conflicting = Vec::new();
    for (i, j) in candidates {
        if js_used[i] || sd_used[j] {
            continue;
        }
        js_used[i] = true;
        sd_used[j] = true;
        conflicting.push(ConflictingPair {
            js: js_only[i].clone(),
            sd: sd_only[j].clone(),
        });
    }

    let leftovers = |links: &[&LinkedPair], used: &[bool]| -> Vec<LinkedPair> {
        links
            .iter()
            .zip(used)
            .filter(|(_, &u)| !u)
            .map(|(p, _)| (*p).clone())
            .collect()
    };
    let exclusive_js = leftovers(&js_only, &js_used);
    let exclusive_sd = leftovers(&sd_only, &sd_used);

    Ok(OverlapReport {
        counts: OverlapCounts {
            shared: shared.len(),
            conflicting: conflicting.len(),
            exclusive_js: exclusive_js.len(),
            exclusive_sd: exclusive_sd.len(),
        },
        shared,
        conflicting,
        exclusive_js,
        exclusive_sd,
    })
}

/// Which measures a tracking run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSelection {
    Js,
    Sd,
    Both,
}

impl MethodSelection {
    pub fn methods(self) -> &'static [Method] {
        match self {
            MethodSelection::Js => &[Method::Js],
            MethodSelection::Sd => &[Method::Sd],
            MethodSelection::Both => &[Method::Js, Method::Sd],
        }
    }

    pub fn needs_embeddings(self) -> bool {
        self != MethodSelection::Js
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackConfig {
    pub methods: MethodSelection,
    pub js_threshold: f64,
    pub sd_threshold: f64,
    pub top_words: usize,
    pub top_entities: usize,
    pub max_level: u32,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            methods: MethodSelection::Both,
            js_threshold: DEFAULT_JS_THRESHOLD,
            sd_threshold: DEFAULT_SD_THRESHOLD,
            top_words: DEFAULT_TOP_WORDS,
            top_entities: DEFAULT_TOP_ENTITIES,
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.js_threshold) {
            return Err(TrackError::Config(format!(
                "JS threshold must be positive, got {}",
                self.js_threshold
            )));
        }
        if !positive(self.sd_threshold) {
            return Err(TrackError::Config(format!(
                "SD threshold must be positive, got {}",
                self.sd_threshold
            )));
        }
        if self.top_words < 1 {
            return Err(TrackError::Config("top_words must be at least 1".into()));
        }
        if self.max_level < 1 {
            return Err(TrackError::Config("max_level must be at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold(&self, method: Method) -> f64 {
        match method {
            Method::Js => self.js_threshold,
            Method::Sd => self.sd_threshold,
        }
    }
}

/// Result of one tracking run between two slices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackOutcome {
    pub slice_a: String,
    pub slice_b: String,
    pub js: Option<Matching>,
    pub sd: Option<Matching>,
    /// Topics that could not be scored under some method.
    pub incomparable: Vec<(Method, Incomparable)>,
    /// Present when both methods ran.
    pub overlap: Option<OverlapReport>,
}

impl TrackOutcome {
    pub fn matching(&self, method: Method) -> Option<&Matching> {
        match method {
            Method::Js => self.js.as_ref(),
            Method::Sd => self.sd.as_ref(),
        }
    }
}

/// Topics of a slice as they enter scoring: flattened then truncated.
pub fn prepare_topics(slice: &TopicSlice, config: &TrackConfig) -> Vec<Topic> {
    flatten_tree(slice, config.max_level)
        .iter()
        .map(|t| truncate_topic(t, config.top_words, config.top_entities))
        .collect()
}

/// Tracks topics from `slice_a` to `slice_b` under the configured methods.
pub fn track(
    slice_a: &TopicSlice,
    slice_b: &TopicSlice,
    config: &TrackConfig,
    store: Option<&EmbeddingStore>,
) -> Result<TrackOutcome, TrackError> {
    config.validate()?;
    if config.methods.needs_embeddings() && store.is_none() {
        return Err(TrackError::Config(
            "semantic divergence requires an embedding store".into(),
        ));
    }
    let topics_a = prepare_topics(slice_a, config);
    let topics_b = prepare_topics(slice_b, config);

    let mut outcome = TrackOutcome {
        slice_a: slice_a.label().to_string(),
        slice_b: slice_b.label().to_string(),
        js: None,
        sd: None,
        incomparable: Vec::new(),
        overlap: None,
    };
    for &method in config.methods.methods() {
        let matrix = score_matrix(&topics_a, &topics_b, method, store).map_err(|source| {
            TrackError::Scoring {
                slice_a: slice_a.label().to_string(),
                slice_b: slice_b.label().to_string(),
                method,
                source: Box::new(source),
            }
        })?;
        for bad in matrix
            .incomparable_rows
            .iter()
            .chain(&matrix.incomparable_cols)
        {
            log::warn!("{method}: topic `{}` skipped: {}", bad.topic, bad.reason);
            outcome.incomparable.push((method, bad.clone()));
        }
        let matching = greedy_match(&matrix, config.threshold(method));
        match method {
            Method::Js => outcome.js = Some(matching),
            Method::Sd => outcome.sd = Some(matching),
        }
    }
    if let (Some(js), Some(sd)) = (&outcome.js, &outcome.sd) {
        outcome.overlap = Some(categorize_overlap(js, sd)?);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(scores: Vec<Vec<f64>>) -> ScoreMatrix {
        let (r, c) = (scores.len(), scores.first().map_or(0, Vec::len));
        ScoreMatrix::from_dense(Method::Js, ids("t", r), ids("u", c), scores)
    }

    fn link(a: &str, b: &str, score: f64, method: Method) -> LinkedPair {
        LinkedPair {
            topic_a: a.into(),
            topic_b: b.into(),
            score,
            method,
        }
    }

    fn matching(method: Method, pairs: &[(&str, &str, f64)], a: &[&str], b: &[&str]) -> Matching {
        let pairs: Vec<LinkedPair> = pairs
            .iter()
            .map(|&(x, y, s)| link(x, y, s, method))
            .collect();
        let linked_a: HashSet<_> = pairs.iter().map(|p| p.topic_a.clone()).collect();
        let linked_b: HashSet<_> = pairs.iter().map(|p| p.topic_b.clone()).collect();
        Matching {
            method,
            threshold: 1.0,
            pairs,
            unmatched_a: a
                .iter()
                .filter(|x| !linked_a.contains(**x))
                .map(|x| x.to_string())
                .collect(),
            unmatched_b: b
                .iter()
                .filter(|x| !linked_b.contains(**x))
                .map(|x| x.to_string())
                .collect(),
        }
    }

    #[test]
    fn greedy_sweep_hand_example() {
        let m = greedy_match(&matrix(vec![vec![0.1, 0.2], vec![0.15, 0.05]]), 0.4);
        let got: Vec<_> = m
            .pairs
            .iter()
            .map(|p| (p.topic_a.as_str(), p.topic_b.as_str(), p.score))
            .collect();
        assert_eq!(got, vec![("t2", "u2", 0.05), ("t1", "u1", 0.1)]);
        assert!(m.unmatched_a.is_empty() && m.unmatched_b.is_empty());
    }

    #[test]
    fn greedy_is_not_optimal_assignment() {
        // Greedy takes (t1,u1)=0.1 first and forces (t2,u2)=0.9 out of range;
        // the optimal assignment would take 0.2 + 0.2.
        let m = greedy_match(&matrix(vec![vec![0.1, 0.2], vec![0.2, 0.9]]), 0.4);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.unmatched_a, vec!["t2"]);
        assert_eq!(m.unmatched_b, vec!["u2"]);
    }

    #[test]
    fn all_above_threshold_gives_no_pairs() {
        let m = greedy_match(&matrix(vec![vec![0.5, 0.6], vec![0.7, 0.8]]), 0.4);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_a.len(), 2);
        assert_eq!(m.unmatched_b.len(), 2);
    }

    #[test]
    fn threshold_is_strict() {
        let m = greedy_match(&matrix(vec![vec![0.4]]), 0.4);
        assert!(m.pairs.is_empty());
        let m = greedy_match(&matrix(vec![vec![0.0]]), 0.4);
        assert_eq!(m.pairs.len(), 1);
    }

    #[test]
    fn ties_break_by_ids() {
        let m = greedy_match(&matrix(vec![vec![0.1, 0.1], vec![0.1, 0.1]]), 0.4);
        let got: Vec<_> = m
            .pairs
            .iter()
            .map(|p| (p.topic_a.as_str(), p.topic_b.as_str()))
            .collect();
        assert_eq!(got, vec![("t1", "u1"), ("t2", "u2")]);
    }

    #[test]
    fn incomparable_entries_are_skipped() {
        let mut mat = matrix(vec![vec![0.01, 0.3], vec![0.2, 0.3]]);
        mat.scores[0][0] = None;
        let m = greedy_match(&mat, 0.4);
        let got: Vec<_> = m
            .pairs
            .iter()
            .map(|p| (p.topic_a.as_str(), p.topic_b.as_str()))
            .collect();
        assert_eq!(got, vec![("t2", "u1"), ("t1", "u2")]);
    }

    #[test]
    fn overlap_identical_matchings_all_shared() {
        let a = ["1", "2"];
        let b = ["x", "y"];
        let js = matching(Method::Js, &[("1", "x", 0.1), ("2", "y", 0.2)], &a, &b);
        let sd = matching(Method::Sd, &[("1", "x", 0.01), ("2", "y", 0.02)], &a, &b);
        let r = categorize_overlap(&js, &sd).unwrap();
        assert_eq!(
            r.counts,
            OverlapCounts {
                shared: 2,
                conflicting: 0,
                exclusive_js: 0,
                exclusive_sd: 0
            }
        );
        assert_eq!(r.shared[0].sd_score, 0.01);
    }

    #[test]
    fn overlap_shared_endpoint_is_conflicting() {
        let a = ["4"];
        let b = ["D", "E"];
        let js = matching(Method::Js, &[("4", "D", 0.29)], &a, &b);
        let sd = matching(Method::Sd, &[("4", "E", 0.09)], &a, &b);
        let r = categorize_overlap(&js, &sd).unwrap();
        assert_eq!(r.counts.conflicting, 1);
        assert_eq!(r.conflicting[0].js.topic_b, "D");
        assert_eq!(r.conflicting[0].sd.topic_b, "E");
        assert_eq!(
            r.counts.shared + r.counts.exclusive_js + r.counts.exclusive_sd,
            0
        );
    }

    #[test]
    fn overlap_disjoint_links_are_exclusive() {
        let a = ["a", "b"];
        let b = ["x", "y"];
        let js = matching(Method::Js, &[("a", "x", 0.1)], &a, &b);
        let sd = matching(Method::Sd, &[("b", "y", 0.05)], &a, &b);
        let r = categorize_overlap(&js, &sd).unwrap();
        assert_eq!(
            r.counts,
            OverlapCounts {
                shared: 0,
                conflicting: 0,
                exclusive_js: 1,
                exclusive_sd: 1
            }
        );
    }

    #[test]
    fn overlap_chain_uses_each_link_once() {
        // js: (a,x) (b,y); sd: (a,y). (a,y) shares a with (a,x) and y with (b,y).
        let a = ["a", "b"];
        let b = ["x", "y"];
        let js = matching(Method::Js, &[("a", "x", 0.2), ("b", "y", 0.1)], &a, &b);
        let sd = matching(Method::Sd, &[("a", "y", 0.05)], &a, &b);
        let r = categorize_overlap(&js, &sd).unwrap();
        assert_eq!(r.counts.conflicting, 1);
        assert_eq!(r.conflicting[0].js.topic_a, "b");
        assert_eq!(r.counts.exclusive_js, 1);
        assert_eq!(r.exclusive_js[0].topic_a, "a");
    }

    #[test]
    fn overlap_rejects_different_topic_sets() {
        let js = matching(Method::Js, &[], &["a"], &["x"]);
        let sd = matching(Method::Sd, &[], &["b"], &["x"]);
        assert!(matches!(
            categorize_overlap(&js, &sd),
            Err(TrackError::TopicSetMismatch)
        ));
    }

    #[test]
    fn config_defaults() {
        let c = TrackConfig::default();
        assert_eq!(c.methods, MethodSelection::Both);
        assert_eq!((c.top_words, c.top_entities, c.max_level), (100, 15, 2));
        assert_eq!((c.js_threshold, c.sd_threshold), (0.4, 0.1));
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = [
            TrackConfig {
                js_threshold: 0.0,
                ..Default::default()
            },
            TrackConfig {
                sd_threshold: -1.0,
                ..Default::default()
            },
            TrackConfig {
                top_words: 0,
                ..Default::default()
            },
            TrackConfig {
                max_level: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(TrackError::Config(_))));
        }
    }

    #[test]
    fn track_with_empty_later_slice() {
        let a =
            TopicSlice::new("2019", vec![Topic::from_words("t", &[("a", 1.0)]).unwrap()]).unwrap();
        let b = TopicSlice::new("2020", vec![]).unwrap();
        let config = TrackConfig {
            methods: MethodSelection::Js,
            ..Default::default()
        };
        let out = track(&a, &b, &config, None).unwrap();
        let js = out.js.unwrap();
        assert!(js.pairs.is_empty());
        assert_eq!(js.unmatched_a, vec!["t"]);
        assert!(out.sd.is_none() && out.overlap.is_none());
    }

    #[test]
    fn track_sd_without_store_is_config_error() {
        let a = TopicSlice::new("a", vec![]).unwrap();
        assert!(matches!(
            track(&a, &a, &TrackConfig::default(), None),
            Err(TrackError::Config(_))
        ));
    }
}
