//! Topic data model and the topic-slice input format.
//!
//! A topic-slice document is a JSON list of time slices. Each slice carries a
//! label (usually a year) and the topics a topic model extracted for that
//! period:
//!
//! ```json
//! [
//!   {
//!     "label": "2019",
//!     "topics": [
//!       {"id": "space", "level": 1,
//!        "words": [["rocket", 0.4], ["launch", 0.3]],
//!        "entities": [["NASA", 0.2]]},
//!       {"id": "space/mars", "level": 2, "parent": "space",
//!        "words": [["rover", 0.5]], "entities": []}
//!     ]
//!   }
//! ]
//! ```
//!
//! Weights do not have to be normalized. Word and entity lists are re-sorted
//! by descending weight on load, ties broken by token.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default depth of the topic tree that takes part in tracking.
pub const DEFAULT_MAX_LEVEL: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("malformed topic document at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("slice `{slice}`: duplicate topic id `{id}`")]
    DuplicateTopicId { slice: String, id: String },
    #[error("duplicate slice label `{0}`")]
    DuplicateSlice(String),
    #[error(
        "topic `{topic}`: token `{token}` has invalid weight {weight} (must be finite and >= 0)"
    )]
    InvalidWeight {
        topic: String,
        token: String,
        weight: f64,
    },
    #[error("topic `{topic}`: empty token")]
    EmptyToken { topic: String },
    #[error("topic id must not be empty")]
    EmptyTopicId,
    #[error("topic `{topic}`: level must be >= 1, got {level}")]
    InvalidLevel { topic: String, level: u32 },
    #[error("slice `{slice}`: topic `{topic}` references unknown parent `{parent}`")]
    UnknownParent {
        slice: String,
        topic: String,
        parent: String,
    },
    #[error("topic `{0}` has no token with positive weight")]
    DegenerateTopic(String),
}

/// A word or entity together with its weight inside a topic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedToken {
    token: String,
    weight: f64,
}

impl WeightedToken {
    pub fn new(token: impl Into<String>, weight: f64) -> Result<Self, CorpusError> {
        let token = token.into();
        if token.is_empty() {
            return Err(CorpusError::EmptyToken {
                topic: String::new(),
            });
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(CorpusError::InvalidWeight {
                topic: String::new(),
                token,
                weight,
            });
        }
        Ok(WeightedToken { token, weight })
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub(crate) fn scaled(&self, factor: f64) -> WeightedToken {
        WeightedToken {
            token: self.token.clone(),
            weight: (self.weight * factor).max(0.0),
        }
    }

    pub(crate) fn with_token(&self, token: String) -> WeightedToken {
        WeightedToken {
            token,
            weight: self.weight,
        }
    }
}

/// Descending weight, then ascending token.
pub(crate) fn rank_order(a: &WeightedToken, b: &WeightedToken) -> Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| a.token.cmp(&b.token))
}

/// One topic of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    id: String,
    slice: String,
    level: u32,
    parent: Option<String>,
    words: Vec<WeightedToken>,
    entities: Vec<WeightedToken>,
}

impl Topic {
    /// Builds a topic, sorting both token lists into rank order.
    pub fn new(
        id: impl Into<String>,
        level: u32,
        mut words: Vec<WeightedToken>,
        mut entities: Vec<WeightedToken>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if id.is_empty() {
            return Err(CorpusError::EmptyTopicId);
        }
        if level < 1 {
            return Err(CorpusError::InvalidLevel { topic: id, level });
        }
        words.sort_by(rank_order);
        entities.sort_by(rank_order);
        Ok(Topic {
            id,
            slice: String::new(),
            level,
            parent: None,
            words,
            entities,
        })
    }

    /// Level-1 topic from `(word, weight)` pairs and no entities.
    pub fn from_words(id: impl Into<String>, words: &[(&str, f64)]) -> Result<Self, CorpusError> {
        let id = id.into();
        let words = tokens_from_pairs(&id, words.iter().map(|(t, w)| (*t, *w)))?;
        Topic::new(id, 1, words, Vec::new())
    }

    pub fn with_slice(mut self, label: impl Into<String>) -> Self {
        self.slice = label.into();
        self
    }

    pub fn with_parent(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn slice(&self) -> &str {
        &self.slice
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn parent(&self) -> Option<&str> {
        self.parent.as_deref()
    }

    pub fn words(&self) -> &[WeightedToken] {
        &self.words
    }

    pub fn entities(&self) -> &[WeightedToken] {
        &self.entities
    }

    /// Words followed by entities.
    pub fn tokens(&self) -> impl Iterator<Item = &WeightedToken> {
        self.words.iter().chain(self.entities.iter())
    }

    pub fn token_count(&self) -> usize {
        self.words.len() + self.entities.len()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: f64) -> Topic {
        let mut out = self.clone();
        for tok in out.words.iter_mut().chain(out.entities.iter_mut()) {
            *tok = tok.scaled(factor);
        }
        out
    }

    pub(crate) fn replace_tokens(
        &self,
        words: Vec<WeightedToken>,
        entities: Vec<WeightedToken>,
    ) -> Topic {
        let mut out = self.clone();
        out.words = words;
        out.entities = entities;
        out.words.sort_by(rank_order);
        out.entities.sort_by(rank_order);
        out
    }
}

fn tokens_from_pairs<'a>(
    topic: &str,
    pairs: impl IntoIterator<Item = (&'a str, f64)>,
) -> Result<Vec<WeightedToken>, CorpusError> {
    pairs
        .into_iter()
        .map(|(tok, w)| {
            WeightedToken::new(tok, w).map_err(|e| match e {
                CorpusError::EmptyToken { .. } => CorpusError::EmptyToken {
                    topic: topic.to_string(),
                },
                CorpusError::InvalidWeight { token, weight, .. } => CorpusError::InvalidWeight {
                    topic: topic.to_string(),
                    token,
                    weight,
                },
                other => other,
            })
        })
        .collect()
}

/// All topics extracted for one time period.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicSlice {
    label: String,
    topics: Vec<Topic>,
}

impl TopicSlice {
    /// Validates ids and parent links and stamps every topic with `label`.
    pub fn new(label: impl Into<String>, topics: Vec<Topic>) -> Result<Self, CorpusError> {
        let label = label.into();
        let mut seen = HashSet::with_capacity(topics.len());
        for t in &topics {
            if !seen.insert(t.id.as_str()) {
                return Err(CorpusError::DuplicateTopicId {
                    slice: label,
                    id: t.id.clone(),
                });
            }
        }
        for t in &topics {
            if let Some(parent) = &t.parent {
                if !seen.contains(parent.as_str()) {
                    return Err(CorpusError::UnknownParent {
                        slice: label,
                        topic: t.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        let topics = topics
            .into_iter()
            .map(|t| t.with_slice(label.clone()))
            .collect();
        Ok(TopicSlice { label, topics })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSlice {
    label: String,
    topics: Vec<RawTopic>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTopic {
    id: String,
    level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    words: Vec<(String, f64)>,
    #[serde(default)]
    entities: Vec<(String, f64)>,
}

/// Parses a topic-slice document.
pub fn parse_topic_slices(document: &str) -> Result<Vec<TopicSlice>, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: Vec<RawSlice> = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        CorpusError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;

    let mut labels = HashSet::new();
    let mut slices = Vec::with_capacity(raw.len());
    for rs in raw {
        if !labels.insert(rs.label.clone()) {
            return Err(CorpusError::DuplicateSlice(rs.label));
        }
        let mut topics = Vec::with_capacity(rs.topics.len());
        for rt in rs.topics {
            let words = tokens_from_pairs(&rt.id, rt.words.iter().map(|(t, w)| (t.as_str(), *w)))?;
            let entities =
                tokens_from_pairs(&rt.id, rt.entities.iter().map(|(t, w)| (t.as_str(), *w)))?;
            let mut topic = Topic::new(rt.id, rt.level, words, entities)?;
            topic.parent = rt.parent;
            topics.push(topic);
        }
        slices.push(TopicSlice::new(rs.label, topics)?);
    }
    Ok(slices)
}

/// Writes slices back out in the input format, tokens in rank order.
pub fn write_topic_slices(slices: &[TopicSlice]) -> String {
    let raw: Vec<RawSlice> = slices
        .iter()
        .map(|s| RawSlice {
            label: s.label.clone(),
            topics: s
                .topics
                .iter()
                .map(|t| RawTopic {
                    id: t.id.clone(),
                    level: t.level,
                    parent: t.parent.clone(),
                    words: t
                        .words
                        .iter()
                        .map(|w| (w.token.clone(), w.weight))
                        .collect(),
                    entities: t
                        .entities
                        .iter()
                        .map(|w| (w.token.clone(), w.weight))
                        .collect(),
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("topic slices always serialize")
}

/// Topics of `slice` down to `max_level`, ordered by level then id.
pub fn flatten_tree(slice: &TopicSlice, max_level: u32) -> Vec<Topic> {
    let mut kept: Vec<Topic> = slice
        .topics
        .iter()
        .filter(|t| t.level <= max_level)
        .cloned()
        .collect();
    kept.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.id.cmp(&b.id)));
    kept
}

/// Keeps the `k_words` highest-ranked words and `k_entities` highest-ranked entities.
pub fn truncate_topic(topic: &Topic, k_words: usize, k_entities: usize) -> Topic {
    let mut out = topic.clone();
    out.words.truncate(k_words);
    out.entities.truncate(k_entities);
    out
}

/// A probability distribution over tokens, iterated in token order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: BTreeMap<String, f64>,
}

impl Distribution {
    pub fn get(&self, token: &str) -> f64 {
        self.probs.get(token).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Merges words and entities into one token distribution summing to 1.
///
/// A token present in both lists (or repeated within one) gets the sum of
/// its weights. Zero-weight tokens are dropped from the support.
pub fn combined_distribution(topic: &Topic) -> Result<Distribution, CorpusError> {
    let mut probs: BTreeMap<String, f64> = BTreeMap::new();
    for tok in topic.tokens() {
        if tok.weight > 0.0 {
            *probs.entry(tok.token.clone()).or_insert(0.0) += tok.weight;
        }
    }
    let total: f64 = probs.values().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(CorpusError::DegenerateTopic(topic.id.clone()));
    }
    for v in probs.values_mut() {
        *v /= total;
    }
    Ok(Distribution { probs })
}
