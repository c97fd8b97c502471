//! Tracking topics across time slices.
//!
//! Topics extracted independently for two periods are linked one-to-one by
//! a greedy sweep over pairwise distances. Two distances are available: the
//! Jensen-Shannon divergence of the topics' word distributions, and the
//! cosine distance between probability-weighted sums of word embeddings
//! ("semantic divergence"), which tolerates vocabulary changing over time.
//! When both run, their links are compared as shared, conflicting or
//! exclusive.

pub mod bench;
pub mod corpus;
pub mod divergence;
pub mod embedding;
pub mod report;
pub mod tracker;

pub use corpus::{
    combined_distribution, flatten_tree, parse_topic_slices, truncate_topic, CorpusError,
    Distribution, Topic, TopicSlice, WeightedToken,
};
pub use divergence::{
    cosine_distance, js_divergence, score_matrix, semantic_divergence, DivergenceError, Method,
    Score, ScoreMatrix,
};
pub use embedding::{
    load_vectors, load_vectors_file, topic_embedding, EmbeddingError, EmbeddingStore,
    TopicEmbedding,
};
pub use tracker::{
    categorize_overlap, greedy_match, track, LinkedPair, Matching, MethodSelection, OverlapReport,
    TrackConfig, TrackError, TrackOutcome,
};
