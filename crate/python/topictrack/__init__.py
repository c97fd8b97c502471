"""Track topics across time slices by lexical and semantic divergence."""

from ._topictrack import (
    EmbeddingStore,
    Topic,
    TopicSlice,
    __version__,
    cosine_distance,
    greedy_match,
    js_divergence,
    load_topic_slices,
    parse_topic_slices,
    run_benchmark,
    score_matrix,
    semantic_divergence,
    track,
)

__all__ = [
    "EmbeddingStore",
    "Topic",
    "TopicSlice",
    "cosine_distance",
    "greedy_match",
    "js_divergence",
    "load_topic_slices",
    "parse_topic_slices",
    "run_benchmark",
    "score_matrix",
    "semantic_divergence",
    "track",
]
