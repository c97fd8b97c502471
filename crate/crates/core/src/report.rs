//! Structured-text (JSON) reports written by the command-line tool.

use serde::Serialize;

use crate::bench::{BenchResult, Benchmark};
use crate::divergence::{Incomparable, Method};
use crate::tracker::{Matching, OverlapReport, TrackConfig, TrackOutcome};

/// Bumped whenever a report field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct TrackReport<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub config: &'a TrackConfig,
    pub slice_a: &'a str,
    pub slice_b: &'a str,
    pub methods: Vec<MethodReport<'a>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub incomparable: Vec<IncomparableEntry<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<&'a OverlapReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport<'a> {
    #[serde(flatten)]
    pub matching: &'a Matching,
    pub pair_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncomparableEntry<'a> {
    pub method: Method,
    #[serde(flatten)]
    pub topic: &'a Incomparable,
}

impl<'a> TrackReport<'a> {
    pub fn new(config: &'a TrackConfig, outcome: &'a TrackOutcome) -> Self {
        let methods = [Method::Js, Method::Sd]
            .into_iter()
            .filter_map(|m| outcome.matching(m))
            .map(|matching| MethodReport {
                pair_count: matching.pairs.len(),
                matching,
            })
            .collect();
        TrackReport {
            schema_version: SCHEMA_VERSION,
            kind: "track",
            config,
            slice_a: &outcome.slice_a,
            slice_b: &outcome.slice_b,
            methods,
            incomparable: outcome
                .incomparable
                .iter()
                .map(|(method, topic)| IncomparableEntry {
                    method: *method,
                    topic,
                })
                .collect(),
            overlap: outcome.overlap.as_ref(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub benchmark: &'a Benchmark,
    pub embeddings: &'a str,
    pub results: &'a [BenchResult],
}

impl<'a> BenchReport<'a> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }
}
