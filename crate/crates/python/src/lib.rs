//! Python bindings. Structured results (matchings, reports, benchmark rows)
//! cross the boundary as plain dicts and lists built from their JSON form.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use topictrack_core as core;
use topictrack_core::bench::{self, DriftConfig, Thresholds};
use topictrack_core::report::TrackReport;
use topictrack_core::{Method, MethodSelection, ScoreMatrix, TrackConfig, WeightedToken};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_python<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_method(name: &str) -> PyResult<Method> {
    match name {
        "js" => Ok(Method::Js),
        "sd" => Ok(Method::Sd),
        other => Err(value_error(format!(
            "unknown method `{other}`, expected js or sd"
        ))),
    }
}

/// Word vectors with subword fallback for unknown tokens.
#[pyclass(module = "topictrack", frozen)]
struct EmbeddingStore {
    inner: core::EmbeddingStore,
}

#[pymethods]
impl EmbeddingStore {
    #[new]
    fn new(dimension: usize, rows: Vec<(String, Vec<f32>)>) -> PyResult<Self> {
        let inner = core::EmbeddingStore::from_rows(dimension, rows).map_err(value_error)?;
        Ok(EmbeddingStore { inner })
    }

    /// Loads a whitespace-separated vector file.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = core::load_vectors_file(&path).map_err(value_error)?;
        Ok(EmbeddingStore { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = core::load_vectors(text).map_err(value_error)?;
        Ok(EmbeddingStore { inner })
    }

    /// The built-in synthetic store used by the benchmark.
    #[staticmethod]
    fn synthetic() -> Self {
        let inner = bench::synthetic_store(&bench::SyntheticStoreConfig::default());
        EmbeddingStore { inner }
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, token: &str) -> bool {
        self.inner.contains(token)
    }

    fn lookup(&self, token: &str) -> Vec<f64> {
        self.inner.lookup(token)
    }

    fn is_oov(&self, token: &str) -> bool {
        self.inner.resolve(token).is_oov()
    }

    #[pyo3(signature = (vector, exclude = Vec::new()))]
    fn nearest(&self, vector: Vec<f64>, exclude: Vec<String>) -> PyResult<Option<String>> {
        if vector.len() != self.inner.dimension() {
            return Err(value_error(format!(
                "query has dimension {}, store has {}",
                vector.len(),
                self.inner.dimension()
            )));
        }
        Ok(self
            .inner
            .nearest(&vector, |t| exclude.iter().any(|e| e == t))
            .map(str::to_string))
    }

    fn topic_embedding(&self, topic: &Topic) -> PyResult<Vec<f64>> {
        core::topic_embedding(&self.inner, &topic.inner)
            .map(|e| e.vector)
            .map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "EmbeddingStore(len={}, dimension={})",
            self.inner.len(),
            self.inner.dimension()
        )
    }
}

fn weighted(tokens: Vec<(String, f64)>) -> PyResult<Vec<WeightedToken>> {
    tokens
        .into_iter()
        .map(|(t, w)| WeightedToken::new(t, w).map_err(value_error))
        .collect()
}

fn pairs(tokens: &[WeightedToken]) -> Vec<(String, f64)> {
    tokens
        .iter()
        .map(|t| (t.token().to_string(), t.weight()))
        .collect()
}

/// A topic: weighted words and entities, sorted by descending weight.
#[pyclass(module = "topictrack", frozen, from_py_object)]
#[derive(Clone)]
struct Topic {
    inner: core::Topic,
}

#[pymethods]
impl Topic {
    #[new]
    #[pyo3(signature = (id, words, entities = Vec::new(), level = 1, parent = None))]
    fn new(
        id: String,
        words: Vec<(String, f64)>,
        entities: Vec<(String, f64)>,
        level: u32,
        parent: Option<String>,
    ) -> PyResult<Self> {
        let mut inner = core::Topic::new(id, level, weighted(words)?, weighted(entities)?)
            .map_err(value_error)?;
        if let Some(p) = parent {
            inner = inner.with_parent(p);
        }
        Ok(Topic { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn parent(&self) -> Option<&str> {
        self.inner.parent()
    }

    #[getter]
    fn slice(&self) -> &str {
        self.inner.slice()
    }

    #[getter]
    fn words(&self) -> Vec<(String, f64)> {
        pairs(self.inner.words())
    }

    #[getter]
    fn entities(&self) -> Vec<(String, f64)> {
        pairs(self.inner.entities())
    }

    /// Normalized distribution over words and entities together.
    fn distribution(&self) -> PyResult<Vec<(String, f64)>> {
        let d = core::combined_distribution(&self.inner).map_err(value_error)?;
        Ok(d.iter().map(|(t, p)| (t.to_string(), p)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Topic(id={:?}, level={}, words={}, entities={})",
            self.inner.id(),
            self.inner.level(),
            self.inner.words().len(),
            self.inner.entities().len()
        )
    }
}

/// The topics extracted for one time period.
#[pyclass(module = "topictrack", frozen)]
struct TopicSlice {
    inner: core::TopicSlice,
}

#[pymethods]
impl TopicSlice {
    #[new]
    fn new(label: String, topics: Vec<Topic>) -> PyResult<Self> {
        let topics = topics.into_iter().map(|t| t.inner).collect();
        let inner = core::TopicSlice::new(label, topics).map_err(value_error)?;
        Ok(TopicSlice { inner })
    }

    #[getter]
    fn label(&self) -> &str {
        self.inner.label()
    }

    #[getter]
    fn topics(&self) -> Vec<Topic> {
        self.inner
            .topics()
            .iter()
            .map(|t| Topic { inner: t.clone() })
            .collect()
    }

    fn get(&self, id: &str) -> Option<Topic> {
        self.inner.get(id).map(|t| Topic { inner: t.clone() })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, index: isize) -> PyResult<Topic> {
        let n = self.inner.len() as isize;
        let i = if index < 0 { index + n } else { index };
        if !(0..n).contains(&i) {
            return Err(PyIndexError::new_err("topic index out of range"));
        }
        Ok(Topic {
            inner: self.inner.topics()[i as usize].clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "TopicSlice(label={:?}, topics={})",
            self.inner.label(),
            self.inner.len()
        )
    }
}

/// Parses a JSON document of topic slices.
#[pyfunction]
fn parse_topic_slices(text: &str) -> PyResult<Vec<TopicSlice>> {
    let slices = core::parse_topic_slices(text).map_err(value_error)?;
    Ok(slices
        .into_iter()
        .map(|inner| TopicSlice { inner })
        .collect())
}

#[pyfunction]
fn load_topic_slices(path: std::path::PathBuf) -> PyResult<Vec<TopicSlice>> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| value_error(format!("{}: {e}", path.display())))?;
    parse_topic_slices(&text)
}

#[pyfunction]
fn js_divergence(t1: &Topic, t2: &Topic) -> PyResult<f64> {
    core::js_divergence(&t1.inner, &t2.inner)
        .map(|s| s.value)
        .map_err(value_error)
}

#[pyfunction]
fn semantic_divergence(store: &EmbeddingStore, t1: &Topic, t2: &Topic) -> PyResult<f64> {
    core::semantic_divergence(&store.inner, &t1.inner, &t2.inner)
        .map(|s| s.value)
        .map_err(value_error)
}

#[pyfunction]
fn cosine_distance(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    core::cosine_distance(&u, &v).map_err(value_error)
}

/// Pairwise scores between two topic lists; `None` marks incomparable entries.
#[pyfunction]
#[pyo3(signature = (topics_a, topics_b, method = "js", store = None))]
fn score_matrix(
    py: Python<'_>,
    topics_a: Vec<Topic>,
    topics_b: Vec<Topic>,
    method: &str,
    store: Option<&EmbeddingStore>,
) -> PyResult<Py<PyAny>> {
    let a: Vec<_> = topics_a.into_iter().map(|t| t.inner).collect();
    let b: Vec<_> = topics_b.into_iter().map(|t| t.inner).collect();
    let m = core::score_matrix(&a, &b, parse_method(method)?, store.map(|s| &s.inner))
        .map_err(value_error)?;
    to_python(py, &m)
}

/// Greedy one-to-one matching over a score matrix given as nested lists.
/// Row and column ids default to their indices.
#[pyfunction]
#[pyo3(signature = (scores, threshold, rows = None, cols = None, method = "js"))]
fn greedy_match(
    py: Python<'_>,
    scores: Vec<Vec<Option<f64>>>,
    threshold: f64,
    rows: Option<Vec<String>>,
    cols: Option<Vec<String>>,
    method: &str,
) -> PyResult<Py<PyAny>> {
    let width = scores.first().map_or(0, Vec::len);
    if scores.iter().any(|r| r.len() != width) {
        return Err(value_error("score rows have different lengths"));
    }
    let rows = rows.unwrap_or_else(|| (0..scores.len()).map(|i| i.to_string()).collect());
    let cols = cols.unwrap_or_else(|| (0..width).map(|j| j.to_string()).collect());
    if rows.len() != scores.len() || cols.len() != width {
        return Err(value_error(
            "row or column ids do not match the matrix shape",
        ));
    }
    let matrix = ScoreMatrix {
        method: parse_method(method)?,
        rows,
        cols,
        scores,
        incomparable_rows: Vec::new(),
        incomparable_cols: Vec::new(),
    };
    to_python(py, &core::greedy_match(&matrix, threshold))
}

fn pick_slice<'a>(
    slices: &'a [Bound<'_, TopicSlice>],
    label: Option<&str>,
    default: usize,
) -> PyResult<&'a Bound<'a, TopicSlice>> {
    match label {
        Some(l) => slices
            .iter()
            .find(|s| s.get().inner.label() == l)
            .ok_or_else(|| value_error(format!("no slice labelled `{l}`"))),
        None => slices
            .get(default)
            .ok_or_else(|| value_error("at least two slices are needed")),
    }
}

/// Tracks topics between two slices and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (
    slices,
    store = None,
    method = "both",
    from_slice = None,
    to_slice = None,
    js_threshold = core::tracker::DEFAULT_JS_THRESHOLD,
    sd_threshold = core::tracker::DEFAULT_SD_THRESHOLD,
    top_words = core::tracker::DEFAULT_TOP_WORDS,
    top_entities = core::tracker::DEFAULT_TOP_ENTITIES,
    max_level = core::corpus::DEFAULT_MAX_LEVEL,
))]
#[allow(clippy::too_many_arguments)]
fn track(
    py: Python<'_>,
    slices: Vec<Bound<'_, TopicSlice>>,
    store: Option<&EmbeddingStore>,
    method: &str,
    from_slice: Option<&str>,
    to_slice: Option<&str>,
    js_threshold: f64,
    sd_threshold: f64,
    top_words: usize,
    top_entities: usize,
    max_level: u32,
) -> PyResult<Py<PyAny>> {
    let methods = match method {
        "js" => MethodSelection::Js,
        "sd" => MethodSelection::Sd,
        "both" => MethodSelection::Both,
        other => {
            return Err(value_error(format!(
                "unknown method `{other}`, expected js, sd or both"
            )))
        }
    };
    let config = TrackConfig {
        methods,
        js_threshold,
        sd_threshold,
        top_words,
        top_entities,
        max_level,
    };
    let a = pick_slice(&slices, from_slice, 0)?;
    let b = pick_slice(&slices, to_slice, 1)?;
    let outcome = core::track(
        &a.get().inner,
        &b.get().inner,
        &config,
        store.map(|s| &s.inner),
    )
    .map_err(value_error)?;
    to_python(py, &TrackReport::new(&config, &outcome))
}

/// Synthetic drift benchmark; one result dict per method.
#[pyfunction]
#[pyo3(signature = (
    n_topics = 50,
    drift_rate = 0.3,
    weight_noise = 0.1,
    seed = 7,
    store = None,
    js_threshold = core::tracker::DEFAULT_JS_THRESHOLD,
    sd_threshold = core::tracker::DEFAULT_SD_THRESHOLD,
))]
#[allow(clippy::too_many_arguments)]
fn run_benchmark(
    py: Python<'_>,
    n_topics: usize,
    drift_rate: f64,
    weight_noise: f64,
    seed: u64,
    store: Option<&EmbeddingStore>,
    js_threshold: f64,
    sd_threshold: f64,
) -> PyResult<Py<PyAny>> {
    let cfg = DriftConfig::new(drift_rate, weight_noise, seed).map_err(value_error)?;
    let thresholds = Thresholds {
        js: js_threshold,
        sd: sd_threshold,
    };
    let results = py
        .detach(|| match store {
            Some(s) => bench::run_benchmark(n_topics, &cfg, &s.inner, thresholds),
            None => {
                let s = bench::synthetic_store(&bench::SyntheticStoreConfig::default());
                bench::run_benchmark(n_topics, &cfg, &s, thresholds)
            }
        })
        .map_err(value_error)?;
    to_python(py, &results)
}

#[pymodule]
fn _topictrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EmbeddingStore>()?;
    m.add_class::<Topic>()?;
    m.add_class::<TopicSlice>()?;
    m.add_function(wrap_pyfunction!(parse_topic_slices, m)?)?;
    m.add_function(wrap_pyfunction!(load_topic_slices, m)?)?;
    m.add_function(wrap_pyfunction!(js_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(semantic_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(score_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_match, m)?)?;
    m.add_function(wrap_pyfunction!(track, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
