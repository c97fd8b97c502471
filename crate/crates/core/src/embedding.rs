//! Word vectors and probability-weighted topic embeddings.
//!
//! Vectors are read from the plain text format written by word2vec, GloVe
//! and fastText (`.vec`): an optional `<count> <dimension>` header followed
//! by one `<token> <v1> ... <vd>` row per token.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::Topic;

/// Shortest and longest character n-gram used for out-of-vocabulary tokens.
pub const MIN_NGRAM: usize = 3;
pub const MAX_NGRAM: usize = 6;

const BOW: char = '<';
const EOW: char = '>';

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector file is empty")]
    Empty,
    #[error("vector file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("cannot read vector file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vector for `{token}` has {found} components, expected {expected}")]
    Dimension {
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("topic `{0}` has a zero embedding")]
    ZeroEmbedding(String),
}

/// Read-only token to vector table of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl EmbeddingStore {
    /// Builds a store from `(token, vector)` rows. Later duplicates of a token are ignored.
    pub fn from_rows<I, S>(dimension: usize, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut store = EmbeddingStore::with_dimension(dimension);
        for (token, vector) in rows {
            let token = token.into();
            if vector.len() != dimension {
                return Err(EmbeddingError::Dimension {
                    token,
                    expected: dimension,
                    found: vector.len(),
                });
            }
            store.push(token, &vector);
        }
        Ok(store)
    }

    fn with_dimension(dimension: usize) -> Self {
        EmbeddingStore {
            dimension,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
        }
    }

    fn push(&mut self, token: String, vector: &[f32]) {
        if self.index.contains_key(&token) {
            log::warn!("duplicate vector for `{token}`, keeping the first one");
            return;
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.norms.push(
            vector
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt(),
        );
        self.data.extend_from_slice(vector);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Stored vector of an in-vocabulary token.
    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Vector for `token`, falling back to word averaging and subword n-grams.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        self.resolve(token).vector
    }

    /// Like [`lookup`](Self::lookup), also reporting how the vector was found.
    pub fn resolve(&self, token: &str) -> Lookup {
        if let Some(v) = self.get(token) {
            return Lookup {
                vector: widen(v),
                source: LookupSource::Vocabulary,
            };
        }
        if token.chars().any(char::is_whitespace) {
            let parts: Vec<Lookup> = token.split_whitespace().map(|w| self.resolve(w)).collect();
            if !parts.is_empty() {
                let mut mean = vec![0.0; self.dimension];
                for p in &parts {
                    add_scaled(&mut mean, &p.vector, 1.0);
                }
                let n = parts.len() as f64;
                mean.iter_mut().for_each(|x| *x /= n);
                let oov_parts = parts.iter().filter(|p| p.is_oov()).count();
                return Lookup {
                    vector: mean,
                    source: LookupSource::Composite {
                        parts: parts.len(),
                        oov_parts,
                    },
                };
            }
        }
        let (vector, hits) = self.subword_mean(token);
        let source = if hits > 0 {
            LookupSource::Subword { ngrams: hits }
        } else {
            LookupSource::Missing
        };
        Lookup { vector, source }
    }

    /// Mean vector of the in-vocabulary character n-grams of `token`.
    ///
    /// The token is wrapped in `<` and `>` before n-grams of length 3 to 6 are
    /// taken. Every occurrence counts. Returns the zero vector when no
    /// n-gram is in the vocabulary.
    pub fn oov_fallback(&self, token: &str) -> Vec<f64> {
        self.subword_mean(token).0
    }

    fn subword_mean(&self, token: &str) -> (Vec<f64>, usize) {
        let mut sum = vec![0.0; self.dimension];
        let mut hits = 0usize;
        for gram in char_ngrams(token, MIN_NGRAM, MAX_NGRAM) {
            if let Some(v) = self.get(&gram) {
                for (acc, &x) in sum.iter_mut().zip(v) {
                    *acc += f64::from(x);
                }
                hits += 1;
            }
        }
        if hits > 0 {
            let n = hits as f64;
            sum.iter_mut().for_each(|x| *x /= n);
        }
        (sum, hits)
    }

    /// In-vocabulary token with the highest cosine similarity to `query`,
    /// skipping tokens for which `exclude` returns true and zero vectors.
    /// Ties go to the token listed first.
    pub fn nearest<F>(&self, query: &[f64], exclude: F) -> Option<&str>
    where
        F: Fn(&str) -> bool,
    {
        let qnorm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        if qnorm == 0.0 {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, token) in self.tokens.iter().enumerate() {
            if self.norms[i] == 0.0 || exclude(token) {
                continue;
            }
            let dot: f64 = self
                .row(i)
                .iter()
                .zip(query)
                .map(|(&a, &b)| f64::from(a) * b)
                .sum();
            let sim = dot / (self.norms[i] * qnorm);
            if best.is_none_or(|(_, s)| sim > s) {
                best = Some((i, sim));
            }
        }
        best.map(|(i, _)| self.tokens[i].as_str())
    }
}

/// How [`EmbeddingStore::resolve`] produced a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupSource {
    Vocabulary,
    /// Mean over the whitespace-separated words of a multi-word token.
    Composite {
        parts: usize,
        oov_parts: usize,
    },
    Subword {
        ngrams: usize,
    },
    /// Nothing found; the vector is zero.
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub vector: Vec<f64>,
    pub source: LookupSource,
}

impl Lookup {
    /// True when any part of the vector came from the fallback path.
    pub fn is_oov(&self) -> bool {
        match self.source {
            LookupSource::Vocabulary => false,
            LookupSource::Composite { oov_parts, .. } => oov_parts > 0,
            LookupSource::Subword { .. } | LookupSource::Missing => true,
        }
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

fn add_scaled(acc: &mut [f64], v: &[f64], scale: f64) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

/// Character n-grams of `<token>` with lengths in `min_n..=max_n`, in
/// order of length then position.
pub fn char_ngrams(token: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once(BOW)
        .chain(token.chars())
        .chain(std::iter::once(EOW))
        .collect();
    let mut grams = Vec::new();
    for n in min_n..=max_n.min(chars.len()) {
        for window in chars.windows(n) {
            grams.push(window.iter().collect());
        }
    }
    grams
}

/// Parses the text vector format.
pub fn load_vectors(document: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let mut lines = document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (first_no, first) = *lines.peek().ok_or(EmbeddingError::Empty)?;
    let header: Option<(usize, usize)> = {
        let fields: Vec<&str> = first.split_whitespace().collect();
        match fields.as_slice() {
            [count, dim] => match (count.parse::<usize>(), dim.parse::<usize>()) {
                (Ok(c), Ok(d)) => Some((c, d)),
                _ => None,
            },
            _ => None,
        }
    };
    if header.is_some() {
        lines.next();
    }

    let mut store: Option<EmbeddingStore> = None;
    let mut rows = 0usize;
    let mut buf: Vec<f32> = Vec::new();
    for (line_no, line) in lines {
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a field");
        buf.clear();
        for field in fields {
            let x: f32 = field.parse().map_err(|_| EmbeddingError::Format {
                line: line_no,
                message: format!("`{field}` is not a number"),
            })?;
            buf.push(x);
        }
        let expected = match (&store, header) {
            (Some(s), _) => s.dimension,
            (None, Some((_, d))) => d,
            (None, None) => buf.len(),
        };
        if expected == 0 {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: "vectors must have at least one component".into(),
            });
        }
        if buf.len() != expected {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!(
                    "`{token}` has {} components, expected {expected}",
                    buf.len()
                ),
            });
        }
        store
            .get_or_insert_with(|| EmbeddingStore::with_dimension(expected))
            .push(token.to_string(), &buf);
        rows += 1;
    }

    if let Some((count, _)) = header {
        if count != rows {
            return Err(EmbeddingError::Format {
                line: first_no,
                message: format!("header announces {count} vectors but {rows} follow"),
            });
        }
    }
    store.ok_or(EmbeddingError::Empty)
}

/// Reads and parses a vector file.
pub fn load_vectors_file(path: impl AsRef<Path>) -> Result<EmbeddingStore, EmbeddingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_vectors(&text)
}

/// Writes a store in the text vector format, with header.
pub fn write_vectors(store: &EmbeddingStore) -> String {
    let mut out = format!("{} {}\n", store.len(), store.dimension);
    for (i, token) in store.tokens.iter().enumerate() {
        out.push_str(token);
        for x in store.row(i) {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

/// Probability-weighted sum of a topic's token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicEmbedding {
    pub vector: Vec<f64>,
    /// Tokens whose vector came (at least partly) from the fallback path.
    pub oov_count: usize,
    pub token_count: usize,
}

/// Embeds a topic as the weighted sum of its word and entity vectors.
///
/// No normalization is applied; the result is compared by cosine only.
pub fn topic_embedding(
    store: &EmbeddingStore,
    topic: &Topic,
) -> Result<TopicEmbedding, EmbeddingError> {
    let mut vector = vec![0.0; store.dimension];
    let mut oov_count = 0;
    let mut token_count = 0;
    for tok in topic.tokens() {
        let found = store.resolve(tok.token());
        if found.is_oov() {
            oov_count += 1;
        }
        token_count += 1;
        add_scaled(&mut vector, &found.vector, tok.weight());
    }
    if vector.iter().all(|&x| x == 0.0) {
        return Err(EmbeddingError::ZeroEmbedding(topic.id().to_string()));
    }
    Ok(TopicEmbedding {
        vector,
        oov_count,
        token_count,
    })
}
