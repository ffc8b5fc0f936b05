//! Word-embedding store, vocabulary filtering and cosine geometry.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Vectors loaded from a text embedding file, in file order.
///
/// Vectors are kept as loaded; their norms are cached for cosine queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    words: Vec<String>,
    ranks: Vec<usize>,
    data: Vec<f64>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// `(line, word)` of every duplicate entry that was ignored.
    pub duplicates: Vec<(usize, String)>,
    /// `(line, word)` of every all-zero vector that was skipped.
    pub zero_vectors: Vec<(usize, String)>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        EmbeddingStore {
            dim,
            words: Vec::new(),
            ranks: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Inserts `word` with the next rank. Returns `false` (and stores
    /// nothing) for duplicates and zero vectors.
    pub fn push(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        self.push_ranked(word, vector, self.words.len())
    }

    fn push_ranked(&mut self, word: &str, vector: &[f64], rank: usize) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::VectorDims(self.dim, vector.len()));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        let norm = norm(vector);
        if norm == 0.0 {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.ranks.push(rank);
        self.data.extend_from_slice(vector);
        self.norms.push(norm);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    /// Load order of `word`, used as a frequency proxy (lower is more frequent).
    pub fn rank(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| self.ranks[i])
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn norm_of(&self, word: &str) -> Option<f64> {
        self.index.get(word).map(|&i| self.norms[i])
    }

    /// Returns a copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> EmbeddingStore {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= factor);
        out.norms = (0..out.len()).map(|i| norm(out.row(i))).collect();
        out
    }

    /// Writes the store in the text format read by [`load_embeddings`].
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.len(), self.dim).map_err(io)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}").map_err(io)?;
            for x in self.row(i) {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Reads a text vector file: a `<count> <dim>` header, then one word per
/// line followed by `dim` reals. Keeps at most `limit` entries.
pub fn load_embeddings(path: &Path, limit: Option<usize>) -> Result<(EmbeddingStore, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let malformed = || Error::MalformedHeader {
        path: path.to_path_buf(),
        header: header.clone(),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [count, dim] = fields[..] else {
        return Err(malformed());
    };
    let count: usize = count.parse().map_err(|_| malformed())?;
    let dim: usize = dim.parse().map_err(|_| malformed())?;
    if dim == 0 {
        return Err(malformed());
    }
    let wanted = limit.map_or(count, |l| l.min(count));

    let mut store = EmbeddingStore::new(dim);
    let mut report = LoadReport::default();
    let mut vector = Vec::with_capacity(dim);
    for (idx, line) in lines.enumerate() {
        if store.len() >= wanted {
            break;
        }
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let word = parts.next().unwrap_or_default();
        vector.clear();
        for tok in parts {
            let x: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("bad number {tok:?}"),
            })?;
            vector.push(x);
        }
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: lineno,
                expected: dim,
                found: vector.len(),
            });
        }
        if store.contains(word) {
            log::warn!("{}:{lineno}: duplicate word {word:?} ignored", path.display());
            report.duplicates.push((lineno, word.to_string()));
            continue;
        }
        if !store.push_ranked(word, &vector, idx)? {
            log::warn!("{}:{lineno}: zero vector for {word:?} skipped", path.display());
            report.zero_vectors.push((lineno, word.to_string()));
        }
    }
    if store.len() < wanted {
        log::warn!(
            "{}: header announces {count} entries, loaded {}",
            path.display(),
            store.len()
        );
    }
    Ok((store, report))
}

/// Per-language character configuration for vocabulary filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    pub letters: BTreeSet<char>,
    pub vowels: BTreeSet<char>,
}

impl Alphabet {
    pub fn new(letters: &str, vowels: &str) -> Self {
        let letters: BTreeSet<char> = letters.chars().collect();
        let vowels: BTreeSet<char> = vowels.chars().filter(|c| letters.contains(c)).collect();
        Alphabet { letters, vowels }
    }

    /// Lowercase Latin letters with the common diacritics of European languages.
    pub fn latin() -> Self {
        Alphabet::new(
            "abcdefghijklmnopqrstuvwxyz\
             àáâãäåæçèéêëìíîïðñòóôõöøùúûüýþÿ\
             āăąćčďđēėęěğģīįıķĺļľłńņňőœŕřśşšţťūůűųźżžß",
            "aeiouy\
             àáâãäåæèéêëìíîïòóôõöøùúûüýÿ\
             āăąēėęěīįıőœūůűų",
        )
    }

    pub fn accepts(&self, word: &str) -> bool {
        !word.is_empty()
            && word.chars().all(|c| self.letters.contains(&c))
            && word.chars().any(|c| self.vowels.contains(&c))
            && word.to_lowercase() == word
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::latin()
    }
}

/// Filtered word list in store rank order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    members: HashSet<String>,
}

impl Vocabulary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for w in words {
            let w = w.into();
            if vocab.members.insert(w.clone()) {
                vocab.words.push(w);
            }
        }
        vocab
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.members.contains(word)
    }

    /// Applies the same filter to this vocabulary.
    pub fn refilter(&self, alphabet: &Alphabet, cap: Option<usize>) -> Vocabulary {
        filter_words(self.words.iter().map(String::as_str), alphabet, cap)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for word in &self.words {
            writeln!(w, "{word}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Vocabulary::from_words(text.lines().filter(|l| !l.is_empty())))
    }
}

fn filter_words<'a>(
    words: impl Iterator<Item = &'a str>,
    alphabet: &Alphabet,
    cap: Option<usize>,
) -> Vocabulary {
    let kept = words.filter(|w| alphabet.accepts(w));
    match cap {
        Some(cap) => Vocabulary::from_words(kept.take(cap)),
        None => Vocabulary::from_words(kept),
    }
}

/// Keeps lowercase words made only of the alphabet's letters and containing
/// at least one vowel, in rank order, truncated to `cap`.
pub fn filter_vocabulary(store: &EmbeddingStore, alphabet: &Alphabet, cap: Option<usize>) -> Vocabulary {
    filter_words(store.words(), alphabet, cap)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::VectorDims(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(cosine_with_norms(u, nu, v, nv))
}

pub(crate) fn cosine_with_norms(u: &[f64], nu: f64, v: &[f64], nv: f64) -> f64 {
    (1.0 - dot(u, v) / (nu * nv)).clamp(0.0, 2.0)
}

/// Cosine distance between two stored words.
pub fn word_distance(store: &EmbeddingStore, a: &str, b: &str) -> Result<f64> {
    let va = store.vector(a).ok_or_else(|| Error::MissingWord(a.to_string()))?;
    let vb = store.vector(b).ok_or_else(|| Error::MissingWord(b.to_string()))?;
    Ok(cosine_with_norms(va, store.norm_of(a).unwrap(), vb, store.norm_of(b).unwrap()))
}

/// The `k` candidates closest to `query` by cosine distance, ascending, ties
/// broken by word order.
pub fn nearest_in_set<S: AsRef<str>>(
    query: &[f64],
    candidates: &[S],
    store: &EmbeddingStore,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if query.len() != store.dim() {
        return Err(Error::VectorDims(store.dim(), query.len()));
    }
    let nq = norm(query);
    if nq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let c = c.as_ref();
        let v = store.vector(c).ok_or_else(|| Error::MissingWord(c.to_string()))?;
        scored.push((c, cosine_with_norms(query, nq, v, store.norm_of(c).unwrap())));
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(w, d)| (w.to_string(), d)).collect())
}

/// Unit-normalised copy of a word list's vectors for repeated exact
/// nearest-neighbour scans.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    words: Vec<String>,
    unit: Vec<f64>,
}

impl NeighborIndex {
    /// Indexes the words of `words` that have vectors; others are left out.
    pub fn build<S: AsRef<str>>(words: &[S], store: &EmbeddingStore) -> Self {
        let dim = store.dim();
        let mut kept = Vec::new();
        let mut unit = Vec::new();
        for w in words {
            let w = w.as_ref();
            if let Some(v) = store.vector(w) {
                let n = store.norm_of(w).unwrap();
                kept.push(w.to_string());
                unit.extend(v.iter().map(|x| x / n));
            }
        }
        NeighborIndex {
            dim,
            words: kept,
            unit,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Indices and distances of the `k` nearest indexed words, ascending, ties
    /// by word order.
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let nq = norm(query);
        if nq == 0.0 || self.words.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut scored: Vec<(usize, f64)> = self
            .unit
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, u)| (i, (1.0 - dot(query, u) / nq).clamp(0.0, 2.0)))
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            a.1.total_cmp(&b.1).then_with(|| self.words[a.0].cmp(&self.words[b.0]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored
    }
}
