//! Pairing tagged words across cell bins with CSLS-scaled distances.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::editscript::{levenshtein, levenshtein_chars};
use crate::embedding::{word_distance, EmbeddingStore};
use crate::error::{Error, Result};
use crate::seedio::ParadigmSchema;
use crate::tagging::{Provenance, TaggedLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    Levenshtein,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Levenshtein => "levenshtein",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "levenshtein" => Ok(Metric::Levenshtein),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// A distance between words: cosine over a store, or Levenshtein.
#[derive(Debug, Clone, Copy)]
pub enum Distance<'a> {
    Cosine(&'a EmbeddingStore),
    Levenshtein,
}

impl Distance<'_> {
    pub fn between(&self, a: &str, b: &str) -> Result<f64> {
        match self {
            Distance::Cosine(store) => word_distance(store, a, b),
            Distance::Levenshtein => Ok(levenshtein(a, b) as f64),
        }
    }
}

/// Words tagged with one cell, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bin {
    pub cell: usize,
    pub members: Vec<String>,
    provenance: Vec<Option<Provenance>>,
}

impl Bin {
    pub fn new<S: Into<String>>(cell: usize, words: impl IntoIterator<Item = S>) -> Self {
        let mut members: Vec<String> = words.into_iter().map(Into::into).collect();
        members.sort();
        members.dedup();
        let provenance = vec![None; members.len()];
        Bin {
            cell,
            members,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.members.binary_search_by(|m| m.as_str().cmp(word)).is_ok()
    }
}

/// Groups the lexicon by cell. With a store, words without vectors are left
/// out (cosine pairing cannot score them).
pub fn bin_tagged(lexicon: &TaggedLexicon, store: Option<&EmbeddingStore>) -> BTreeMap<usize, Bin> {
    let mut out: BTreeMap<usize, Bin> = BTreeMap::new();
    for (word, cell, tag) in lexicon.iter() {
        if store.is_some_and(|s| !s.contains(word)) {
            continue;
        }
        // Lexicon iteration is sorted by word, so members stay sorted.
        let bin = out.entry(cell).or_insert_with(|| Bin::new::<String>(cell, []));
        bin.members.push(word.to_string());
        bin.provenance.push(Some(tag.provenance));
    }
    out
}

/// Second-smallest value of `(distance, word)` pairs under lexicographic tie-breaking.
fn second_nearest(mut scored: Vec<(f64, &str)>) -> (f64, &str) {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    scored[1]
}

/// `D(x, y) - D(x, NN2(x, Y)) / 2 - D(NN2(y, X), y) / 2`; lower is better.
pub fn csls_score(x: &str, y: &str, bin_x: &Bin, bin_y: &Bin, distance: Distance) -> Result<f64> {
    for bin in [bin_x, bin_y] {
        if bin.len() < 2 {
            return Err(Error::BinTooSmall(bin.len()));
        }
    }
    if !bin_x.contains(x) {
        return Err(Error::NotInBin { word: x.to_string() });
    }
    if !bin_y.contains(y) {
        return Err(Error::NotInBin { word: y.to_string() });
    }
    let dxy = distance.between(x, y)?;
    let to_y = bin_y
        .members
        .iter()
        .map(|m| Ok((distance.between(x, m)?, m.as_str())))
        .collect::<Result<Vec<_>>>()?;
    let to_x = bin_x
        .members
        .iter()
        .map(|m| Ok((distance.between(m, y)?, m.as_str())))
        .collect::<Result<Vec<_>>>()?;
    Ok(dxy - 0.5 * second_nearest(to_y).0 - 0.5 * second_nearest(to_x).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub source_form: String,
    pub source_cell: usize,
    pub target_cell: usize,
    pub target_form: String,
    pub score: f64,
    /// Weaker provenance of the two members; unknown for pairs read from disk.
    pub provenance: Option<Provenance>,
}

fn second_min(values: impl Iterator<Item = f64>) -> f64 {
    let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
    for v in values {
        if v < a {
            b = a;
            a = v;
        } else if v < b {
            b = v;
        }
    }
    b
}

/// Pairwise distance matrix between two bins, row-major over `x`.
fn distance_matrix(x: &Bin, y: &Bin, distance: Distance) -> Result<Vec<f64>> {
    match distance {
        Distance::Cosine(store) => {
            if let Some(missing) = x.members.iter().chain(&y.members).find(|w| !store.contains(w)) {
                return Err(Error::MissingWord(missing.clone()));
            }
            Ok(x.members
                .par_iter()
                .flat_map_iter(|a| {
                    y.members
                        .iter()
                        .map(move |b| word_distance(store, a, b).expect("membership checked"))
                })
                .collect())
        }
        Distance::Levenshtein => {
            let ys: Vec<Vec<char>> = y.members.iter().map(|w| w.chars().collect()).collect();
            Ok(x.members
                .par_iter()
                .flat_map_iter(|a| {
                    let ac: Vec<char> = a.chars().collect();
                    ys.iter()
                        .map(|b| levenshtein_chars(&ac, b) as f64)
                        .collect::<Vec<_>>()
                })
                .collect())
        }
    }
}

/// CSLS scores for every `(x, y)` in `X × Y`, row-major.
pub fn csls_matrix(x: &Bin, y: &Bin, distance: Distance) -> Result<Vec<f64>> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::BinTooSmall(x.len().min(y.len())));
    }
    let (nx, ny) = (x.len(), y.len());
    let d = distance_matrix(x, y, distance)?;
    let row_r: Vec<f64> = (0..nx).map(|i| second_min(d[i * ny..(i + 1) * ny].iter().copied())).collect();
    let col_r: Vec<f64> = (0..ny).map(|j| second_min((0..nx).map(|i| d[i * ny + j]))).collect();
    Ok((0..nx * ny)
        .map(|k| d[k] - 0.5 * row_r[k / ny] - 0.5 * col_r[k % ny])
        .collect())
}

/// One-to-one greedy matching in ascending score order. `scores` is
/// row-major over `source`.
fn greedy_match(source: &Bin, target: &Bin, scores: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut all: Vec<(f64, usize, usize)> = (0..source.len())
        .flat_map(|i| (0..target.len()).map(move |j| (i, j)))
        .map(|(i, j)| (scores(i, j), i, j))
        .collect();
    // Members are sorted, so index order is word order.
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_s = vec![false; source.len()];
    let mut used_t = vec![false; target.len()];
    let mut out = Vec::new();
    for (score, i, j) in all {
        if !used_s[i] && !used_t[j] {
            used_s[i] = true;
            used_t[j] = true;
            out.push((i, j, score));
        }
    }
    out
}

fn make_pair(source: &Bin, target: &Bin, i: usize, j: usize, score: f64) -> TrainingPair {
    let provenance = match (source.provenance[i], target.provenance[j]) {
        (Some(a), Some(b)) => Some(a.weaker(b)),
        (a, b) => a.or(b),
    };
    TrainingPair {
        source_form: source.members[i].clone(),
        source_cell: source.cell,
        target_cell: target.cell,
        target_form: target.members[j].clone(),
        score,
        provenance,
    }
}

/// Matches words across every ordered pair of bins and keeps the `cap`
/// best-scoring pairs overall.
pub fn pair_bins(bins: &BTreeMap<usize, Bin>, distance: Distance, cap: usize) -> Result<Vec<TrainingPair>> {
    let cells: Vec<usize> = bins.keys().copied().collect();
    let mut unordered = Vec::new();
    for (a, &ci) in cells.iter().enumerate() {
        for &cj in &cells[a + 1..] {
            let (x, y) = (&bins[&ci], &bins[&cj]);
            if x.len() < 2 || y.len() < 2 {
                log::warn!(
                    "bins {ci} ({} words) and {cj} ({} words): too small for CSLS, skipped",
                    x.len(),
                    y.len()
                );
                continue;
            }
            unordered.push((x, y));
        }
    }

    let per_pair: Vec<Vec<TrainingPair>> = unordered
        .par_iter()
        .map(|(x, y)| {
            let scores = csls_matrix(x, y, distance)?;
            let ny = y.len();
            let mut out = Vec::new();
            for (i, j, s) in greedy_match(x, y, |i, j| scores[i * ny + j]) {
                out.push(make_pair(x, y, i, j, s));
            }
            for (j, i, s) in greedy_match(y, x, |j, i| scores[i * ny + j]) {
                out.push(make_pair(y, x, j, i, s));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut pool: Vec<TrainingPair> = per_pair.into_iter().flatten().collect();
    pool.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.source_form.cmp(&b.source_form))
            .then_with(|| a.target_form.cmp(&b.target_form))
            .then(a.source_cell.cmp(&b.source_cell))
            .then(a.target_cell.cmp(&b.target_cell))
    });
    pool.truncate(cap);
    Ok(pool)
}

/// Writes `source<TAB>source_bundles<TAB>target_bundles<TAB>target<TAB>score`
/// lines and returns the number written.
pub fn emit_dataset(pairs: &[TrainingPair], schema: &ParadigmSchema, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            p.source_form,
            schema.cell(p.source_cell).label(),
            schema.cell(p.target_cell).label(),
            p.target_form,
            p.score
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(pairs.len())
}

pub fn read_dataset(path: &Path, schema: &ParadigmSchema) -> Result<Vec<TrainingPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [source, sb, tb, target, score] = cols[..] else {
            return Err(bad("expected 5 tab-separated columns".into()));
        };
        out.push(TrainingPair {
            source_form: source.to_string(),
            source_cell: schema.cell_of_label(sb).map_err(|e| bad(e.to_string()))?,
            target_cell: schema.cell_of_label(tb).map_err(|e| bad(e.to_string()))?,
            target_form: target.to_string(),
            score: score.parse().map_err(|_| bad(format!("bad score {score:?}")))?,
            provenance: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seedio::FeatureBundle;

    #[test]
    fn binning() {
        let lex: TaggedLexicon = [("aime", 0), ("aima", 1), ("parle", 0), ("aime", 1)]
            .into_iter()
            .map(|(w, c)| (w.to_string(), c, Provenance::Orth))
            .collect();
        let bins = bin_tagged(&lex, None);
        assert_eq!(bins[&0].members, ["aime", "parle"]);
        assert_eq!(bins[&1].members, ["aima", "aime"]);
        assert!(bin_tagged(&TaggedLexicon::new(), None).is_empty());

        let mut store = EmbeddingStore::new(1);
        store.push("aime", &[1.0]).unwrap();
        let bins = bin_tagged(&lex, Some(&store));
        assert_eq!(bins[&0].members, ["aime"]);
    }

    #[test]
    fn levenshtein_csls_hand_case() {
        let x = Bin::new(0, ["aa", "bb"]);
        let y = Bin::new(1, ["ab", "cd"]);
        let s = csls_score("aa", "ab", &x, &y, Distance::Levenshtein).unwrap();
        assert!((s - -0.5).abs() < 1e-12);
        assert!(matches!(
            csls_score("aa", "ab", &Bin::new(0, ["aa"]), &y, Distance::Levenshtein),
            Err(Error::BinTooSmall(1))
        ));
    }

    #[test]
    fn uniform_distances_cancel() {
        // All cross-bin Levenshtein distances equal 2.
        let x = Bin::new(0, ["aa", "bb", "cc"]);
        let y = Bin::new(1, ["dd", "ee", "ff"]);
        let scores = csls_matrix(&x, &y, Distance::Levenshtein).unwrap();
        assert!(scores.iter().all(|s| *s == 0.0));
        let mut bins = BTreeMap::new();
        bins.insert(0, x);
        bins.insert(1, y);
        let pairs = pair_bins(&bins, Distance::Levenshtein, 100).unwrap();
        let got: Vec<(&str, &str)> = pairs
            .iter()
            .map(|p| (p.source_form.as_str(), p.target_form.as_str()))
            .collect();
        assert_eq!(
            got,
            [("aa", "dd"), ("bb", "ee"), ("cc", "ff"), ("dd", "aa"), ("ee", "bb"), ("ff", "cc")]
        );
    }

    #[test]
    fn tiny_bins_skipped() {
        let mut bins = BTreeMap::new();
        bins.insert(0, Bin::new(0, ["a"]));
        bins.insert(1, Bin::new(1, ["b"]));
        assert!(pair_bins(&bins, Distance::Levenshtein, 10).unwrap().is_empty());
    }

    #[test]
    fn cap_keeps_best() {
        let mut bins = BTreeMap::new();
        bins.insert(0, Bin::new(0, ["kata", "lumo", "pire"]));
        bins.insert(1, Bin::new(1, ["katan", "lumon", "piren"]));
        let all = pair_bins(&bins, Distance::Levenshtein, 100).unwrap();
        let one = pair_bins(&bins, Distance::Levenshtein, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0], all[0]);
        assert!(all.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn dataset_round_trip() {
        let schema = ParadigmSchema::from_groups(vec![
            vec![FeatureBundle::new(["V", "NFIN"]).unwrap()],
            vec![
                FeatureBundle::new(["V", "PST"]).unwrap(),
                FeatureBundle::new(["V", "V.PTCP", "PST"]).unwrap(),
            ],
        ])
        .unwrap();
        let pair = TrainingPair {
            source_form: "walk".into(),
            source_cell: 0,
            target_cell: 1,
            target_form: "walked".into(),
            score: -0.123456789012345,
            provenance: Some(Provenance::Orth),
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        assert_eq!(emit_dataset(&[], &schema, f.path()).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(f.path()).unwrap(), "");
        assert_eq!(emit_dataset(std::slice::from_ref(&pair), &schema, f.path()).unwrap(), 1);
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text, "walk\tNFIN;V\tPST;V|PST;V;V.PTCP\twalked\t-0.123456789012345\n");
        let back = read_dataset(f.path(), &schema).unwrap();
        assert_eq!(back.len(), 1);
        assert!((back[0].score - pair.score).abs() <= 1e-9);
        assert_eq!(
            TrainingPair {
                provenance: Some(Provenance::Orth),
                ..back[0].clone()
            },
            pair
        );
    }
}
