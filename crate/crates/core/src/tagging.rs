//! Assigning paradigm cells to vocabulary words.
//!
//! Three taggers share one output type:
//!
//! - [`orth_tag`] accepts a word for a cell when its edit scripts to other
//!   vocabulary words reproduce the seed's scripts for enough relations out of
//!   that cell;
//! - [`sem_tag`] accepts a word pair for a relation when the pair's difference
//!   vector points the same way as the seed's mean difference vector;
//! - [`comb_bootstrap`] grows the semantic estimate with "semi-gold" pairs that
//!   pass a relaxed version of both tests, then tags semantically.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::editscript::{edit_script, placements, EditScript};
use crate::embedding::{cosine_distance, norm, EmbeddingStore, NeighborIndex, Vocabulary};
use crate::error::{Error, Result};
use crate::seedio::{enumerate_relations, ParadigmSchema, RelationKey, SeedSet};

/// Slack allowed when comparing a cosine distance against a cutoff, so that a
/// difference vector identical to the estimate (distance 0 up to rounding)
/// passes a zero cutoff.
pub const CUTOFF_TOLERANCE: f64 = 1e-12;

/// Upper bound on the placements tried per (word, script).
const PLACEMENT_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Orth,
    Sem,
    SemiGold,
}

impl Provenance {
    /// Semantic-only tags are the weakest, semi-gold (both criteria) the strongest.
    pub fn strength(self) -> u8 {
        match self {
            Provenance::Sem => 0,
            Provenance::Orth => 1,
            Provenance::SemiGold => 2,
        }
    }

    pub fn weaker(self, other: Provenance) -> Provenance {
        if other.strength() < self.strength() {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Orth => "orth",
            Provenance::Sem => "sem",
            Provenance::SemiGold => "semi-gold",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orth" => Ok(Provenance::Orth),
            "sem" => Ok(Provenance::Sem),
            "semi-gold" => Ok(Provenance::SemiGold),
            _ => Err(Error::Config(format!("unknown provenance {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag {
    pub provenance: Provenance,
    /// Orthographic: supporting target cells. Semantic: relations that fired.
    pub evidence: usize,
}

/// Set of `(word, cell)` assignments, each at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedLexicon {
    entries: BTreeMap<(String, usize), Tag>,
}

impl TaggedLexicon {
    pub fn new() -> Self {
        TaggedLexicon::default()
    }

    /// Adds an assignment. A stronger provenance replaces a weaker one; equal
    /// provenances add up their evidence.
    pub fn insert(&mut self, word: &str, cell: usize, provenance: Provenance, evidence: usize) {
        let tag = Tag { provenance, evidence };
        match self.entries.get_mut(&(word.to_string(), cell)) {
            None => {
                self.entries.insert((word.to_string(), cell), tag);
            }
            Some(old) if provenance.strength() > old.provenance.strength() => *old = tag,
            Some(old) if provenance == old.provenance => old.evidence += evidence,
            Some(_) => {}
        }
    }

    pub fn merge(&mut self, other: TaggedLexicon) {
        for ((w, c), tag) in other.entries {
            self.insert(&w, c, tag.provenance, tag.evidence);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str, cell: usize) -> Option<Tag> {
        self.entries.get(&(word.to_string(), cell)).copied()
    }

    pub fn contains(&self, word: &str, cell: usize) -> bool {
        self.get(word, cell).is_some()
    }

    /// Assignments sorted by word, then cell.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, Tag)> {
        self.entries.iter().map(|((w, c), t)| (w.as_str(), *c, *t))
    }

    /// `(word, cell)` pairs, for set comparisons.
    pub fn pairs(&self) -> BTreeSet<(String, usize)> {
        self.entries.keys().cloned().collect()
    }

    /// Words tagged with `cell`, sorted.
    pub fn words_in_cell(&self, cell: usize) -> Vec<&str> {
        self.iter().filter(|(_, c, _)| *c == cell).map(|(w, _, _)| w).collect()
    }

    pub fn counts_per_cell(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for (_, c, _) in self.iter() {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    /// TSV: `word<TAB>cell_id<TAB>provenance<TAB>evidence`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (word, cell, tag) in self.iter() {
            writeln!(w, "{word}\t{cell}\t{}\t{}", tag.provenance, tag.evidence)
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = TaggedLexicon::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |message: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: message.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [word, cell, prov, evidence] = cols[..] else {
                return Err(bad("expected 4 tab-separated columns"));
            };
            let cell = cell.parse().map_err(|_| bad("bad cell id"))?;
            let prov = prov.parse().map_err(|_| bad("bad provenance"))?;
            let evidence = evidence.parse().map_err(|_| bad("bad evidence count"))?;
            out.insert(word, cell, prov, evidence);
        }
        Ok(out)
    }
}

impl FromIterator<(String, usize, Provenance)> for TaggedLexicon {
    fn from_iter<I: IntoIterator<Item = (String, usize, Provenance)>>(iter: I) -> Self {
        let mut out = TaggedLexicon::new();
        for (w, c, p) in iter {
            out.insert(&w, c, p, 1);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Orthographic tagging

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthRelation {
    pub key: RelationKey,
    pub scripts: BTreeSet<EditScript>,
}

pub type OrthRelations = BTreeMap<RelationKey, OrthRelation>;

/// The set of seed edit scripts for every ordered cell pair.
pub fn build_orth_relations(seed: &SeedSet) -> OrthRelations {
    enumerate_relations(&seed.schema)
        .into_iter()
        .map(|key| {
            let scripts = seed
                .tables
                .iter()
                .filter_map(|t| edit_script(t.form(key.source), t.form(key.target)).ok())
                .collect();
            (key, OrthRelation { key, scripts })
        })
        .collect()
}

/// Default coverage threshold: `ceil((m - 1) / 2)` supporting target cells.
pub fn coverage_threshold(m: usize) -> usize {
    m.saturating_sub(1).div_ceil(2)
}

/// Vocabulary words `w2` with `edit_script(word, w2)` in `scripts`, sorted.
pub fn script_partners(word: &str, scripts: &BTreeSet<EditScript>, vocab: &Vocabulary) -> Vec<String> {
    let mut out = BTreeSet::new();
    for script in scripts {
        for cand in placements(script, word, PLACEMENT_LIMIT) {
            if vocab.contains(&cand) && edit_script(word, &cand).is_ok_and(|s| scripts.contains(&s)) {
                out.insert(cand);
            }
        }
    }
    out.into_iter().collect()
}

/// Target cells `k` for which `word` has a vocabulary partner under the
/// relation `(source, k)`.
pub fn orth_support(word: &str, source: usize, relations: &OrthRelations, vocab: &Vocabulary) -> BTreeSet<usize> {
    relations
        .range(RelationKey { source, target: 0 }..=RelationKey { source, target: usize::MAX })
        .filter(|(_, rel)| has_partner(word, &rel.scripts, vocab))
        .map(|(key, _)| key.target)
        .collect()
}

fn has_partner(word: &str, scripts: &BTreeSet<EditScript>, vocab: &Vocabulary) -> bool {
    scripts.iter().any(|script| {
        placements(script, word, PLACEMENT_LIMIT).iter().any(|cand| {
            vocab.contains(cand) && edit_script(word, cand).is_ok_and(|s| scripts.contains(&s))
        })
    })
}

/// Tags `(w, t_j)` when `w` has script partners for at least `threshold`
/// distinct target cells (default [`coverage_threshold`]).
pub fn orth_tag(
    vocab: &Vocabulary,
    relations: &OrthRelations,
    schema: &ParadigmSchema,
    threshold: Option<usize>,
) -> TaggedLexicon {
    let threshold = threshold.unwrap_or_else(|| coverage_threshold(schema.m()));
    let found: Vec<(String, usize, usize)> = vocab
        .words()
        .par_iter()
        .flat_map_iter(|w| {
            (0..schema.m()).filter_map(move |cell| {
                let support = orth_support(w, cell, relations, vocab).len();
                (support >= threshold).then(|| (w.clone(), cell, support))
            })
        })
        .collect();
    let mut out = TaggedLexicon::new();
    for (w, cell, support) in found {
        out.insert(&w, cell, Provenance::Orth, support);
    }
    out
}

// ---------------------------------------------------------------------------
// Semantic tagging

#[derive(Debug, Clone, PartialEq)]
pub struct SemRelation {
    pub key: RelationKey,
    /// Mean of `v(source form) - v(target form)` over the support pairs.
    pub vector: Vec<f64>,
    /// Mean cosine distance of the support differences from `vector`.
    pub cutoff_avg: f64,
    /// Largest such distance.
    pub cutoff_max: f64,
    pub support: Vec<(String, String)>,
}

pub type SemRelations = BTreeMap<RelationKey, SemRelation>;

fn difference(store: &EmbeddingStore, a: &str, b: &str) -> Option<Vec<f64>> {
    let (va, vb) = (store.vector(a)?, store.vector(b)?);
    let d: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x - y).collect();
    (norm(&d) > 0.0).then_some(d)
}

fn mean(vectors: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let n = vectors.len() as f64;
    out.iter_mut().for_each(|x| *x /= n);
    out
}

/// Cosine distances of `diffs` from `center`; `center` must be nonzero.
fn scatter(center: &[f64], diffs: &[&[f64]]) -> Vec<f64> {
    diffs
        .iter()
        .map(|d| cosine_distance(center, d).expect("nonzero difference vectors"))
        .collect()
}

fn avg_max(ds: &[f64]) -> (f64, f64) {
    let avg = ds.iter().sum::<f64>() / ds.len() as f64;
    let max = ds.iter().copied().fold(0.0, f64::max);
    (avg, max)
}

fn unusable(key: RelationKey, reason: &str) -> Error {
    Error::UnusableRelation {
        source_cell: key.source,
        target_cell: key.target,
        reason: reason.to_string(),
    }
}

/// Mean difference vector and cutoffs for one relation, over the seed tables
/// whose two forms both have (distinct) vectors.
pub fn build_sem_relation(seed: &SeedSet, store: &EmbeddingStore, key: RelationKey) -> Result<SemRelation> {
    let mut support = Vec::new();
    let mut diffs = Vec::new();
    for t in &seed.tables {
        let (a, b) = (t.form(key.source), t.form(key.target));
        match difference(store, a, b) {
            Some(d) => {
                support.push((a.to_string(), b.to_string()));
                diffs.push(d);
            }
            None => log::warn!("relation {key}: seed pair ({a}, {b}) has no usable difference vector"),
        }
    }
    estimate(key, support, &diffs, store.dim())
}

fn estimate(key: RelationKey, support: Vec<(String, String)>, diffs: &[Vec<f64>], dim: usize) -> Result<SemRelation> {
    if diffs.is_empty() {
        return Err(unusable(key, "no seed pair with both vectors"));
    }
    let refs: Vec<&[f64]> = diffs.iter().map(Vec::as_slice).collect();
    let vector = mean(&refs, dim);
    if norm(&vector) == 0.0 {
        return Err(unusable(key, "zero mean difference vector"));
    }
    let (cutoff_avg, cutoff_max) = avg_max(&scatter(&vector, &refs));
    Ok(SemRelation {
        key,
        vector,
        cutoff_avg,
        cutoff_max,
        support,
    })
}

/// Seed relations for every ordered pair; unusable relations are logged and left out.
pub fn build_sem_relations(seed: &SeedSet, store: &EmbeddingStore) -> SemRelations {
    enumerate_relations(&seed.schema)
        .into_iter()
        .filter_map(|key| match build_sem_relation(seed, store, key) {
            Ok(rel) => Some((key, rel)),
            Err(e) => {
                log::warn!("{e}");
                None
            }
        })
        .collect()
}

/// Pairs `(a, b)` accepted for one relation: for every vocabulary word `a`,
/// the `budget` nearest vocabulary words to `v(a) - R` are tested with
/// `D_C(R, v(a) - v(b)) <= cutoff_avg`.
pub fn sem_pairs(index: &NeighborIndex, store: &EmbeddingStore, rel: &SemRelation, budget: usize) -> Vec<(String, String)> {
    let words = index.words();
    let mut out = Vec::new();
    let mut point = vec![0.0; store.dim()];
    let mut diff = vec![0.0; store.dim()];
    for (ai, a) in words.iter().enumerate() {
        let va = store.vector(a).expect("indexed words have vectors");
        for ((p, x), r) in point.iter_mut().zip(va).zip(&rel.vector) {
            *p = x - r;
        }
        for (bi, _) in index.nearest(&point, budget) {
            if bi == ai {
                continue;
            }
            let vb = store.vector(&words[bi]).unwrap();
            for ((d, x), y) in diff.iter_mut().zip(va).zip(vb) {
                *d = x - y;
            }
            if let Ok(dist) = cosine_distance(&rel.vector, &diff) {
                if dist <= rel.cutoff_avg + CUTOFF_TOLERANCE {
                    out.push((a.clone(), words[bi].clone()));
                }
            }
        }
    }
    out
}

/// Semantic tagging over all relations. Each relation that fires for a
/// `(word, cell)` counts once towards its evidence.
pub fn sem_tag(vocab: &Vocabulary, store: &EmbeddingStore, relations: &SemRelations, budget: usize) -> TaggedLexicon {
    let index = NeighborIndex::build(vocab.words(), store);
    let per_relation: Vec<BTreeSet<(String, usize)>> = relations
        .par_iter()
        .map(|(key, rel)| {
            let mut tagged = BTreeSet::new();
            for (a, b) in sem_pairs(&index, store, rel, budget) {
                tagged.insert((a, key.source));
                tagged.insert((b, key.target));
            }
            tagged
        })
        .collect();
    let mut out = TaggedLexicon::new();
    for tagged in per_relation {
        for (w, c) in tagged {
            out.insert(&w, c, Provenance::Sem, 1);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Combined bootstrapping

/// Support over which the final average cutoff is recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalCutoff {
    SeedOnly,
    #[default]
    SeedAndSemiGold,
}

impl FromStr for FinalCutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seed" => Ok(FinalCutoff::SeedOnly),
            "seed+semi-gold" => Ok(FinalCutoff::SeedAndSemiGold),
            _ => Err(Error::Config(format!("unknown final cutoff {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombParams {
    pub max_iters: usize,
    pub neighbor_budget: usize,
    pub final_cutoff: FinalCutoff,
}

impl Default for CombParams {
    fn default() -> Self {
        CombParams {
            max_iters: 10,
            neighbor_budget: 20,
            final_cutoff: FinalCutoff::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiGoldPair {
    pub source: String,
    pub target: String,
    /// 1-based iteration in which the pair was accepted.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Relation vector the acceptance test used.
    pub vector: Vec<f64>,
    /// Max-distance cutoff over the seed support against `vector`.
    pub cutoff_max: f64,
    pub added: usize,
    /// Semi-gold pairs accumulated after this iteration.
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationTrace {
    pub iterations: Vec<IterationRecord>,
    pub semi_gold: Vec<SemiGoldPair>,
    /// Relation-vector estimates computed, the seed estimate included.
    pub recomputations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CombOutput {
    pub relations: SemRelations,
    pub lexicon: TaggedLexicon,
    pub traces: BTreeMap<RelationKey, RelationTrace>,
}

/// Pairs of vocabulary words whose edit script lies in the relation's script set.
fn relaxed_orth_candidates(vocab: &Vocabulary, scripts: &BTreeSet<EditScript>) -> Vec<(String, String)> {
    vocab
        .words()
        .par_iter()
        .flat_map_iter(|a| {
            let mut partners = BTreeSet::new();
            for script in scripts {
                for cand in placements(script, a, PLACEMENT_LIMIT) {
                    if cand != *a
                        && vocab.contains(&cand)
                        && edit_script(a, &cand).is_ok_and(|s| scripts.contains(&s))
                    {
                        partners.insert(cand);
                    }
                }
            }
            partners.into_iter().map(move |b| (a.clone(), b))
        })
        .collect()
}

fn bootstrap_relation(
    seed: &SeedSet,
    store: &EmbeddingStore,
    vocab: &Vocabulary,
    scripts: &BTreeSet<EditScript>,
    key: RelationKey,
    params: &CombParams,
) -> Result<(SemRelation, RelationTrace)> {
    let seed_rel = build_sem_relation(seed, store, key)?;
    let seed_diffs: Vec<Vec<f64>> = seed_rel
        .support
        .iter()
        .map(|(a, b)| difference(store, a, b).unwrap())
        .collect();
    let seed_pairs: HashSet<&(String, String)> = seed_rel.support.iter().collect();

    let candidates: Vec<((String, String), Vec<f64>)> = relaxed_orth_candidates(vocab, scripts)
        .into_iter()
        .filter(|p| !seed_pairs.contains(p))
        .filter_map(|(a, b)| difference(store, &a, &b).map(|d| ((a, b), d)))
        .collect();

    let mut trace = RelationTrace {
        recomputations: 1,
        ..RelationTrace::default()
    };
    let mut vector = seed_rel.vector.clone();
    let mut accepted = vec![false; candidates.len()];
    let mut semi_diffs: Vec<&[f64]> = Vec::new();
    for iteration in 1..=params.max_iters {
        let seed_refs: Vec<&[f64]> = seed_diffs.iter().map(Vec::as_slice).collect();
        let (_, cutoff_max) = avg_max(&scatter(&vector, &seed_refs));
        let mut added = 0;
        for (i, ((a, b), d)) in candidates.iter().enumerate() {
            if accepted[i] {
                continue;
            }
            if cosine_distance(&vector, d).is_ok_and(|dist| dist <= cutoff_max + CUTOFF_TOLERANCE) {
                accepted[i] = true;
                added += 1;
                semi_diffs.push(d);
                trace.semi_gold.push(SemiGoldPair {
                    source: a.clone(),
                    target: b.clone(),
                    iteration,
                });
            }
        }
        trace.iterations.push(IterationRecord {
            iteration,
            vector: vector.clone(),
            cutoff_max,
            added,
            total: trace.semi_gold.len(),
        });
        if added == 0 {
            break;
        }
        let all: Vec<&[f64]> = seed_refs.iter().copied().chain(semi_diffs.iter().copied()).collect();
        let next = mean(&all, store.dim());
        if norm(&next) == 0.0 {
            log::warn!("relation {key}: enriched vector vanished, keeping previous estimate");
            break;
        }
        vector = next;
        trace.recomputations += 1;
    }

    let mut support = seed_rel.support.clone();
    let mut final_diffs: Vec<&[f64]> = seed_diffs.iter().map(Vec::as_slice).collect();
    if params.final_cutoff == FinalCutoff::SeedAndSemiGold {
        support.extend(trace.semi_gold.iter().map(|p| (p.source.clone(), p.target.clone())));
        final_diffs.extend(semi_diffs.iter().copied());
    }
    let (cutoff_avg, cutoff_max) = avg_max(&scatter(&vector, &final_diffs));
    let rel = SemRelation {
        key,
        vector,
        cutoff_avg,
        cutoff_max,
        support,
    };
    Ok((rel, trace))
}

/// Iteratively enriches every relation's semantic estimate with semi-gold
/// pairs, then tags semantically with the enriched relations. Semi-gold pairs
/// are tagged too.
pub fn comb_bootstrap(
    seed: &SeedSet,
    store: &EmbeddingStore,
    vocab: &Vocabulary,
    orth: &OrthRelations,
    params: &CombParams,
) -> CombOutput {
    let results: Vec<(RelationKey, Result<(SemRelation, RelationTrace)>)> = orth
        .par_iter()
        .map(|(key, rel)| (*key, bootstrap_relation(seed, store, vocab, &rel.scripts, *key, params)))
        .collect();

    let mut out = CombOutput::default();
    for (key, result) in results {
        match result {
            Ok((rel, trace)) => {
                log::info!(
                    "relation {key}: {} semi-gold pair(s) over {} iteration(s)",
                    trace.semi_gold.len(),
                    trace.iterations.len()
                );
                out.relations.insert(key, rel);
                out.traces.insert(key, trace);
            }
            Err(e) => log::warn!("{e}; skipped"),
        }
    }
    out.lexicon = sem_tag(vocab, store, &out.relations, params.neighbor_budget);
    for (key, trace) in &out.traces {
        for p in &trace.semi_gold {
            out.lexicon.insert(&p.source, key.source, Provenance::SemiGold, 1);
            out.lexicon.insert(&p.target, key.target, Provenance::SemiGold, 1);
        }
    }
    out
}

/// Convenience lookup from word to its cells.
pub fn cells_by_word(lexicon: &TaggedLexicon) -> HashMap<&str, BTreeSet<usize>> {
    let mut out: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    for (w, c, _) in lexicon.iter() {
        out.entry(w).or_default().insert(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seedio::{FeatureBundle, InflectionTable};

    fn schema(m: usize) -> ParadigmSchema {
        ParadigmSchema::from_groups(
            (0..m)
                .map(|i| vec![FeatureBundle::new([format!("C{i}")]).unwrap()])
                .collect(),
        )
        .unwrap()
    }

    fn seed(rows: &[&[&str]]) -> SeedSet {
        SeedSet {
            schema: schema(rows[0].len()),
            tables: rows
                .iter()
                .map(|r| InflectionTable {
                    lexeme: r[0].to_string(),
                    forms: r.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        }
    }

    fn script_strings(rel: &OrthRelation) -> Vec<String> {
        rel.scripts.iter().map(|s| format!("{:?}", s.pairs())).collect()
    }

    #[test]
    fn french_relation_scripts() {
        let s = seed(&[&["finis", "finit"], &["bois", "but"], &["parle", "parla"]]);
        let rels = build_orth_relations(&s);
        let rel = &rels[&RelationKey::new(0, 1)];
        let mut got: Vec<Vec<(String, String)>> = rel
            .scripts
            .iter()
            .map(|s| s.pairs().iter().map(|(d, a)| (d.to_string(), a.to_string())).collect())
            .collect();
        got.sort();
        let p = |d: &str, a: &str| vec![(d.to_string(), a.to_string())];
        let mut want = vec![p("s", "t"), p("ois", "ut"), p("e", "a")];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn identical_scripts_collapse() {
        let s = seed(&[&["parle", "parla"], &["aime", "aima"]]);
        let rels = build_orth_relations(&s);
        assert_eq!(rels[&RelationKey::new(0, 1)].scripts.len(), 1);
        let s = seed(&[&["parle", "parla", "parlons"]]);
        for rel in build_orth_relations(&s).values() {
            assert_eq!(rel.scripts.len(), 1, "{:?}", script_strings(rel));
        }
    }

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(coverage_threshold(2), 1);
        assert_eq!(coverage_threshold(3), 1);
        assert_eq!(coverage_threshold(8), 4);
        assert_eq!(coverage_threshold(9), 4);
    }

    #[test]
    fn single_relation_is_not_enough_for_m8() {
        let forms = ["parle", "parla", "parlons", "parlez", "parlent", "parlais", "parlait", "parlions"];
        let s = seed(&[&forms]);
        let rels = build_orth_relations(&s);
        // Only the 0 -> 1 partner exists.
        let vocab = Vocabulary::from_words(["aime", "aima"]);
        let lex = orth_tag(&vocab, &rels, &s.schema, None);
        assert!(!lex.contains("aime", 0));
        // m = 2: one relation suffices.
        let s2 = seed(&[&["parle", "parla"]]);
        let lex = orth_tag(&vocab, &build_orth_relations(&s2), &s2.schema, None);
        assert!(lex.contains("aime", 0));
        assert!(lex.contains("aima", 1));
    }

    #[test]
    fn sem_relation_hand_case() {
        let mut store = EmbeddingStore::new(2);
        store.push("a1", &[2.0, 1.0]).unwrap();
        store.push("b1", &[1.0, 1.0]).unwrap();
        store.push("a2", &[1.0, 2.0]).unwrap();
        store.push("c2", &[1.0, 1.0]).unwrap();
        let s = seed(&[&["a1", "b1"], &["a2", "c2"]]);
        let rel = build_sem_relation(&s, &store, RelationKey::new(0, 1)).unwrap();
        assert_eq!(rel.vector, vec![0.5, 0.5]);
        let want = 1.0 - 1.0 / 2f64.sqrt();
        assert!((rel.cutoff_avg - want).abs() < 1e-12);
        assert!((rel.cutoff_max - want).abs() < 1e-12);

        let single = seed(&[&["a1", "b1"]]);
        let rel = build_sem_relation(&single, &store, RelationKey::new(0, 1)).unwrap();
        assert_eq!(rel.cutoff_avg, 0.0);
        assert_eq!(rel.cutoff_max, 0.0);
    }

    #[test]
    fn unusable_relation() {
        let mut store = EmbeddingStore::new(2);
        store.push("a", &[1.0, 0.0]).unwrap();
        let s = seed(&[&["a", "zz"]]);
        assert!(matches!(
            build_sem_relation(&s, &store, RelationKey::new(0, 1)),
            Err(Error::UnusableRelation { .. })
        ));
    }

    #[test]
    fn semantic_path_ignores_spelling() {
        let mut store = EmbeddingStore::new(2);
        store.push("sa", &[3.0, 1.0]).unwrap();
        store.push("sb", &[1.0, 1.0]).unwrap();
        store.push("qqq", &[2.0, 5.0]).unwrap();
        store.push("zrt", &[0.0, 5.0]).unwrap();
        store.push("off", &[0.0, 4.0]).unwrap();
        let s = seed(&[&["sa", "sb"]]);
        let mut rels = SemRelations::new();
        rels.insert(RelationKey::new(0, 1), build_sem_relation(&s, &store, RelationKey::new(0, 1)).unwrap());
        let vocab = Vocabulary::from_words(["sa", "sb", "qqq", "zrt", "off"]);
        let lex = sem_tag(&vocab, &store, &rels, 10);
        assert!(lex.contains("sa", 0) && lex.contains("sb", 1));
        assert!(lex.contains("qqq", 0) && lex.contains("zrt", 1));
        assert!(!lex.contains("off", 1));
        assert_eq!(lex.get("qqq", 0).unwrap().provenance, Provenance::Sem);
    }

    #[test]
    fn zero_cutoff_rejects_other_directions() {
        let mut store = EmbeddingStore::new(2);
        store.push("sa", &[3.0, 1.0]).unwrap();
        store.push("sb", &[1.0, 1.0]).unwrap();
        store.push("x", &[2.0, 5.0]).unwrap();
        store.push("y", &[0.0, 5.1]).unwrap();
        let s = seed(&[&["sa", "sb"]]);
        let mut rels = SemRelations::new();
        rels.insert(RelationKey::new(0, 1), build_sem_relation(&s, &store, RelationKey::new(0, 1)).unwrap());
        let lex = sem_tag(&Vocabulary::from_words(["sa", "sb", "x", "y"]), &store, &rels, 10);
        assert!(!lex.contains("x", 0));
        assert!(lex.contains("sa", 0));
    }

    #[test]
    fn lexicon_provenance_precedence() {
        let mut lex = TaggedLexicon::new();
        lex.insert("a", 0, Provenance::Sem, 1);
        lex.insert("a", 0, Provenance::Sem, 1);
        assert_eq!(lex.get("a", 0).unwrap().evidence, 2);
        lex.insert("a", 0, Provenance::SemiGold, 1);
        assert_eq!(lex.get("a", 0).unwrap().provenance, Provenance::SemiGold);
        lex.insert("a", 0, Provenance::Orth, 4);
        assert_eq!(lex.get("a", 0).unwrap(), Tag { provenance: Provenance::SemiGold, evidence: 1 });
        assert_eq!(lex.len(), 1);

        let f = tempfile::NamedTempFile::new().unwrap();
        lex.insert("b", 2, Provenance::Orth, 3);
        lex.write(f.path()).unwrap();
        assert_eq!(std::fs::read_to_string(f.path()).unwrap(), "a\t0\tsemi-gold\t1\nb\t2\torth\t3\n");
        assert_eq!(TaggedLexicon::read(f.path()).unwrap(), lex);
    }
}
