//! Inflection tables: UniMorph parsing, syncretism merging, seed selection.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::editscript::{edit_script, EditScript};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};

/// A set of inflectional tags, kept sorted so equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureBundle(Vec<String>);

impl FeatureBundle {
    pub fn new<I, S>(tags: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: BTreeSet<String> = tags
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty())
            .collect();
        (!tags.is_empty()).then(|| FeatureBundle(tags.into_iter().collect()))
    }

    pub fn tags(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for FeatureBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(";"))
    }
}

impl FromStr for FeatureBundle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureBundle::new(s.split(';').map(str::trim)).ok_or_else(|| Error::UnknownBundle(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParadigmCell {
    pub id: usize,
    pub bundles: Vec<FeatureBundle>,
}

impl ParadigmCell {
    /// Bundles joined by `|`, each rendered as semicolon-joined tags.
    pub fn label(&self) -> String {
        self.bundles
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParadigmSchema {
    cells: Vec<ParadigmCell>,
    by_bundle: HashMap<FeatureBundle, usize>,
}

impl ParadigmSchema {
    /// Builds a schema whose cell `i` carries `groups[i]`. Bundles must not
    /// repeat across cells.
    pub fn from_groups(groups: Vec<Vec<FeatureBundle>>) -> Result<Self> {
        let mut by_bundle = HashMap::new();
        let mut cells = Vec::with_capacity(groups.len());
        for (id, bundles) in groups.into_iter().enumerate() {
            if bundles.is_empty() {
                return Err(Error::Config(format!("cell {id} has no feature bundle")));
            }
            for b in &bundles {
                if by_bundle.insert(b.clone(), id).is_some() {
                    return Err(Error::Config(format!("bundle {b} appears in two cells")));
                }
            }
            cells.push(ParadigmCell { id, bundles });
        }
        Ok(ParadigmSchema { cells, by_bundle })
    }

    pub fn m(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[ParadigmCell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> &ParadigmCell {
        &self.cells[id]
    }

    pub fn cell_of_bundle(&self, bundle: &FeatureBundle) -> Option<usize> {
        self.by_bundle.get(bundle).copied()
    }

    /// Resolves a `|`-joined cell label (or any single bundle of it).
    pub fn cell_of_label(&self, label: &str) -> Result<usize> {
        let mut found = None;
        for part in label.split('|') {
            let bundle: FeatureBundle = part.parse()?;
            let id = self
                .cell_of_bundle(&bundle)
                .ok_or_else(|| Error::UnknownBundle(label.to_string()))?;
            if found.is_some_and(|f| f != id) {
                return Err(Error::UnknownBundle(label.to_string()));
            }
            found = Some(id);
        }
        found.ok_or_else(|| Error::UnknownBundle(label.to_string()))
    }

    pub fn bundle_count(&self) -> usize {
        self.cells.iter().map(|c| c.bundles.len()).sum()
    }

    /// One line per cell: `cell_id<TAB>bundle1|bundle2|...`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for cell in &self.cells {
            writeln!(w, "{}\t{}", cell.id, cell.label()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut groups = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (id, label) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `id<TAB>bundles`".into()))?;
            if id.parse::<usize>().ok() != Some(groups.len()) {
                return Err(bad(format!("expected cell id {}", groups.len())));
            }
            let bundles = label
                .split('|')
                .map(str::parse)
                .collect::<Result<Vec<FeatureBundle>>>()
                .map_err(|e| bad(e.to_string()))?;
            groups.push(bundles);
        }
        ParadigmSchema::from_groups(groups)
    }
}

/// Forms of one lexeme, indexed by cell id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflectionTable {
    pub lexeme: String,
    pub forms: Vec<String>,
}

impl InflectionTable {
    pub fn form(&self, cell: usize) -> &str {
        &self.forms[cell]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pub schema: ParadigmSchema,
    pub tables: Vec<InflectionTable>,
}

impl SeedSet {
    pub fn n(&self) -> usize {
        self.tables.len()
    }
}

/// Ordered pair of distinct cells `(source, target)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationKey {
    pub source: usize,
    pub target: usize,
}

impl RelationKey {
    pub fn new(source: usize, target: usize) -> Self {
        debug_assert_ne!(source, target);
        RelationKey { source, target }
    }
}

impl fmt::Display for RelationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.source, self.target)
    }
}

/// One UniMorph line: lemma, form, feature bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub lemma: String,
    pub form: String,
    pub bundle: FeatureBundle,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedUnimorph {
    pub triples: Vec<Triple>,
    /// 1-based line numbers of malformed lines.
    pub skipped: Vec<usize>,
}

pub fn parse_unimorph_str(text: &str) -> ParsedUnimorph {
    let mut out = ParsedUnimorph::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = match cols[..] {
            [lemma, form, tags] if !lemma.is_empty() && !form.is_empty() => {
                tags.parse::<FeatureBundle>().ok().map(|bundle| Triple {
                    lemma: lemma.to_string(),
                    form: form.to_string(),
                    bundle,
                })
            }
            _ => None,
        };
        match parsed {
            Some(t) => out.triples.push(t),
            None => {
                log::warn!("line {}: malformed UniMorph entry skipped", i + 1);
                out.skipped.push(i + 1);
            }
        }
    }
    out
}

/// Reads `lemma<TAB>form<TAB>TAG;TAG;...` lines, skipping malformed ones.
pub fn parse_unimorph(path: &Path) -> Result<ParsedUnimorph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_unimorph_str(&text))
}

pub fn write_unimorph(triples: &[Triple], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.lemma, t.form, t.bundle).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Flattens tables back into triples, one per bundle, in cell order.
pub fn tables_to_triples(schema: &ParadigmSchema, tables: &[InflectionTable]) -> Vec<Triple> {
    let mut out = Vec::new();
    for t in tables {
        for cell in schema.cells() {
            for bundle in &cell.bundles {
                out.push(Triple {
                    lemma: t.lexeme.clone(),
                    form: t.forms[cell.id].clone(),
                    bundle: bundle.clone(),
                });
            }
        }
    }
    out
}

/// Lexemes in first-appearance order, each with its bundle → form map
/// (first form wins for repeated bundles).
fn group_by_lemma(triples: &[Triple]) -> (Vec<&str>, HashMap<&str, HashMap<&FeatureBundle, &str>>) {
    let mut order = Vec::new();
    let mut map: HashMap<&str, HashMap<&FeatureBundle, &str>> = HashMap::new();
    for t in triples {
        let entry = map.entry(t.lemma.as_str()).or_insert_with(|| {
            order.push(t.lemma.as_str());
            HashMap::new()
        });
        entry.entry(&t.bundle).or_insert(t.form.as_str());
    }
    (order, map)
}

fn bundle_universe(triples: &[Triple], keep: impl Fn(&str) -> bool) -> Vec<&FeatureBundle> {
    let mut seen = std::collections::HashSet::new();
    triples
        .iter()
        .filter(|t| keep(&t.lemma))
        .filter(|t| seen.insert(&t.bundle))
        .map(|t| &t.bundle)
        .collect()
}

/// Regroups triples into tables over an existing schema, in first-seen
/// lemma order. Every lemma must realize every cell.
pub fn tables_from_triples(triples: &[Triple], schema: &ParadigmSchema) -> Result<Vec<InflectionTable>> {
    let (order, by_lemma) = group_by_lemma(triples);
    order
        .iter()
        .map(|&lemma| {
            let forms = schema
                .cells()
                .iter()
                .map(|cell| {
                    cell.bundles
                        .iter()
                        .find_map(|b| by_lemma[lemma].get(b))
                        .map(|f| f.to_string())
                        .ok_or_else(|| Error::MissingCell {
                            lexeme: lemma.to_string(),
                            bundle: cell.label(),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(InflectionTable {
                lexeme: lemma.to_string(),
                forms,
            })
        })
        .collect()
}

/// Builds the paradigm schema over `lexemes`, merging bundles whose forms
/// agree in every selected lexeme, and returns the tables over it.
pub fn build_schema(triples: &[Triple], lexemes: &[String]) -> Result<(ParadigmSchema, Vec<InflectionTable>)> {
    let (_, by_lemma) = group_by_lemma(triples);
    let selected: std::collections::HashSet<&str> = lexemes.iter().map(String::as_str).collect();
    let universe = bundle_universe(triples, |l| selected.contains(l));

    // Column of forms per bundle, in lexeme order.
    let mut columns: Vec<Vec<&str>> = Vec::with_capacity(universe.len());
    for bundle in &universe {
        let mut column = Vec::with_capacity(lexemes.len());
        for lex in lexemes {
            let form = by_lemma
                .get(lex.as_str())
                .and_then(|forms| forms.get(bundle))
                .ok_or_else(|| Error::MissingCell {
                    lexeme: lex.clone(),
                    bundle: bundle.to_string(),
                })?;
            column.push(*form);
        }
        columns.push(column);
    }

    let mut group_of: HashMap<&[&str], usize> = HashMap::new();
    let mut groups: Vec<Vec<FeatureBundle>> = Vec::new();
    let mut group_columns: Vec<&[&str]> = Vec::new();
    for (bundle, column) in universe.iter().zip(&columns) {
        match group_of.get(column.as_slice()) {
            Some(&g) => groups[g].push((*bundle).clone()),
            None => {
                group_of.insert(column.as_slice(), groups.len());
                groups.push(vec![(*bundle).clone()]);
                group_columns.push(column.as_slice());
            }
        }
    }
    if groups.len() < 2 {
        return Err(Error::SchemaTooSmall(groups.len()));
    }

    let tables = lexemes
        .iter()
        .enumerate()
        .map(|(li, lex)| InflectionTable {
            lexeme: lex.clone(),
            forms: group_columns.iter().map(|col| col[li].to_string()).collect(),
        })
        .collect();
    Ok((ParadigmSchema::from_groups(groups)?, tables))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedStrategy {
    Frequency,
    #[default]
    FrequencyDiverse,
}

impl FromStr for SeedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(SeedStrategy::Frequency),
            "frequency+diverse" | "diverse" => Ok(SeedStrategy::FrequencyDiverse),
            _ => Err(Error::Config(format!("unknown seed strategy {s:?}"))),
        }
    }
}

/// Picks `n` complete tables, preferring lexemes with more forms in the
/// embedding store (ties: lower summed rank, then lemma order).
pub fn select_seed(
    triples: &[Triple],
    store: &EmbeddingStore,
    n: usize,
    strategy: SeedStrategy,
) -> Result<SeedSet> {
    let (order, by_lemma) = group_by_lemma(triples);
    let universe = bundle_universe(triples, |_| true);

    struct Candidate<'a> {
        lemma: &'a str,
        in_store: usize,
        rank_sum: usize,
    }
    let mut candidates: Vec<Candidate> = order
        .iter()
        .filter(|l| universe.iter().all(|b| by_lemma[*l].contains_key(b)))
        .map(|&lemma| {
            let forms: BTreeSet<&str> = by_lemma[lemma].values().copied().collect();
            let ranks: Vec<usize> = forms.iter().filter_map(|f| store.rank(f)).collect();
            Candidate {
                lemma,
                in_store: ranks.len(),
                rank_sum: ranks.iter().sum(),
            }
        })
        .collect();
    if candidates.len() < n {
        return Err(Error::NotEnoughTables {
            requested: n,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|a, b| {
        b.in_store
            .cmp(&a.in_store)
            .then(a.rank_sum.cmp(&b.rank_sum))
            .then(a.lemma.cmp(b.lemma))
    });

    let chosen: Vec<String> = match strategy {
        SeedStrategy::Frequency => candidates.iter().take(n).map(|c| c.lemma.to_string()).collect(),
        SeedStrategy::FrequencyDiverse => {
            let signature = |lemma: &str| -> BTreeSet<EditScript> {
                by_lemma[lemma]
                    .values()
                    .filter_map(|form| edit_script(lemma, form).ok())
                    .collect()
            };
            let mut seen: Vec<BTreeSet<EditScript>> = Vec::new();
            let mut chosen = Vec::new();
            let mut skipped = Vec::new();
            for c in &candidates {
                if chosen.len() == n {
                    break;
                }
                let sig = signature(c.lemma);
                if seen.contains(&sig) {
                    skipped.push(c.lemma);
                } else {
                    seen.push(sig);
                    chosen.push(c.lemma);
                }
            }
            // Not enough distinct signatures: top up in frequency order.
            chosen.extend(skipped.into_iter().take(n - chosen.len()));
            let rank_of: HashMap<&str, usize> =
                candidates.iter().enumerate().map(|(i, c)| (c.lemma, i)).collect();
            chosen.sort_by_key(|l| rank_of[l]);
            chosen.into_iter().map(str::to_string).collect()
        }
    };
    let (schema, tables) = build_schema(triples, &chosen)?;
    Ok(SeedSet { schema, tables })
}

/// All `m(m-1)` ordered cell pairs, source-major.
pub fn enumerate_relations(schema: &ParadigmSchema) -> Vec<RelationKey> {
    let m = schema.m();
    (0..m)
        .flat_map(|s| (0..m).filter(move |&t| t != s).map(move |t| RelationKey::new(s, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fb(s: &str) -> FeatureBundle {
        s.parse().unwrap()
    }

    fn triples(rows: &[(&str, &str, &str)]) -> Vec<Triple> {
        rows.iter()
            .map(|(l, f, b)| Triple {
                lemma: l.to_string(),
                form: f.to_string(),
                bundle: fb(b),
            })
            .collect()
    }

    fn english(lemmas: &[(&str, &str, &str, &str)]) -> Vec<Triple> {
        let mut rows = Vec::new();
        for (lemma, s3, pst, ptcp) in lemmas {
            rows.push((*lemma, *lemma, "V;NFIN"));
            rows.push((*lemma, *s3, "V;3;SG;PRS"));
            rows.push((*lemma, *pst, "V;PST"));
            rows.push((*lemma, *ptcp, "V;V.PTCP;PST"));
        }
        triples(&rows)
    }

    #[test]
    fn parse_lines() {
        let p = parse_unimorph_str("parler\tparle\tV;IND;PRS;1;SG\nbad\tline\n\n");
        assert_eq!(p.triples.len(), 1);
        assert_eq!(p.triples[0].lemma, "parler");
        assert_eq!(p.triples[0].form, "parle");
        assert_eq!(p.triples[0].bundle, fb("V;IND;PRS;1;SG"));
        assert_eq!(p.triples[0].bundle.tags(), ["1", "IND", "PRS", "SG", "V"]);
        assert_eq!(p.skipped, vec![2]);
        assert_eq!(parse_unimorph_str(""), ParsedUnimorph::default());
    }

    #[test]
    fn syncretic_cells_merge() {
        let t = english(&[
            ("walk", "walks", "walked", "walked"),
            ("play", "plays", "played", "played"),
            ("call", "calls", "called", "called"),
            ("look", "looks", "looked", "looked"),
            ("want", "wants", "wanted", "wanted"),
        ]);
        let lex: Vec<String> = ["walk", "play", "call", "look", "want"].map(String::from).to_vec();
        let (schema, tables) = build_schema(&t, &lex).unwrap();
        assert_eq!(schema.m(), 3);
        assert_eq!(schema.cell(2).bundles, vec![fb("V;PST"), fb("V;V.PTCP;PST")]);
        assert_eq!(schema.cell(2).label(), "PST;V|PST;V;V.PTCP");
        assert_eq!(tables[0].forms, ["walk", "walks", "walked"]);
        assert_eq!(schema.bundle_count(), 4);
    }

    #[test]
    fn one_disagreement_blocks_merge() {
        let t = english(&[("walk", "walks", "walked", "walked"), ("sing", "sings", "sang", "sung")]);
        let lex: Vec<String> = ["walk", "sing"].map(String::from).to_vec();
        let (schema, _) = build_schema(&t, &lex).unwrap();
        assert_eq!(schema.m(), 4);
    }

    #[test]
    fn single_lexeme_distinct_forms() {
        let t = english(&[("sing", "sings", "sang", "sung")]);
        let (schema, _) = build_schema(&t, &["sing".to_string()]).unwrap();
        assert_eq!(schema.m(), 4);
    }

    #[test]
    fn missing_cell_reported() {
        let mut t = english(&[("walk", "walks", "walked", "walked"), ("sing", "sings", "sang", "sung")]);
        t.retain(|x| !(x.lemma == "sing" && x.bundle == fb("V;PST")));
        let lex: Vec<String> = ["walk", "sing"].map(String::from).to_vec();
        match build_schema(&t, &lex) {
            Err(Error::MissingCell { lexeme, bundle }) => {
                assert_eq!(lexeme, "sing");
                assert_eq!(bundle, "PST;V");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_rebuild_is_fixpoint() {
        let t = english(&[("walk", "walks", "walked", "walked"), ("play", "plays", "played", "played")]);
        let lex: Vec<String> = ["walk", "play"].map(String::from).to_vec();
        let (schema, tables) = build_schema(&t, &lex).unwrap();
        let again = tables_to_triples(&schema, &tables);
        let (schema2, tables2) = build_schema(&again, &lex).unwrap();
        assert_eq!(schema, schema2);
        assert_eq!(tables, tables2);
    }

    fn store_with(words: &[&str]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(1);
        for w in words {
            s.push(w, &[1.0]).unwrap();
        }
        s
    }

    #[test]
    fn frequency_seed_prefers_in_vocabulary_tables() {
        let t = english(&[
            ("walk", "walks", "walked", "walked"),
            ("sing", "sings", "sang", "sung"),
            ("go", "goes", "went", "gone"),
        ]);
        let store = store_with(&["go", "goes", "went", "gone", "sing", "sang", "walk"]);
        let seed = select_seed(&t, &store, 2, SeedStrategy::Frequency).unwrap();
        let lex: Vec<&str> = seed.tables.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["go", "sing"]);
        assert!(matches!(
            select_seed(&t, &store, 4, SeedStrategy::Frequency),
            Err(Error::NotEnoughTables { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn diverse_seed_skips_duplicate_signatures() {
        let t = english(&[
            ("walk", "walks", "walked", "walked"),
            ("talk", "talks", "talked", "talked"),
            ("sing", "sings", "sang", "sung"),
        ]);
        let store = store_with(&["walk", "walks", "walked", "talk", "talks", "talked", "sing"]);
        let seed = select_seed(&t, &store, 2, SeedStrategy::FrequencyDiverse).unwrap();
        let lex: Vec<&str> = seed.tables.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["walk", "sing"]);
        let freq = select_seed(&t, &store, 2, SeedStrategy::Frequency).unwrap();
        assert_eq!(freq.tables[1].lexeme, "talk");
        // Fallback when distinct signatures run out.
        let seed = select_seed(&t, &store, 3, SeedStrategy::FrequencyDiverse).unwrap();
        assert_eq!(seed.n(), 3);
        assert_eq!(seed, select_seed(&t, &store, 3, SeedStrategy::FrequencyDiverse).unwrap());
    }

    #[test]
    fn relations() {
        let schema = |m: usize| {
            ParadigmSchema::from_groups((0..m).map(|i| vec![fb(&format!("C{i}"))]).collect()).unwrap()
        };
        assert_eq!(
            enumerate_relations(&schema(2)),
            vec![RelationKey::new(0, 1), RelationKey::new(1, 0)]
        );
        assert_eq!(enumerate_relations(&schema(3)).len(), 6);
        assert!(enumerate_relations(&schema(1)).is_empty());
    }

    #[test]
    fn schema_file_round_trip() {
        let schema = ParadigmSchema::from_groups(vec![
            vec![fb("V;NFIN")],
            vec![fb("V;PST"), fb("V;V.PTCP;PST")],
        ])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        schema.write(f.path()).unwrap();
        assert_eq!(std::fs::read_to_string(f.path()).unwrap(), "0\tNFIN;V\n1\tPST;V|PST;V;V.PTCP\n");
        assert_eq!(ParadigmSchema::read(f.path()).unwrap(), schema);
        assert_eq!(schema.cell_of_label("V;PST").unwrap(), 1);
        assert_eq!(schema.cell_of_label("PST;V|PST;V;V.PTCP").unwrap(), 1);
        assert!(schema.cell_of_label("V;FUT").is_err());
    }
}
