//! Synthetic suffixal languages with additive embeddings, for end-to-end tests.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::seedio::{write_unimorph, FeatureBundle, InflectionTable, Triple};

const MIN_STEM: usize = 3;
const MAX_STEM: usize = 6;

/// Vowel groups for harmony; a stem's last vowel picks the alternant set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Harmony {
    pub back: String,
    pub front: String,
}

impl Harmony {
    fn is_front(&self, stem: &str) -> bool {
        stem.chars()
            .rev()
            .find(|c| self.back.contains(*c) || self.front.contains(*c))
            .is_some_and(|c| self.front.contains(c))
    }
}

/// Suffix per cell; `front` holds the alternants used under harmony.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub suffixes: Vec<String>,
    pub front: Option<Vec<String>>,
}

impl ClassSpec {
    pub fn new<S: AsRef<str>>(suffixes: &[S]) -> Self {
        ClassSpec {
            suffixes: suffixes.iter().map(|s| s.as_ref().to_string()).collect(),
            front: None,
        }
    }

    pub fn with_front<S: AsRef<str>>(mut self, front: &[S]) -> Self {
        self.front = Some(front.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub classes: Vec<ClassSpec>,
    pub lexeme_count: usize,
    /// Lexemes withheld from the exported UniMorph file for evaluation.
    pub heldout: usize,
    /// Classes whose lexemes appear in the exported UniMorph file; `None` = all.
    pub attested_classes: Option<Vec<usize>>,
    pub stem_alphabet: String,
    pub harmony: Option<Harmony>,
    pub embed_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// One class, six cells, no harmony.
    pub fn regular() -> Self {
        SynthSpec {
            m: 6,
            classes: vec![ClassSpec::new(&["ar", "o", "as", "a", "amos", "an"])],
            lexeme_count: 300,
            heldout: 50,
            attested_classes: None,
            stem_alphabet: "bcdfgklmnprstvz".to_string() + "aeiou",
            harmony: None,
            embed_dim: 32,
            noise_sigma: 0.05,
            seed: 1,
        }
    }

    /// Three classes sharing cell semantics; only the first two are attested.
    pub fn unattested() -> Self {
        SynthSpec {
            classes: vec![
                ClassSpec::new(&["ar", "o", "as", "a", "amos", "an"]),
                ClassSpec::new(&["er", "o", "es", "e", "emos", "en"]),
                ClassSpec::new(&["ur", "uk", "ust", "ut", "umus", "unt"]),
            ],
            attested_classes: Some(vec![0, 1]),
            heldout: 60,
            ..SynthSpec::regular()
        }
    }

    /// One class with back/front suffix alternants.
    pub fn harmony() -> Self {
        SynthSpec {
            classes: vec![ClassSpec::new(&["a", "an", "assa", "alla", "aksi", "ana"])
                .with_front(&["ä", "än", "ässä", "ällä", "äksi", "änä"])],
            harmony: Some(Harmony {
                back: "aou".into(),
                front: "äöy".into(),
            }),
            stem_alphabet: "kltmnprsv".to_string() + "aouäöy",
            ..SynthSpec::regular()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "regular" => Ok(Self::regular()),
            "unattested" => Ok(Self::unattested()),
            "harmony" => Ok(Self::harmony()),
            _ => Err(Error::InvalidSynthSpec(format!("unknown preset {name:?}"))),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSynthSpec(msg));
        if self.m < 2 {
            return bad(format!("need at least 2 cells, got {}", self.m));
        }
        if self.classes.is_empty() {
            return bad("no classes".into());
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        if self.heldout > self.lexeme_count {
            return bad("more held-out lexemes than lexemes".into());
        }
        if self.stem_alphabet.is_empty() {
            return bad("empty stem alphabet".into());
        }
        for (i, class) in self.classes.iter().enumerate() {
            let mut sets = vec![&class.suffixes];
            match (&class.front, &self.harmony) {
                (Some(front), Some(_)) => sets.push(front),
                (None, Some(_)) => return bad(format!("class {i} lacks front alternants")),
                _ => {}
            }
            for set in sets {
                if set.len() != self.m {
                    return bad(format!("class {i} defines {} suffixes for {} cells", set.len(), self.m));
                }
                if set.iter().collect::<HashSet<_>>().len() != self.m {
                    return bad(format!("class {i} repeats a suffix"));
                }
            }
        }
        if let Some(attested) = &self.attested_classes {
            if let Some(c) = attested.iter().find(|&&c| c >= self.classes.len()) {
                return bad(format!("attested class {c} does not exist"));
            }
        }
        Ok(())
    }
}

/// Feature bundle naming synthetic cell `cell`.
pub fn cell_bundle(cell: usize) -> FeatureBundle {
    FeatureBundle::new(["V".to_string(), format!("C{cell}")]).expect("nonempty bundle")
}

#[derive(Debug, Clone)]
pub struct SynthLanguage {
    /// Gold tables; the lexeme name is its cell-0 form.
    pub tables: Vec<InflectionTable>,
    pub class_of: BTreeMap<String, usize>,
    pub store: EmbeddingStore,
    pub heldout: BTreeSet<String>,
    pub attested_classes: Option<Vec<usize>>,
}

impl SynthLanguage {
    pub fn m(&self) -> usize {
        self.tables.first().map_or(0, |t| t.forms.len())
    }

    /// Gold cell of every generated form.
    pub fn gold_cells(&self) -> BTreeMap<String, usize> {
        self.tables
            .iter()
            .flat_map(|t| t.forms.iter().enumerate().map(|(c, f)| (f.clone(), c)))
            .collect()
    }

    fn is_attested(&self, lexeme: &str) -> bool {
        self.attested_classes
            .as_ref()
            .is_none_or(|a| a.contains(&self.class_of[lexeme]))
    }

    fn triples<'a>(&'a self, keep: impl Fn(&InflectionTable) -> bool + 'a) -> Vec<Triple> {
        self.tables
            .iter()
            .filter(|t| keep(t))
            .flat_map(|t| {
                t.forms.iter().enumerate().map(|(c, f)| Triple {
                    lemma: t.lexeme.clone(),
                    form: f.clone(),
                    bundle: cell_bundle(c),
                })
            })
            .collect()
    }

    /// Attested, non-held-out lexemes.
    pub fn training_triples(&self) -> Vec<Triple> {
        self.triples(|t| !self.heldout.contains(&t.lexeme) && self.is_attested(&t.lexeme))
    }

    pub fn heldout_triples(&self) -> Vec<Triple> {
        self.triples(|t| self.heldout.contains(&t.lexeme))
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn stem_capacity(alphabet: usize) -> f64 {
    (MIN_STEM..=MAX_STEM).map(|l| (alphabet as f64).powi(l as i32)).sum()
}

pub fn generate_language(spec: &SynthSpec) -> Result<SynthLanguage> {
    spec.validate()?;
    let letters: Vec<char> = spec.stem_alphabet.chars().collect();
    if stem_capacity(letters.len()) < spec.lexeme_count as f64 {
        return Err(Error::InvalidSynthSpec(format!(
            "alphabet of {} letters cannot yield {} distinct stems",
            letters.len(),
            spec.lexeme_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut forms_seen: HashSet<String> = HashSet::new();
    let mut stems: HashSet<String> = HashSet::new();
    let mut tables = Vec::with_capacity(spec.lexeme_count);
    let mut class_of = BTreeMap::new();
    let max_attempts = 1000 * spec.lexeme_count.max(1);
    let mut attempts = 0;
    while tables.len() < spec.lexeme_count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidSynthSpec(format!(
                "could not draw {} distinct stems with unique forms",
                spec.lexeme_count
            )));
        }
        let len = rng.random_range(MIN_STEM..=MAX_STEM);
        let stem: String = (0..len).map(|_| letters[rng.random_range(0..letters.len())]).collect();
        let class = tables.len() % spec.classes.len();
        if stems.contains(&stem) {
            continue;
        }
        let cs = &spec.classes[class];
        let suffixes = match (&spec.harmony, &cs.front) {
            (Some(h), Some(front)) if h.is_front(&stem) => front,
            _ => &cs.suffixes,
        };
        let forms: Vec<String> = suffixes.iter().map(|s| format!("{stem}{s}")).collect();
        if forms.iter().any(|f| forms_seen.contains(f)) {
            continue;
        }
        forms_seen.extend(forms.iter().cloned());
        stems.insert(stem);
        class_of.insert(forms[0].clone(), class);
        tables.push(InflectionTable {
            lexeme: forms[0].clone(),
            forms,
        });
    }

    let offsets: Vec<Vec<f64>> = (0..spec.m).map(|_| unit_vector(&mut rng, spec.embed_dim)).collect();
    let mut entries: Vec<(String, Vec<f64>)> = Vec::with_capacity(spec.lexeme_count * spec.m);
    for table in &tables {
        let base = unit_vector(&mut rng, spec.embed_dim);
        for (cell, form) in table.forms.iter().enumerate() {
            let v: Vec<f64> = base
                .iter()
                .zip(&offsets[cell])
                .map(|(b, o)| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    b + o + spec.noise_sigma * noise
                })
                .collect();
            entries.push((form.clone(), v));
        }
    }
    entries.shuffle(&mut rng);
    let mut store = EmbeddingStore::new(spec.embed_dim);
    for (w, v) in &entries {
        store.push(w, v)?;
    }

    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.shuffle(&mut rng);
    let heldout = order[..spec.heldout].iter().map(|&i| tables[i].lexeme.clone()).collect();

    Ok(SynthLanguage {
        tables,
        class_of,
        store,
        heldout,
        attested_classes: spec.attested_classes.clone(),
    })
}

/// File locations written by [`export_gold`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPaths {
    pub unimorph: PathBuf,
    pub test: PathBuf,
    pub embeddings: PathBuf,
    pub gold: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        SynthPaths {
            unimorph: dir.join("unimorph.tsv"),
            test: dir.join("test.tsv"),
            embeddings: dir.join("embeddings.txt"),
            gold: dir.join("gold.tsv"),
        }
    }
}

/// Writes training UniMorph triples, held-out triples, the embedding file,
/// and gold tags (`form<TAB>bundle`).
pub fn export_gold(lang: &SynthLanguage, paths: &SynthPaths) -> Result<()> {
    write_unimorph(&lang.training_triples(), &paths.unimorph)?;
    write_unimorph(&lang.heldout_triples(), &paths.test)?;
    lang.store.write(&paths.embeddings)?;
    let path = &paths.gold;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (form, cell) in lang.gold_cells() {
        writeln!(w, "{form}\t{}", cell_bundle(cell)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a gold file as `form -> bundles`.
pub fn read_gold(path: &Path) -> Result<BTreeMap<String, BTreeSet<FeatureBundle>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: BTreeMap<String, BTreeSet<FeatureBundle>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(w, b)| b.parse::<FeatureBundle>().ok().map(|b| (w, b)));
        let Some((word, bundle)) = parsed else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected form<TAB>bundle".into(),
            });
        };
        out.entry(word.to_string()).or_default().insert(bundle);
    }
    Ok(out)
}
