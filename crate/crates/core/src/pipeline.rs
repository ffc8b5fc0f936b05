//! Stage orchestration over files, driven by a `key = value` configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::embedding::{filter_vocabulary, load_embeddings, Alphabet, EmbeddingStore, Vocabulary};
use crate::error::{Error, Result};
use crate::evaluation::{per_cell_breakdown, tagging_metrics, EvalReport, GoldTags, Prediction};
use crate::inflector::{train_rules, RuleModel};
use crate::pairing::{bin_tagged, emit_dataset, pair_bins, read_dataset, Distance, Metric};
use crate::seedio::{
    parse_unimorph, select_seed, tables_from_triples, tables_to_triples, write_unimorph, ParadigmSchema, RelationKey,
    SeedSet, SeedStrategy, Triple,
};
use crate::synth::{export_gold, generate_language, read_gold, SynthLanguage, SynthPaths, SynthSpec};
use crate::tagging::{
    build_orth_relations, build_sem_relations, comb_bootstrap, orth_tag, sem_tag, CombParams, FinalCutoff,
    RelationTrace, TaggedLexicon,
};

pub const VOCAB_FILE: &str = "vocab.txt";
pub const SEED_FILE: &str = "seed.tsv";
pub const SCHEMA_FILE: &str = "schema.tsv";
pub const TAGGED_FILE: &str = "tagged.tsv";
pub const SEMI_GOLD_FILE: &str = "semi_gold.tsv";
pub const DATASET_FILE: &str = "dataset.tsv";
pub const MODEL_FILE: &str = "model.tsv";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const REPORT_FILE: &str = "report.tsv";
pub const SERIES_FILE: &str = "series.tsv";

/// Vocabulary cap used by the orthographic variant unless overridden.
pub const ORTH_VOCAB_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Orth,
    Sem,
    Comb,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Orth => "orth",
            Variant::Sem => "sem",
            Variant::Comb => "comb",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orth" => Ok(Variant::Orth),
            "sem" => Ok(Variant::Sem),
            "comb" => Ok(Variant::Comb),
            _ => Err(Error::Config(format!("unknown variant {s:?} (expected orth, sem or comb)"))),
        }
    }
}

impl Variant {
    pub fn default_metric(self) -> Metric {
        match self {
            Variant::Orth => Metric::Levenshtein,
            Variant::Sem | Variant::Comb => Metric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VocabCap {
    /// 200k words for orth, unlimited otherwise.
    #[default]
    VariantDefault,
    Unlimited,
    Words(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub embeddings: Option<PathBuf>,
    pub unimorph: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub output: PathBuf,
    pub embed_limit: Option<usize>,
    pub letters: Option<String>,
    pub vowels: Option<String>,
    pub n: usize,
    pub seed_strategy: SeedStrategy,
    pub variant: Variant,
    pub vocab_cap: VocabCap,
    pub threshold: Option<usize>,
    pub neighbor_budget: usize,
    pub max_iters: usize,
    pub final_cutoff: FinalCutoff,
    pub metric: Option<Metric>,
    pub dataset_cap: usize,
    pub max_suffix: usize,
    pub seed: u64,
    pub synth_preset: String,
    pub synth_lexemes: Option<usize>,
    pub synth_heldout: Option<usize>,
    pub synth_sigma: Option<f64>,
    pub synth_dim: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embeddings: None,
            unimorph: None,
            test: None,
            gold: None,
            output: PathBuf::from("out"),
            embed_limit: None,
            letters: None,
            vowels: None,
            n: 5,
            seed_strategy: SeedStrategy::default(),
            variant: Variant::default(),
            vocab_cap: VocabCap::default(),
            threshold: None,
            neighbor_budget: 20,
            max_iters: 10,
            final_cutoff: FinalCutoff::default(),
            metric: None,
            dataset_cap: 10_000,
            max_suffix: crate::inflector::DEFAULT_MAX_SUFFIX,
            seed: 0,
            synth_preset: "regular".into(),
            synth_lexemes: None,
            synth_heldout: None,
            synth_sigma: None,
            synth_dim: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn optional(value: &str) -> Option<&str> {
    (!matches!(value, "" | "none")).then_some(value)
}

impl PipelineConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = |v: &str| optional(v).map(PathBuf::from);
        match key {
            "embeddings" => self.embeddings = path(value),
            "unimorph" => self.unimorph = path(value),
            "test" => self.test = path(value),
            "gold" => self.gold = path(value),
            "output" => self.output = PathBuf::from(value),
            "embed_limit" => self.embed_limit = optional(value).map(|v| parse_num(key, v)).transpose()?,
            "letters" => self.letters = optional(value).map(str::to_string),
            "vowels" => self.vowels = optional(value).map(str::to_string),
            "n" => self.n = parse_num(key, value)?,
            "seed_strategy" => self.seed_strategy = value.parse()?,
            "variant" => self.variant = value.parse()?,
            "vocab_cap" => {
                self.vocab_cap = match value {
                    "default" => VocabCap::VariantDefault,
                    "none" => VocabCap::Unlimited,
                    v => VocabCap::Words(parse_num(key, v)?),
                }
            }
            "threshold" => self.threshold = optional(value).map(|v| parse_num(key, v)).transpose()?,
            "neighbor_budget" => self.neighbor_budget = parse_num(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "final_cutoff" => self.final_cutoff = value.parse()?,
            "metric" => self.metric = optional(value).map(str::parse).transpose()?,
            "dataset_cap" => self.dataset_cap = parse_num(key, value)?,
            "max_suffix" => self.max_suffix = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "synth.preset" => self.synth_preset = value.to_string(),
            "synth.lexemes" => self.synth_lexemes = Some(parse_num(key, value)?),
            "synth.heldout" => self.synth_heldout = Some(parse_num(key, value)?),
            "synth.sigma" => self.synth_sigma = Some(parse_num(key, value)?),
            "synth.dim" => self.synth_dim = Some(parse_num(key, value)?),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines over the current values. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.dataset_cap == 0 {
            return bad("dataset_cap must be at least 1");
        }
        if self.vocab_cap == VocabCap::Words(0) {
            return bad("vocab_cap must be positive");
        }
        match self.variant {
            Variant::Orth => {
                if self.threshold == Some(0) {
                    return bad("threshold must be at least 1");
                }
            }
            Variant::Sem | Variant::Comb => {
                if self.threshold.is_some() {
                    return bad("threshold applies to variant orth only");
                }
                if self.neighbor_budget == 0 {
                    return bad("neighbor_budget must be at least 1");
                }
            }
        }
        Ok(())
    }

    pub fn vocab_limit(&self) -> Option<usize> {
        match (self.vocab_cap, self.variant) {
            (VocabCap::Words(n), _) => Some(n),
            (VocabCap::Unlimited, _) => None,
            (VocabCap::VariantDefault, Variant::Orth) => Some(ORTH_VOCAB_CAP),
            (VocabCap::VariantDefault, _) => None,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        match (&self.letters, &self.vowels) {
            (None, None) => Alphabet::latin(),
            (letters, vowels) => {
                let latin = Alphabet::latin();
                let join = |set: &BTreeSet<char>| set.iter().collect::<String>();
                Alphabet::new(
                    &letters.clone().unwrap_or_else(|| join(&latin.letters)),
                    &vowels.clone().unwrap_or_else(|| join(&latin.vowels)),
                )
            }
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or_else(|| self.variant.default_metric())
    }

    pub fn comb_params(&self) -> CombParams {
        CombParams {
            max_iters: self.max_iters,
            neighbor_budget: self.neighbor_budget,
            final_cutoff: self.final_cutoff,
        }
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let mut spec = SynthSpec::preset(&self.synth_preset)?;
        spec.seed = self.seed;
        if let Some(n) = self.synth_lexemes {
            spec.lexeme_count = n;
            spec.heldout = spec.heldout.min(n);
        }
        if let Some(h) = self.synth_heldout {
            spec.heldout = h;
        }
        if let Some(s) = self.synth_sigma {
            spec.noise_sigma = s;
        }
        if let Some(d) = self.synth_dim {
            spec.embed_dim = d;
        }
        Ok(spec)
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }

    fn input(&self, path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| Error::Config(format!("missing input path `{key}`")))
    }
}

// ---------------------------------------------------------------------------
// In-memory building blocks

/// Tagged lexicon plus bootstrapping traces for the comb variant.
#[derive(Debug, Clone, Default)]
pub struct TagOutcome {
    pub lexicon: TaggedLexicon,
    pub traces: BTreeMap<RelationKey, RelationTrace>,
}

pub fn tag_lexicon(
    variant: Variant,
    seed: &SeedSet,
    vocab: &Vocabulary,
    store: Option<&EmbeddingStore>,
    threshold: Option<usize>,
    params: &CombParams,
) -> Result<TagOutcome> {
    let need_store = || store.ok_or_else(|| Error::Config(format!("variant {variant} needs embeddings")));
    Ok(match variant {
        Variant::Orth => TagOutcome {
            lexicon: orth_tag(vocab, &build_orth_relations(seed), &seed.schema, threshold),
            traces: BTreeMap::new(),
        },
        Variant::Sem => {
            let store = need_store()?;
            let relations = build_sem_relations(seed, store);
            TagOutcome {
                lexicon: sem_tag(vocab, store, &relations, params.neighbor_budget),
                traces: BTreeMap::new(),
            }
        }
        Variant::Comb => {
            let out = comb_bootstrap(seed, need_store()?, vocab, &build_orth_relations(seed), params);
            TagOutcome {
                lexicon: out.lexicon,
                traces: out.traces,
            }
        }
    })
}

/// The cell whose seed forms most often equal the lexeme name (ties: lowest id).
pub fn lemma_cell(seed: &SeedSet) -> usize {
    let counts: Vec<usize> = (0..seed.schema.m())
        .map(|c| seed.tables.iter().filter(|t| t.form(c) == t.lexeme).count())
        .collect();
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        log::warn!("no seed lemma matches any of its forms; inflecting from cell 0");
    }
    counts.iter().position(|&c| c == best).unwrap_or(0)
}

/// One lemma-to-form test item and its outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaPrediction {
    pub lemma: String,
    pub source: usize,
    pub prediction: Prediction,
}

/// Inflects every test lemma into each of its listed cells other than the
/// lemma cell. Bundles outside the schema are skipped.
pub fn predict_from_lemmas(
    model: &RuleModel,
    schema: &ParadigmSchema,
    source: usize,
    test: &[Triple],
) -> Vec<LemmaPrediction> {
    let mut seen = BTreeSet::new();
    let mut unknown = 0usize;
    let mut out = Vec::new();
    for t in test {
        let Some(cell) = schema.cell_of_bundle(&t.bundle) else {
            unknown += 1;
            continue;
        };
        if cell == source || !seen.insert((t.lemma.clone(), cell)) {
            continue;
        }
        let (predicted, abstained) = match model.inflect(&t.lemma, source, cell) {
            Ok(inf) => (inf.form, inf.abstained),
            Err(_) => (t.lemma.clone(), true),
        };
        out.push(LemmaPrediction {
            lemma: t.lemma.clone(),
            source,
            prediction: Prediction {
                cell,
                predicted,
                gold: t.form.clone(),
                abstained,
            },
        });
    }
    if unknown > 0 {
        log::warn!("{unknown} test line(s) carry bundles outside the schema; skipped");
    }
    out
}

/// Gold bundles mapped onto schema cells; bundles outside the schema are dropped.
pub fn gold_cells(gold: &BTreeMap<String, BTreeSet<crate::seedio::FeatureBundle>>, schema: &ParadigmSchema) -> GoldTags {
    gold.iter()
        .filter_map(|(w, bundles)| {
            let cells: BTreeSet<usize> = bundles.iter().filter_map(|b| schema.cell_of_bundle(b)).collect();
            (!cells.is_empty()).then(|| (w.clone(), cells))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// File stages

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn ensure_output(cfg: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))
}

fn load_store(cfg: &PipelineConfig) -> Result<EmbeddingStore> {
    let path = cfg.input(&cfg.embeddings, "embeddings")?;
    let (store, report) = load_embeddings(&path, cfg.embed_limit)?;
    if !report.duplicates.is_empty() || !report.zero_vectors.is_empty() {
        log::warn!(
            "{}: {} duplicate and {} zero vector(s) ignored",
            path.display(),
            report.duplicates.len(),
            report.zero_vectors.len()
        );
    }
    Ok(store)
}

/// Loads embeddings and writes the filtered vocabulary.
pub fn ingest(cfg: &PipelineConfig) -> Result<Vocabulary> {
    stage("ingest", || {
        let store = load_store(cfg)?;
        let vocab = filter_vocabulary(&store, &cfg.alphabet(), cfg.vocab_limit());
        log::info!("ingest: {} vectors, {} vocabulary words", store.len(), vocab.len());
        ensure_output(cfg)?;
        vocab.write(&cfg.artifact(VOCAB_FILE))?;
        Ok(vocab)
    })
}

/// Selects the seed tables and writes them with their schema.
pub fn seed(cfg: &PipelineConfig) -> Result<SeedSet> {
    stage("seed", || {
        let path = cfg.input(&cfg.unimorph, "unimorph")?;
        let parsed = parse_unimorph(&path)?;
        if !parsed.skipped.is_empty() {
            log::warn!("{}: {} malformed line(s) skipped", path.display(), parsed.skipped.len());
        }
        let store = load_store(cfg)?;
        let seed = select_seed(&parsed.triples, &store, cfg.n, cfg.seed_strategy)?;
        log::info!(
            "seed: {} table(s) over {} cell(s): {}",
            seed.n(),
            seed.schema.m(),
            seed.tables.iter().map(|t| t.lexeme.as_str()).collect::<Vec<_>>().join(", ")
        );
        ensure_output(cfg)?;
        seed.schema.write(&cfg.artifact(SCHEMA_FILE))?;
        write_unimorph(&tables_to_triples(&seed.schema, &seed.tables), &cfg.artifact(SEED_FILE))?;
        Ok(seed)
    })
}

/// Reads the seed written by [`seed`].
pub fn load_seed(cfg: &PipelineConfig) -> Result<SeedSet> {
    let schema = ParadigmSchema::read(&cfg.artifact(SCHEMA_FILE))?;
    let triples = parse_unimorph(&cfg.artifact(SEED_FILE))?.triples;
    let tables = tables_from_triples(&triples, &schema)?;
    Ok(SeedSet { schema, tables })
}

fn write_semi_gold(traces: &BTreeMap<RelationKey, RelationTrace>, schema: &ParadigmSchema, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (key, trace) in traces {
        for p in &trace.semi_gold {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                p.source,
                schema.cell(key.source).label(),
                schema.cell(key.target).label(),
                p.target,
                p.iteration
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Tags the vocabulary with the configured variant.
pub fn tag(cfg: &PipelineConfig) -> Result<TagOutcome> {
    stage("tag", || {
        cfg.validate()?;
        let vocab = Vocabulary::read(&cfg.artifact(VOCAB_FILE))?;
        let seed = load_seed(cfg)?;
        let store = match cfg.variant {
            Variant::Orth => None,
            _ => Some(load_store(cfg)?),
        };
        let out = tag_lexicon(cfg.variant, &seed, &vocab, store.as_ref(), cfg.threshold, &cfg.comb_params())?;
        for (cell, count) in out.lexicon.counts_per_cell() {
            log::info!("tag: cell {} ({}): {count} word(s)", cell, seed.schema.cell(cell).label());
        }
        for (key, trace) in &out.traces {
            for it in &trace.iterations {
                log::info!("tag: relation {key} iteration {}: +{} semi-gold", it.iteration, it.added);
            }
        }
        out.lexicon.write(&cfg.artifact(TAGGED_FILE))?;
        if cfg.variant == Variant::Comb {
            write_semi_gold(&out.traces, &seed.schema, &cfg.artifact(SEMI_GOLD_FILE))?;
        }
        Ok(out)
    })
}

/// Pairs tagged words across cells and writes the training dataset.
pub fn pair(cfg: &PipelineConfig) -> Result<usize> {
    stage("pair", || {
        let schema = ParadigmSchema::read(&cfg.artifact(SCHEMA_FILE))?;
        let lexicon = TaggedLexicon::read(&cfg.artifact(TAGGED_FILE))?;
        let store = match cfg.metric() {
            Metric::Cosine => Some(load_store(cfg)?),
            Metric::Levenshtein => None,
        };
        let bins = bin_tagged(&lexicon, store.as_ref());
        let distance = match &store {
            Some(s) => Distance::Cosine(s),
            None => Distance::Levenshtein,
        };
        let pairs = pair_bins(&bins, distance, cfg.dataset_cap)?;
        let n = emit_dataset(&pairs, &schema, &cfg.artifact(DATASET_FILE))?;
        log::info!("pair: {n} training pair(s) emitted");
        Ok(n)
    })
}

/// Fits the suffix-rule inflector on the dataset.
pub fn train(cfg: &PipelineConfig) -> Result<RuleModel> {
    stage("train", || {
        let schema = ParadigmSchema::read(&cfg.artifact(SCHEMA_FILE))?;
        let dataset = read_dataset(&cfg.artifact(DATASET_FILE), &schema)?;
        let model = train_rules(&dataset, cfg.max_suffix)?;
        log::info!("train: {} rule(s) over {} relation(s)", model.rule_count(), model.relations().count());
        model.write(&cfg.artifact(MODEL_FILE))?;
        Ok(model)
    })
}

fn write_predictions(preds: &[LemmaPrediction], schema: &ParadigmSchema, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for p in preds {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.lemma,
            schema.cell(p.source).label(),
            schema.cell(p.prediction.cell).label(),
            p.prediction.predicted,
            p.prediction.gold,
            if p.prediction.abstained { "abstained" } else { "predicted" }
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_predictions(path: &Path, schema: &ParadigmSchema) -> Result<Vec<LemmaPrediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [lemma, source, target, predicted, gold, status] = cols[..] else {
            return Err(bad("expected 6 tab-separated columns".into()));
        };
        let abstained = match status {
            "abstained" => true,
            "predicted" => false,
            s => return Err(bad(format!("unknown status {s:?}"))),
        };
        out.push(LemmaPrediction {
            lemma: lemma.to_string(),
            source: schema.cell_of_label(source).map_err(|e| bad(e.to_string()))?,
            prediction: Prediction {
                cell: schema.cell_of_label(target).map_err(|e| bad(e.to_string()))?,
                predicted: predicted.to_string(),
                gold: gold.to_string(),
                abstained,
            },
        });
    }
    Ok(out)
}

/// Inflects the test lemmas with the trained model.
pub fn inflect(cfg: &PipelineConfig) -> Result<Vec<LemmaPrediction>> {
    stage("inflect", || {
        let seed = load_seed(cfg)?;
        let model = RuleModel::read(&cfg.artifact(MODEL_FILE))?;
        let test = parse_unimorph(&cfg.input(&cfg.test, "test")?)?.triples;
        let preds = predict_from_lemmas(&model, &seed.schema, lemma_cell(&seed), &test);
        let abstained = preds.iter().filter(|p| p.prediction.abstained).count();
        log::info!("inflect: {} prediction(s), {abstained} abstention(s)", preds.len());
        write_predictions(&preds, &seed.schema, &cfg.artifact(PREDICTIONS_FILE))?;
        Ok(preds)
    })
}

/// Scores predictions (and tags, when a gold file is configured).
pub fn evaluate(cfg: &PipelineConfig) -> Result<EvalReport> {
    stage("evaluate", || {
        let schema = ParadigmSchema::read(&cfg.artifact(SCHEMA_FILE))?;
        let preds = read_predictions(&cfg.artifact(PREDICTIONS_FILE), &schema)?;
        let lexicon = TaggedLexicon::read(&cfg.artifact(TAGGED_FILE))?;
        let flat: Vec<Prediction> = preds.into_iter().map(|p| p.prediction).collect();
        let mut report = per_cell_breakdown(&flat, &lexicon.counts_per_cell());
        if let Some(gold) = &cfg.gold {
            let gold = gold_cells(&read_gold(gold)?, &schema);
            report.tagging = Some(tagging_metrics(&lexicon, &gold)?);
        }
        log::info!(
            "evaluate: exact match {:.4} over {} item(s)",
            report.overall_accuracy,
            report.items
        );
        report.write(&cfg.artifact(REPORT_FILE))?;
        std::fs::write(cfg.artifact(SERIES_FILE), report.series_tsv())
            .map_err(|e| Error::io(cfg.artifact(SERIES_FILE), e))?;
        Ok(report)
    })
}

/// Generates a synthetic language into the output directory.
pub fn synth(cfg: &PipelineConfig) -> Result<SynthLanguage> {
    stage("synth", || {
        let lang = generate_language(&cfg.synth_spec()?)?;
        ensure_output(cfg)?;
        export_gold(&lang, &SynthPaths::in_dir(&cfg.output))?;
        log::info!(
            "synth: {} lexeme(s), {} form(s), {} held out",
            lang.tables.len(),
            lang.store.len(),
            lang.heldout.len()
        );
        Ok(lang)
    })
}

/// Every stage from ingestion to evaluation, in order.
pub fn pipeline(cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.validate()?;
    ingest(cfg)?;
    seed(cfg)?;
    tag(cfg)?;
    pair(cfg)?;
    train(cfg)?;
    inflect(cfg)?;
    evaluate(cfg)
}
