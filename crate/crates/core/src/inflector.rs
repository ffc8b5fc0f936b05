//! Suffix-conditioned edit-rule inflector trained on bootstrapped pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::editscript::{apply_script, edit_script, EditScript};
use crate::error::{Error, Result};
use crate::pairing::TrainingPair;
use crate::seedio::{InflectionTable, ParadigmSchema, RelationKey};

pub const DEFAULT_MAX_SUFFIX: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// Source-word suffix the rule is conditioned on (may be empty).
    pub suffix: String,
    pub script: EditScript,
    pub support: usize,
}

/// Per relation, rules ordered by decreasing suffix length, then decreasing
/// support. The empty-suffix rule is the relation's fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleModel {
    rules: BTreeMap<RelationKey, Vec<Rule>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inflection {
    pub form: String,
    /// No rule applied; `form` is the input returned unchanged.
    pub abstained: bool,
    /// Support of the rule that fired (0 on abstention).
    pub support: usize,
}

fn suffix_of(chars: &[char], len: usize) -> String {
    chars[chars.len() - len..].iter().collect()
}

fn sort_rules(rules: &mut [Rule]) {
    rules.sort_by(|a, b| {
        b.suffix
            .chars()
            .count()
            .cmp(&a.suffix.chars().count())
            .then(b.support.cmp(&a.support))
            .then_with(|| a.suffix.cmp(&b.suffix))
    });
}

/// Votes every suffix (up to `max_suffix` characters) of each training
/// source for that pair's edit script and keeps the majority script per
/// `(relation, suffix)`; ties go to the smaller serialized script.
pub fn train_rules(dataset: &[TrainingPair], max_suffix: usize) -> Result<RuleModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    type Votes = HashMap<String, (usize, EditScript)>;
    let mut votes: BTreeMap<(RelationKey, String), Votes> = BTreeMap::new();
    for pair in dataset {
        if pair.source_cell == pair.target_cell {
            continue;
        }
        let key = RelationKey::new(pair.source_cell, pair.target_cell);
        let script = edit_script(&pair.source_form, &pair.target_form)?;
        let serialized = script.to_string();
        let chars: Vec<char> = pair.source_form.chars().collect();
        for len in 0..=max_suffix.min(chars.len()) {
            let slot = votes
                .entry((key, suffix_of(&chars, len)))
                .or_default()
                .entry(serialized.clone())
                .or_insert_with(|| (0, script.clone()));
            slot.0 += 1;
        }
    }

    let mut rules: BTreeMap<RelationKey, Vec<Rule>> = BTreeMap::new();
    for ((key, suffix), tally) in votes {
        let (_, (support, script)) = tally
            .into_iter()
            .min_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(&b.0)))
            .expect("at least one vote");
        rules.entry(key).or_default().push(Rule {
            suffix,
            script,
            support,
        });
    }
    for list in rules.values_mut() {
        sort_rules(list);
    }
    Ok(RuleModel { rules })
}

impl RuleModel {
    pub fn rules(&self, key: RelationKey) -> Option<&[Rule]> {
        self.rules.get(&key).map(Vec::as_slice)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationKey> + '_ {
        self.rules.keys().copied()
    }

    pub fn fallback(&self, key: RelationKey) -> Option<&Rule> {
        self.rules.get(&key)?.iter().find(|r| r.suffix.is_empty())
    }

    pub fn rule_count(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    /// Inflects `form` from `source` to `target`: the first rule whose suffix
    /// matches and whose script applies fires. With no such rule the form is
    /// returned unchanged and flagged as an abstention.
    pub fn inflect(&self, form: &str, source: usize, target: usize) -> Result<Inflection> {
        let rules = self
            .rules
            .get(&RelationKey { source, target })
            .ok_or(Error::UnknownRelation(source, target))?;
        for rule in rules {
            if !form.ends_with(&rule.suffix) {
                continue;
            }
            if let Ok(out) = apply_script(&rule.script, form) {
                return Ok(Inflection {
                    form: out,
                    abstained: false,
                    support: rule.support,
                });
            }
        }
        Ok(Inflection {
            form: form.to_string(),
            abstained: true,
            support: 0,
        })
    }

    /// Fills every cell missing from `given`, inflecting from the given cell
    /// whose firing rule has the most support (ties: lowest cell id).
    pub fn complete_table(&self, given: &BTreeMap<usize, String>, schema: &ParadigmSchema) -> Result<CompletedTable> {
        let (&first, first_form) = given.iter().next().ok_or(Error::EmptyInput)?;
        let mut forms = Vec::with_capacity(schema.m());
        let mut abstained = BTreeSet::new();
        for cell in 0..schema.m() {
            if let Some(f) = given.get(&cell) {
                forms.push(f.clone());
                continue;
            }
            let mut best: Option<Inflection> = None;
            let mut fallback: Option<Inflection> = None;
            for (&src, f) in given {
                let Ok(inf) = self.inflect(f, src, cell) else {
                    continue;
                };
                if inf.abstained {
                    fallback.get_or_insert(inf);
                } else if best.as_ref().is_none_or(|b| inf.support > b.support) {
                    best = Some(inf);
                }
            }
            match best.or(fallback) {
                Some(inf) => {
                    if inf.abstained {
                        abstained.insert(cell);
                    }
                    forms.push(inf.form);
                }
                None => return Err(Error::UnknownRelation(first, cell)),
            }
        }
        Ok(CompletedTable {
            table: InflectionTable {
                lexeme: first_form.clone(),
                forms,
            },
            abstained,
        })
    }

    /// One rule per line: `source<TAB>target<TAB>suffix<TAB>script<TAB>support`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (key, rules) in &self.rules {
            for r in rules {
                writeln!(w, "{}\t{}\t{}\t{}\t{}", key.source, key.target, r.suffix, r.script, r.support)
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rules: BTreeMap<RelationKey, Vec<Rule>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [source, target, suffix, script, support] = cols[..] else {
                return Err(bad("expected 5 tab-separated columns".into()));
            };
            let source: usize = source.parse().map_err(|_| bad("bad source cell".into()))?;
            let target: usize = target.parse().map_err(|_| bad("bad target cell".into()))?;
            if source == target {
                return Err(bad("source and target cells coincide".into()));
            }
            rules.entry(RelationKey::new(source, target)).or_default().push(Rule {
                suffix: suffix.to_string(),
                script: script.parse().map_err(|e: Error| bad(e.to_string()))?,
                support: support.parse().map_err(|_| bad("bad support".into()))?,
            });
        }
        for list in rules.values_mut() {
            sort_rules(list);
        }
        Ok(RuleModel { rules })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletedTable {
    pub table: InflectionTable,
    /// Cells whose form is an abstention copy of a given form.
    pub abstained: BTreeSet<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seedio::FeatureBundle;

    fn pair(s: &str, t: &str, sc: usize, tc: usize) -> TrainingPair {
        TrainingPair {
            source_form: s.into(),
            source_cell: sc,
            target_cell: tc,
            target_form: t.into(),
            score: 0.0,
            provenance: None,
        }
    }

    fn schema(m: usize) -> ParadigmSchema {
        ParadigmSchema::from_groups(
            (0..m)
                .map(|i| vec![FeatureBundle::new([format!("C{i}")]).unwrap()])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn learns_shared_suffix_rule() {
        let model = train_rules(&[pair("parle", "parla", 0, 1), pair("aime", "aima", 0, 1)], 5).unwrap();
        let rules = model.rules(RelationKey::new(0, 1)).unwrap();
        let e = rules.iter().find(|r| r.suffix == "e").unwrap();
        assert_eq!(e.support, 2);
        assert_eq!(e.script.to_string(), "$e>a");
        let fb = model.fallback(RelationKey::new(0, 1)).unwrap();
        assert_eq!((fb.support, fb.script.to_string()), (2, "$e>a".to_string()));
        // "chante" ends in "e" (and no longer trained suffix), so the shared rule fires.
        let out = model.inflect("chante", 0, 1).unwrap();
        assert_eq!(out.form, "chanta");
        assert!(!out.abstained);
    }

    #[test]
    fn majority_vote() {
        let data = [
            pair("kata", "katan", 0, 1),
            pair("lima", "liman", 0, 1),
            pair("sora", "soran", 0, 1),
            pair("pita", "pitat", 0, 1),
        ];
        let model = train_rules(&data, 5).unwrap();
        let a = model
            .rules(RelationKey::new(0, 1))
            .unwrap()
            .iter()
            .find(|r| r.suffix == "a")
            .unwrap();
        assert_eq!(a.support, 3);
        assert_eq!(a.script.to_string(), "$>n");
    }

    #[test]
    fn single_pair_rules_and_order() {
        let model = train_rules(&[pair("bois", "but", 0, 1)], 3).unwrap();
        let rules = model.rules(RelationKey::new(0, 1)).unwrap();
        let suffixes: Vec<&str> = rules.iter().map(|r| r.suffix.as_str()).collect();
        assert_eq!(suffixes, ["ois", "is", "s", ""]);
        assert!(rules.iter().all(|r| r.script.to_string() == "$ois>ut"));
        assert_eq!(model.inflect("bois", 0, 1).unwrap().form, "but");
    }

    #[test]
    fn abstention_and_unknown_relation() {
        let model = train_rules(&[pair("bois", "but", 0, 1)], 3).unwrap();
        let out = model.inflect("parle", 0, 1).unwrap();
        assert_eq!(out, Inflection { form: "parle".into(), abstained: true, support: 0 });
        assert!(matches!(model.inflect("parle", 1, 0), Err(Error::UnknownRelation(1, 0))));
        assert!(matches!(train_rules(&[], 5), Err(Error::EmptyDataset)));
    }

    #[test]
    fn completion() {
        let data = [
            pair("kata", "katan", 0, 1),
            pair("kata", "katak", 0, 2),
            pair("lima", "liman", 0, 1),
            pair("lima", "limak", 0, 2),
            pair("katan", "katak", 1, 2),
        ];
        let model = train_rules(&data, 5).unwrap();
        let s = schema(3);

        let full: BTreeMap<usize, String> = [(0, "sora"), (1, "soran"), (2, "sorak")]
            .into_iter()
            .map(|(c, f)| (c, f.to_string()))
            .collect();
        assert_eq!(model.complete_table(&full, &s).unwrap().table.forms, ["sora", "soran", "sorak"]);

        let lemma: BTreeMap<usize, String> = [(0, "sora".to_string())].into();
        let done = model.complete_table(&lemma, &s).unwrap();
        assert_eq!(done.table.forms, ["sora", "soran", "sorak"]);
        assert!(done.abstained.is_empty());

        // Cell 2 can come from cell 0 (support 2) or cell 1 (support 1).
        let two: BTreeMap<usize, String> = [(0, "mela".to_string()), (1, "melaX".to_string())].into();
        let done = model.complete_table(&two, &s).unwrap();
        assert_eq!(done.table.forms[2], "melak");
    }

    #[test]
    fn model_file_round_trip() {
        let data = [pair("finis", "finit", 0, 1), pair("bois", "but", 0, 1), pair("sing", "sang", 1, 0)];
        let model = train_rules(&data, 5).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        model.write(f.path()).unwrap();
        let back = RuleModel::read(f.path()).unwrap();
        assert_eq!(back, model);
        for key in model.relations() {
            for (a, b) in model.rules(key).unwrap().iter().zip(back.rules(key).unwrap()) {
                assert_eq!(a.script.to_string(), b.script.to_string());
            }
        }
    }
}
