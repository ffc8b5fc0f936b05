//! Tagging and inflection metrics, and the accuracy-vs-abundance report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tagging::TaggedLexicon;

/// Fraction of `(predicted, gold)` pairs that are string-equal.
pub fn exact_match<S: AsRef<str>>(predictions: &[(S, S)]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = predictions.iter().filter(|(p, g)| p.as_ref() == g.as_ref()).count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggingMetrics {
    pub true_positives: usize,
    pub tagged: usize,
    pub gold: usize,
    /// `None` when nothing was tagged.
    pub precision: Option<f64>,
    pub recall: f64,
}

impl TaggingMetrics {
    fn from_counts(true_positives: usize, tagged: usize, gold: usize) -> Self {
        TaggingMetrics {
            true_positives,
            tagged,
            gold,
            precision: (tagged > 0).then(|| true_positives as f64 / tagged as f64),
            recall: if gold > 0 { true_positives as f64 / gold as f64 } else { 0.0 },
        }
    }
}

/// Gold cell sets per word.
pub type GoldTags = BTreeMap<String, BTreeSet<usize>>;

/// Precision and recall over `(word, cell)` pairs.
pub fn tagging_metrics(tagged: &TaggedLexicon, gold: &GoldTags) -> Result<TaggingMetrics> {
    let gold_pairs: usize = gold.values().map(BTreeSet::len).sum();
    if gold_pairs == 0 {
        return Err(Error::EmptyInput);
    }
    let tp = tagged
        .iter()
        .filter(|(w, c, _)| gold.get(*w).is_some_and(|cells| cells.contains(c)))
        .count();
    Ok(TaggingMetrics::from_counts(tp, tagged.len(), gold_pairs))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(Error::ZeroVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    /// Target cell of the inflection.
    pub cell: usize,
    pub predicted: String,
    pub gold: String,
    pub abstained: bool,
}

impl Prediction {
    /// Abstentions never count as correct.
    pub fn correct(&self) -> bool {
        !self.abstained && self.predicted == self.gold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub accuracy: f64,
    pub correct: usize,
    pub gold_count: usize,
    pub tagged_count: usize,
    pub abstained: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall_accuracy: f64,
    pub items: usize,
    pub correct: usize,
    pub abstained: usize,
    pub per_cell: BTreeMap<usize, CellStats>,
    pub tagging: Option<TaggingMetrics>,
    /// `(ln(tagged_count + 1), accuracy)` for cells with test items.
    pub series: Vec<(f64, f64)>,
    pub pearson_r: Option<f64>,
}

/// Per-cell accuracy (micro-averaged overall) and its correlation with the
/// log of each cell's tagged-word count.
pub fn per_cell_breakdown(predictions: &[Prediction], tagged_counts: &BTreeMap<usize, usize>) -> EvalReport {
    let mut per_cell: BTreeMap<usize, CellStats> = BTreeMap::new();
    for p in predictions {
        let s = per_cell.entry(p.cell).or_insert(CellStats {
            accuracy: 0.0,
            correct: 0,
            gold_count: 0,
            tagged_count: tagged_counts.get(&p.cell).copied().unwrap_or(0),
            abstained: 0,
        });
        s.gold_count += 1;
        s.correct += usize::from(p.correct());
        s.abstained += usize::from(p.abstained);
    }
    for s in per_cell.values_mut() {
        s.accuracy = s.correct as f64 / s.gold_count as f64;
    }
    let correct: usize = per_cell.values().map(|s| s.correct).sum();
    let series: Vec<(f64, f64)> = per_cell
        .values()
        .filter(|s| s.gold_count > 0)
        .map(|s| (((s.tagged_count + 1) as f64).ln(), s.accuracy))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = series.iter().copied().unzip();
    EvalReport {
        overall_accuracy: if predictions.is_empty() {
            0.0
        } else {
            correct as f64 / predictions.len() as f64
        },
        items: predictions.len(),
        correct,
        abstained: predictions.iter().filter(|p| p.abstained).count(),
        per_cell,
        tagging: None,
        pearson_r: pearson(&xs, &ys).ok(),
        series,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl EvalReport {
    /// Sectioned TSV with `#` headers.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        s.push_str("# summary\n");
        let _ = writeln!(s, "overall_accuracy\t{}", self.overall_accuracy);
        let _ = writeln!(s, "items\t{}", self.items);
        let _ = writeln!(s, "correct\t{}", self.correct);
        let _ = writeln!(s, "abstained\t{}", self.abstained);
        if let Some(t) = &self.tagging {
            let _ = writeln!(s, "tagging_true_positives\t{}", t.true_positives);
            let _ = writeln!(s, "tagging_tagged\t{}", t.tagged);
            let _ = writeln!(s, "tagging_gold\t{}", t.gold);
            let _ = writeln!(s, "tagging_precision\t{}", opt(t.precision));
            let _ = writeln!(s, "tagging_recall\t{}", t.recall);
        }
        let _ = writeln!(s, "pearson_r\t{}", opt(self.pearson_r));
        s.push_str("# per_cell\ncell\taccuracy\tcorrect\tgold_count\ttagged_count\tabstained\n");
        for (cell, c) in &self.per_cell {
            let _ = writeln!(
                s,
                "{cell}\t{}\t{}\t{}\t{}\t{}",
                c.accuracy, c.correct, c.gold_count, c.tagged_count, c.abstained
            );
        }
        s.push_str(&self.series_tsv());
        s
    }

    /// Plot-ready two-column series.
    pub fn series_tsv(&self) -> String {
        let mut s = String::from("# series: x = ln(tagged_count + 1), y = accuracy\nlog_tagged\taccuracy\n");
        for (x, y) in &self.series {
            let _ = writeln!(s, "{x}\t{y}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Result<EvalReport> {
        let bad = |line: usize, message: &str| Error::Parse {
            path: "<report>".into(),
            line,
            message: message.to_string(),
        };
        let mut section = "";
        let mut summary: BTreeMap<String, String> = BTreeMap::new();
        let mut per_cell = BTreeMap::new();
        let mut series = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(h) = line.strip_prefix("# ") {
                section = if h.starts_with("summary") {
                    "summary"
                } else if h.starts_with("per_cell") {
                    "per_cell"
                } else {
                    "series"
                };
                continue;
            }
            if line.is_empty() || line.starts_with("cell\t") || line.starts_with("log_tagged\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match section {
                "summary" => {
                    let [k, v] = cols[..] else {
                        return Err(bad(lineno, "expected key<TAB>value"));
                    };
                    summary.insert(k.to_string(), v.to_string());
                }
                "per_cell" => {
                    let [cell, acc, correct, gold, tagged, abst] = cols[..] else {
                        return Err(bad(lineno, "expected 6 columns"));
                    };
                    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, "bad count"));
                    per_cell.insert(
                        num(cell)?,
                        CellStats {
                            accuracy: acc.parse().map_err(|_| bad(lineno, "bad accuracy"))?,
                            correct: num(correct)?,
                            gold_count: num(gold)?,
                            tagged_count: num(tagged)?,
                            abstained: num(abst)?,
                        },
                    );
                }
                "series" => {
                    let [x, y] = cols[..] else {
                        return Err(bad(lineno, "expected 2 columns"));
                    };
                    let f = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, "bad number"));
                    series.push((f(x)?, f(y)?));
                }
                _ => return Err(bad(lineno, "content outside a section")),
            }
        }
        let get = |k: &str| summary.get(k).ok_or_else(|| bad(0, &format!("missing {k}")));
        let usize_of = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(0, k)) };
        let opt_f64 = |k: &str| -> Result<Option<f64>> {
            match get(k)?.as_str() {
                "NA" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(0, k)),
            }
        };
        let tagging = if summary.contains_key("tagging_tagged") {
            Some(TaggingMetrics::from_counts(
                usize_of("tagging_true_positives")?,
                usize_of("tagging_tagged")?,
                usize_of("tagging_gold")?,
            ))
        } else {
            None
        };
        Ok(EvalReport {
            overall_accuracy: get("overall_accuracy")?.parse().map_err(|_| bad(0, "overall_accuracy"))?,
            items: usize_of("items")?,
            correct: usize_of("correct")?,
            abstained: usize_of("abstained")?,
            per_cell,
            tagging,
            series,
            pearson_r: opt_f64("pearson_r")?,
        })
    }
}
