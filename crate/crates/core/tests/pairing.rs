use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use morphboot::editscript::levenshtein;
use morphboot::embedding::EmbeddingStore;
use morphboot::pairing::{bin_tagged, csls_score, emit_dataset, pair_bins, Bin, Distance, TrainingPair};
use morphboot::seedio::{FeatureBundle, ParadigmSchema};
use morphboot::tagging::{Provenance, TaggedLexicon};

fn at_angle(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

#[test]
fn cosine_csls_two_by_two() {
    // Place vectors on the unit circle so that the three named distances hold.
    let a_y1 = 0.9f64.acos();
    let mut store = EmbeddingStore::new(2);
    store.push("x1", &at_angle(0.0)).unwrap();
    store.push("y1", &at_angle(a_y1)).unwrap();
    store.push("y2", &at_angle(-(0.1f64.acos()))).unwrap();
    store.push("x2", &at_angle(a_y1 + 0.2f64.acos())).unwrap();
    let d = |a: &str, b: &str| Distance::Cosine(&store).between(a, b).unwrap();
    assert!((d("x1", "y1") - 0.1).abs() < 1e-12);
    assert!((d("x1", "y2") - 0.9).abs() < 1e-12);
    assert!((d("x2", "y1") - 0.8).abs() < 1e-12);

    let (bx, by) = (Bin::new(0, ["x1", "x2"]), Bin::new(1, ["y1", "y2"]));
    let s = csls_score("x1", "y1", &bx, &by, Distance::Cosine(&store)).unwrap();
    assert!((s - -0.75).abs() < 1e-12, "{s}");
}

fn lexicon(cells: &[(usize, &[&str])]) -> TaggedLexicon {
    let mut lex = TaggedLexicon::new();
    for (cell, words) in cells {
        for w in *words {
            lex.insert(w, *cell, Provenance::Orth, 1);
        }
    }
    lex
}

#[test]
fn hub_is_matched_once() {
    let lex = lexicon(&[(0, &["aaa", "qqq"]), (1, &["aab", "aac"])]);
    let pairs = pair_bins(&bin_tagged(&lex, None), Distance::Levenshtein, 100).unwrap();
    let forward: Vec<(&str, &str, f64)> = pairs
        .iter()
        .filter(|p| p.source_cell == 0)
        .map(|p| (p.source_form.as_str(), p.target_form.as_str(), p.score))
        .collect();
    assert_eq!(forward, vec![("aaa", "aab", -1.0), ("qqq", "aac", 0.0)]);
}

/// Brute-force CSLS plus repeated global-minimum selection.
fn oracle_matching(xs: &[String], ys: &[String]) -> BTreeSet<(String, String)> {
    let d = |x: &str, y: &str| levenshtein(x, y) as f64;
    let second = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[1]
    };
    let rx: Vec<f64> = xs.iter().map(|x| second(ys.iter().map(|y| d(x, y)).collect())).collect();
    let ry: Vec<f64> = ys.iter().map(|y| second(xs.iter().map(|x| d(x, y)).collect())).collect();
    let mut free_x: BTreeSet<usize> = (0..xs.len()).collect();
    let mut free_y: BTreeSet<usize> = (0..ys.len()).collect();
    let mut out = BTreeSet::new();
    while !free_x.is_empty() && !free_y.is_empty() {
        let mut best: Option<(f64, &str, &str, usize, usize)> = None;
        for &i in &free_x {
            for &j in &free_y {
                let s = d(&xs[i], &ys[j]) - 0.5 * rx[i] - 0.5 * ry[j];
                let cand = (s, xs[i].as_str(), ys[j].as_str(), i, j);
                let better = match best {
                    None => true,
                    Some(b) => (cand.0, cand.1, cand.2) < (b.0, b.1, b.2),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, x, y, i, j) = best.unwrap();
        out.insert((x.to_string(), y.to_string()));
        free_x.remove(&i);
        free_y.remove(&j);
    }
    out
}

fn random_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut out = BTreeSet::new();
    while out.len() < n {
        let len = rng.random_range(1..=5);
        out.insert((0..len).map(|_| (b'a' + rng.random_range(0..4u8)) as char).collect::<String>());
    }
    out.into_iter().collect()
}

#[test]
fn greedy_matching_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (nx, ny) = (rng.random_range(2..=9), rng.random_range(2..=9));
        let xs = random_words(&mut rng, nx);
        let ys: Vec<String> = random_words(&mut rng, ny).into_iter().map(|w| format!("{w}z")).collect();
        let xr: Vec<&str> = xs.iter().map(String::as_str).collect();
        let yr: Vec<&str> = ys.iter().map(String::as_str).collect();
        let lex = lexicon(&[(0, &xr), (1, &yr)]);
        let pairs = pair_bins(&bin_tagged(&lex, None), Distance::Levenshtein, usize::MAX).unwrap();
        let got: BTreeSet<(String, String)> = pairs
            .iter()
            .filter(|p| p.source_cell == 0)
            .map(|p| (p.source_form.clone(), p.target_form.clone()))
            .collect();
        assert_eq!(got, oracle_matching(&xs, &ys), "bins {xs:?} / {ys:?}");
    }
}

#[test]
fn matching_is_one_to_one_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut lex = TaggedLexicon::new();
    for cell in 0..4 {
        for w in random_words(&mut rng, 25) {
            lex.insert(&w, cell, Provenance::Sem, 1);
        }
    }
    let bins = bin_tagged(&lex, None);
    let a = pair_bins(&bins, Distance::Levenshtein, usize::MAX).unwrap();
    let b = pair_bins(&bins, Distance::Levenshtein, usize::MAX).unwrap();
    assert_eq!(a, b);

    type Sides<'a> = (BTreeSet<&'a str>, BTreeSet<&'a str>);
    let mut sides: BTreeMap<(usize, usize), Sides> = BTreeMap::new();
    for p in &a {
        assert_ne!(p.source_cell, p.target_cell);
        assert!(p.score.is_finite());
        let (s, t) = sides.entry((p.source_cell, p.target_cell)).or_default();
        assert!(s.insert(&p.source_form), "{} reused", p.source_form);
        assert!(t.insert(&p.target_form), "{} reused", p.target_form);
    }
    assert_eq!(sides.len(), 12);
}

#[test]
fn emit_writes_everything_it_is_given() {
    let schema = ParadigmSchema::from_groups(vec![
        vec!["A".parse::<FeatureBundle>().unwrap()],
        vec!["B".parse::<FeatureBundle>().unwrap()],
    ])
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.tsv");
    assert_eq!(emit_dataset(&[], &schema, &path).unwrap(), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 0);

    let pairs: Vec<TrainingPair> = (0..12_000)
        .map(|i| TrainingPair {
            source_form: format!("s{i}"),
            source_cell: 0,
            target_cell: 1,
            target_form: format!("t{i}"),
            score: -(i as f64) / 7.0,
            provenance: None,
        })
        .collect();
    assert_eq!(emit_dataset(&pairs, &schema, &path).unwrap(), 12_000);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 12_000);
}
