//! One PASS/FAIL line per acceptance criterion. Criteria that need the full
//! WJoconde distribution run against it when the matching environment
//! variable points at a local copy, and against the committed fixtures
//! otherwise; the line says which.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use heritage_kg::clean::{
    apply_cleaning, detect_inverses, detect_near_duplicates, profile_relations, read_relation_list, split_dataset,
    CardinalitySummary, CleaningPlan, DatasetSplit, OverlapMeasure,
};
use heritage_kg::eval::{evaluate, evaluate_split, FilterIndex, Metrics};
use heritage_kg::extend::{merge_extension, novelty_violations, CandidateStatus};
use heritage_kg::models::{gradient_check_with, score, train, EmbeddingConfig, ModelKind, ModelParams};
use heritage_kg::report::{compute_precision, f1_from_recall, read_annotations, taxonomy_distribution, TaxonomyMap};
use heritage_kg::store::{compute_stats, parse_triples, CsvDialect, Lexicon, Triple, TripleSet, TripleSetBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixtures, load_dataset, ExtendFixture};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

// 1. Parsing reproduces the dataset characteristics.
fn file_format_fidelity() -> Outcome {
    if let Some(path) = env_path("HERITAGE_KG_WJOCONDE") {
        let start = Instant::now();
        let (set, _) = parse_triples(&path, &CsvDialect::default()).map_err(|e| e.to_string())?;
        let s = compute_stats(&set);
        let elapsed = start.elapsed();
        let got = [s.triples, s.relations, s.subject_entities, s.object_entities, s.both_positions];
        let want = [483_938, 370, 28_524, 37_708, 4_491];
        ensure(got == want, || format!("counts {got:?}, expected {want:?}"))?;
        ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
        return Ok(format!("full distribution, counts exact in {elapsed:.1?}"));
    }
    let (set, summary) =
        parse_triples(&fixtures().join("mini/triples.csv"), &CsvDialect::default()).map_err(|e| e.to_string())?;
    let s = compute_stats(&set);
    let got: HashMap<&str, usize> = HashMap::from([
        ("records", summary.records),
        ("triples", s.triples),
        ("relations", s.relations),
        ("subject_entities", s.subject_entities),
        ("object_entities", s.object_entities),
        ("both_positions", s.both_positions),
        ("distinct_entities", s.distinct_entities),
        ("subject_plus_object", s.subject_plus_object),
    ]);
    let expected = std::fs::read_to_string(fixtures().join("mini/expected_counts.csv")).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for line in expected.lines().skip(1) {
        let (key, value) = line.split_once(',').ok_or("malformed expected_counts.csv")?;
        let want: usize = value.parse().map_err(|_| format!("bad count for {key}"))?;
        let have = *got.get(key).ok_or_else(|| format!("unknown count {key}"))?;
        ensure(have == want, || format!("{key}: {have} != {want}"))?;
        checked += 1;
    }
    ensure(checked == got.len(), || format!("only {checked} counts in fixture"))?;
    Ok(format!("fixture substitute (mini), {checked} counts exact; set HERITAGE_KG_WJOCONDE for the full check"))
}

fn cleaning_violations(set: &TripleSet, cleaned: &TripleSet, lexicon: &Lexicon) -> Result<(), String> {
    for r in cleaned.relations() {
        let name = lexicon.relation_name(set, r);
        ensure(!name.contains("ID") && !name.contains("URL"), || format!("{name:?} survived"))?;
        ensure(cleaned.pairs(r).len() >= 2, || format!("{name:?} has {} triples", cleaned.pairs(r).len()))?;
    }
    for measure in [OverlapMeasure::Containment, OverlapMeasure::Jaccard] {
        let dup = detect_near_duplicates(cleaned, 0.97, measure).map_err(|e| e.to_string())?;
        let inv = detect_inverses(cleaned, 0.97, measure).map_err(|e| e.to_string())?;
        ensure(dup.is_empty() && inv.is_empty(), || {
            format!("{measure:?}: {} duplicate and {} inverse pairs survive", dup.len(), inv.len())
        })?;
    }
    Ok(())
}

// 2. Cleaning leaves no ID/URL labels, no near-duplicates, no singletons.
fn cleaning_properties() -> Outcome {
    let (set, lexicon) = load_dataset("mini");
    let (cleaned, report) = apply_cleaning(&set, &lexicon, &CleaningPlan::default()).map_err(|e| e.to_string())?;
    cleaning_violations(&set, &cleaned, &lexicon)?;
    ensure(report.removed_count() > 0, || "fixture exercised no cleaning step".into())?;
    let mut detail = format!(
        "mini: {} -> {} relations, properties hold",
        set.relation_count(),
        cleaned.relation_count()
    );
    match (env_path("HERITAGE_KG_WJOCONDE_DIR"), env_path("HERITAGE_KG_WJOCONDE_MANUAL")) {
        (Some(dir), Some(list)) => {
            let (full, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default()).map_err(|e| e.to_string())?;
            let lex = Lexicon::load(&full, &heritage_kg::store::LexiconPaths::from_distribution_dir(&dir))
                .map_err(|e| e.to_string())?;
            let plan = CleaningPlan {
                manual_removals: read_relation_list(&list).map_err(|e| e.to_string())?,
                ..CleaningPlan::default()
            };
            let (c, _) = apply_cleaning(&full, &lex, &plan).map_err(|e| e.to_string())?;
            cleaning_violations(&full, &c, &lex)?;
            let got = (c.relation_count(), c.len());
            ensure(got == (121, 93_218), || format!("full cleaning gave {got:?}, expected (121, 93218)"))?;
            detail.push_str("; full distribution 121 relations / 93,218 triples");
        }
        _ => detail.push_str("; manual-list count check skipped (no distribution)"),
    }
    Ok(detail)
}

fn random_graph(rng: &mut ChaCha8Rng) -> TripleSet {
    let entities = rng.gen_range(2..60);
    let relations = rng.gen_range(1..8);
    let n = rng.gen_range(1..=1000);
    let mut b = TripleSetBuilder::new();
    for _ in 0..n {
        b.insert_str(
            &format!("e{}", rng.gen_range(0..entities)),
            &format!("r{}", rng.gen_range(0..relations)),
            &format!("e{}", rng.gen_range(0..entities)),
        );
    }
    b.build()
}

fn brute_force_class(triples: &[(String, String)]) -> (f64, f64, &'static str) {
    let mut tails_of: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    let mut heads_of: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for (h, t) in triples {
        tails_of.entry(h).or_default().insert(t);
        heads_of.entry(t).or_default().insert(h);
    }
    let tph = tails_of.values().map(HashSet::len).sum::<usize>() as f64 / tails_of.len() as f64;
    let hpt = heads_of.values().map(HashSet::len).sum::<usize>() as f64 / heads_of.len() as f64;
    let class = match (tph >= 1.5, hpt >= 1.5) {
        (false, false) => "1-1",
        (true, false) => "1-n",
        (false, true) => "n-1",
        (true, true) => "n-n",
    };
    (tph, hpt, class)
}

// 3. Cardinality classes agree with enumeration.
fn cardinality_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut relations = 0;
    for g in 0..100 {
        let set = random_graph(&mut rng);
        let mut by_rel: HashMap<String, Vec<(String, String)>> = HashMap::new();
        for t in set.triples() {
            let (h, r, o) = set.render(t);
            by_rel.entry(r.to_owned()).or_default().push((h.to_owned(), o.to_owned()));
        }
        let profiles = profile_relations(&set);
        ensure(profiles.len() == by_rel.len(), || format!("graph {g}: relation count differs"))?;
        for p in &profiles {
            let (tph, hpt, class) = brute_force_class(&by_rel[&p.iri]);
            ensure((p.tph - tph).abs() < 1e-12 && (p.hpt - hpt).abs() < 1e-12, || {
                format!("graph {g} {}: tph/hpt {}/{} vs {tph}/{hpt}", p.iri, p.tph, p.hpt)
            })?;
            ensure(p.cardinality.as_str() == class, || {
                format!("graph {g} {}: {} vs {class}", p.iri, p.cardinality)
            })?;
            relations += 1;
        }
    }
    let mut detail = format!("100 random graphs, {relations} relations agree");
    if let Some(dir) = env_path("HERITAGE_KG_WJOCONDE_DIR") {
        let (full, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default()).map_err(|e| e.to_string())?;
        let s = CardinalitySummary::from_profiles(&profile_relations(&full));
        let got = (s.one_to_one, s.one_to_many, s.many_to_one, s.many_to_many);
        ensure(got == (14, 55, 7, 294), || format!("full split {got:?}"))?;
        detail.push_str("; full distribution split 294/14/55/7");
    }
    Ok(detail)
}

// 4. Analytic gradients and the ComplEx/DistMult reduction.
fn embedding_correctness() -> Outcome {
    let mut b = TripleSetBuilder::new();
    for (h, r, t) in [("a", "p", "b"), ("b", "p", "c"), ("c", "q", "a"), ("d", "q", "b")] {
        b.insert_str(h, r, t);
    }
    let set = b.build();
    let triple = set.triples()[1];
    let mut worst = Vec::new();
    for kind in [ModelKind::TransE, ModelKind::DistMult, ModelKind::ComplEx, ModelKind::TuckER] {
        let config = EmbeddingConfig {
            entity_dim: 6,
            relation_dim: if kind == ModelKind::TuckER { 4 } else { 6 },
            input_dropout: 0.0,
            hidden_dropout1: 0.0,
            hidden_dropout2: 0.0,
            ..EmbeddingConfig::defaults_for(kind)
        };
        let params =
            ModelParams::init(kind, 4, 2, config.entity_dim, config.relation_dim, 11).map_err(|e| e.to_string())?;
        let dev = gradient_check_with(&params, &triple, 1e-5, &config).map_err(|e| e.to_string())?;
        ensure(dev < 1e-4, || format!("{kind}: relative deviation {dev:e}"))?;
        worst.push(format!("{kind} {dev:.1e}"));
    }

    let (ne, nr, d) = (50usize, 5usize, 8usize);
    let dm = ModelParams::init(ModelKind::DistMult, ne, nr, d, d, 5).map_err(|e| e.to_string())?;
    let mut cx = ModelParams::zeros(ModelKind::ComplEx, ne, nr, d, d, 5).map_err(|e| e.to_string())?;
    for i in 0..ne {
        cx.entities[i * 2 * d..i * 2 * d + d].copy_from_slice(&dm.entities[i * d..(i + 1) * d]);
    }
    for i in 0..nr {
        cx.relations[i * 2 * d..i * 2 * d + d].copy_from_slice(&dm.relations[i * d..(i + 1) * d]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut max_diff = 0.0f64;
    for _ in 0..1000 {
        let t = Triple::new(
            heritage_kg::store::EntityId(rng.gen_range(0..ne as u32)),
            heritage_kg::store::RelationId(rng.gen_range(0..nr as u32)),
            heritage_kg::store::EntityId(rng.gen_range(0..ne as u32)),
        );
        let a = score(&dm, &t).map_err(|e| e.to_string())?;
        let c = score(&cx, &t).map_err(|e| e.to_string())?;
        max_diff = max_diff.max((a - c).abs());
    }
    ensure(max_diff <= 1e-12, || format!("ComplEx vs DistMult differ by {max_diff:e}"))?;
    Ok(format!("gradients {}; ComplEx/DistMult max diff {max_diff:.1e}", worst.join(", ")))
}

fn frozen_ranking() -> Result<(), String> {
    let mut b = TripleSetBuilder::new();
    let train_triples = [("e0", "r0", "e1"), ("e1", "r0", "e2"), ("e2", "r1", "e3"), ("e4", "r1", "e5"), ("e0", "r1", "e5")];
    let test_triples = [("e0", "r0", "e2"), ("e3", "r1", "e4"), ("e5", "r0", "e0")];
    for (h, r, t) in train_triples.iter().chain(&test_triples) {
        b.insert_str(h, r, t);
    }
    let all = b.build();
    let test_keys: HashSet<(&str, &str, &str)> = test_triples.iter().copied().collect();
    let test = all.filter(|t| test_keys.contains(&all.render(t)));
    let train_set = all.filter(|t| !test_keys.contains(&all.render(t)));

    // Hand-set DistMult parameters with deliberate score ties.
    let ent: [[f64; 2]; 6] = [[1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [-1.0, 0.0]];
    let rel: [[f64; 2]; 2] = [[1.0, 0.5], [0.5, 1.0]];
    let mut params = ModelParams::zeros(ModelKind::DistMult, 6, 2, 2, 2, 0).map_err(|e| e.to_string())?;
    for (i, v) in ent.iter().enumerate() {
        let id = all.entity_id(&format!("e{i}")).unwrap();
        params.entity_mut(id).copy_from_slice(v);
    }
    for (i, v) in rel.iter().enumerate() {
        let id = all.relation_id(&format!("r{i}")).unwrap();
        params.relation_mut(id).copy_from_slice(v);
    }

    let s = |h: usize, r: usize, t: usize| (0..2).map(|k| ent[h][k] * rel[r][k] * ent[t][k]).sum::<f64>();
    let known: HashSet<(usize, usize, usize)> = train_triples
        .iter()
        .chain(&test_triples)
        .map(|(h, r, t)| (h[1..].parse().unwrap(), r[1..].parse().unwrap(), t[1..].parse().unwrap()))
        .collect();
    let brute = |filtered: bool| {
        let mut ranks = Vec::new();
        for (h, r, t) in &test_triples {
            let (h, r, t): (usize, usize, usize) = (h[1..].parse().unwrap(), r[1..].parse().unwrap(), t[1..].parse().unwrap());
            for tail_side in [true, false] {
                let target = s(h, r, t);
                let (mut better, mut tied) = (0.0, 0.0);
                for c in 0..6 {
                    let (ch, ct) = if tail_side { (h, c) } else { (c, t) };
                    if (ch, ct) == (h, t) || (filtered && known.contains(&(ch, r, ct))) {
                        continue;
                    }
                    let v = s(ch, r, ct);
                    if v > target {
                        better += 1.0;
                    } else if v == target {
                        tied += 1.0;
                    }
                }
                ranks.push(1.0 + better + tied / 2.0);
            }
        }
        ranks
    };
    let summarize = |ranks: &[f64]| {
        let n = ranks.len() as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        (ranks.iter().sum::<f64>() / n, ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n, hits(1.0), hits(3.0), hits(10.0))
    };
    let candidates = all.entities();
    let filter = FilterIndex::from_sets(&[&train_set, &test]);
    for (setting, f) in [("raw", None), ("filtered", Some(&filter))] {
        let m: Metrics = evaluate(&params, &test, &candidates, f).map_err(|e| e.to_string())?;
        let want = summarize(&brute(f.is_some()));
        let got = (m.mr, m.mrr, m.hits1, m.hits3, m.hits10);
        ensure(got == want && m.ranks == 6, || format!("{setting}: {got:?} vs brute force {want:?}"))?;
    }
    Ok(())
}

/// Entities carry three hidden attributes with 30 values each; relation
/// `same{a}` links every ordered pair sharing attribute `a`. Held-out links
/// are recoverable from observed class-mates and reverse edges.
fn latent_structure_split() -> DatasetSplit {
    let n = 120usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let attrs: Vec<[usize; 3]> =
        (0..n).map(|_| [rng.gen_range(0..30), rng.gen_range(0..30), rng.gen_range(0..30)]).collect();
    let mut b = TripleSetBuilder::new();
    for h in 0..n {
        for t in (0..n).filter(|&t| t != h) {
            for a in 0..3 {
                if attrs[h][a] == attrs[t][a] {
                    b.insert_str(&format!("e{h}"), &format!("same{a}"), &format!("e{t}"));
                }
            }
        }
    }
    split_dataset(&b.build(), [0.8, 0.1, 0.1], 1).expect("split")
}

fn proxy_config(kind: ModelKind) -> EmbeddingConfig {
    let base = EmbeddingConfig::defaults_for(kind);
    match kind {
        ModelKind::TuckER => EmbeddingConfig {
            entity_dim: 32,
            relation_dim: 16,
            learning_rate: 0.02,
            input_dropout: 0.2,
            hidden_dropout1: 0.2,
            hidden_dropout2: 0.3,
            ..base
        },
        // Tuned so the baseline trains properly: its defaults barely move in 100 epochs here.
        _ => EmbeddingConfig {
            entity_dim: 32,
            relation_dim: 32,
            learning_rate: 0.1,
            negatives: 4,
            ..base
        },
    }
}

fn filtered_mrr(split: &DatasetSplit, config: &EmbeddingConfig) -> Result<f64, String> {
    let out = train(&split.train, config).map_err(|e| e.to_string())?;
    let report = evaluate_split(&out.params, split).map_err(|e| e.to_string())?;
    Ok(report.filtered.mrr)
}

// 5. Ranking oracle and model ordering.
fn ranking_oracle() -> Outcome {
    frozen_ranking()?;
    let (split, label, tucker, transe) = match env_path("HERITAGE_KG_MM_EN") {
        Some(dir) => {
            let split = DatasetSplit::load_dir(&dir).map_err(|e| e.to_string())?;
            let t = EmbeddingConfig::defaults_for(ModelKind::TuckER);
            let e = EmbeddingConfig::defaults_for(ModelKind::TransE);
            (split, "WJocondeMM_en", t, e)
        }
        None => (
            latent_structure_split(),
            "synthetic latent-attribute proxy, not WJocondeMM_en",
            proxy_config(ModelKind::TuckER),
            proxy_config(ModelKind::TransE),
        ),
    };
    let start = Instant::now();
    let tucker_mrr = filtered_mrr(&split, &tucker)?;
    let transe_mrr = filtered_mrr(&split, &transe)?;
    let elapsed = start.elapsed();
    ensure(tucker_mrr >= 0.35 && tucker_mrr > transe_mrr, || {
        format!("{label}: TuckER MRR {tucker_mrr:.3}, TransE MRR {transe_mrr:.3}")
    })?;
    ensure(elapsed < Duration::from_secs(30 * 60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "frozen 6-entity KG exact; {label}: TuckER MRR {tucker_mrr:.3} > TransE {transe_mrr:.3} ({elapsed:.0?})"
    ))
}

fn run_cli_extend(out: &Path, max_inflight: usize) -> Result<Vec<u8>, String> {
    let f = fixtures();
    let p = |rel: &str| f.join(rel).display().to_string();
    let args = [
        "heritage-kg".to_owned(),
        "--log-level".into(),
        "off".into(),
        "--out".into(),
        out.display().to_string(),
        "extend".into(),
        "--dataset-dir".into(),
        p("extend"),
        "--relation".into(),
        "depicts".into(),
        "--vectors".into(),
        p("extend/vectors.txt"),
        "--replay".into(),
        p("extend/replay"),
        "--max-inflight".into(),
        max_inflight.to_string(),
    ];
    let code = heritage_kg::cli::main_with_args(args);
    ensure(code == 0, || format!("extend exited with {code}"))?;
    std::fs::read(out.join("audit.csv")).map_err(|e| e.to_string())
}

// 6. The replayed extension run matches the golden audit log.
fn extension_determinism() -> Outcome {
    let golden = std::fs::read(fixtures().join("golden/audit.csv")).map_err(|e| e.to_string())?;
    let golden_summary = std::fs::read(fixtures().join("golden/extension.txt")).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for threads in [1, 8] {
        for i in 0..3 {
            let out = dir.path().join(format!("t{threads}-{i}"));
            let audit = run_cli_extend(&out, threads)?;
            ensure(audit == golden, || format!("audit differs from golden (threads {threads}, run {i})"))?;
            let summary = std::fs::read(out.join("extension.txt")).map_err(|e| e.to_string())?;
            ensure(summary == golden_summary, || format!("summary differs (threads {threads}, run {i})"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs byte-identical to golden/audit.csv"))
}

// 7. Accepted candidates are novel; the worked example resolves as expected.
fn grounding_correctness() -> Outcome {
    let fx = ExtendFixture::load();
    let run = fx.run(4);
    let bad = novelty_violations(&run.candidates, &fx.set, &fx.lexicon, &fx.store, 0.4);
    ensure(bad.is_empty(), || format!("{} accepted candidates within 0.4 of the graph", bad.len()))?;
    // Statuses of every candidate with this surface, from either model.
    let statuses = |surface: &str| -> Vec<CandidateStatus> {
        run.candidates.iter().filter(|c| c.surface == surface).map(|c| c.status).collect()
    };
    let george = statuses("St. George");
    ensure(!george.is_empty() && george.iter().all(|s| *s == CandidateStatus::DuplicateOfKg), || {
        format!("St. George: {george:?}")
    })?;
    for s in ["horse", "jousting"] {
        let got = statuses(s);
        ensure(got.contains(&CandidateStatus::Accepted), || format!("{s}: {got:?}"))?;
    }
    let accepted = run.candidates.iter().filter(|c| c.status == CandidateStatus::Accepted).count();
    Ok(format!("{accepted} accepted, 0 violations; St. George filtered, horse and jousting accepted"))
}

// 8. F1 from recall, and the reconstructed precision average.
fn validation_arithmetic() -> Outcome {
    for (recall, f1) in [(0.722, 0.839), (0.848, 0.918), (0.902, 0.948)] {
        let got = f1_from_recall(recall);
        ensure((got - f1).abs() <= 0.001, || format!("f1({recall}) = {got:.4}, expected {f1}"))?;
    }
    let records = read_annotations(&fixtures().join("annotations.csv")).map_err(|e| e.to_string())?;
    let avg = compute_precision(&records).map_err(|e| e.to_string())?.average();
    ensure((avg - 0.920).abs() <= 0.0005, || format!("average precision {avg:.4}"))?;
    Ok(format!("three F1 cells within 0.001; precision {avg:.3}"))
}

// 9. Merging only adds.
fn merge_conservation() -> Outcome {
    let fx = ExtendFixture::load();
    let run = fx.run(4);
    let accepted = run.candidates.iter().filter(|c| c.status == CandidateStatus::Accepted).count();
    let (merged, _, summary) = merge_extension(&fx.set, &fx.lexicon, &run.candidates, "urn:test:", "acc")
        .map_err(|e| e.to_string())?;
    for t in fx.set.triples() {
        let (h, r, o) = fx.set.render(t);
        let present = match (merged.entity_id(h), merged.relation_id(r), merged.entity_id(o)) {
            (Some(h), Some(r), Some(o)) => merged.contains(&Triple::new(h, r, o)),
            _ => false,
        };
        ensure(present, || format!("lost ({h}, {r}, {o})"))?;
    }
    ensure(merged.relation_count() == fx.set.relation_count(), || "relation count changed".into())?;
    let (before, after) = (fx.set.entities().len(), merged.entities().len());
    ensure(after == before + accepted, || format!("entities {before} -> {after} with {accepted} accepted"))?;
    ensure(merged.len() == fx.set.len() + accepted, || "triple count is not additive".into())?;
    ensure(summary.added == accepted, || format!("summary reports {} added", summary.added))?;
    Ok(format!(
        "triples {} -> {}, relations {} -> {}, entities {before} -> {after}",
        fx.set.len(),
        merged.len(),
        fx.set.relation_count(),
        merged.relation_count()
    ))
}

// 10. The taxonomy distribution is complete and honest about unknowns.
fn taxonomy_report() -> Outcome {
    let text = std::fs::read_to_string(fixtures().join("taxonomy_200.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (s, c) = l.rsplit_once(',').expect("surface,expected");
            (s.to_owned(), c.to_owned())
        })
        .collect();
    ensure(rows.len() == 200, || format!("fixture has {} rows", rows.len()))?;
    let map = TaxonomyMap::starter();
    let dist = taxonomy_distribution(rows.iter().map(|(s, _)| (s.as_str(), None)), &map);
    let exact: f64 = dist.percentages().iter().sum();
    let rounded: f64 = dist.rounded_percentages(1).iter().sum();
    ensure((exact - 100.0).abs() <= 0.1 && (rounded - 100.0).abs() <= 0.1, || {
        format!("percentages sum to {exact} (rounded {rounded})")
    })?;
    let unmapped: HashSet<&str> = rows.iter().filter(|(_, c)| c == "unknown").map(|(s, _)| s.as_str()).collect();
    let classified_unknown: HashSet<&str> =
        rows.iter().filter(|(s, _)| map.classify(s, None) == "unknown").map(|(s, _)| s.as_str()).collect();
    ensure(unmapped == classified_unknown, || {
        format!(
            "unknown bucket mismatch: missing {:?}, extra {:?}",
            unmapped.difference(&classified_unknown).collect::<Vec<_>>(),
            classified_unknown.difference(&unmapped).collect::<Vec<_>>()
        )
    })?;
    ensure(dist.count("unknown") == unmapped.len(), || "unknown count differs from the bucket".into())?;
    Ok(format!("sum {rounded:.1}, unknown {} of 200", unmapped.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("file-format fidelity", file_format_fidelity),
        ("cleaning properties", cleaning_properties),
        ("cardinality oracle", cardinality_oracle),
        ("embedding correctness", embedding_correctness),
        ("ranking oracle", ranking_oracle),
        ("extension determinism", extension_determinism),
        ("grounding correctness", grounding_correctness),
        ("validation arithmetic", validation_arithmetic),
        ("merge conservation", merge_conservation),
        ("taxonomy report", taxonomy_report),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
