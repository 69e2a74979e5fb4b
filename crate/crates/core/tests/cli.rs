mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use heritage_kg::cli::main_with_args;
use heritage_kg::store::{parse_triples, CsvDialect};

use common::fixtures;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["heritage-kg".to_owned(), "--log-level".into(), "off".into(), "--out".into()];
    argv.push(out.display().to_string());
    argv.extend(args.iter().map(|s| s.to_string()));
    main_with_args(argv)
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

/// Runs the whole command sequence into `root`.
fn pipeline(root: &Path) {
    let mini = fx("mini");
    let ext = fx("extend");
    let split = root.join("split").display().to_string();
    let ckpt = root.join("train/transe.ckpt").display().to_string();
    let steps: Vec<(&str, Vec<&str>)> = vec![
        ("ingest", vec!["ingest", "--dataset-dir", &mini]),
        ("stats", vec!["stats", "--dataset-dir", &mini]),
        ("clean", vec!["clean", "--dataset-dir", &mini]),
        ("split", vec!["split", "--dataset-dir", &mini, "--seed", "7"]),
        ("train", vec!["train", "--split", &split, "--model", "transe", "--epochs", "2", "--seed", "7"]),
        ("eval", vec!["eval", "--split", &split, "--checkpoint", &ckpt, "--dataset", "mini"]),
    ];
    for (name, args) in &steps {
        assert_eq!(run(&root.join(name), args), 0, "{name}");
    }
    let (vectors, replay, recovery, annotations) =
        (fx("extend/vectors.txt"), fx("extend/replay"), fx("extend/replay_recovery"), fx("annotations.csv"));
    let audit = root.join("extend/audit.csv").display().to_string();
    let more: Vec<(&str, Vec<&str>)> = vec![
        (
            "extend",
            vec!["extend", "--dataset-dir", &ext, "--relation", "depicts", "--vectors", &vectors, "--replay", &replay],
        ),
        ("validate", vec!["validate", "--dataset-dir", &ext, "--relation", "depicts", "--replay", &recovery]),
        ("novelty", vec!["validate", "--dataset-dir", &ext, "--audit", &audit, "--vectors", &vectors]),
        (
            "report",
            vec!["report", "--dataset-dir", &ext, "--relation", "depicts", "--annotations", &annotations, "--audit", &audit],
        ),
    ];
    for (name, args) in &more {
        assert_eq!(run(&root.join(name), args), 0, "{name}");
    }
}

#[test]
fn every_subcommand_is_idempotent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in &sa {
        // Checkpoints and reports embed no paths or times, so everything must match.
        assert!(bytes == &sb[name], "{name} differs between runs");
    }
    for expected in ["ingest/triples.csv", "clean/cleaned.csv", "eval/metrics.csv", "extend/audit.csv", "report/precision.csv"] {
        assert!(sa.contains_key(expected), "missing {expected}");
    }
}

#[test]
fn identity_plan_keeps_every_triple() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("identity.toml");
    fs::write(
        &plan,
        "detect_duplicates = false\ndetect_inverses = false\nname_patterns = []\nmin_frequency = 1\n",
    )
    .unwrap();
    let mini = fx("mini");
    assert_eq!(run(&dir.path().join("i"), &["ingest", "--dataset-dir", &mini]), 0);
    assert_eq!(
        run(&dir.path().join("c"), &["clean", "--dataset-dir", &mini, "--plan", &plan.display().to_string()]),
        0
    );
    let ingested = fs::read(dir.path().join("i/triples.csv")).unwrap();
    let cleaned = fs::read(dir.path().join("c/cleaned.csv")).unwrap();
    assert_eq!(ingested, cleaned);
    let (set, _) = parse_triples(&dir.path().join("c/cleaned.csv"), &CsvDialect::default()).unwrap();
    assert_eq!(set.len(), 1019);
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // Missing input file.
    assert_eq!(run(&out, &["stats", "--triples", "/nonexistent/triples.csv"]), 3);
    // No triple source at all.
    assert_eq!(run(&out, &["stats"]), 2);
    // Malformed triple row.
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n").unwrap();
    assert_eq!(run(&out, &["stats", "--triples", &bad.display().to_string()]), 4);
    // Replay together with a live endpoint.
    let ext = fx("extend");
    let replay = fx("extend/replay");
    assert_eq!(
        run(
            &out,
            &["extend", "--dataset-dir", &ext, "--replay", &replay, "--text-endpoint", "http://127.0.0.1:9"]
        ),
        2
    );
    // Unknown subcommand is a usage error.
    assert_eq!(run(&out, &["frobnicate"]), 2);
}
