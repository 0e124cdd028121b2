use std::fs;
use std::path::Path;

use polytok_core::pipeline::{run_experiment, verify_run, ExperimentConfig, RunManifest, Strategy};
use polytok_core::synth::parallel_corpus;
use polytok_core::textio::write_lines;
use polytok_core::Error;

fn fixture(dir: &Path, n: usize) -> ExperimentConfig {
    let (src, tgt) = parallel_corpus(n, 8);
    write_lines(&dir.join("src.txt"), &src).unwrap();
    write_lines(&dir.join("tgt.txt"), &tgt).unwrap();
    let mut c = ExperimentConfig::new("base", Strategy::Unparsed);
    c.source = dir.join("src.txt");
    c.target = dir.join("tgt.txt");
    c.out_dir = dir.join("out");
    c.dev_count = 3;
    c.test_count = 4;
    c
}

fn line_count(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn unparsed_run_on_100_lines() {
    let dir = tempfile::tempdir().unwrap();
    let c = fixture(dir.path(), 100);
    let m = run_experiment(&c).unwrap();
    for (split, n) in [("train", 93), ("dev", 3), ("test", 4)] {
        for ext in ["src", "tgt", "ref", "ids"] {
            assert_eq!(line_count(&c.out_dir.join(format!("{split}.{ext}"))), n, "{split}.{ext}");
        }
        assert_eq!(m.stat(&format!("{split}.lines")), Some(n.to_string().as_str()));
    }
    assert!(m.training_inputs.is_empty());
    let loaded = RunManifest::load(&c.out_dir).unwrap();
    assert_eq!(loaded.to_text(), m.to_text());
    verify_run(&loaded).unwrap();
}

#[test]
fn failing_stage_is_named_and_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = fixture(dir.path(), 50);
    c.strategy = Strategy::RuleBased;
    c.rules = Some(dir.path().join("missing.rules"));
    match run_experiment(&c) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "learn"),
        other => panic!("expected a stage error, got {other:?}"),
    }
    assert!(!c.out_dir.exists());
    assert!(!dir.path().join("out.partial").exists());

    c.dev_count = 40;
    c.test_count = 40;
    assert!(matches!(run_experiment(&c), Err(Error::Stage { stage: "split", .. })));
}

#[test]
fn bpe_sweep_differs_only_in_merges_and_vocab() {
    let dir = tempfile::tempdir().unwrap();
    let base = fixture(dir.path(), 300);
    let mut manifests = Vec::new();
    for n in [40, 80] {
        let mut c = base.clone();
        c.name = format!("bpe{n}");
        c.strategy = Strategy::Bpe;
        c.merge_ops = Some(n);
        c.out_dir = dir.path().join(&c.name);
        manifests.push(run_experiment(&c).unwrap());
    }
    let (a, b) = (&manifests[0], &manifests[1]);
    assert_eq!(a.training_inputs, b.training_inputs);
    for name in ["train.ids", "dev.ids", "test.ids", "train.ref", "train.tok.src", "vocab.tgt", "train.tgt"] {
        assert_eq!(a.artifacts[name], b.artifacts[name], "{name}");
    }
    assert_ne!(a.artifacts["merges.src"], b.artifacts["merges.src"]);
    let differing: Vec<&String> = a
        .stats
        .keys()
        .filter(|k| a.stats[*k] != b.stats[*k])
        .collect();
    assert!(differing.iter().all(|k| k.contains("src") || k.starts_with("learned_merges")), "{differing:?}");
    assert!(a.stat_num("vocab.src.size").unwrap() <= b.stat_num("vocab.src.size").unwrap());
}

#[test]
fn leaked_training_input_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = fixture(dir.path(), 80);
    c.strategy = Strategy::Bpe;
    c.merge_ops = Some(30);
    run_experiment(&c).unwrap();
    let mut m = RunManifest::load(&c.out_dir).unwrap();
    verify_run(&m).unwrap();
    // Pretend the merges were learned on the whole corpus.
    let all = fs::read_to_string(dir.path().join("src.txt")).unwrap();
    let tokenized: String = all
        .lines()
        .map(|l| {
            polytok_core::tokenize(l, polytok_core::TokMode::ApostrophePreserving).join(" ") + "\n"
        })
        .collect();
    m.training_inputs
        .insert("src".into(), polytok_core::pipeline::sha256_hex(tokenized.as_bytes()));
    let err = verify_run(&m).unwrap_err();
    assert!(err.is_invariant(), "{err}");
}
