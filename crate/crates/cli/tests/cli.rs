use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use polytok_core::synth::parallel_corpus;
use polytok_core::textio::write_lines;

fn polytok(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_polytok"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn polytok");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(s) = stdin {
            pipe.write_all(s.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_fixture(dir: &Path, n: usize) {
    let (src, tgt) = parallel_corpus(n, 3);
    write_lines(&dir.join("src.txt"), &src).unwrap();
    write_lines(&dir.join("tgt.txt"), &tgt).unwrap();
}

#[test]
fn tokenize_and_detokenize_from_stdin() {
    let out = polytok(&["tokenize"], Some("They'd haul seals.\n"));
    assert!(out.status.success());
    assert_eq!(stdout(&out), "They 'd haul seals .\n");

    let out = polytok(&["tokenize", "--mode", "apostrophe"], Some("Yup'ik words.\n"));
    assert_eq!(stdout(&out), "Yup'ik words .\n");

    let out = polytok(&["tokenize", "--detok"], Some("They 'd haul seals .\n"));
    assert_eq!(stdout(&out), "They'd haul seals.\n");
}

#[test]
fn bpe_learn_apply_reverse() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("merges");
    let text = "low low low low low lower lower newest newest newest newest newest newest widest widest widest\n";
    let out = polytok(&["bpe-learn", "--merges", "10", "--out", p(&table)], Some(text));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(&table).unwrap();
    assert!(first.starts_with("#bpe-merges v1 requested=10 learned=10\ne s\n"), "{first}");

    let seg = polytok(&["bpe-apply", "--table", p(&table)], Some("lowest newer\n"));
    let segmented = stdout(&seg);
    assert!(segmented.contains("@@"));
    let back = polytok(&["bpe-apply", "--table", p(&table), "--reverse"], Some(&segmented));
    assert_eq!(stdout(&back), "lowest newer\n");
}

#[test]
fn morf_train_and_segment() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model");
    let text = "walk jump talk walk jump talk walked jumped talked walking jumping talking walks jumps talks\n";
    let out = polytok(&["morf-train", "--seed", "1", "--out", p(&model)], Some(text));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seg = polytok(&["morf-segment", "--model", p(&model)], Some("walked talks\n"));
    assert!(seg.status.success());
    let line = stdout(&seg);
    assert_eq!(line.replace("@@ ", ""), "walked talks\n");
}

#[test]
fn parse_with_bundled_grammar() {
    let out = polytok(&["parse"], Some("pissuryullrunrituk hello\n"));
    assert_eq!(stdout(&out), "pissur@@ yu@@ llru@@ nrit@@ uk hello\n");
    let out = polytok(&["parse", "--emit-glosses"], Some("qaygimi\n"));
    assert_eq!(stdout(&out), "qaygi|men's_community_house@@ mi|LOC\n");
}

#[test]
fn vocab_build_and_apply() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = dir.path().join("vocab");
    let out = polytok(&["vocab", "build", "--limit", "2", "--out", p(&vocab)], Some("a b a c a b\n"));
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&vocab).unwrap(), "#vocab v1\na\t3\nb\t2\n");
    let out = polytok(&["vocab", "apply", "--vocab", p(&vocab)], Some("a c b\n"));
    assert_eq!(stdout(&out), "a <unk> b\n");
}

#[test]
fn bleu_report_and_mismatch_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp");
    let reference = dir.path().join("ref");
    fs::write(&hyp, "the cat sat on mat\n").unwrap();
    fs::write(&reference, "the cat sat on the mat\n").unwrap();
    let out = polytok(&["bleu", "--hyp", p(&hyp), "--ref", p(&reference)], None);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "BLEU = 57.89, 100.0/75.0/66.7/50.0 (BP=0.819, ratio=0.833, hyp_len=5, ref_len=6)\n"
    );

    fs::write(&reference, "x\ny\n").unwrap();
    let out = polytok(&["bleu", "--hyp", p(&hyp), "--ref", p(&reference)], None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let out = polytok(&["bpe-learn"], Some(""));
    assert_eq!(out.status.code(), Some(2));
    let out = polytok(&["no-such-command"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = polytok(&["vocab", "apply", "--vocab", "/nonexistent/vocab"], Some("a\n"));
    assert_eq!(out.status.code(), Some(3));
    let out = polytok(&["run", "--strategy", "bpe", "--source", "s", "--target", "t", "--out-dir", "o"], None);
    assert_eq!(out.status.code(), Some(3), "missing merge_ops is a data error");
}

#[test]
fn split_writes_partition() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 100);
    let out_dir = dir.path().join("split");
    let out = polytok(
        &[
            "split", "--source", p(&dir.path().join("src.txt")), "--target", p(&dir.path().join("tgt.txt")),
            "--dev", "3", "--test", "4", "--seed", "5", "--out-dir", p(&out_dir),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let count = |f: &str| fs::read_to_string(out_dir.join(f)).unwrap().lines().count();
    assert_eq!((count("train.src"), count("dev.tgt"), count("test.ids")), (93, 3, 4));
}

#[test]
fn run_sweep_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 200);
    let config = dir.path().join("sweep.conf");
    fs::write(
        &config,
        "source = src.txt\ntarget = tgt.txt\nout_root = runs\ndev_count = 10\ntest_count = 10\n\n\
         [experiment]\nname = plain\nstrategy = unparsed\n\n\
         [experiment]\nname = bpe20\nstrategy = bpe\nmerge_ops = 20\n\n\
         [experiment]\nname = bpe60\nstrategy = bpe\nmerge_ops = 60\n",
    )
    .unwrap();
    let out = polytok(&["run", "--config", p(&config)], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 3);

    let runs = dir.path().join("runs");
    let first = fs::read(runs.join("bpe60/train.src")).unwrap();
    let again = polytok(&["run", "--config", p(&config), "--set", "seed=0"], None);
    assert!(again.status.success());
    assert_eq!(fs::read(runs.join("bpe60/train.src")).unwrap(), first);
    assert!(!runs.join("bpe60.partial").exists());

    let dev_ref = runs.join("plain/dev.ref");
    let test_ref = runs.join("plain/test.ref");
    let hyp = format!("plain={},{}", p(&dev_ref), p(&test_ref));
    let out = polytok(
        &[
            "compare", "--manifest", p(&runs.join("plain")), "--manifest", p(&runs.join("bpe20")),
            "--manifest", p(&runs.join("bpe60")), "--hyp", &hyp,
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("run"));
    assert!(lines[1].contains("100.00"));
    assert!(lines[2].trim_end().ends_with("-"));

    let out = polytok(&["compare", "--manifest", p(&runs.join("plain"))], None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tampered_artifact_is_an_invariant_violation() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), 60);
    let out_dir = dir.path().join("run");
    let (src, tgt) = (dir.path().join("src.txt"), dir.path().join("tgt.txt"));
    let args = [
        "run", "--name", "t", "--strategy", "unparsed",
        "--source", p(&src), "--target", p(&tgt),
        "--out-dir", p(&out_dir), "--set", "dev_count=5", "--set", "test_count=5",
    ];
    let out = polytok(&args, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let compare = |extra: &[&str]| {
        let mut a = vec!["compare", "--manifest", p(&out_dir), "--manifest", p(&out_dir)];
        a.extend_from_slice(extra);
        polytok(&a, None)
    };
    assert!(compare(&["--verify"]).status.success());
    fs::write(out_dir.join("train.src"), "tampered\n").unwrap();
    assert!(compare(&[]).status.success());
    assert_eq!(compare(&["--verify"]).status.code(), Some(4));
}
