//! End-to-end experiment runs: split, tokenize, learn subword models on the
//! training split, truncate vocabularies, and record everything in a
//! manifest that can be re-verified from the files on disk.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::bleu::{corpus_bleu, DEFAULT_ORDER};
use crate::bpe::{self, word_frequencies, MergeTable};
use crate::corpus::{apply_vocab, build_vocab, load_parallel, split, ParallelCorpus, SplitSpec, Vocabulary};
use crate::error::{Error, Result};
use crate::mdl::{self, SegModel, TrainConfig};
use crate::rule_morph::{self, RuleSet};
use crate::textio;
use crate::word_tok::{tokenize, TokMode};

pub const MANIFEST_FILE: &str = "manifest.txt";
const MANIFEST_FORMAT: &str = "polytok-run-manifest v1";
const DIGEST_ALGORITHM: &str = "sha256";
pub const DEFAULT_VOCAB_LIMIT: usize = 30_000;
pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Unparsed,
    RuleBased,
    Mdl,
    Bpe,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Unparsed => "unparsed",
            Strategy::RuleBased => "rule-based",
            Strategy::Mdl => "mdl",
            Strategy::Bpe => "bpe",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unparsed" => Ok(Strategy::Unparsed),
            "rule-based" | "rules" => Ok(Strategy::RuleBased),
            "mdl" | "morfessor" => Ok(Strategy::Mdl),
            "bpe" => Ok(Strategy::Bpe),
            other => Err(Error::Input(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Sentinel for `rules` meaning "use the bundled toy grammar".
pub const BUNDLED_RULES: &str = "bundled";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub strategy: Strategy,
    /// Required for BPE, forbidden otherwise.
    pub merge_ops: Option<usize>,
    pub vocab_limit: usize,
    pub seed: u64,
    pub dev_count: usize,
    pub test_count: usize,
    pub source: PathBuf,
    pub target: PathBuf,
    pub out_dir: PathBuf,
    /// Rule file for the rule-based strategy; `None` uses the bundled grammar.
    pub rules: Option<PathBuf>,
    pub lowercase: bool,
    /// Also segment the target side (BPE and MDL strategies only).
    pub segment_target: bool,
    pub mdl_threshold: f64,
    pub mdl_max_epochs: usize,
    pub unseen_penalty: f64,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, strategy: Strategy) -> Self {
        Self {
            name: name.into(),
            strategy,
            merge_ops: None,
            vocab_limit: DEFAULT_VOCAB_LIMIT,
            seed: 0,
            dev_count: 3500,
            test_count: 3500,
            source: PathBuf::new(),
            target: PathBuf::new(),
            out_dir: PathBuf::new(),
            rules: None,
            lowercase: false,
            segment_target: false,
            mdl_threshold: mdl::DEFAULT_THRESHOLD,
            mdl_max_epochs: mdl::DEFAULT_MAX_EPOCHS,
            unseen_penalty: mdl::DEFAULT_UNSEEN_PENALTY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(format!("experiment `{}`: {m}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.chars().any(char::is_whitespace) {
            return bad("name must be non-empty without whitespace or slashes".into());
        }
        match (self.strategy, self.merge_ops) {
            (Strategy::Bpe, None) => return bad("bpe requires merge_ops".into()),
            (Strategy::Bpe, Some(0)) => return bad("merge_ops must be positive".into()),
            (s, Some(_)) if s != Strategy::Bpe => {
                return bad(format!("merge_ops is only valid for bpe, not {s}"))
            }
            _ => {}
        }
        if self.vocab_limit == 0 {
            return bad("vocab_limit must be positive".into());
        }
        if self.dev_count == 0 || self.test_count == 0 {
            return bad("dev_count and test_count must be positive".into());
        }
        for (key, p) in [("source", &self.source), ("target", &self.target), ("out_dir", &self.out_dir)] {
            if p.as_os_str().is_empty() {
                return bad(format!("`{key}` is not set"));
            }
        }
        TrainConfig {
            convergence_threshold: self.mdl_threshold,
            max_epochs: self.mdl_max_epochs,
            seed: self.seed,
            unseen_morph_penalty: self.unseen_penalty,
        }
        .validate()
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Input(format!("`{key}`: cannot parse `{v}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Input(format!("`{key}`: expected true/false, got `{v}`"))),
            }
        }
        match key {
            "name" => self.name = value.to_owned(),
            "strategy" => self.strategy = value.parse()?,
            "merge_ops" => {
                self.merge_ops = match value {
                    "" | "none" => None,
                    v => Some(num(key, v)?),
                }
            }
            "vocab_limit" => self.vocab_limit = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dev_count" => self.dev_count = num(key, value)?,
            "test_count" => self.test_count = num(key, value)?,
            "source" => self.source = value.into(),
            "target" => self.target = value.into(),
            "out_dir" => self.out_dir = value.into(),
            "rules" => {
                self.rules = match value {
                    "" | BUNDLED_RULES => None,
                    v => Some(v.into()),
                }
            }
            "lowercase" => self.lowercase = flag(key, value)?,
            "segment_target" => self.segment_target = flag(key, value)?,
            "mdl_threshold" => self.mdl_threshold = num(key, value)?,
            "mdl_max_epochs" => self.mdl_max_epochs = num(key, value)?,
            "unseen_penalty" => self.unseen_penalty = num(key, value)?,
            other => return Err(Error::Input(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Config entries in manifest order. `out_dir` is left out so that the
    /// manifest only depends on what was computed, not where it was written.
    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("name", self.name.clone()),
            ("strategy", self.strategy.to_string()),
            ("merge_ops", self.merge_ops.map_or("none".into(), |m| m.to_string())),
            ("vocab_limit", self.vocab_limit.to_string()),
            ("seed", self.seed.to_string()),
            ("dev_count", self.dev_count.to_string()),
            ("test_count", self.test_count.to_string()),
            ("source", self.source.display().to_string()),
            ("target", self.target.display().to_string()),
            (
                "rules",
                self.rules
                    .as_ref()
                    .map_or(BUNDLED_RULES.into(), |p| p.display().to_string()),
            ),
            ("lowercase", self.lowercase.to_string()),
            ("segment_target", self.segment_target.to_string()),
            ("mdl_threshold", self.mdl_threshold.to_string()),
            ("mdl_max_epochs", self.mdl_max_epochs.to_string()),
            ("unseen_penalty", self.unseen_penalty.to_string()),
        ]
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            convergence_threshold: self.mdl_threshold,
            max_epochs: self.mdl_max_epochs,
            seed: self.seed,
            unseen_morph_penalty: self.unseen_penalty,
        }
    }
}

/// Parses the flat `key = value` config format.
///
/// Keys before the first `[experiment]` header are defaults for every
/// experiment. Relative paths are resolved against `base_dir`. When
/// `out_dir` is absent, an `out_root` default places each run in
/// `<out_root>/<name>`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Vec<ExperimentConfig>> {
    const WHAT: &str = "experiment config";
    let mut defaults: Vec<(usize, String, String)> = Vec::new();
    let mut sections: Vec<Vec<(usize, String, String)>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if line != "[experiment]" {
                return Err(Error::parse(WHAT, lineno, format!("unknown section {line}")));
            }
            sections.push(Vec::new());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(WHAT, lineno, "expected `key = value`"))?;
        let entry = (lineno, k.trim().to_owned(), v.trim().to_owned());
        match sections.last_mut() {
            Some(s) => s.push(entry),
            None => defaults.push(entry),
        }
    }
    if sections.is_empty() {
        return Err(Error::parse(WHAT, 1, "no [experiment] sections"));
    }

    let mut out_root: Option<PathBuf> = None;
    let mut configs = Vec::with_capacity(sections.len());
    for section in &sections {
        let mut cfg = ExperimentConfig::new("", Strategy::Unparsed);
        let mut has_out_dir = false;
        for (lineno, k, v) in defaults.iter().chain(section) {
            if k == "out_root" {
                out_root = Some(base_dir.join(v));
                continue;
            }
            has_out_dir |= k == "out_dir";
            let value = if matches!(k.as_str(), "source" | "target" | "out_dir")
                || (k == "rules" && v != BUNDLED_RULES)
            {
                base_dir.join(v).display().to_string()
            } else {
                v.clone()
            };
            cfg.set(k, &value)
                .map_err(|e| Error::parse(WHAT, *lineno, e.to_string()))?;
        }
        if !has_out_dir {
            if let Some(root) = &out_root {
                cfg.out_dir = root.join(&cfg.name);
            }
        }
        configs.push(cfg);
    }
    let mut names = HashSet::new();
    for c in &configs {
        if !names.insert(c.name.clone()) {
            return Err(Error::Input(format!("duplicate experiment name `{}`", c.name)));
        }
    }
    Ok(configs)
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Result of a run, as written to and read back from `manifest.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    /// Directory holding the manifest and its artifacts.
    pub dir: PathBuf,
    /// Config entries in manifest order.
    pub config: Vec<(String, String)>,
    /// Artifact file name to sha256 digest.
    pub artifacts: BTreeMap<String, String>,
    /// Digest of the word-tokenized training text each learned artifact was
    /// trained on, keyed by side.
    pub training_inputs: BTreeMap<String, String>,
    pub stats: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn name(&self) -> &str {
        self.config_value("name").unwrap_or("")
    }

    pub fn stat(&self, key: &str) -> Option<&str> {
        self.stats.get(key).map(String::as_str)
    }

    pub fn stat_num(&self, key: &str) -> Option<f64> {
        self.stat(key)?.parse().ok()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format: {MANIFEST_FORMAT}");
        let _ = writeln!(out, "digest-algorithm: {DIGEST_ALGORITHM}");
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k}: {v}");
        }
        for (k, v) in &self.artifacts {
            let _ = writeln!(out, "artifact.{k}: {v}");
        }
        for (k, v) in &self.training_inputs {
            let _ = writeln!(out, "training-input.{k}: {v}");
        }
        for (k, v) in &self.stats {
            let _ = writeln!(out, "stats.{k}: {v}");
        }
        out
    }

    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        const WHAT: &str = "run manifest";
        let mut m = RunManifest {
            dir: dir.to_path_buf(),
            config: Vec::new(),
            artifacts: BTreeMap::new(),
            training_inputs: BTreeMap::new(),
            stats: BTreeMap::new(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == format!("format: {MANIFEST_FORMAT}") => {}
            _ => return Err(Error::parse(WHAT, 1, "unrecognized manifest format")),
        }
        match lines.next() {
            Some((_, l)) if l == format!("digest-algorithm: {DIGEST_ALGORITHM}") => {}
            _ => return Err(Error::parse(WHAT, 2, "unsupported digest algorithm")),
        }
        for (i, line) in lines {
            let (key, value) = line
                .split_once(": ")
                .ok_or_else(|| Error::parse(WHAT, i + 1, "expected `key: value`"))?;
            let (group, rest) = key
                .split_once('.')
                .ok_or_else(|| Error::parse(WHAT, i + 1, format!("unknown key `{key}`")))?;
            let (rest, value) = (rest.to_owned(), value.to_owned());
            match group {
                "config" => m.config.push((rest, value)),
                "artifact" => {
                    m.artifacts.insert(rest, value);
                }
                "training-input" => {
                    m.training_inputs.insert(rest, value);
                }
                "stats" => {
                    m.stats.insert(rest, value);
                }
                _ => return Err(Error::parse(WHAT, i + 1, format!("unknown key `{key}`"))),
            }
        }
        Ok(m)
    }

    /// Loads `manifest.txt` from a run directory (or a direct path to it).
    pub fn load(path: &Path) -> Result<Self> {
        let (dir, file) = if path.is_dir() {
            (path.to_path_buf(), path.join(MANIFEST_FILE))
        } else {
            (
                path.parent().unwrap_or(Path::new(".")).to_path_buf(),
                path.to_path_buf(),
            )
        };
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        Self::parse(&text, &dir)
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: name,
            source: Box::new(other),
        },
    })
}

type Lines = Vec<Vec<String>>;

/// Word-tokenized text of one split, both sides.
struct SplitText {
    src: Lines,
    tgt: Lines,
}

fn word_tokenize(corpus: &ParallelCorpus, lowercase: bool) -> SplitText {
    let prep = |s: &str| if lowercase { s.to_lowercase() } else { s.to_owned() };
    SplitText {
        src: corpus
            .sources()
            .map(|s| tokenize(&prep(s), TokMode::ApostrophePreserving))
            .collect(),
        tgt: corpus
            .targets()
            .map(|s| tokenize(&prep(s), TokMode::English))
            .collect(),
    }
}

fn join_lines(lines: &[Vec<String>]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.join(" "));
        out.push('\n');
    }
    out
}

/// A side-specific segmenter learned on the training split.
enum Segmenter {
    Identity,
    Rules(RuleSet),
    Mdl(SegModel, f64),
    Bpe(MergeTable),
}

impl Segmenter {
    fn apply(&self, lines: &Lines) -> Lines {
        match self {
            Segmenter::Identity => lines.clone(),
            Segmenter::Rules(r) => rule_morph::tokenize_corpus(lines, r),
            Segmenter::Mdl(m, penalty) => mdl::segment_corpus(lines, m, *penalty),
            Segmenter::Bpe(t) => bpe::segment_corpus(lines, t),
        }
    }
}

struct Staging {
    files: BTreeMap<String, Vec<u8>>,
}

impl Staging {
    fn put(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), bytes.into());
    }
}

/// Learns the segmenter for one side, recording its artifact and the
/// digest of the text it was trained on.
fn learn_segmenter(
    config: &ExperimentConfig,
    side: &str,
    train: &Lines,
    staging: &mut Staging,
    training_inputs: &mut BTreeMap<String, String>,
) -> Result<Segmenter> {
    let segment_side = side == "src" || config.segment_target;
    let strategy = match (config.strategy, side) {
        (Strategy::RuleBased, "tgt") => Strategy::Unparsed,
        (s, _) if segment_side => s,
        _ => Strategy::Unparsed,
    };
    let learns = matches!(strategy, Strategy::Mdl | Strategy::Bpe);
    if learns {
        let text = join_lines(train);
        training_inputs.insert(side.to_owned(), sha256_hex(text.as_bytes()));
        staging.put(format!("train.tok.{side}"), text);
    }
    Ok(match strategy {
        Strategy::Unparsed => Segmenter::Identity,
        Strategy::RuleBased => {
            let rules = match &config.rules {
                Some(p) => RuleSet::load(p)?,
                None => RuleSet::bundled(),
            };
            Segmenter::Rules(rules)
        }
        Strategy::Mdl => {
            let words = word_frequencies(train);
            let model = mdl::train(&words, config.train_config())?;
            staging.put(format!("segmodel.{side}"), model.to_file_string());
            Segmenter::Mdl(model, config.unseen_penalty)
        }
        Strategy::Bpe => {
            let words = word_frequencies(train);
            let merges = config.merge_ops.expect("validated");
            let table = bpe::learn_merges(&words, merges)?;
            staging.put(format!("merges.{side}"), table.to_file_string());
            Segmenter::Bpe(table)
        }
    })
}

struct SideStats {
    lines: usize,
    tokens: usize,
    types: usize,
    unk: usize,
}

fn side_stats(segmented: &Lines, vocab: &Vocabulary) -> SideStats {
    let mut types = BTreeSet::new();
    let mut tokens = 0;
    let mut unk = 0;
    for line in segmented {
        for t in line {
            tokens += 1;
            types.insert(t.as_str());
            if !vocab.contains(t) {
                unk += 1;
            }
        }
    }
    SideStats {
        lines: segmented.len(),
        tokens,
        types: types.len(),
        unk,
    }
}

/// Runs one experiment end to end and writes its outputs to
/// `config.out_dir`. Outputs are assembled in a sibling `.partial`
/// directory and moved into place only on success.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    stage("config", config.validate())?;
    let corpus = stage("load", load_parallel(&config.source, &config.target))?;
    let spec = SplitSpec {
        dev_count: config.dev_count,
        test_count: config.test_count,
        seed: config.seed,
    };
    let parts = stage("split", split(&corpus, &spec))?;
    let corpora = [&parts.train, &parts.dev, &parts.test];
    let texts: Vec<SplitText> = corpora
        .iter()
        .map(|c| word_tokenize(c, config.lowercase))
        .collect();

    let mut staging = Staging {
        files: BTreeMap::new(),
    };
    let mut training_inputs = BTreeMap::new();
    let src_seg = stage(
        "learn",
        learn_segmenter(config, "src", &texts[0].src, &mut staging, &mut training_inputs),
    )?;
    let tgt_seg = stage(
        "learn",
        learn_segmenter(config, "tgt", &texts[0].tgt, &mut staging, &mut training_inputs),
    )?;

    let segmented: Vec<(Lines, Lines)> = texts
        .iter()
        .map(|t| (src_seg.apply(&t.src), tgt_seg.apply(&t.tgt)))
        .collect();

    let src_vocab = stage("vocab", build_vocab(&segmented[0].0, config.vocab_limit))?;
    let tgt_vocab = stage("vocab", build_vocab(&segmented[0].1, config.vocab_limit))?;
    staging.put("vocab.src", src_vocab.to_file_string());
    staging.put("vocab.tgt", tgt_vocab.to_file_string());

    let mut stats = BTreeMap::new();
    for (i, name) in SPLITS.iter().enumerate() {
        let (src, tgt) = &segmented[i];
        let src_out: Lines = src.iter().map(|l| apply_vocab(l, &src_vocab)).collect();
        let tgt_out: Lines = tgt.iter().map(|l| apply_vocab(l, &tgt_vocab)).collect();
        staging.put(format!("{name}.src"), join_lines(&src_out));
        staging.put(format!("{name}.tgt"), join_lines(&tgt_out));
        staging.put(format!("{name}.ref"), join_lines(&texts[i].tgt));
        let ids: String = corpora[i].indices().iter().map(|ix| format!("{ix}\n")).collect();
        staging.put(format!("{name}.ids"), ids);

        stats.insert(format!("{name}.lines"), corpora[i].len().to_string());
        for (side, lines, vocab) in [("src", src, &src_vocab), ("tgt", tgt, &tgt_vocab)] {
            let s = side_stats(lines, vocab);
            let per_line = if s.lines == 0 { 0.0 } else { s.tokens as f64 / s.lines as f64 };
            let oov = if s.tokens == 0 { 0.0 } else { s.unk as f64 / s.tokens as f64 };
            stats.insert(format!("{name}.{side}.tokens"), s.tokens.to_string());
            stats.insert(format!("{name}.{side}.types"), s.types.to_string());
            stats.insert(format!("{name}.{side}.tokens_per_line"), format!("{per_line:.3}"));
            stats.insert(format!("{name}.{side}.oov_rate"), format!("{oov:.6}"));
        }
    }
    stats.insert("vocab.src.size".into(), src_vocab.len().to_string());
    stats.insert("vocab.tgt.size".into(), tgt_vocab.len().to_string());
    for (side, seg) in [("src", &src_seg), ("tgt", &tgt_seg)] {
        if let Segmenter::Bpe(t) = seg {
            stats.insert(format!("learned_merges.{side}"), t.len().to_string());
        }
        if let Segmenter::Mdl(m, _) = seg {
            stats.insert(format!("morphs.{side}"), m.lexicon().len().to_string());
        }
    }

    let artifacts: BTreeMap<String, String> = staging
        .files
        .iter()
        .map(|(name, bytes)| (name.clone(), sha256_hex(bytes)))
        .collect();
    let manifest = RunManifest {
        dir: config.out_dir.clone(),
        config: config
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect(),
        artifacts,
        training_inputs,
        stats,
    };
    staging.put(MANIFEST_FILE, manifest.to_text());
    stage("write", write_outputs(&config.out_dir, &staging))?;
    Ok(manifest)
}

fn write_outputs(out_dir: &Path, staging: &Staging) -> Result<()> {
    let mut partial = out_dir.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    if partial.exists() {
        fs::remove_dir_all(&partial).map_err(|e| Error::io(&partial, e))?;
    }
    let result = (|| {
        fs::create_dir_all(&partial).map_err(|e| Error::io(&partial, e))?;
        for (name, bytes) in &staging.files {
            let p = partial.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        }
        if out_dir.exists() {
            fs::remove_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        }
        fs::rename(&partial, out_dir).map_err(|e| Error::io(out_dir, e))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&partial);
    }
    result
}

fn read_ids(path: &Path) -> Result<Vec<usize>> {
    textio::read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.parse()
                .map_err(|_| Error::parse("split ids", i + 1, format!("bad index `{l}`")))
        })
        .collect()
}

/// Re-checks a finished run from disk.
///
/// * every artifact digest matches its file;
/// * the `.ids` files partition the corpus with the configured sizes;
/// * the training-input digests equal the digest of the train split
///   re-tokenized from the original corpus files, so learned artifacts
///   cannot have seen dev or test lines.
///
/// Failures are reported as [`Error::Invariant`].
pub fn verify_run(manifest: &RunManifest) -> Result<()> {
    let fail = |m: String| Err(Error::Invariant(format!("run `{}`: {m}", manifest.name())));
    for (name, digest) in &manifest.artifacts {
        let actual = file_digest(&manifest.dir.join(name))?;
        if &actual != digest {
            return fail(format!("artifact `{name}` digest mismatch"));
        }
    }

    let cfg = |k: &str| manifest.config_value(k).unwrap_or_default().to_owned();
    let source = PathBuf::from(cfg("source"));
    let target = PathBuf::from(cfg("target"));
    let corpus = load_parallel(&source, &target)?;

    let ids: Vec<Vec<usize>> = SPLITS
        .iter()
        .map(|s| read_ids(&manifest.dir.join(format!("{s}.ids"))))
        .collect::<Result<_>>()?;
    let mut all: Vec<usize> = ids.iter().flatten().copied().collect();
    all.sort_unstable();
    if all != (0..corpus.len()).collect::<Vec<_>>() {
        return fail("split ids do not partition the corpus".into());
    }
    let expected_sizes = [
        corpus.len().saturating_sub(cfg("dev_count").parse::<usize>().unwrap_or(0) + cfg("test_count").parse::<usize>().unwrap_or(0)),
        cfg("dev_count").parse().unwrap_or(usize::MAX),
        cfg("test_count").parse().unwrap_or(usize::MAX),
    ];
    for ((s, got), want) in SPLITS.iter().zip(&ids).zip(expected_sizes) {
        if got.len() != want {
            return fail(format!("{s} split has {} lines, expected {want}", got.len()));
        }
    }

    let train_set: HashSet<usize> = ids[0].iter().copied().collect();
    let train_pairs = corpus
        .pairs()
        .iter()
        .filter(|p| train_set.contains(&p.index))
        .cloned()
        .collect();
    let train = ParallelCorpus::from_pairs("train", train_pairs)?;
    let text = word_tokenize(&train, cfg("lowercase") == "true");
    for (side, digest) in &manifest.training_inputs {
        let lines = match side.as_str() {
            "src" => &text.src,
            "tgt" => &text.tgt,
            other => return fail(format!("unknown training-input side `{other}`")),
        };
        if &sha256_hex(join_lines(lines).as_bytes()) != digest {
            return fail(format!("training input for `{side}` is not the train split"));
        }
    }
    let strategy: Strategy = cfg("strategy").parse()?;
    if matches!(strategy, Strategy::Bpe | Strategy::Mdl) && !manifest.training_inputs.contains_key("src") {
        return fail("learned strategy without a recorded training input".into());
    }
    Ok(())
}

/// Hypothesis files for one run, scored against the run's `.ref` files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypFiles {
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub strategy: String,
    pub merge_ops: String,
    pub vocab_src: usize,
    pub types_train_src: usize,
    pub oov_dev_src: f64,
    pub oov_test_src: f64,
    pub tokens_per_line_src: f64,
    pub bleu_dev: Option<f64>,
    pub bleu_test: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let header = [
            "run", "strategy", "merges", "vocab.src", "types.train.src", "oov.dev.src",
            "oov.test.src", "tok/line.src", "bleu.dev", "bleu.test",
        ];
        let bleu = |b: Option<f64>| b.map_or("-".to_owned(), |v| format!("{:.2}", 100.0 * v));
        let rows: Vec<[String; 10]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    r.strategy.clone(),
                    r.merge_ops.clone(),
                    r.vocab_src.to_string(),
                    r.types_train_src.to_string(),
                    format!("{:.4}", r.oov_dev_src),
                    format!("{:.4}", r.oov_test_src),
                    format!("{:.3}", r.tokens_per_line_src),
                    bleu(r.bleu_dev),
                    bleu(r.bleu_test),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let fmt_row = |cells: Vec<&str>, out: &mut String| {
            let line: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        };
        fmt_row(header.to_vec(), &mut out);
        for r in &rows {
            fmt_row(r.iter().map(String::as_str).collect(), &mut out);
        }
        out
    }
}

fn bleu_file(hyp: &Path, reference: &Path) -> Result<f64> {
    let hyps = textio::read_token_lines(hyp)?;
    let refs = textio::read_token_lines(reference)?;
    if hyps.len() != refs.len() {
        return Err(Error::Alignment {
            source_lines: hyps.len(),
            target_lines: refs.len(),
        });
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = hyps.into_iter().zip(refs).collect();
    Ok(corpus_bleu(&pairs, DEFAULT_ORDER)?.score)
}

/// Tabulates corpus statistics (and BLEU, where hypotheses are given) for
/// runs over the same corpus split.
pub fn compare_runs(
    manifests: &[RunManifest],
    hyps: &BTreeMap<String, HypFiles>,
) -> Result<Comparison> {
    if manifests.len() < 2 {
        return Err(Error::Input("comparison needs at least two runs".into()));
    }
    let sizes = |m: &RunManifest| -> Vec<Option<String>> {
        SPLITS
            .iter()
            .map(|s| m.stat(&format!("{s}.lines")).map(str::to_owned))
            .collect()
    };
    let reference = sizes(&manifests[0]);
    for m in &manifests[1..] {
        if sizes(m) != reference {
            return Err(Error::Input(format!(
                "run `{}` has different split sizes from `{}`",
                m.name(),
                manifests[0].name()
            )));
        }
    }
    let num = |m: &RunManifest, k: &str| -> Result<f64> {
        m.stat_num(k)
            .ok_or_else(|| Error::Input(format!("run `{}` lacks stat `{k}`", m.name())))
    };
    let mut rows = Vec::with_capacity(manifests.len());
    for m in manifests {
        let h = hyps.get(m.name()).cloned().unwrap_or_default();
        let score = |f: &Option<PathBuf>, split: &str| -> Result<Option<f64>> {
            f.as_ref()
                .map(|p| bleu_file(p, &m.dir.join(format!("{split}.ref"))))
                .transpose()
        };
        rows.push(ComparisonRow {
            name: m.name().to_owned(),
            strategy: m.config_value("strategy").unwrap_or("").to_owned(),
            merge_ops: m.config_value("merge_ops").unwrap_or("none").to_owned(),
            vocab_src: num(m, "vocab.src.size")? as usize,
            types_train_src: num(m, "train.src.types")? as usize,
            oov_dev_src: num(m, "dev.src.oov_rate")?,
            oov_test_src: num(m, "test.src.oov_rate")?,
            tokens_per_line_src: num(m, "train.src.tokens_per_line")?,
            bleu_dev: score(&h.dev, "dev")?,
            bleu_test: score(&h.test, "test")?,
        });
    }
    Ok(Comparison { rows })
}
