use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polytok_core::bleu::{corpus_bleu, format_report, DEFAULT_ORDER};
use polytok_core::bpe::{self, word_frequencies, MergeTable, DEFAULT_MIN_FREQUENCY};
use polytok_core::corpus::{apply_vocab, build_vocab, load_parallel, save_parallel, split, SplitSpec, Vocabulary};
use polytok_core::mdl::{self, SegModel, TrainConfig};
use polytok_core::pipeline::{
    compare_runs, load_config, run_experiment, verify_run, ExperimentConfig, HypFiles, RunManifest,
    Strategy,
};
use polytok_core::rule_morph::{tokenize_corpus_with, Emit, RuleSet};
use polytok_core::textio::{self, tokens};
use polytok_core::word_tok::{detokenize, tokenize, TokMode};

const EXIT_DATA: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(name = "polytok", version, about = "MT preprocessing for polysynthetic languages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Optional input/output files; stdin/stdout when omitted.
#[derive(Args)]
struct Io {
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a parallel corpus into train/dev/test.
    Split {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        dev: usize,
        #[arg(long)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes {train,dev,test}.{src,tgt,ids} here.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Word-tokenize (or detokenize) text line by line.
    Tokenize {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = TokMode::English)]
        mode: TokMode,
        #[arg(long)]
        lowercase: bool,
        /// Join space-separated tokens back into text.
        #[arg(long)]
        detok: bool,
    },
    /// Learn a BPE merge table from tokenized text.
    BpeLearn {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        merges: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQUENCY)]
        min_frequency: u64,
    },
    /// Segment tokenized text with a merge table.
    BpeApply {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        table: PathBuf,
        /// Undo segmentation instead: join `@@` continuations.
        #[arg(long)]
        reverse: bool,
    },
    /// Train an MDL segmentation model from tokenized text.
    MorfTrain {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = mdl::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = mdl::DEFAULT_MAX_EPOCHS)]
        max_epochs: usize,
    },
    /// Segment tokenized text with a trained MDL model.
    MorfSegment {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = mdl::DEFAULT_UNSEEN_PENALTY)]
        penalty: f64,
    },
    /// Morphologically parse tokenized text with a rule grammar.
    Parse {
        #[command(flatten)]
        io: Io,
        /// Rule file; the bundled toy grammar when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        emit_glosses: bool,
    },
    /// Build or apply a truncated vocabulary.
    Vocab {
        #[command(subcommand)]
        action: VocabAction,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    /// Run one or more experiments end to end.
    Run {
        /// Experiment config file (`key = value`, `[experiment]` sections).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        merge_ops: Option<usize>,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override any config key, applied to every experiment.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Skip re-verifying digests and the no-leakage check.
        #[arg(long)]
        no_verify: bool,
    },
    /// Tabulate finished runs side by side.
    Compare {
        /// Run directory or manifest file; at least two.
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        /// Hypotheses for a run: NAME=DEV_FILE,TEST_FILE (either may be empty).
        #[arg(long = "hyp", value_name = "NAME=DEV,TEST")]
        hyps: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-check digests and the no-leakage property of every run first.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Subcommand)]
enum VocabAction {
    Build {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = polytok_core::pipeline::DEFAULT_VOCAB_LIMIT)]
        limit: usize,
    },
    Apply {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        vocab: PathBuf,
    },
}

fn read_input(path: Option<&Path>) -> Result<Vec<String>> {
    match path {
        Some(p) => Ok(textio::read_lines(p)?),
        None => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf).context("reading stdin")?;
            Ok(buf.lines().map(|l| l.strip_suffix('\r').unwrap_or(l).to_owned()).collect())
        }
    }
}

fn read_token_input(path: Option<&Path>) -> Result<Vec<Vec<String>>> {
    Ok(read_input(path)?.iter().map(|l| tokens(l)).collect())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(textio::write_string(p, text)?),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing stdout")?;
            Ok(())
        }
    }
}

fn join_token_lines(lines: &[Vec<String>]) -> String {
    lines.iter().map(|l| l.join(" ") + "\n").collect()
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Split { source, target, dev, test, seed, out_dir } => {
            let corpus = load_parallel(&source, &target)?;
            let spec = SplitSpec { dev_count: dev, test_count: test, seed };
            let parts = split(&corpus, &spec)?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
                save_parallel(
                    part,
                    &out_dir.join(format!("{name}.src")),
                    &out_dir.join(format!("{name}.tgt")),
                )?;
                textio::write_lines(
                    &out_dir.join(format!("{name}.ids")),
                    part.indices().iter().map(|i| i.to_string()),
                )?;
                eprintln!("{name}: {} pairs", part.len());
            }
        }
        Command::Tokenize { io, mode, lowercase, detok } => {
            let lines = read_input(io.input.as_deref())?;
            let mut out = String::new();
            for line in &lines {
                let line = if lowercase { line.to_lowercase() } else { line.clone() };
                if detok {
                    out.push_str(&detokenize(&tokens(&line), mode));
                } else {
                    out.push_str(&tokenize(&line, mode).join(" "));
                }
                out.push('\n');
            }
            write_output(io.out.as_deref(), &out)?;
        }
        Command::BpeLearn { io, merges, min_frequency } => {
            let lines = read_token_input(io.input.as_deref())?;
            let (table, _) = bpe::learn_merges_traced(&word_frequencies(&lines), merges, min_frequency)?;
            if table.len() < merges {
                eprintln!("learned {} of {merges} merges (no pair left at min frequency)", table.len());
            }
            write_output(io.out.as_deref(), &table.to_file_string())?;
        }
        Command::BpeApply { io, table, reverse } => {
            let lines = read_token_input(io.input.as_deref())?;
            let out = if reverse {
                lines.iter().map(|l| bpe::unsegment(l)).collect::<Vec<_>>()
            } else {
                bpe::segment_corpus(&lines, &MergeTable::load(&table)?)
            };
            write_output(io.out.as_deref(), &join_token_lines(&out))?;
        }
        Command::MorfTrain { io, seed, threshold, max_epochs } => {
            let lines = read_token_input(io.input.as_deref())?;
            let config = TrainConfig {
                convergence_threshold: threshold,
                max_epochs,
                seed,
                ..TrainConfig::default()
            };
            let (model, hist) = mdl::train_with_history(&word_frequencies(&lines), config)?;
            eprintln!(
                "cost {:.2} -> {:.2} bits over {} epochs, {} morphs",
                hist.initial_cost,
                hist.epoch_costs.last().copied().unwrap_or(hist.initial_cost),
                hist.epoch_costs.len(),
                model.lexicon().len()
            );
            write_output(io.out.as_deref(), &model.to_file_string())?;
        }
        Command::MorfSegment { io, model, penalty } => {
            let lines = read_token_input(io.input.as_deref())?;
            let model = SegModel::load(&model)?;
            let out = mdl::segment_corpus(&lines, &model, penalty);
            write_output(io.out.as_deref(), &join_token_lines(&out))?;
        }
        Command::Parse { io, rules, emit_glosses } => {
            let rules = match rules {
                Some(p) => RuleSet::load(&p)?,
                None => RuleSet::bundled(),
            };
            let lines = read_token_input(io.input.as_deref())?;
            let emit = if emit_glosses { Emit::SurfaceAndGloss } else { Emit::Surface };
            let out = tokenize_corpus_with(&lines, &rules, emit);
            write_output(io.out.as_deref(), &join_token_lines(&out))?;
        }
        Command::Vocab { action } => match action {
            VocabAction::Build { io, limit } => {
                let lines = read_token_input(io.input.as_deref())?;
                let vocab = build_vocab(&lines, limit)?;
                write_output(io.out.as_deref(), &vocab.to_file_string())?;
            }
            VocabAction::Apply { io, vocab } => {
                let vocab = Vocabulary::load(&vocab)?;
                let lines = read_token_input(io.input.as_deref())?;
                let out: Vec<Vec<String>> = lines.iter().map(|l| apply_vocab(l, &vocab)).collect();
                write_output(io.out.as_deref(), &join_token_lines(&out))?;
            }
        },
        Command::Bleu { hyp, reference, order } => {
            let hyps = textio::read_token_lines(&hyp)?;
            let refs = textio::read_token_lines(&reference)?;
            if hyps.len() != refs.len() {
                return Err(polytok_core::Error::Alignment {
                    source_lines: hyps.len(),
                    target_lines: refs.len(),
                }
                .into());
            }
            let pairs: Vec<_> = hyps.into_iter().zip(refs).collect();
            println!("{}", format_report(&corpus_bleu(&pairs, order)?));
        }
        Command::Run {
            config,
            name,
            strategy,
            merge_ops,
            source,
            target,
            out_dir,
            overrides,
            no_verify,
        } => {
            let mut configs = match &config {
                Some(p) => load_config(p)?,
                None => vec![ExperimentConfig::new(
                    name.clone().unwrap_or_else(|| "run".into()),
                    strategy.unwrap_or(Strategy::Unparsed),
                )],
            };
            if config.is_some() && configs.len() > 1 && (name.is_some() || out_dir.is_some()) {
                bail!("--name and --out-dir cannot override a multi-experiment config");
            }
            for cfg in &mut configs {
                if let Some(v) = &name {
                    cfg.name = v.clone();
                }
                if let Some(v) = strategy {
                    cfg.strategy = v;
                }
                if let Some(v) = merge_ops {
                    cfg.merge_ops = Some(v);
                }
                if let Some(v) = &source {
                    cfg.source = v.clone();
                }
                if let Some(v) = &target {
                    cfg.target = v.clone();
                }
                if let Some(v) = &out_dir {
                    cfg.out_dir = v.clone();
                }
                for kv in &overrides {
                    let (k, v) = kv
                        .split_once('=')
                        .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
                    cfg.set(k.trim(), v.trim())?;
                }
            }
            for cfg in &configs {
                let manifest = run_experiment(cfg)?;
                if !no_verify {
                    verify_run(&RunManifest::load(&cfg.out_dir)?)?;
                }
                println!("{}\t{}", manifest.name(), cfg.out_dir.display());
            }
        }
        Command::Compare { manifests, hyps, out, verify } => {
            let loaded = manifests
                .iter()
                .map(|p| RunManifest::load(p))
                .collect::<polytok_core::Result<Vec<_>>>()?;
            if verify {
                for m in &loaded {
                    verify_run(m)?;
                }
            }
            let mut hyp_files = BTreeMap::new();
            for spec in &hyps {
                let (name, files) = spec
                    .split_once('=')
                    .with_context(|| format!("--hyp expects NAME=DEV,TEST, got `{spec}`"))?;
                let (dev, test) = files.split_once(',').unwrap_or((files, ""));
                let opt = |s: &str| (!s.is_empty()).then(|| PathBuf::from(s));
                hyp_files.insert(name.to_owned(), HypFiles { dev: opt(dev), test: opt(test) });
            }
            for name in hyp_files.keys() {
                if !loaded.iter().any(|m| m.name() == name) {
                    bail!("--hyp names unknown run `{name}`");
                }
            }
            let table = compare_runs(&loaded, &hyp_files)?.to_table();
            write_output(out.as_deref(), &table)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<polytok_core::Error>() {
        Some(e) if e.is_invariant() => EXIT_INVARIANT,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
