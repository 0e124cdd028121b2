//! Preprocessing toolkit for machine translation out of polysynthetic
//! languages: parallel corpus handling, word tokenization, BPE, an MDL
//! morph segmenter, a rule-based morphological parser, corpus BLEU and an
//! experiment pipeline tying them together.

pub mod bleu;
pub mod bpe;
pub mod corpus;
pub mod error;
pub mod mdl;
pub mod pipeline;
pub mod rng;
pub mod rule_morph;
pub mod synth;
pub mod textio;
pub mod word_tok;

pub use bleu::{corpus_bleu, format_report, BleuReport, NgramCounts};
pub use bpe::{apply_merges, learn_merges, MergeTable, WordFreq};
pub use corpus::{
    apply_vocab, build_vocab, load_parallel, split, ParallelCorpus, SentencePair, Split, SplitSpec,
    Vocabulary,
};
pub use error::{Error, Result};
pub use mdl::{SegModel, TrainConfig, Trainer};
pub use pipeline::{
    compare_runs, run_experiment, verify_run, Comparison, ExperimentConfig, RunManifest, Strategy,
};
pub use rng::XorShift64Star;
pub use rule_morph::{analyze, Analysis, RuleSet};
pub use word_tok::{detokenize, tokenize, TokMode};
