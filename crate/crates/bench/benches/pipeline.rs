use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polytok_core::bleu::corpus_bleu;
use polytok_core::bpe::{learn_merges, segment_corpus, word_frequencies};
use polytok_core::mdl::{segment_viterbi, train, TrainConfig};
use polytok_core::rule_morph::{tokenize_corpus, RuleSet};
use polytok_core::synth::{parallel_corpus, stem_suffix_words};
use polytok_core::word_tok::{tokenize, TokMode};

fn source_lines(n: usize) -> Vec<Vec<String>> {
    let (src, _) = parallel_corpus(n, 1);
    src.iter()
        .map(|l| tokenize(l, TokMode::ApostrophePreserving))
        .collect()
}

fn bench_tokenize(c: &mut Criterion) {
    let (src, tgt) = parallel_corpus(2000, 1);
    c.bench_function("word_tok/english_2k_lines", |b| {
        b.iter(|| {
            for l in &tgt {
                black_box(tokenize(l, TokMode::English));
            }
        })
    });
    c.bench_function("word_tok/apostrophe_2k_lines", |b| {
        b.iter(|| {
            for l in &src {
                black_box(tokenize(l, TokMode::ApostrophePreserving));
            }
        })
    });
}

fn bench_bpe(c: &mut Criterion) {
    let lines = source_lines(2000);
    let freqs = word_frequencies(&lines);
    let mut group = c.benchmark_group("bpe");
    for merges in [100, 300, 1000] {
        group.bench_with_input(BenchmarkId::new("learn", merges), &merges, |b, &n| {
            b.iter(|| learn_merges(black_box(&freqs), n).unwrap())
        });
    }
    let table = learn_merges(&freqs, 300).unwrap();
    group.bench_function("apply_2k_lines", |b| {
        b.iter(|| segment_corpus(black_box(&lines), &table))
    });
    group.finish();
}

fn bench_mdl(c: &mut Criterion) {
    let words = stem_suffix_words(20, 10, 7);
    let mut group = c.benchmark_group("mdl");
    group.sample_size(10);
    group.bench_function("train_200_types", |b| {
        b.iter(|| train(black_box(&words), TrainConfig::default()).unwrap())
    });
    let model = train(&words, TrainConfig::default()).unwrap();
    group.bench_function("viterbi_200_types", |b| {
        b.iter(|| {
            for w in &words {
                black_box(segment_viterbi(&w.word, &model, 20.0));
            }
        })
    });
    group.finish();
}

fn bench_rules(c: &mut Criterion) {
    let rules = RuleSet::bundled();
    let lines = source_lines(500);
    c.bench_function("rule_morph/tokenize_500_lines", |b| {
        b.iter(|| tokenize_corpus(black_box(&lines), &rules))
    });
}

fn bench_bleu(c: &mut Criterion) {
    let (_, tgt) = parallel_corpus(3000, 2);
    let (_, hyp) = parallel_corpus(3000, 3);
    let pairs: Vec<(Vec<String>, Vec<String>)> = hyp
        .iter()
        .zip(&tgt)
        .map(|(h, r)| (tokenize(h, TokMode::English), tokenize(r, TokMode::English)))
        .collect();
    c.bench_function("bleu/corpus_3k_pairs", |b| {
        b.iter(|| corpus_bleu(black_box(&pairs), 4).unwrap())
    });
}

criterion_group!(benches, bench_tokenize, bench_bpe, bench_mdl, bench_rules, bench_bleu);
criterion_main!(benches);
