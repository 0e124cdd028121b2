//! Brute-force reference implementations used as test oracles. They share no
//! code with the library routines they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use polytok_core::mdl::SegModel;
use polytok_core::rule_morph::RuleSet;

pub fn words(pairs: &[(&str, u64)]) -> Vec<(String, u64)> {
    pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect()
}

fn start_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == chars.len() {
                format!("{c}</w>")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Weighted counts of every adjacent symbol pair, recounted from scratch.
pub fn pair_counts(state: &[(Vec<String>, u64)]) -> BTreeMap<(String, String), u64> {
    let mut counts = BTreeMap::new();
    for (syms, c) in state {
        for w in syms.windows(2) {
            *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += c;
        }
    }
    counts
}

fn merge_everywhere(syms: &[String], l: &str, r: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
            out.push(format!("{l}{r}"));
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

/// Textbook BPE: full recount each step, highest count wins, ties by
/// ascending (left, right).
pub fn naive_bpe(words: &[(String, u64)], n: usize, min_freq: u64) -> Vec<(String, String, u64)> {
    let mut state: Vec<(Vec<String>, u64)> =
        words.iter().map(|(w, c)| (start_symbols(w), *c)).collect();
    let mut merges = Vec::new();
    while merges.len() < n {
        let counts = pair_counts(&state);
        let best = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)));
        let Some(((l, r), &c)) = best else { break };
        if c < min_freq {
            break;
        }
        let (l, r) = (l.clone(), r.clone());
        for (syms, _) in &mut state {
            *syms = merge_everywhere(syms, &l, &r);
        }
        merges.push((l, r, c));
    }
    merges
}

/// Applies each merge in table order over the whole word, then adds the
/// continuation markers.
pub fn replay_merges(word: &str, merges: &[(String, String)]) -> Vec<String> {
    let mut syms = start_symbols(word);
    for (l, r) in merges {
        syms = merge_everywhere(&syms, l, r);
    }
    let n = syms.len();
    syms.into_iter()
        .enumerate()
        .map(|(i, s)| {
            if i + 1 == n {
                s.trim_end_matches("</w>").to_owned()
            } else {
                format!("{s}@@")
            }
        })
        .collect()
}

/// Cost of a fixed segmentation under the Viterbi scoring rule.
pub fn segmentation_cost(morphs: &[String], model: &SegModel, penalty: f64) -> f64 {
    let total = model.total_tokens() as f64;
    morphs
        .iter()
        .map(|m| match model.lexicon().get(m) {
            Some(&c) => -(c as f64 / total).log2(),
            None => penalty * m.chars().count() as f64,
        })
        .sum()
}

/// Every segmentation of `word`, by enumerating all 2^(n-1) cut masks.
pub fn all_segmentations(word: &str) -> Vec<Vec<String>> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    assert!((1..=20).contains(&n));
    (0u32..1 << (n - 1))
        .map(|mask| {
            let mut out = vec![String::new()];
            for (i, c) in chars.iter().enumerate() {
                out.last_mut().unwrap().push(*c);
                if i + 1 < n && mask & (1 << i) != 0 {
                    out.push(String::new());
                }
            }
            out
        })
        .collect()
}

pub fn exhaustive_min_cost(word: &str, model: &SegModel, penalty: f64) -> f64 {
    all_segmentations(word)
        .iter()
        .map(|s| segmentation_cost(s, model, penalty))
        .fold(f64::INFINITY, f64::min)
}

/// Forward generation straight from the rule data: plain appends, `-`
/// requires and removes a final consonant, `~` requires and removes a
/// final `e`.
pub fn oracle_generate(rules: &RuleSet, base: &str, suffixes: &[usize]) -> Option<String> {
    let mut s = base.to_owned();
    for &i in suffixes {
        let rule = &rules.suffixes()[i];
        match rule.join.symbol() {
            '+' => {}
            '-' => {
                let last = s.chars().last()?;
                if !rules.consonants().contains(&last) {
                    return None;
                }
                s.pop();
            }
            '~' => {
                if !s.ends_with('e') {
                    return None;
                }
                s.pop();
            }
            other => panic!("unexpected operator {other}"),
        }
        s.push_str(&rule.form);
    }
    Some(s)
}

/// Surface form to the set of (base, suffix indices) generating it, over
/// every suffix sequence of length <= `depth` whose last suffix is
/// terminal.
pub fn exhaustive_derivations(
    rules: &RuleSet,
    depth: usize,
) -> BTreeMap<String, BTreeSet<(String, Vec<usize>)>> {
    let n = rules.suffixes().len();
    let mut out: BTreeMap<String, BTreeSet<(String, Vec<usize>)>> = BTreeMap::new();
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for i in 0..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    for base in rules.bases().keys() {
        for seq in &seqs {
            if seq.last().is_some_and(|&i| !rules.suffixes()[i].terminal) {
                continue;
            }
            if let Some(surface) = oracle_generate(rules, base, seq) {
                out.entry(surface).or_default().insert((base.clone(), seq.clone()));
            }
        }
    }
    out
}
