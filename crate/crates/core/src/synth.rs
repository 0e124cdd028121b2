//! Deterministic synthetic corpora for tests, benchmarks and demos.
//!
//! None of this is real language data. Source sentences are built from
//! derivations of the bundled toy grammar plus some out-of-grammar words;
//! target sentences are English-like renderings of the glosses.

use std::collections::BTreeMap;

use crate::bpe::WordFreq;
use crate::rng::XorShift64Star;
use crate::rule_morph::{generate, RuleSet, SuffixRule};

const CONSONANTS: &[char] = &['p', 't', 'k', 'q', 'v', 'l', 's', 'g', 'r', 'm', 'n', 'c'];
const VOWELS: &[char] = &['a', 'i', 'u', 'e'];

fn pick<'a, T>(rng: &mut XorShift64Star, items: &'a [T]) -> &'a T {
    &items[rng.below(items.len() as u64) as usize]
}

fn syllables(rng: &mut XorShift64Star, n: usize) -> String {
    let mut s = String::new();
    for _ in 0..n {
        s.push(*pick(rng, CONSONANTS));
        s.push(*pick(rng, VOWELS));
    }
    s
}

const ZIPF_TOP: u64 = 100;

/// `n_stems × n_suffixes` concatenative word types with Zipf-like counts
/// (`count = ceil(100 / rank)` over a shuffled rank order). Stems are two
/// or three CV syllables; the first suffix is empty and the rest are one CV
/// syllable plus a consonant.
pub fn stem_suffix_words(n_stems: usize, n_suffixes: usize, seed: u64) -> Vec<WordFreq> {
    let mut rng = XorShift64Star::new(seed);
    let mut stems: Vec<String> = Vec::new();
    while stems.len() < n_stems {
        let len = 2 + rng.below(2) as usize;
        let s = syllables(&mut rng, len);
        if !stems.contains(&s) {
            stems.push(s);
        }
    }
    // The empty suffix keeps bare stems in the word list.
    let mut suffixes: Vec<String> = vec![String::new()];
    while suffixes.len() < n_suffixes {
        let mut s = syllables(&mut rng, 1);
        s.push(*pick(&mut rng, CONSONANTS));
        if !suffixes.contains(&s) {
            suffixes.push(s);
        }
    }
    let mut words: Vec<String> = stems
        .iter()
        .flat_map(|st| suffixes.iter().map(move |sf| format!("{st}{sf}")))
        .collect();
    rng.shuffle(&mut words);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (rank, w) in words.into_iter().enumerate() {
        *counts.entry(w).or_default() += ZIPF_TOP.div_ceil(rank as u64 + 1);
    }
    counts
        .into_iter()
        .map(|(word, count)| WordFreq { word, count })
        .collect()
}

/// A derivation of the toy grammar with its surface form and English gloss.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthWord {
    pub surface: String,
    pub gloss: Vec<String>,
}

/// Every derivation of `rules` with up to `depth` suffixes whose last
/// suffix is terminal (bare bases included), in deterministic order.
pub fn derivations(rules: &RuleSet, depth: usize) -> Vec<(String, Vec<usize>, String)> {
    let mut out = Vec::new();
    for base in rules.bases().keys() {
        let mut stack: Vec<usize> = Vec::new();
        extend(rules, base, depth, &mut stack, &mut out);
    }
    out
}

fn extend(
    rules: &RuleSet,
    base: &str,
    depth: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<(String, Vec<usize>, String)>,
) {
    let chain: Vec<&SuffixRule> = stack.iter().map(|&i| &rules.suffixes()[i]).collect();
    let Ok(surface) = generate(base, &chain, rules.consonants()) else {
        return;
    };
    if chain.last().is_none_or(|r| r.terminal) {
        out.push((base.to_owned(), stack.clone(), surface));
    }
    if stack.len() == depth {
        return;
    }
    for i in 0..rules.suffixes().len() {
        stack.push(i);
        extend(rules, base, depth, stack, out);
        stack.pop();
    }
}

/// Parallel sentences: source side from toy-grammar words (depth ≤ 2) and
/// random out-of-grammar words, target side from their glosses.
pub fn parallel_corpus(n_lines: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let rules = RuleSet::bundled();
    let words: Vec<SynthWord> = derivations(&rules, 2)
        .into_iter()
        .map(|(base, suffixes, surface)| {
            let mut gloss = vec![rules.bases()[&base].clone()];
            gloss.extend(suffixes.iter().map(|&i| rules.suffixes()[i].gloss.to_lowercase()));
            SynthWord { surface, gloss }
        })
        .collect();
    let oog: Vec<String> = {
        let mut rng = XorShift64Star::new(seed ^ 0x5EED);
        (0..40).map(|_| syllables(&mut rng, 3)).collect()
    };
    let fillers = ["they'd", "the", "a", "and", "isn't", "it's", "we"];
    let puncts = [".", "?", "!", ","];

    let mut rng = XorShift64Star::new(seed);
    let mut src = Vec::with_capacity(n_lines);
    let mut tgt = Vec::with_capacity(n_lines);
    for _ in 0..n_lines {
        let n_words = 1 + rng.below(5) as usize;
        let mut s_words = Vec::new();
        let mut t_words = Vec::new();
        for _ in 0..n_words {
            // Squaring skews draws toward the front, giving a Zipf-like head.
            let r = rng.below(words.len() as u64) as f64 / words.len() as f64;
            let idx = ((r * r) * words.len() as f64) as usize;
            if rng.below(10) == 0 {
                let w = pick(&mut rng, &oog).clone();
                t_words.push(format!("name {w}"));
                s_words.push(w);
            } else {
                let w = &words[idx.min(words.len() - 1)];
                s_words.push(w.surface.clone());
                t_words.push(w.gloss.join(" "));
            }
            if rng.below(4) == 0 {
                t_words.push((*pick(&mut rng, &fillers)).to_owned());
            }
        }
        let p = *pick(&mut rng, &puncts);
        let mut s_line = s_words.join(" ");
        s_line.push_str(p);
        if rng.below(8) == 0 {
            s_line = format!("Yup'ik {s_line}");
            t_words.insert(0, "in yup'ik".to_owned());
        }
        let mut t_line = t_words.join(" ");
        t_line.push_str(p);
        src.push(s_line);
        tgt.push(t_line);
    }
    (src, tgt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stem_suffix_shape() {
        let w = stem_suffix_words(20, 10, 3);
        assert_eq!(w.len(), 200);
        assert_eq!(stem_suffix_words(20, 10, 3), w);
        assert!(w.iter().any(|x| x.count == 100));
    }

    #[test]
    fn parallel_is_deterministic() {
        let (s, t) = parallel_corpus(50, 1);
        assert_eq!((s.len(), t.len()), (50, 50));
        assert_eq!(parallel_corpus(50, 1), (s, t));
    }
}
