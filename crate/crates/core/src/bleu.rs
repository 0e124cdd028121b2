//! Corpus-level BLEU with clipped n-gram precision and brevity penalty.
//!
//! Counts are summed over the whole corpus before dividing, one reference
//! per hypothesis, with no smoothing: a zero match count at any order makes
//! the score zero.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NgramCounts {
    pub matches: u64,
    pub total: u64,
}

impl NgramCounts {
    pub fn precision(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matches as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    /// Per-order counts, index 0 holding unigrams.
    pub precisions: Vec<NgramCounts>,
    pub bp: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub score: f64,
}

impl BleuReport {
    pub fn order(&self) -> usize {
        self.precisions.len()
    }

    /// `hyp_len / ref_len`; 1 for two empty sides.
    pub fn ratio(&self) -> f64 {
        match (self.hyp_len, self.ref_len) {
            (0, 0) => 1.0,
            (h, r) => h as f64 / r as f64,
        }
    }
}

/// Clipped matches and total n-grams of order `n` in `hyp` against `reference`.
pub fn clipped_ngram_matches<S: AsRef<str>>(hyp: &[S], reference: &[S], n: usize) -> NgramCounts {
    assert!(n >= 1, "n-gram order must be at least 1");
    let total = (hyp.len() + 1).saturating_sub(n) as u64;
    if total == 0 {
        return NgramCounts::default();
    }
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let matches = hyp_counts
        .iter()
        .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    NgramCounts { matches, total }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
        *counts.entry(key).or_default() += 1;
    }
    counts
}

/// Per-sentence sufficient statistics; summing them and calling
/// [`report_from_stats`] is the same as [`corpus_bleu`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceStats {
    pub counts: Vec<NgramCounts>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

pub fn sentence_stats<S: AsRef<str>>(hyp: &[S], reference: &[S], order: usize) -> SentenceStats {
    SentenceStats {
        counts: (1..=order)
            .map(|n| clipped_ngram_matches(hyp, reference, n))
            .collect(),
        hyp_len: hyp.len() as u64,
        ref_len: reference.len() as u64,
    }
}

pub fn report_from_stats(
    counts: &[NgramCounts],
    hyp_len: u64,
    ref_len: u64,
) -> BleuReport {
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        // hyp_len = 0 gives exp(-inf) = 0.
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let score = if counts.is_empty() || counts.iter().any(|c| c.matches == 0) {
        0.0
    } else {
        let n = counts.len() as f64;
        let log_mean = counts.iter().map(|c| c.precision().ln()).sum::<f64>() / n;
        bp * log_mean.exp()
    };
    BleuReport {
        precisions: counts.to_vec(),
        bp,
        hyp_len,
        ref_len,
        score,
    }
}

pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)], order: usize) -> Result<BleuReport> {
    if pairs.is_empty() {
        return Err(Error::Input("BLEU needs at least one sentence pair".into()));
    }
    if order == 0 {
        return Err(Error::Input("BLEU order must be at least 1".into()));
    }
    let mut counts = vec![NgramCounts::default(); order];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (hyp, reference) in pairs {
        let stats = sentence_stats(hyp, reference, order);
        for (acc, c) in counts.iter_mut().zip(&stats.counts) {
            acc.matches += c.matches;
            acc.total += c.total;
        }
        hyp_len += stats.hyp_len;
        ref_len += stats.ref_len;
    }
    Ok(report_from_stats(&counts, hyp_len, ref_len))
}

/// One-line summary in the style of the Moses `multi-bleu` script.
pub fn format_report(report: &BleuReport) -> String {
    let precisions: Vec<String> = report
        .precisions
        .iter()
        .map(|c| format!("{:.1}", 100.0 * c.precision()))
        .collect();
    format!(
        "BLEU = {:.2}, {} (BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
        100.0 * report.score,
        precisions.join("/"),
        report.bp,
        report.ratio(),
        report.hyp_len,
        report.ref_len
    )
}
