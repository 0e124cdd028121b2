//! Unsupervised morphological segmentation by minimum description length.
//!
//! The model is a unigram lexicon of morphs. Its cost in bits has two parts:
//!
//! * lexicon: for every morph type, the code length of its characters plus
//!   one end-of-morph marker, using per-character costs `-log2 p(c)`
//!   estimated once from the word-type list (each type counted once, with
//!   one end marker per type) and then frozen;
//! * corpus: `sum over morph tokens of -log2(count(m) / total)`.
//!
//! Training starts from unsplit words and, epoch by epoch, re-optimizes
//! every word type by recursive binary splitting. A word keeps its previous
//! analysis whenever the new one would not lower the cost, so epoch costs
//! never increase. New words are segmented with a Viterbi search.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::bpe::{WordFreq, CONTINUATION};
use crate::error::{Error, Result};
use crate::rng::XorShift64Star;
use crate::textio;

pub const DEFAULT_THRESHOLD: f64 = 0.005;
pub const DEFAULT_MAX_EPOCHS: usize = 20;
pub const DEFAULT_UNSEEN_PENALTY: f64 = 20.0;

/// Costs that tie within this many bits are considered equal in Viterbi.
const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Stop once an epoch lowers the cost by less than this fraction.
    pub convergence_threshold: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Bits per character charged for a morph absent from the lexicon.
    pub unseen_morph_penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            convergence_threshold: DEFAULT_THRESHOLD,
            max_epochs: DEFAULT_MAX_EPOCHS,
            seed: 0,
            unseen_morph_penalty: DEFAULT_UNSEEN_PENALTY,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold < 1.0) {
            return Err(Error::Input(format!(
                "convergence threshold must be in (0, 1), got {}",
                self.convergence_threshold
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Input("max_epochs must be positive".into()));
        }
        if !(self.unseen_morph_penalty.is_finite() && self.unseen_morph_penalty > 0.0) {
            return Err(Error::Input("unseen morph penalty must be positive".into()));
        }
        Ok(())
    }
}

/// Character code lengths estimated from a set of word types.
#[derive(Debug, Clone, PartialEq)]
pub struct CharCosts {
    costs: BTreeMap<char, f64>,
    end_marker: f64,
}

impl CharCosts {
    pub fn from_types<'a, I: IntoIterator<Item = &'a str>>(types: I) -> Self {
        let mut counts: BTreeMap<char, u64> = BTreeMap::new();
        let mut n_types = 0u64;
        for t in types {
            n_types += 1;
            for c in t.chars() {
                *counts.entry(c).or_default() += 1;
            }
        }
        let total = (counts.values().sum::<u64>() + n_types) as f64;
        let costs = counts
            .into_iter()
            .map(|(c, n)| (c, -(n as f64 / total).log2()))
            .collect();
        let end_marker = if n_types == 0 {
            0.0
        } else {
            -(n_types as f64 / total).log2()
        };
        Self { costs, end_marker }
    }

    pub fn get(&self, c: char) -> Option<f64> {
        self.costs.get(&c).copied()
    }

    pub fn end_marker(&self) -> f64 {
        self.end_marker
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, f64)> + '_ {
        self.costs.iter().map(|(&c, &v)| (c, v))
    }

    /// Lexicon code length of one morph type. Characters never seen in the
    /// training types cost as much as the rarest seen character.
    pub fn morph_cost(&self, morph: &str) -> f64 {
        let fallback = self.costs.values().copied().fold(0.0, f64::max);
        morph
            .chars()
            .map(|c| self.get(c).unwrap_or(fallback))
            .sum::<f64>()
            + self.end_marker
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegModel {
    lexicon: BTreeMap<String, u64>,
    total_tokens: u64,
    char_costs: CharCosts,
    analyses: BTreeMap<String, Vec<String>>,
}

impl SegModel {
    /// Builds a model from its parts, checking the structural invariants.
    /// Character costs are derived from the analysed word types.
    pub fn from_parts(
        lexicon: BTreeMap<String, u64>,
        analyses: BTreeMap<String, Vec<String>>,
    ) -> Result<Self> {
        let char_costs = CharCosts::from_types(analyses.keys().map(String::as_str));
        Self::with_char_costs(lexicon, analyses, char_costs)
    }

    pub fn with_char_costs(
        lexicon: BTreeMap<String, u64>,
        analyses: BTreeMap<String, Vec<String>>,
        char_costs: CharCosts,
    ) -> Result<Self> {
        if let Some((m, _)) = lexicon.iter().find(|(m, &c)| c == 0 || m.is_empty()) {
            return Err(Error::Invariant(format!("lexicon entry `{m}` is empty or has zero count")));
        }
        for (word, morphs) in &analyses {
            if morphs.concat() != *word {
                return Err(Error::Invariant(format!(
                    "analysis of `{word}` does not concatenate to the word"
                )));
            }
            if let Some(m) = morphs.iter().find(|m| !lexicon.contains_key(*m)) {
                return Err(Error::Invariant(format!(
                    "analysis of `{word}` uses `{m}`, which is not in the lexicon"
                )));
            }
        }
        let total_tokens = lexicon.values().sum();
        Ok(Self {
            lexicon,
            total_tokens,
            char_costs,
            analyses,
        })
    }

    pub fn lexicon(&self) -> &BTreeMap<String, u64> {
        &self.lexicon
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn char_costs(&self) -> &CharCosts {
        &self.char_costs
    }

    pub fn analyses(&self) -> &BTreeMap<String, Vec<String>> {
        &self.analyses
    }

    pub fn analysis(&self, word: &str) -> Option<&[String]> {
        self.analyses.get(word).map(Vec::as_slice)
    }

    /// Corpus code length of one token of `morph`, if it is in the lexicon.
    pub fn morph_token_cost(&self, morph: &str) -> Option<f64> {
        let count = *self.lexicon.get(morph)?;
        Some(-(count as f64 / self.total_tokens as f64).log2())
    }

    /// Checks that lexicon counts equal morph usage over the analyses
    /// weighted by the given word frequencies.
    pub fn check_usage(&self, words: &[WordFreq]) -> Result<()> {
        let mut usage: BTreeMap<&str, u64> = BTreeMap::new();
        for wf in words {
            let morphs = self.analyses.get(&wf.word).ok_or_else(|| {
                Error::Invariant(format!("no analysis stored for `{}`", wf.word))
            })?;
            for m in morphs {
                *usage.entry(m.as_str()).or_default() += wf.count;
            }
        }
        let lex: BTreeMap<&str, u64> = self.lexicon.iter().map(|(m, &c)| (m.as_str(), c)).collect();
        if usage != lex {
            return Err(Error::Invariant(
                "lexicon counts differ from frequency-weighted analysis usage".into(),
            ));
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("#segmodel v1 total={}\n", self.total_tokens);
        for (m, c) in &self.lexicon {
            let _ = writeln!(out, "{c}\t{m}");
        }
        out.push_str("#analyses\n");
        for (w, ms) in &self.analyses {
            let _ = writeln!(out, "{w}\t{}", ms.join(" "));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_string(path, &self.to_file_string())
    }

    pub fn parse(text: &str) -> Result<Self> {
        const WHAT: &str = "segmentation model";
        let lines = textio::split_lines(text.as_bytes())
            .map_err(|line| Error::parse(WHAT, line, "invalid UTF-8"))?;
        let header = lines.first().ok_or_else(|| Error::parse(WHAT, 1, "empty file"))?;
        let total: u64 = header
            .strip_prefix("#segmodel v1 total=")
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(WHAT, 1, "expected `#segmodel v1 total=<N>`"))?;

        let mut lexicon = BTreeMap::new();
        let mut analyses = BTreeMap::new();
        let mut in_analyses = false;
        let mut prev_morph: Option<&str> = None;
        for (i, line) in lines.iter().enumerate().skip(1) {
            let lineno = i + 1;
            if line == "#analyses" {
                if in_analyses {
                    return Err(Error::parse(WHAT, lineno, "repeated `#analyses` section"));
                }
                in_analyses = true;
                continue;
            }
            if !in_analyses {
                let (count, morph) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(WHAT, lineno, "expected `count<TAB>morph`"))?;
                let count: u64 = count
                    .parse()
                    .ok()
                    .filter(|&c| c > 0)
                    .ok_or_else(|| Error::parse(WHAT, lineno, "count must be a positive integer"))?;
                if morph.is_empty() || morph.chars().any(char::is_whitespace) {
                    return Err(Error::parse(WHAT, lineno, "morph empty or contains whitespace"));
                }
                if prev_morph.is_some_and(|p| p >= morph) {
                    return Err(Error::parse(WHAT, lineno, "morphs not in strictly ascending order"));
                }
                prev_morph = Some(morph);
                lexicon.insert(morph.to_owned(), count);
            } else {
                let (word, morphs) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(WHAT, lineno, "expected `word<TAB>morphs`"))?;
                let morphs: Vec<String> = morphs.split(' ').map(str::to_owned).collect();
                if morphs.concat() != word {
                    return Err(Error::parse(WHAT, lineno, "analysis does not spell the word"));
                }
                if let Some(m) = morphs.iter().find(|m| !lexicon.contains_key(*m)) {
                    return Err(Error::parse(WHAT, lineno, format!("morph `{m}` not in lexicon")));
                }
                if analyses.insert(word.to_owned(), morphs).is_some() {
                    return Err(Error::parse(WHAT, lineno, format!("duplicate word `{word}`")));
                }
            }
        }
        if lexicon.is_empty() {
            return Err(Error::parse(WHAT, 2, "empty lexicon"));
        }
        if !in_analyses {
            return Err(Error::parse(WHAT, lines.len(), "missing `#analyses` section"));
        }
        let sum: u64 = lexicon.values().sum();
        if sum != total {
            return Err(Error::parse(WHAT, 1, format!("total={total} but counts sum to {sum}")));
        }
        Self::from_parts(lexicon, analyses).map_err(|e| Error::parse(WHAT, 1, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|e| {
            let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
            Error::Decode {
                path: path.to_path_buf(),
                line: valid.iter().filter(|&&b| b == b'\n').count() + 1,
            }
        })?;
        Self::parse(&text)
    }
}

/// Total description length of `model` in bits, computed from scratch.
pub fn model_cost(model: &SegModel) -> f64 {
    let total = model.total_tokens as f64;
    let lexicon: f64 = model
        .lexicon
        .keys()
        .map(|m| model.char_costs.morph_cost(m))
        .sum();
    let corpus: f64 = model
        .lexicon
        .values()
        .map(|&c| -(c as f64) * (c as f64 / total).log2())
        .sum();
    lexicon + corpus
}

/// Minimum-cost segmentation of `word` under `model`.
///
/// In-lexicon morphs cost `-log2(count / total)`; any other substring costs
/// `unseen_penalty` bits per character. Ties prefer fewer morphs, then a
/// longer first morph.
pub fn segment_viterbi(word: &str, model: &SegModel, unseen_penalty: f64) -> Vec<String> {
    if word.is_empty() {
        return Vec::new();
    }
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    let log_total = (model.total_tokens.max(1) as f64).log2();

    // best[i] = (cost, morph count, next boundary) for the suffix from i.
    let mut best: Vec<(f64, usize, usize)> = vec![(f64::INFINITY, usize::MAX, n); n + 1];
    best[n] = (0.0, 0, n);
    for i in (0..n).rev() {
        for j in i + 1..=n {
            let piece = &word[bounds[i]..bounds[j]];
            let piece_cost = match model.lexicon.get(piece) {
                Some(&c) => log_total - (c as f64).log2(),
                None => unseen_penalty * (j - i) as f64,
            };
            let cost = piece_cost + best[j].0;
            let count = best[j].1 + 1;
            let (cur_cost, cur_count, cur_next) = best[i];
            let better = if (cost - cur_cost).abs() <= TIE_EPSILON {
                count < cur_count || (count == cur_count && j > cur_next)
            } else {
                cost < cur_cost
            };
            if better {
                best[i] = (cost, count, j);
            }
        }
    }

    let mut out = Vec::with_capacity(best[0].1);
    let mut i = 0;
    while i < n {
        let j = best[i].2;
        out.push(word[bounds[i]..bounds[j]].to_owned());
        i = j;
    }
    out
}

/// Segments every token of every line, marking non-final morphs with `@@`.
pub fn segment_corpus<L: AsRef<[String]>>(
    lines: &[L],
    model: &SegModel,
    unseen_penalty: f64,
) -> Vec<Vec<String>> {
    let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
    lines
        .iter()
        .map(|line| {
            let mut out = Vec::new();
            for tok in line.as_ref() {
                let segs = cache.entry(tok.as_str()).or_insert_with(|| {
                    let mut morphs = segment_viterbi(tok, model, unseen_penalty);
                    let last = morphs.len().saturating_sub(1);
                    for m in &mut morphs[..last] {
                        m.push_str(CONTINUATION);
                    }
                    morphs
                });
                out.extend(segs.iter().cloned());
            }
            out
        })
        .collect()
}

/// Fixed-point scale for maintained costs: 2^40 units per bit.
///
/// Keeping the running cost as an integer sum of rounded per-term values
/// makes add/remove exactly reversible, so evaluating and undoing a move
/// never drifts the maintained cost.
const FIXED_SCALE: f64 = (1u64 << 40) as f64;

fn to_fixed(bits: f64) -> i128 {
    (bits * FIXED_SCALE).round() as i128
}

fn from_fixed(units: i128) -> f64 {
    units as f64 / FIXED_SCALE
}

fn xlog2x(x: u64) -> f64 {
    if x == 0 {
        0.0
    } else {
        let x = x as f64;
        x * x.log2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Cost of the initial unsplit model.
    pub initial_cost: f64,
    /// Maintained cost at the end of each epoch.
    pub epoch_costs: Vec<f64>,
}

/// Batch trainer. [`train`] drives it to convergence; tests and tools can
/// step it one epoch at a time.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    words: Vec<(String, u64)>,
    char_costs: CharCosts,
    lexicon: HashMap<String, u64>,
    analyses: HashMap<String, Vec<String>>,
    total: u64,
    lexicon_units: i128,
    xlogx_units: i128,
    rng: XorShift64Star,
    history: TrainHistory,
}

impl Trainer {
    pub fn new(words: &[WordFreq], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if words.is_empty() {
            return Err(Error::Input("cannot train on an empty word list".into()));
        }
        let mut merged: BTreeMap<&str, u64> = BTreeMap::new();
        for wf in words {
            if wf.word.is_empty() || wf.count == 0 {
                return Err(Error::Input(format!("invalid word entry {:?}", wf.word)));
            }
            *merged.entry(wf.word.as_str()).or_default() += wf.count;
        }
        let char_costs = CharCosts::from_types(merged.keys().copied());
        let mut trainer = Self {
            config,
            words: merged.into_iter().map(|(w, c)| (w.to_owned(), c)).collect(),
            char_costs,
            lexicon: HashMap::new(),
            analyses: HashMap::new(),
            total: 0,
            lexicon_units: 0,
            xlogx_units: 0,
            rng: XorShift64Star::new(config.seed),
            history: TrainHistory {
                initial_cost: 0.0,
                epoch_costs: Vec::new(),
            },
        };
        for i in 0..trainer.words.len() {
            let (w, c) = trainer.words[i].clone();
            trainer.add(&w, c);
            trainer.analyses.insert(w.clone(), vec![w]);
        }
        trainer.history.initial_cost = trainer.cost();
        Ok(trainer)
    }

    /// Current maintained cost in bits.
    pub fn cost(&self) -> f64 {
        from_fixed(self.cost_units())
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    fn cost_units(&self) -> i128 {
        self.lexicon_units + to_fixed(xlog2x(self.total)) - self.xlogx_units
    }

    fn morph_units(&self, morph: &str) -> i128 {
        to_fixed(self.char_costs.morph_cost(morph))
    }

    fn add(&mut self, morph: &str, freq: u64) {
        let old = self.lexicon.get(morph).copied().unwrap_or(0);
        if old == 0 {
            self.lexicon_units += self.morph_units(morph);
        }
        let new = old + freq;
        self.xlogx_units += to_fixed(xlog2x(new)) - to_fixed(xlog2x(old));
        self.total += freq;
        self.lexicon.insert(morph.to_owned(), new);
    }

    fn remove(&mut self, morph: &str, freq: u64) {
        let old = self.lexicon.get(morph).copied().unwrap_or(0);
        assert!(old >= freq, "removing more of `{morph}` than present");
        let new = old - freq;
        self.xlogx_units += to_fixed(xlog2x(new)) - to_fixed(xlog2x(old));
        self.total -= freq;
        if new == 0 {
            self.lexicon_units -= self.morph_units(morph);
            self.lexicon.remove(morph);
        } else {
            self.lexicon.insert(morph.to_owned(), new);
        }
    }

    /// Cost in fixed-point units if `additions` were applied, without
    /// mutating the model.
    fn cost_units_after(&self, additions: &[(&str, u64)]) -> i128 {
        let mut lexicon_units = self.lexicon_units;
        let mut xlogx_units = self.xlogx_units;
        let mut total = self.total;
        let mut pending: Vec<(&str, u64)> = Vec::with_capacity(additions.len());
        for &(m, f) in additions {
            match pending.iter_mut().find(|(p, _)| *p == m) {
                Some(entry) => entry.1 += f,
                None => pending.push((m, f)),
            }
        }
        for (m, f) in pending {
            let old = self.lexicon.get(m).copied().unwrap_or(0);
            if old == 0 {
                lexicon_units += self.morph_units(m);
            }
            xlogx_units += to_fixed(xlog2x(old + f)) - to_fixed(xlog2x(old));
            total += f;
        }
        lexicon_units + to_fixed(xlog2x(total)) - xlogx_units
    }

    /// Recursively chooses between keeping `form` whole and the best binary
    /// split, then refines each half. `form` must not be counted in the model
    /// on entry; its chosen morphs are counted on return.
    fn optimize(&mut self, form: &str, freq: u64) -> Vec<String> {
        let mut best_units = self.cost_units_after(&[(form, freq)]);
        let mut best_cut = None;
        for (cut, _) in form.char_indices().skip(1) {
            let (left, right) = form.split_at(cut);
            let units = self.cost_units_after(&[(left, freq), (right, freq)]);
            if units < best_units {
                best_units = units;
                best_cut = Some(cut);
            }
        }
        match best_cut {
            None => {
                self.add(form, freq);
                vec![form.to_owned()]
            }
            Some(cut) => {
                let (left, right) = form.split_at(cut);
                self.add(right, freq);
                let mut morphs = self.optimize(left, freq);
                self.remove(right, freq);
                morphs.extend(self.optimize(right, freq));
                morphs
            }
        }
    }

    /// Runs one pass over all word types in a seed-determined order and
    /// returns the epoch-end cost.
    pub fn epoch(&mut self) -> f64 {
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        self.rng.shuffle(&mut order);
        for idx in order {
            let (word, freq) = self.words[idx].clone();
            let before = self.cost_units();
            let old = self.analyses.remove(&word).expect("every word has an analysis");
            for m in &old {
                self.remove(m, freq);
            }
            let new = self.optimize(&word, freq);
            if new != old && self.cost_units() > before {
                for m in &new {
                    self.remove(m, freq);
                }
                for m in &old {
                    self.add(m, freq);
                }
                self.analyses.insert(word, old);
            } else {
                self.analyses.insert(word, new);
            }
        }
        let cost = self.cost();
        self.history.epoch_costs.push(cost);
        cost
    }

    /// Snapshot of the current state as an immutable model.
    pub fn model(&self) -> SegModel {
        let lexicon: BTreeMap<String, u64> =
            self.lexicon.iter().map(|(m, &c)| (m.clone(), c)).collect();
        let analyses: BTreeMap<String, Vec<String>> = self
            .analyses
            .iter()
            .map(|(w, a)| (w.clone(), a.clone()))
            .collect();
        SegModel {
            total_tokens: self.total,
            lexicon,
            char_costs: self.char_costs.clone(),
            analyses,
        }
    }

    /// Runs epochs until the relative improvement drops below the
    /// convergence threshold or `max_epochs` is reached.
    pub fn run(&mut self) {
        let mut prev = self.cost();
        for _ in 0..self.config.max_epochs {
            let cost = self.epoch();
            let gain = if prev > 0.0 { (prev - cost) / prev } else { 0.0 };
            prev = cost;
            if gain < self.config.convergence_threshold {
                break;
            }
        }
    }
}

pub fn train(words: &[WordFreq], config: TrainConfig) -> Result<SegModel> {
    train_with_history(words, config).map(|(m, _)| m)
}

pub fn train_with_history(
    words: &[WordFreq],
    config: TrainConfig,
) -> Result<(SegModel, TrainHistory)> {
    let mut trainer = Trainer::new(words, config)?;
    trainer.run();
    Ok((trainer.model(), trainer.history.clone()))
}
