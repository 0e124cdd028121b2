//! Byte-pair encoding: merge learning from word frequencies and merge replay.
//!
//! Words start as character sequences whose last character carries the
//! end-of-word marker (`"low"` is `l o w</w>`). Learning repeatedly merges
//! the most frequent adjacent pair; ties go to the smaller `(left, right)` in
//! byte order and learning stops early once the best pair occurs fewer than
//! twice. Application output marks every non-final subword with `@@`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textio;

pub const END_OF_WORD: &str = "</w>";
pub const CONTINUATION: &str = "@@";

/// Pairs seen fewer times than this are never merged by default.
pub const DEFAULT_MIN_FREQUENCY: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordFreq {
    pub word: String,
    pub count: u64,
}

impl WordFreq {
    pub fn new(word: impl Into<String>, count: u64) -> Result<Self> {
        let word = word.into();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Input(format!("invalid word {word:?}")));
        }
        if count == 0 {
            return Err(Error::Input(format!("word {word:?} has zero count")));
        }
        Ok(Self { word, count })
    }
}

/// Counts word types across token lines, sorted by word byte order.
pub fn word_frequencies<L, T>(lines: L) -> Vec<WordFreq>
where
    L: IntoIterator,
    L::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for line in lines {
        for tok in line {
            let tok = tok.as_ref();
            if tok.is_empty() {
                continue;
            }
            *counts.entry(tok.to_owned()).or_default() += 1;
        }
    }
    let mut out: Vec<WordFreq> = counts
        .into_iter()
        .map(|(word, count)| WordFreq { word, count })
        .collect();
    out.sort_unstable_by(|a, b| a.word.cmp(&b.word));
    out
}

/// Character symbols of `word`, the last one fused with [`END_OF_WORD`].
pub fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    requested: usize,
    alphabet: BTreeSet<String>,
    ranks: HashMap<String, HashMap<String, usize>>,
}

impl MergeTable {
    pub fn new(
        merges: Vec<(String, String)>,
        requested: usize,
        alphabet: BTreeSet<String>,
    ) -> Result<Self> {
        let mut ranks: HashMap<String, HashMap<String, usize>> = HashMap::new();
        for (i, (l, r)) in merges.iter().enumerate() {
            ranks.entry(l.clone()).or_default().entry(r.clone()).or_insert(i);
        }
        let table = Self {
            merges,
            requested,
            alphabet,
            ranks,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks.get(left)?.get(right).copied()
    }

    /// Checks the structural invariants: merge count within the request, no
    /// duplicate pairs, and every operand is an alphabet symbol (optionally
    /// end-marked) or the product of an earlier merge.
    pub fn validate(&self) -> Result<()> {
        if self.requested == 0 {
            return Err(Error::Invariant("merge table requests zero merges".into()));
        }
        if self.merges.len() > self.requested {
            return Err(Error::Invariant(format!(
                "{} merges learned but only {} requested",
                self.merges.len(),
                self.requested
            )));
        }
        if self.ranks.values().map(HashMap::len).sum::<usize>() != self.merges.len() {
            return Err(Error::Invariant("duplicate merge pair".into()));
        }
        let mut known: HashSet<String> = HashSet::new();
        for a in &self.alphabet {
            known.insert(a.clone());
            known.insert(format!("{a}{END_OF_WORD}"));
        }
        for (i, (l, r)) in self.merges.iter().enumerate() {
            for s in [l, r] {
                if !known.contains(s) {
                    return Err(Error::Invariant(format!(
                        "merge {} uses unknown symbol `{s}`",
                        i + 1
                    )));
                }
            }
            if l.ends_with(END_OF_WORD) {
                return Err(Error::Invariant(format!(
                    "merge {} has an end-of-word symbol on the left",
                    i + 1
                )));
            }
            known.insert(format!("{l}{r}"));
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!(
            "#bpe-merges v1 requested={} learned={}\n",
            self.requested,
            self.merges.len()
        );
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_string(path, &self.to_file_string())
    }

    /// Parses the merges file. The alphabet is not stored in the file, so it
    /// is rebuilt from the characters that appear in the merges.
    pub fn parse(text: &str) -> Result<Self> {
        const WHAT: &str = "bpe merges";
        let lines = textio::split_lines(text.as_bytes())
            .map_err(|line| Error::parse(WHAT, line, "invalid UTF-8"))?;
        let header = lines
            .first()
            .ok_or_else(|| Error::parse(WHAT, 1, "empty file"))?;
        let (requested, learned) = parse_header(header)
            .ok_or_else(|| Error::parse(WHAT, 1, "expected `#bpe-merges v1 requested=<N> learned=<M>`"))?;
        if requested == 0 {
            return Err(Error::parse(WHAT, 1, "requested must be positive"));
        }
        let mut merges = Vec::with_capacity(learned);
        let mut alphabet = BTreeSet::new();
        let mut seen = HashSet::new();
        for (i, line) in lines.iter().enumerate().skip(1) {
            let lineno = i + 1;
            let mut parts = line.split(' ');
            let (Some(l), Some(r), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(WHAT, lineno, "expected `left right`"));
            };
            if l.is_empty() || r.is_empty() {
                return Err(Error::parse(WHAT, lineno, "empty symbol"));
            }
            if !seen.insert((l.to_owned(), r.to_owned())) {
                return Err(Error::parse(WHAT, lineno, "duplicate merge"));
            }
            for s in [l, r] {
                let bare = s.strip_suffix(END_OF_WORD).unwrap_or(s);
                alphabet.extend(bare.chars().map(String::from));
            }
            merges.push((l.to_owned(), r.to_owned()));
        }
        if merges.len() != learned {
            return Err(Error::parse(
                WHAT,
                1,
                format!("header says {learned} merges, file has {}", merges.len()),
            ));
        }
        if learned > requested {
            return Err(Error::parse(WHAT, 1, "learned exceeds requested"));
        }
        Self::new(merges, requested, alphabet).map_err(|e| Error::parse(WHAT, 1, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Decode {
            path: path.to_path_buf(),
            line: 0,
        })?;
        Self::parse(&text)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("#bpe-merges v1 ")?;
    let (req, learned) = rest.split_once(' ')?;
    let requested = req.strip_prefix("requested=")?.parse().ok()?;
    let learned = learned.strip_prefix("learned=")?.parse().ok()?;
    Some((requested, learned))
}

/// Heap entry: highest count first, then smallest pair in byte order.
#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), u64>,
    occurrences: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Learner {
    fn new(words: &[WordFreq]) -> Self {
        let mut learner = Self {
            symbols: Vec::new(),
            ids: HashMap::new(),
            words: Vec::with_capacity(words.len()),
            pair_counts: HashMap::new(),
            occurrences: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for wf in words {
            let syms: Vec<u32> = initial_symbols(&wf.word)
                .into_iter()
                .map(|s| learner.intern(s))
                .collect();
            learner.words.push((syms, wf.count));
        }
        for idx in 0..learner.words.len() {
            learner.add_pairs(idx);
        }
        let pairs: Vec<(u32, u32)> = learner.pair_counts.keys().copied().collect();
        for pair in pairs {
            learner.push(pair);
        }
        learner
    }

    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.ids.insert(s.clone(), id);
        self.symbols.push(s);
        id
    }

    fn add_pairs(&mut self, idx: usize) {
        let (syms, count) = &self.words[idx];
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_default() += count;
            self.occurrences.entry(pair).or_default().insert(idx);
        }
    }

    fn remove_pairs(&mut self, idx: usize) {
        let (syms, count) = &self.words[idx];
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            if let Some(c) = self.pair_counts.get_mut(&pair) {
                *c -= count;
                if *c == 0 {
                    self.pair_counts.remove(&pair);
                }
            }
        }
    }

    fn push(&mut self, pair: (u32, u32)) {
        if let Some(&count) = self.pair_counts.get(&pair) {
            self.heap.push(Candidate {
                count,
                left: self.symbols[pair.0 as usize].clone(),
                right: self.symbols[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    /// Pops the best live pair, skipping stale heap entries.
    fn best(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.pop() {
            if self.pair_counts.get(&c.pair) == Some(&c.count) {
                return Some(c);
            }
        }
        None
    }

    fn merge(&mut self, pair: (u32, u32)) {
        let merged = format!(
            "{}{}",
            self.symbols[pair.0 as usize], self.symbols[pair.1 as usize]
        );
        let new_id = self.intern(merged);
        let Some(affected) = self.occurrences.remove(&pair) else {
            return;
        };
        let mut affected: Vec<usize> = affected.into_iter().collect();
        affected.sort_unstable();
        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        for idx in affected {
            let syms = &self.words[idx].0;
            if !syms.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            touched.extend(syms.windows(2).map(|w| (w[0], w[1])));
            self.remove_pairs(idx);
            let replaced = replace_pair(&self.words[idx].0, pair, new_id);
            self.words[idx].0 = replaced;
            self.add_pairs(idx);
            touched.extend(self.words[idx].0.windows(2).map(|w| (w[0], w[1])));
        }
        self.pair_counts.remove(&pair);
        let mut touched: Vec<(u32, u32)> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            self.push(p);
        }
    }
}

/// Left-to-right, non-overlapping replacement of `pair` by `merged`.
fn replace_pair<T: Copy + PartialEq>(syms: &[T], pair: (T, T), merged: T) -> Vec<T> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(syms[i]);
            i += 1;
        }
    }
    out
}

/// A learned merge and the pair frequency at the moment it was chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeStep {
    pub left: String,
    pub right: String,
    pub frequency: u64,
}

pub fn learn_merges(words: &[WordFreq], n_merges: usize) -> Result<MergeTable> {
    learn_merges_traced(words, n_merges, DEFAULT_MIN_FREQUENCY).map(|(table, _)| table)
}

/// Like [`learn_merges`] with an explicit frequency floor, also returning the
/// frequency of each chosen pair.
pub fn learn_merges_traced(
    words: &[WordFreq],
    n_merges: usize,
    min_frequency: u64,
) -> Result<(MergeTable, Vec<MergeStep>)> {
    if words.is_empty() {
        return Err(Error::Input("cannot learn merges from an empty word list".into()));
    }
    if n_merges == 0 {
        return Err(Error::Input("number of merges must be positive".into()));
    }
    let alphabet: BTreeSet<String> = words
        .iter()
        .flat_map(|w| w.word.chars().map(String::from))
        .collect();

    let mut learner = Learner::new(words);
    let mut steps = Vec::new();
    while steps.len() < n_merges {
        let Some(best) = learner.best() else { break };
        if best.count < min_frequency.max(1) {
            break;
        }
        learner.merge(best.pair);
        steps.push(MergeStep {
            left: best.left,
            right: best.right,
            frequency: best.count,
        });
    }
    let merges = steps
        .iter()
        .map(|s| (s.left.clone(), s.right.clone()))
        .collect();
    let table = MergeTable::new(merges, n_merges, alphabet)?;
    Ok((table, steps))
}

/// Segments one word by replaying merges in rank order.
///
/// At each step the adjacent pair with the lowest rank is merged everywhere
/// it occurs. Symbols created by merge `k` only take part in merges ranked
/// after `k`, so this is the same as applying every merge in table order.
pub fn apply_merges(word: &str, table: &MergeTable) -> Vec<String> {
    let mut syms = initial_symbols(word);
    loop {
        let best = syms
            .windows(2)
            .filter_map(|w| table.rank(&w[0], &w[1]))
            .min();
        let Some(rank) = best else { break };
        let (l, r) = &table.merges[rank];
        let mut out = Vec::with_capacity(syms.len());
        let mut i = 0;
        while i < syms.len() {
            if i + 1 < syms.len() && &syms[i] == l && &syms[i + 1] == r {
                out.push(format!("{l}{r}"));
                i += 2;
            } else {
                out.push(std::mem::take(&mut syms[i]));
                i += 1;
            }
        }
        syms = out;
    }
    mark_symbols(syms)
}

/// Strips the end-of-word marker from the last symbol and appends the
/// continuation marker to the others.
pub(crate) fn mark_symbols(mut syms: Vec<String>) -> Vec<String> {
    let n = syms.len();
    for (i, s) in syms.iter_mut().enumerate() {
        if i + 1 == n {
            if let Some(stripped) = s.strip_suffix(END_OF_WORD) {
                *s = stripped.to_owned();
            }
        } else {
            s.push_str(CONTINUATION);
        }
    }
    syms
}

/// Applies `table` to every token of every line, caching per word type.
pub fn segment_corpus<L: AsRef<[String]>>(lines: &[L], table: &MergeTable) -> Vec<Vec<String>> {
    let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
    lines
        .iter()
        .map(|line| {
            let mut out = Vec::new();
            for tok in line.as_ref() {
                let segs = cache
                    .entry(tok.as_str())
                    .or_insert_with(|| apply_merges(tok, table));
                out.extend(segs.iter().cloned());
            }
            out
        })
        .collect()
}

/// Joins each run `x@@ y@@ z` back into `xyz`.
pub fn unsegment<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    unsegment_counted(tokens).0
}

/// [`unsegment`], also returning how many runs ended on a dangling `@@`
/// (those are joined with nothing and emitted anyway).
pub fn unsegment_counted<S: AsRef<str>>(tokens: &[S]) -> (Vec<String>, usize) {
    let mut out = Vec::with_capacity(tokens.len());
    let mut buf = String::new();
    let mut pending = false;
    for tok in tokens {
        let tok = tok.as_ref();
        if let Some(stem) = tok.strip_suffix(CONTINUATION) {
            buf.push_str(stem);
            pending = true;
        } else {
            buf.push_str(tok);
            out.push(std::mem::take(&mut buf));
            pending = false;
        }
    }
    let dangling = usize::from(pending);
    if pending {
        out.push(buf);
    }
    (out, dangling)
}
