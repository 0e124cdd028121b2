//! Parallel corpora: loading, train/dev/test splitting and vocabulary truncation.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::XorShift64Star;
use crate::textio;

pub const DEFAULT_UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    /// 0-based line number in the originally loaded files.
    pub index: usize,
    pub source: String,
    pub target: String,
}

/// Aligned sentence pairs, ordered by strictly increasing index.
///
/// A freshly loaded corpus has indices `0..len` with no gaps. The parts
/// returned by [`split`] keep the original indices so the partition can be
/// audited, which leaves gaps in each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    name: String,
    pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    /// Builds a corpus from source/target lines, indexing from zero.
    pub fn from_lines(
        name: impl Into<String>,
        source: Vec<String>,
        target: Vec<String>,
    ) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::Alignment {
                source_lines: source.len(),
                target_lines: target.len(),
            });
        }
        let pairs = source
            .into_iter()
            .zip(target)
            .enumerate()
            .map(|(index, (s, t))| SentencePair {
                index,
                source: s.trim().to_owned(),
                target: t.trim().to_owned(),
            })
            .collect();
        Self::from_pairs(name, pairs)
    }

    pub fn from_pairs(name: impl Into<String>, pairs: Vec<SentencePair>) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[0].index >= w[1].index {
                return Err(Error::Input(format!(
                    "pair indices must be strictly increasing ({} then {})",
                    w[0].index, w[1].index
                )));
            }
        }
        if let Some(p) = pairs
            .iter()
            .find(|p| p.source.contains('\n') || p.target.contains('\n'))
        {
            return Err(Error::Input(format!("pair {} contains a newline", p.index)));
        }
        Ok(Self {
            name: name.into(),
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.index).collect()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }
}

/// Loads two line-aligned UTF-8 files. Lines are trimmed; blank lines are
/// kept as empty sentences so alignment is preserved.
pub fn load_parallel(source_path: &Path, target_path: &Path) -> Result<ParallelCorpus> {
    let source = textio::read_lines(source_path)?;
    let target = textio::read_lines(target_path)?;
    let name = source_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ParallelCorpus::from_lines(name, source, target)
}

/// Writes the two sides of `corpus` as LF-terminated line files.
pub fn save_parallel(corpus: &ParallelCorpus, source_path: &Path, target_path: &Path) -> Result<()> {
    textio::write_lines(source_path, corpus.sources())?;
    textio::write_lines(target_path, corpus.targets())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub dev_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self, corpus_size: usize) -> Result<()> {
        let err = || Error::SplitSize {
            size: corpus_size,
            dev: self.dev_count,
            test: self.test_count,
        };
        if self.dev_count == 0 || self.test_count == 0 {
            return Err(err());
        }
        match self.dev_count.checked_add(self.test_count) {
            Some(held_out) if held_out < corpus_size => Ok(()),
            _ => Err(err()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: ParallelCorpus,
    pub dev: ParallelCorpus,
    pub test: ParallelCorpus,
}

/// Draws `dev_count` then `test_count` pairs uniformly without replacement
/// (partial Fisher-Yates over positions, driven by [`XorShift64Star`]); the
/// rest is train. Every part keeps the original corpus order.
pub fn split(corpus: &ParallelCorpus, spec: &SplitSpec) -> Result<Split> {
    spec.validate(corpus.len())?;
    let n = corpus.len();
    let mut positions: Vec<usize> = (0..n).collect();
    let mut rng = XorShift64Star::new(spec.seed);
    let held_out = spec.dev_count + spec.test_count;
    for i in 0..held_out {
        let j = i + rng.below((n - i) as u64) as usize;
        positions.swap(i, j);
    }

    // 0 = train, 1 = dev, 2 = test
    let mut part = vec![0u8; n];
    for &p in &positions[..spec.dev_count] {
        part[p] = 1;
    }
    for &p in &positions[spec.dev_count..held_out] {
        part[p] = 2;
    }

    let mut buckets: [Vec<SentencePair>; 3] = Default::default();
    for (pair, &which) in corpus.pairs.iter().zip(&part) {
        buckets[which as usize].push(pair.clone());
    }
    let [train, dev, test] = buckets;
    let base = corpus.name();
    Ok(Split {
        train: ParallelCorpus::from_pairs(format!("{base}.train"), train)?,
        dev: ParallelCorpus::from_pairs(format!("{base}.dev"), dev)?,
        test: ParallelCorpus::from_pairs(format!("{base}.test"), test)?,
    })
}

/// A frequency-truncated token vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    limit: usize,
    unk_token: String,
    index: HashSet<String>,
}

impl Vocabulary {
    fn from_sorted(entries: Vec<(String, u64)>, limit: usize, unk_token: String) -> Self {
        let index = entries.iter().map(|(t, _)| t.clone()).collect();
        Self {
            entries,
            limit,
            unk_token,
            index,
        }
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn unk_token(&self) -> &str {
        &self.unk_token
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains(token)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("#vocab v1\n");
        for (tok, count) in &self.entries {
            let _ = writeln!(out, "{tok}\t{count}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_string(path, &self.to_file_string())
    }

    /// Parses the `#vocab v1` format. The file does not record the original
    /// limit, so the loaded limit is the entry count (at least 1).
    pub fn parse(text: &str) -> Result<Self> {
        const WHAT: &str = "vocabulary";
        let lines = textio::split_lines(text.as_bytes())
            .map_err(|line| Error::parse(WHAT, line, "invalid UTF-8"))?;
        let mut iter = lines.iter().enumerate();
        match iter.next() {
            Some((_, h)) if h == "#vocab v1" => {}
            _ => return Err(Error::parse(WHAT, 1, "missing `#vocab v1` header")),
        }
        let mut entries: Vec<(String, u64)> = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in iter {
            let lineno = i + 1;
            let (tok, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(WHAT, lineno, "expected `token<TAB>count`"))?;
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::parse(WHAT, lineno, "token empty or contains whitespace"));
            }
            let count: u64 = count
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| Error::parse(WHAT, lineno, "count must be a positive integer"))?;
            if !seen.insert(tok.to_owned()) {
                return Err(Error::parse(WHAT, lineno, format!("duplicate token `{tok}`")));
            }
            if tok == DEFAULT_UNK {
                return Err(Error::parse(WHAT, lineno, "unknown token listed as an entry"));
            }
            if let Some((prev_tok, prev_count)) = entries.last() {
                if !ranks_before(prev_tok, *prev_count, tok, count) {
                    return Err(Error::parse(WHAT, lineno, "entries out of order"));
                }
            }
            entries.push((tok.to_owned(), count));
        }
        let limit = entries.len().max(1);
        Ok(Self::from_sorted(entries, limit, DEFAULT_UNK.to_owned()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(text).map_err(|e| {
            let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
            Error::Decode {
                path: path.to_path_buf(),
                line: valid.iter().filter(|&&b| b == b'\n').count() + 1,
            }
        })?;
        Self::parse(&text)
    }
}

/// Count descending, then token ascending by bytes.
fn ranks_before(a: &str, a_count: u64, b: &str, b_count: u64) -> bool {
    a_count > b_count || (a_count == b_count && a.as_bytes() < b.as_bytes())
}

/// Keeps the `limit` most frequent tokens. The unknown token itself is never
/// an entry even if it occurs in the input.
pub fn build_vocab<L, T>(lines: L, limit: usize) -> Result<Vocabulary>
where
    L: IntoIterator,
    L::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    build_vocab_with_unk(lines, limit, DEFAULT_UNK)
}

pub fn build_vocab_with_unk<L, T>(lines: L, limit: usize, unk_token: &str) -> Result<Vocabulary>
where
    L: IntoIterator,
    L::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    if limit == 0 {
        return Err(Error::Input("vocabulary limit must be at least 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for line in lines {
        for tok in line {
            let tok = tok.as_ref();
            if tok == unk_token {
                continue;
            }
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_owned(), 1);
                }
            }
        }
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
    entries.sort_unstable_by(|(a, ac), (b, bc)| bc.cmp(ac).then_with(|| a.as_bytes().cmp(b.as_bytes())));
    entries.truncate(limit);
    Ok(Vocabulary::from_sorted(entries, limit, unk_token.to_owned()))
}

pub fn apply_vocab<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            if vocab.contains(t) {
                t.to_owned()
            } else {
                vocab.unk_token.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(n: usize) -> ParallelCorpus {
        let src = (0..n).map(|i| format!("s{i}")).collect();
        let tgt = (0..n).map(|i| format!("t{i}")).collect();
        ParallelCorpus::from_lines("c", src, tgt).unwrap()
    }

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn load_zips_and_trims() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("a.src");
        let t = dir.path().join("a.tgt");
        std::fs::write(&s, "  a b \r\n").unwrap();
        std::fs::write(&t, "x y\n").unwrap();
        let c = load_parallel(&s, &t).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.pairs()[0].source, "a b");
        assert_eq!(c.pairs()[0].target, "x y");
    }

    #[test]
    fn load_reports_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("a.src");
        let t = dir.path().join("a.tgt");
        std::fs::write(&s, "1\n2\n3\n").unwrap();
        std::fs::write(&t, "1\n2\n3\n4\n").unwrap();
        match load_parallel(&s, &t) {
            Err(Error::Alignment {
                source_lines: 3,
                target_lines: 4,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_reports_decode_line() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("a.src");
        let t = dir.path().join("a.tgt");
        std::fs::write(&s, b"ok\n\xc3\x28\n").unwrap();
        std::fs::write(&t, "1\n2\n").unwrap();
        match load_parallel(&s, &t) {
            Err(Error::Decode { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_lines_are_kept() {
        let c = ParallelCorpus::from_lines("c", toks(&["a", "", "b"]), toks(&["x", "y", ""])).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.pairs()[1].source, "");
    }

    #[test]
    fn split_sizes() {
        let s = split(&corpus(100), &SplitSpec { dev_count: 3, test_count: 4, seed: 1 }).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (93, 3, 4));
    }

    #[test]
    fn split_100k_lines() {
        let c = corpus(100_000);
        let s = split(&c, &SplitSpec { dev_count: 3500, test_count: 3500, seed: 9 }).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (93_000, 3500, 3500));
    }

    #[test]
    fn split_rejects_oversized_holdout() {
        let c = corpus(10);
        for (dev, test) in [(5, 5), (9, 2), (0, 3), (3, 0)] {
            assert!(matches!(
                split(&c, &SplitSpec { dev_count: dev, test_count: test, seed: 0 }),
                Err(Error::SplitSize { .. })
            ));
        }
    }

    #[test]
    fn vocab_examples() {
        let v = build_vocab(vec![toks(&["a", "b", "a"])], 1).unwrap();
        assert_eq!(v.entries(), &[("a".to_string(), 2)]);
        let v = build_vocab(vec![toks(&["b", "a"])], 2).unwrap();
        assert_eq!(v.entries(), &[("a".to_string(), 1), ("b".to_string(), 1)]);
        let v = build_vocab(Vec::<Vec<String>>::new(), 5).unwrap();
        assert!(v.is_empty());
        assert!(build_vocab(vec![toks(&["a"])], 0).is_err());
    }

    #[test]
    fn vocab_excludes_unk() {
        let v = build_vocab(vec![toks(&["<unk>", "<unk>", "a"])], 5).unwrap();
        assert_eq!(v.entries(), &[("a".to_string(), 1)]);
    }

    #[test]
    fn apply_examples() {
        let v = build_vocab(vec![toks(&["a"])], 10).unwrap();
        assert_eq!(apply_vocab(&toks(&["a", "z"]), &v), toks(&["a", "<unk>"]));
        assert_eq!(apply_vocab::<String>(&[], &v), Vec::<String>::new());
        assert_eq!(apply_vocab(&toks(&["a", "a"]), &v), toks(&["a", "a"]));
    }

    #[test]
    fn vocab_file_round_trip() {
        let v = build_vocab(vec![toks(&["b", "a", "a", "c"])], 10).unwrap();
        let text = v.to_file_string();
        assert_eq!(text, "#vocab v1\na\t2\nb\t1\nc\t1\n");
        let back = Vocabulary::parse(&text).unwrap();
        assert_eq!(back.entries(), v.entries());
        assert_eq!(back.to_file_string(), text);
    }

    #[test]
    fn vocab_file_errors() {
        assert!(matches!(Vocabulary::parse("a\t1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            Vocabulary::parse("#vocab v1\na\t1\nb\t2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Vocabulary::parse("#vocab v1\na\tzero\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 3usize..300, dev in 1usize..50, test in 1usize..50, seed: u64) {
            prop_assume!(dev + test < n);
            let c = corpus(n);
            let spec = SplitSpec { dev_count: dev, test_count: test, seed };
            let s = split(&c, &spec).unwrap();
            let mut all: Vec<usize> = s.train.indices();
            all.extend(s.dev.indices());
            all.extend(s.test.indices());
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.dev.len(), dev);
            prop_assert_eq!(s.test.len(), test);
            prop_assert_eq!(split(&c, &spec).unwrap(), s);
        }

        #[test]
        fn vocab_order_and_truncation(
            lines in proptest::collection::vec(proptest::collection::vec("[a-e]{1,2}", 0..8), 0..8),
            limit in 1usize..6,
        ) {
            let v = build_vocab(lines.clone(), limit).unwrap();
            prop_assert!(v.len() <= limit);
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for t in lines.iter().flatten() {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            for (k, kc) in v.entries() {
                prop_assert_eq!(counts[k.as_str()], *kc);
            }
            for (d, dc) in &counts {
                if v.contains(d) {
                    continue;
                }
                for (k, kc) in v.entries() {
                    prop_assert!(ranks_before(k, *kc, d, *dc));
                }
            }
            let flat: Vec<String> = lines.into_iter().flatten().collect();
            let applied = apply_vocab(&flat, &v);
            prop_assert_eq!(applied.len(), flat.len());
            for t in &applied {
                prop_assert!(v.contains(t) || t == v.unk_token());
            }
        }
    }
}
