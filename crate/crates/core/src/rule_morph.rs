//! Rule-based morphological parsing for agglutinative words.
//!
//! A [`RuleSet`] pairs a base lexicon with suffix rules. Each suffix names a
//! join operator describing what happens at the stem boundary:
//!
//! | symbol | operator               | effect on the stem                     |
//! |--------|------------------------|----------------------------------------|
//! | `+`    | plain                  | unchanged                              |
//! | `-`    | drop final consonant   | final character removed (must be a consonant) |
//! | `~`    | drop final `e`         | final `e` removed (must be present)    |
//!
//! [`analyze`] inverts the operators to peel suffixes off a surface word and
//! returns every derivation it finds. Words without a derivation come back
//! as a single unresolved analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::bpe::CONTINUATION;
use crate::error::{Error, Result};
use crate::textio;

pub const DEFAULT_MAX_SUFFIXES: usize = 8;
const DEFAULT_CONSONANTS: &str = "bcdfghjklmnpqrstvwxz";

/// The toy grammar shipped with the crate. Illustrative only.
pub const BUNDLED_GRAMMAR: &str = include_str!("../data/toy_yupik.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Join {
    Plain,
    DropFinalConsonant,
    DropFinalE,
}

impl Join {
    pub fn symbol(self) -> char {
        match self {
            Join::Plain => '+',
            Join::DropFinalConsonant => '-',
            Join::DropFinalE => '~',
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "+" => Some(Join::Plain),
            "-" => Some(Join::DropFinalConsonant),
            "~" => Some(Join::DropFinalE),
            _ => None,
        }
    }

    fn deletes(self) -> bool {
        self != Join::Plain
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    /// Surface form, without any leading `-` attachment notation.
    pub form: String,
    pub join: Join,
    pub gloss: String,
    /// Whether the rule may end a word.
    pub terminal: bool,
}

impl SuffixRule {
    pub fn new(form: &str, join: Join, gloss: impl Into<String>, terminal: bool) -> Result<Self> {
        let form = form.strip_prefix('-').unwrap_or(form);
        if form.is_empty() || form.chars().any(char::is_whitespace) {
            return Err(Error::Input(format!("invalid suffix form {form:?}")));
        }
        if join.deletes() && form.chars().count() < 2 {
            return Err(Error::Input(format!(
                "deleting suffix `{form}` must be at least two characters"
            )));
        }
        Ok(Self {
            form: form.to_owned(),
            join,
            gloss: gloss.into(),
            terminal,
        })
    }
}

impl fmt::Display for SuffixRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.join.symbol(), self.form)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    bases: BTreeMap<String, String>,
    suffixes: Vec<SuffixRule>,
    max_suffixes: usize,
    consonants: BTreeSet<char>,
}

impl RuleSet {
    pub fn new(
        bases: BTreeMap<String, String>,
        suffixes: Vec<SuffixRule>,
        max_suffixes: usize,
        consonants: BTreeSet<char>,
    ) -> Result<Self> {
        if let Some(b) = bases
            .keys()
            .find(|b| b.is_empty() || b.chars().any(char::is_whitespace))
        {
            return Err(Error::Input(format!("invalid base form {b:?}")));
        }
        if max_suffixes == 0 {
            return Err(Error::Input("max suffixes must be positive".into()));
        }
        Ok(Self {
            bases,
            suffixes,
            max_suffixes,
            consonants,
        })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_GRAMMAR).expect("bundled grammar is valid")
    }

    pub fn bases(&self) -> &BTreeMap<String, String> {
        &self.bases
    }

    pub fn suffixes(&self) -> &[SuffixRule] {
        &self.suffixes
    }

    pub fn max_suffixes(&self) -> usize {
        self.max_suffixes
    }

    pub fn consonants(&self) -> &BTreeSet<char> {
        &self.consonants
    }

    pub fn is_consonant(&self, c: char) -> bool {
        self.consonants.contains(&c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines = textio::read_lines(path)?;
        Self::parse_lines(&lines)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines = textio::split_lines(text.as_bytes())
            .map_err(|line| Error::parse(WHAT, line, "invalid UTF-8"))?;
        Self::parse_lines(&lines)
    }

    fn parse_lines(lines: &[String]) -> Result<Self> {
        let mut bases = BTreeMap::new();
        let mut suffixes = Vec::new();
        let mut max_suffixes = DEFAULT_MAX_SUFFIXES;
        let mut consonants: BTreeSet<char> = DEFAULT_CONSONANTS.chars().collect();
        for (i, line) in lines.iter().enumerate() {
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#consonants") {
                let set: BTreeSet<char> = rest.chars().filter(|c| !c.is_whitespace()).collect();
                if set.is_empty() {
                    return Err(Error::parse(WHAT, lineno, "empty consonant set"));
                }
                consonants = set;
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#max-suffixes") {
                max_suffixes = rest
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::parse(WHAT, lineno, "max-suffixes must be a positive integer"))?;
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "base" => {
                    let [_, form, gloss] = fields[..] else {
                        return Err(Error::parse(WHAT, lineno, "expected `base<TAB>form<TAB>gloss`"));
                    };
                    if form.is_empty() || form.chars().any(char::is_whitespace) {
                        return Err(Error::parse(WHAT, lineno, "empty or whitespace base form"));
                    }
                    if bases.insert(form.to_owned(), gloss.to_owned()).is_some() {
                        return Err(Error::parse(WHAT, lineno, format!("duplicate base `{form}`")));
                    }
                }
                "suffix" => {
                    let [_, form, op, terminal, gloss] = fields[..] else {
                        return Err(Error::parse(
                            WHAT,
                            lineno,
                            "expected `suffix<TAB>form<TAB>op<TAB>terminal<TAB>gloss`",
                        ));
                    };
                    let join = Join::from_symbol(op).ok_or_else(|| {
                        Error::parse(WHAT, lineno, format!("unknown join operator `{op}`"))
                    })?;
                    let terminal = parse_bool(terminal).ok_or_else(|| {
                        Error::parse(WHAT, lineno, format!("terminal flag `{terminal}` is not yes/no"))
                    })?;
                    let rule = SuffixRule::new(form, join, gloss, terminal)
                        .map_err(|e| Error::parse(WHAT, lineno, e.to_string()))?;
                    suffixes.push(rule);
                }
                other => {
                    return Err(Error::parse(WHAT, lineno, format!("unknown entry kind `{other}`")));
                }
            }
        }
        Self::new(bases, suffixes, max_suffixes, consonants)
    }
}

const WHAT: &str = "rule file";

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "yes" | "true" | "1" => Some(true),
        "no" | "false" | "0" => Some(false),
        _ => None,
    }
}

/// One morpheme of an analysis: its share of the surface word and its gloss.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Morpheme {
    pub surface: String,
    pub gloss: String,
}

/// The base and suffix rule indices (outermost last) that generate a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Derivation {
    pub base: String,
    pub suffixes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub morphemes: Vec<Morpheme>,
    pub resolved: bool,
    pub derivation: Option<Derivation>,
}

impl Analysis {
    fn unresolved(word: &str) -> Self {
        Self {
            morphemes: vec![Morpheme {
                surface: word.to_owned(),
                gloss: String::new(),
            }],
            resolved: false,
            derivation: None,
        }
    }

    pub fn glosses(&self) -> impl Iterator<Item = &str> {
        self.morphemes.iter().map(|m| m.gloss.as_str())
    }
}

/// Applies `rules` to `base` left to right.
pub fn generate(base: &str, rules: &[&SuffixRule], consonants: &BTreeSet<char>) -> Result<String> {
    Ok(generate_parts(base, rules, consonants)?.concat())
}

/// Like [`generate`], but returns each morpheme's surface contribution.
/// A deletion removes the last character of the nearest preceding
/// non-empty contribution.
pub fn generate_parts(
    base: &str,
    rules: &[&SuffixRule],
    consonants: &BTreeSet<char>,
) -> Result<Vec<String>> {
    let mut parts = vec![base.to_owned()];
    for rule in rules {
        let stem_last = parts.iter().rev().find_map(|p| p.chars().last());
        match rule.join {
            Join::Plain => {}
            Join::DropFinalConsonant => {
                if !stem_last.is_some_and(|c| consonants.contains(&c)) {
                    return Err(generation_error(rule, &parts, "stem does not end in a consonant"));
                }
                drop_last_char(&mut parts);
            }
            Join::DropFinalE => {
                if stem_last != Some('e') {
                    return Err(generation_error(rule, &parts, "stem does not end in `e`"));
                }
                drop_last_char(&mut parts);
            }
        }
        parts.push(rule.form.clone());
    }
    Ok(parts)
}

fn drop_last_char(parts: &mut [String]) {
    if let Some(p) = parts.iter_mut().rev().find(|p| !p.is_empty()) {
        p.pop();
    }
}

fn generation_error(rule: &SuffixRule, parts: &[String], reason: &'static str) -> Error {
    Error::Generation {
        rule: rule.to_string(),
        stem: parts.concat(),
        reason,
    }
}

/// Returns every derivation of `word` with at most `max_suffixes` suffixes
/// whose outermost suffix is terminal (a bare base is always accepted).
/// Results are sorted by morpheme count, then gloss sequence. When nothing
/// matches, the single result is the unresolved word.
pub fn analyze(word: &str, rules: &RuleSet) -> Vec<Analysis> {
    let mut found: BTreeSet<Derivation> = BTreeSet::new();
    let mut stack: Vec<usize> = Vec::new();
    peel(word, rules, &mut stack, &mut found);

    let mut out: Vec<Analysis> = found
        .into_iter()
        .filter_map(|d| build_analysis(word, d, rules))
        .collect();
    out.sort_by(|a, b| {
        a.morphemes
            .len()
            .cmp(&b.morphemes.len())
            .then_with(|| a.glosses().cmp(b.glosses()))
            .then_with(|| a.derivation.cmp(&b.derivation))
    });
    if out.is_empty() {
        out.push(Analysis::unresolved(word));
    }
    out
}

/// `peeled` holds suffix indices from the outermost inward.
fn peel(stem: &str, rules: &RuleSet, peeled: &mut Vec<usize>, found: &mut BTreeSet<Derivation>) {
    if rules.bases.contains_key(stem) {
        found.insert(Derivation {
            base: stem.to_owned(),
            suffixes: peeled.iter().rev().copied().collect(),
        });
    }
    if peeled.len() == rules.max_suffixes {
        return;
    }
    for (idx, rule) in rules.suffixes.iter().enumerate() {
        if peeled.is_empty() && !rule.terminal {
            continue;
        }
        let Some(rest) = stem.strip_suffix(rule.form.as_str()) else {
            continue;
        };
        peeled.push(idx);
        match rule.join {
            Join::Plain => {
                if !rest.is_empty() {
                    peel(rest, rules, peeled, found);
                }
            }
            Join::DropFinalE => peel(&format!("{rest}e"), rules, peeled, found),
            Join::DropFinalConsonant => {
                for &c in &rules.consonants {
                    peel(&format!("{rest}{c}"), rules, peeled, found);
                }
            }
        }
        peeled.pop();
    }
}

fn build_analysis(word: &str, derivation: Derivation, rules: &RuleSet) -> Option<Analysis> {
    let suffixes: Vec<&SuffixRule> = derivation.suffixes.iter().map(|&i| &rules.suffixes[i]).collect();
    // Regenerate to confirm the inverse search and recover contributions.
    let parts = generate_parts(&derivation.base, &suffixes, &rules.consonants).ok()?;
    if parts.concat() != word {
        return None;
    }
    let mut morphemes = Vec::with_capacity(parts.len());
    let base_gloss = rules.bases[&derivation.base].clone();
    let glosses = std::iter::once(base_gloss).chain(suffixes.iter().map(|s| s.gloss.clone()));
    for (surface, gloss) in parts.into_iter().zip(glosses) {
        morphemes.push(Morpheme { surface, gloss });
    }
    Some(Analysis {
        morphemes,
        resolved: true,
        derivation: Some(derivation),
    })
}

/// How each morpheme is rendered by [`tokenize_corpus_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Emit {
    #[default]
    Surface,
    /// `surface|gloss`, spaces in glosses replaced by `_`.
    SurfaceAndGloss,
}

pub fn tokenize_corpus<L: AsRef<[String]>>(lines: &[L], rules: &RuleSet) -> Vec<Vec<String>> {
    tokenize_corpus_with(lines, rules, Emit::Surface)
}

/// Replaces each word by the morphemes of its best analysis, marking every
/// non-final morpheme with `@@`. Unresolved words pass through unchanged.
pub fn tokenize_corpus_with<L: AsRef<[String]>>(
    lines: &[L],
    rules: &RuleSet,
    emit: Emit,
) -> Vec<Vec<String>> {
    let mut cache: std::collections::HashMap<&str, Vec<String>> = Default::default();
    lines
        .iter()
        .map(|line| {
            let mut out = Vec::new();
            for word in line.as_ref() {
                let toks = cache
                    .entry(word.as_str())
                    .or_insert_with(|| render(&analyze(word, rules)[0], emit));
                out.extend(toks.iter().cloned());
            }
            out
        })
        .collect()
}

fn render(analysis: &Analysis, emit: Emit) -> Vec<String> {
    let morphs: Vec<&Morpheme> = analysis
        .morphemes
        .iter()
        .filter(|m| !m.surface.is_empty())
        .collect();
    let last = morphs.len().saturating_sub(1);
    morphs
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut tok = match emit {
                Emit::Surface => m.surface.clone(),
                Emit::SurfaceAndGloss if analysis.resolved => {
                    format!("{}|{}", m.surface, m.gloss.replace(' ', "_"))
                }
                Emit::SurfaceAndGloss => m.surface.clone(),
            };
            if i < last {
                tok.push_str(CONTINUATION);
            }
            tok
        })
        .collect()
}
