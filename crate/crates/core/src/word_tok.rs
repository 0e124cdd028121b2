//! Punctuation-delimiting word tokenizer and its inverse.
//!
//! Two modes are supported. [`TokMode::English`] additionally splits the
//! common English clitics (`n't`, `'s`, `'d`, `'ll`, `'re`, `'ve`, `'m`).
//! [`TokMode::ApostrophePreserving`] never splits on an apostrophe, so words
//! such as `Yup'ik` stay whole.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TokMode {
    #[default]
    English,
    ApostrophePreserving,
}

impl fmt::Display for TokMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokMode::English => "english",
            TokMode::ApostrophePreserving => "apostrophe",
        })
    }
}

impl FromStr for TokMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "english" | "en" => Ok(TokMode::English),
            "apostrophe" | "apostrophe-preserving" => Ok(TokMode::ApostrophePreserving),
            other => Err(Error::Input(format!("unknown tokenizer mode `{other}`"))),
        }
    }
}

const SINGLE_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']'];
const DOUBLE_PUNCT: &[&str] = &["''", "``"];

/// Clitics split off in English mode, longest first where prefixes overlap.
const CLITICS: &[&str] = &["n't", "'ll", "'re", "'ve", "'s", "'d", "'m"];

const CLOSING: &[&str] = &[".", ",", "!", "?", ";", ":", ")", "]", "''"];
const OPENING: &[&str] = &["(", "[", "``"];

pub fn tokenize(line: &str, mode: TokMode) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let mut word_start = 0;
        let mut rest = chunk;
        let mut pos = 0;
        while let Some(c) = rest.chars().next() {
            let punct_len = if DOUBLE_PUNCT.iter().any(|p| rest.starts_with(p)) {
                2
            } else if SINGLE_PUNCT.contains(&c) {
                c.len_utf8()
            } else {
                0
            };
            if punct_len > 0 {
                push_word(&chunk[word_start..pos], mode, &mut out);
                out.push(rest[..punct_len].to_owned());
                pos += punct_len;
                word_start = pos;
            } else {
                pos += c.len_utf8();
            }
            rest = &chunk[pos..];
        }
        push_word(&chunk[word_start..pos], mode, &mut out);
    }
    out
}

fn push_word(word: &str, mode: TokMode, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    if mode == TokMode::English {
        for clitic in CLITICS {
            if word.len() <= clitic.len() {
                continue;
            }
            let cut = word.len() - clitic.len();
            if word.is_char_boundary(cut) && word[cut..].eq_ignore_ascii_case(clitic) {
                out.push(word[..cut].to_owned());
                out.push(word[cut..].to_owned());
                return;
            }
        }
    }
    out.push(word.to_owned());
}

fn is_clitic(tok: &str) -> bool {
    CLITICS.iter().any(|c| tok.eq_ignore_ascii_case(c))
}

/// Joins tokens with single spaces, dropping the space before closing
/// punctuation and after opening punctuation. In English mode clitics (and
/// the closing quote `''`) attach to the previous token.
pub fn detokenize<S: AsRef<str>>(tokens: &[S], mode: TokMode) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    for tok in tokens {
        let tok = tok.as_ref();
        let attach = CLOSING.contains(&tok) || (mode == TokMode::English && is_clitic(tok));
        if !glue_next && !attach {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = OPENING.contains(&tok);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(line: &str, mode: TokMode) -> Vec<String> {
        tokenize(line, mode)
    }

    #[test]
    fn english_examples() {
        assert_eq!(
            t("the dog hadn't eaten.", TokMode::English),
            ["the", "dog", "had", "n't", "eaten", "."]
        );
        assert_eq!(t("they'd haul", TokMode::English), ["they", "'d", "haul"]);
        assert_eq!(t("I'LL go", TokMode::English), ["I", "'LL", "go"]);
    }

    #[test]
    fn apostrophe_mode_keeps_words() {
        let m = TokMode::ApostrophePreserving;
        assert_eq!(t("pissuryullrunrituk", m), ["pissuryullrunrituk"]);
        assert_eq!(t("Yup'ik", m), ["Yup'ik"]);
        assert_eq!(t("they'd", m), ["they'd"]);
        assert_eq!(t("Yup'ik.", m), ["Yup'ik", "."]);
    }

    #[test]
    fn punctuation_and_quotes() {
        assert_eq!(
            t("``Hi,\" (she) said [x]: ok?!", TokMode::English),
            ["``", "Hi", ",", "\"", "(", "she", ")", "said", "[", "x", "]", ":", "ok", "?", "!"]
        );
        assert_eq!(t("hunter.''", TokMode::English), ["hunter", ".", "''"]);
        assert_eq!(t("3-4 1,000", TokMode::English), ["3-4", "1", ",", "000"]);
    }

    #[test]
    fn bare_clitic_is_not_split() {
        assert_eq!(t("n't 's", TokMode::English), ["n't", "'s"]);
    }

    #[test]
    fn detokenize_examples() {
        assert_eq!(detokenize(&["the", "dog", "."], TokMode::English), "the dog.");
        assert_eq!(detokenize(&["they", "'d", "haul"], TokMode::English), "they'd haul");
        assert_eq!(detokenize::<&str>(&[], TokMode::English), "");
        assert_eq!(
            detokenize(&["since", "the", "dog", "had", "n't", "eaten", ",", "he", "(", "x", ")"], TokMode::English),
            "since the dog hadn't eaten, he (x)"
        );
        assert_eq!(detokenize(&["a", "'d"], TokMode::ApostrophePreserving), "a 'd");
    }

    const FIXTURES: &[&str] = &[
        "in the spring, they hauled seals up from the ocean.",
        "in the spring , they brought spotted seals up there , they 'd haul spotted seals up there .",
        "since the dog had n't eaten , he went hunting and hunted with food .",
        "i know you were a good hunter . ''",
        "and when we 'd pick berries , we 'd go and get them to our destination .",
        "when people were roughhousing in their homes, ghosts would appear.",
        "``Yup'ik\" is spoken (mostly) in Alaska; isn't it?",
        "I'm sure they've gone [again]: we're late!",
        "pissuryullrunrituk",
        "",
    ];

    #[test]
    fn fixture_round_trip() {
        for mode in [TokMode::English, TokMode::ApostrophePreserving] {
            for s in FIXTURES {
                let once = tokenize(s, mode);
                let again = tokenize(&detokenize(&once, mode), mode);
                assert_eq!(again, once, "mode {mode}, input {s:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn preserves_characters(s in "[a-zA-Z'.,!?;:\"()\\[\\]` \t-]{0,40}") {
            for mode in [TokMode::English, TokMode::ApostrophePreserving] {
                let toks = tokenize(&s, mode);
                let joined: String = toks.concat();
                let stripped: String = s.chars().filter(|c| !c.is_whitespace()).collect();
                prop_assert_eq!(joined, stripped);
                for tok in &toks {
                    prop_assert!(!tok.is_empty());
                    prop_assert!(!tok.chars().any(char::is_whitespace));
                }
            }
        }

        #[test]
        fn apostrophe_mode_never_splits_words(w in "[a-z]{1,5}'[a-z]{1,5}") {
            prop_assert_eq!(tokenize(&w, TokMode::ApostrophePreserving), vec![w.clone()]);
        }
    }
}
