//! The single tokenizer shared by every word-level metric.
//!
//! Text is lowercased and split on Unicode whitespace. Each whitespace chunk
//! then has surrounding punctuation peeled off; what remains is kept whole if
//! it looks like code (contains `_`, `.`, `(` or `)`), otherwise it is split
//! into alphanumeric runs and single punctuation characters.

use serde::{Deserialize, Serialize};

/// Characters that mark a chunk as a code-like token to be kept intact.
const CODE_MARKERS: [char; 4] = ['_', '.', '(', ')'];

const LEADING_PUNCT: &[char] = &['"', '\'', '`', '[', '{', '<', '\u{201c}', '\u{2018}'];
const TRAILING_PUNCT: &[char] = &[
    ',', ';', ':', '!', '?', '.', '"', '\'', '`', ']', '}', '>', '\u{201d}', '\u{2019}',
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_text: String,
}

impl TokenSequence {
    pub fn new(text: &str) -> Self {
        Self {
            tokens: tokenize_words(text),
            source_text: text.to_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence::new(text)
}

/// Tokenize into bare strings.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        split_chunk(chunk, &mut out);
    }
    out
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    let mut end = chars.len();

    let mut leading = Vec::new();
    while start < end && is_leading_punct(&chars[start..end]) {
        leading.push(chars[start]);
        start += 1;
    }
    let mut trailing = Vec::new();
    while end > start && is_trailing_punct(&chars[start..end]) {
        trailing.push(chars[end - 1]);
        end -= 1;
    }

    out.extend(leading.into_iter().map(String::from));

    let core = &chars[start..end];
    if !core.is_empty() {
        let has_word = core.iter().any(|c| c.is_alphanumeric());
        if has_word && core.iter().any(|c| CODE_MARKERS.contains(c)) {
            out.push(core.iter().collect());
        } else {
            split_plain(core, out);
        }
    }

    out.extend(trailing.into_iter().rev().map(String::from));
}

fn is_leading_punct(rest: &[char]) -> bool {
    let c = rest[0];
    if LEADING_PUNCT.contains(&c) {
        return rest.len() > 1;
    }
    // An opening paren is only peeled when nothing later closes it.
    c == '(' && rest.len() > 1 && !rest[1..].contains(&')')
}

fn is_trailing_punct(rest: &[char]) -> bool {
    let c = rest[rest.len() - 1];
    if rest.len() < 2 {
        return false;
    }
    if TRAILING_PUNCT.contains(&c) {
        return true;
    }
    if c == ')' {
        let opens = rest.iter().filter(|&&x| x == '(').count();
        let closes = rest.iter().filter(|&&x| x == ')').count();
        return closes > opens;
    }
    false
}

fn split_plain(core: &[char], out: &mut Vec<String>) {
    let mut word = String::new();
    for &c in core {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize_words(s)
    }

    #[test]
    fn splits_trailing_comma() {
        assert_eq!(toks("Hello, world"), vec!["hello", ",", "world"]);
    }

    #[test]
    fn empty_input() {
        assert!(toks("").is_empty());
        assert!(toks("  \n\t ").is_empty());
    }

    #[test]
    fn keeps_code_tokens_whole() {
        assert_eq!(toks("e.Cancel = true"), vec!["e.cancel", "=", "true"]);
        assert_eq!(toks("call foo_bar()."), vec!["call", "foo_bar()", "."]);
        assert_eq!(toks("(see x.y)"), vec!["(", "see", "x.y", ")"]);
    }

    #[test]
    fn sentence_final_period_is_separate() {
        assert_eq!(toks("It works."), vec!["it", "works", "."]);
    }

    #[test]
    fn plain_punctuation_is_split() {
        assert_eq!(toks("x=1"), vec!["x", "=", "1"]);
        assert_eq!(toks("don't"), vec!["don", "'", "t"]);
        assert_eq!(toks("--"), vec!["-", "-"]);
    }

    #[test]
    fn deterministic() {
        let text = "Use `String::from(x)` instead; it's e.g. faster.";
        assert_eq!(toks(text), toks(text));
    }
}
