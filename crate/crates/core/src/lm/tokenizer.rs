//! Word-level tokenizer in the style of GPT-2's pre-tokenizer: a single
//! leading space attaches to the following word, number, punctuation mark
//! or marker; other whitespace runs are tokens of their own. Detokenizing is
//! plain concatenation, so round trips are exact.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::LmError;
use crate::plandsl::{BOS, EOS, SEP};

pub type TokenId = u32;

pub const END_OF_TEXT: &str = "<|endoftext|>";
pub const UNKNOWN: &str = "<unk>";
pub const SPECIALS: [&str; 5] = [SEP, BOS, EOS, END_OF_TEXT, UNKNOWN];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Tokenizer {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl From<Vec<String>> for Tokenizer {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();
        Tokenizer { tokens, index }
    }
}

impl From<Tokenizer> for Vec<String> {
    fn from(t: Tokenizer) -> Self {
        t.tokens
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Letter,
    Digit,
    Space,
    Other,
}

fn class(c: char) -> Class {
    if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Digit
    } else if c.is_whitespace() {
        Class::Space
    } else {
        Class::Other
    }
}

/// Splits text into pre-tokens; concatenating them yields the input.
pub fn pretokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let mut start = i;
        let c = text[i..].chars().next().expect("non-empty");
        if class(c) == Class::Space {
            let run_end = text[i..]
                .char_indices()
                .find(|(_, c)| class(*c) != Class::Space)
                .map_or(text.len(), |(j, _)| i + j);
            // a final single space before a non-space attaches to it
            let attaches = run_end < text.len() && text.as_bytes()[run_end - 1] == b' ';
            if !attaches {
                out.push(&text[i..run_end]);
                i = run_end;
                continue;
            }
            if run_end - 1 > i {
                out.push(&text[i..run_end - 1]);
            }
            start = run_end - 1;
            i = run_end;
        }
        let body = &text[i..];
        let len = if let Some(sp) = SPECIALS.iter().find(|s| body.starts_with(**s)) {
            sp.len()
        } else {
            let first = body.chars().next().expect("non-empty");
            match class(first) {
                Class::Letter | Class::Digit => body
                    .char_indices()
                    .find(|(_, c)| class(*c) != class(first))
                    .map_or(body.len(), |(j, _)| j),
                _ => first.len_utf8(),
            }
        };
        i += len;
        out.push(&text[start..i]);
    }
    out
}

impl Tokenizer {
    /// Vocabulary: special markers (bare, then with their attached space),
    /// then `extra` tokens, then the remaining pre-tokens of the corpus in
    /// sorted order, so corpus order does not affect ids.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a str>, extra: &[String]) -> Tokenizer {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(SPECIALS.iter().map(|s| format!(" {s}")));
        let mut seen: BTreeSet<String> = tokens.iter().cloned().collect();
        let mut push = |t: &str, tokens: &mut Vec<String>| {
            if seen.insert(t.to_string()) {
                tokens.push(t.to_string());
            }
        };
        for t in extra {
            push(t, &mut tokens);
        }
        let rest: BTreeSet<&str> = corpus.into_iter().flat_map(pretokenize).collect();
        for t in rest {
            push(t, &mut tokens);
        }
        Tokenizer::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Ids of a special marker, bare and with its attached space.
    pub fn marker_ids(&self, marker: &str) -> [TokenId; 2] {
        let bare = self.id(marker).expect("special markers are always registered");
        let spaced = self.id(&format!(" {marker}")).expect("special markers are always registered");
        [bare, spaced]
    }

    /// Ids that stop generation: `<EOS>` and end-of-text, in both spellings.
    pub fn stop_ids(&self) -> Vec<TokenId> {
        let mut ids = self.marker_ids(EOS).to_vec();
        ids.extend(self.marker_ids(END_OF_TEXT));
        ids
    }

    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>, LmError> {
        pretokenize(text)
            .into_iter()
            .map(|t| self.id(t).ok_or_else(|| LmError::UnknownToken(t.to_string())))
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter().map(|i| self.token(*i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_space_attaches() {
        assert_eq!(
            pretokenize("Put the soap: <BOS> 0.PickupObject(soap) <EOS>"),
            vec![
                "Put", " the", " soap", ":", " <BOS>", " 0", ".", "PickupObject", "(", "soap", ")",
                " <EOS>"
            ]
        );
    }

    #[test]
    fn whitespace_runs() {
        assert_eq!(pretokenize("a  b\n- c"), vec!["a", " ", " b", "\n", "-", " c"]);
        assert_eq!(pretokenize("a \n"), vec!["a", " \n"]);
        assert_eq!(pretokenize(" "), vec![" "]);
        assert_eq!(pretokenize(""), Vec::<&str>::new());
    }

    #[test]
    fn encode_decode_round_trip() {
        let text = "Heat the apple: <SEP> [Kitchen=\n- fnk sink]  <BOS> 0.X(y) <EOS>";
        let tok = Tokenizer::build([text], &[]);
        let ids = tok.encode(text).unwrap();
        assert_eq!(tok.decode(&ids), text);
        assert_eq!(tok.encode("zebra"), Err(LmError::UnknownToken("zebra".into())));
    }

    #[test]
    fn specials_come_first() {
        let tok = Tokenizer::build(["x"], &["fnk".to_string()]);
        assert_eq!(tok.id(SEP), Some(0));
        assert_eq!(tok.id(" <BOS>"), Some(6));
        assert_eq!(tok.id("fnk"), Some(10));
        assert_eq!(tok.len(), 12);
    }
}
