//! Count-based choice of argument tokens.
//!
//! Inside parentheses the next token names an object. Which one is mostly
//! decided by how a candidate relates to the prompt, not by its identity:
//! it occurs in the goal, it occurs in the context, a context line links it
//! to a goal word, or an earlier step already used it. Every candidate at
//! an argument position is reduced to such a pattern, and the model counts
//! how often candidates with each pattern were the one chosen. Patterns
//! are counted at several granularities and the estimates back off from the
//! finest to the coarsest.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::tokenizer::{TokenId, Tokenizer};

const NONE: u32 = u32::MAX;

/// Stand-in for masked tokens in keys.
pub const MASK: TokenId = TokenId::MAX;

/// Lowercased token text without surrounding whitespace.
fn norm(tokenizer: &Tokenizer, id: TokenId) -> String {
    tokenizer.token(id).trim().to_lowercase()
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(char::is_alphanumeric)
}

fn stem(w: &str) -> &str {
    w.strip_suffix('s').filter(|s| s.len() >= 3).unwrap_or(w)
}

/// How a candidate matches a goal word: 3 as two adjacent goal words written
/// together, 2 exactly, 1 loosely (prefix or suffix), 0 not. Plural goal
/// words also match in their singular form.
fn match_level(candidate: &str, words: &[String], i: usize) -> u32 {
    let w = &words[i];
    let s = stem(w);
    if words.get(i + 1).is_some_and(|n| candidate == format!("{w}{n}") || candidate == format!("{w}{}", stem(n))) {
        return 3;
    }
    if candidate == w || candidate == s {
        return 2;
    }
    if s.len() >= 4 && (candidate.starts_with(s) || candidate.ends_with(s)) {
        return 1;
    }
    0
}

/// Prompt facts the argument patterns are built from. Depends only on the
/// prompt and the model, so it is computed once per generation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromptIndex {
    /// Candidate tokens: every token seen as an argument in training plus
    /// the bare form of every context word.
    pub candidates: Vec<TokenId>,
    /// Best goal match of a candidate: (level, rank of the goal word among
    /// object-like goal words).
    goal: HashMap<TokenId, (u32, u32)>,
    in_context: HashSet<TokenId>,
    /// Context triples `candidate relation word` whose last word matches a
    /// goal word: (relation token, goal rank).
    links: HashMap<TokenId, BTreeSet<(TokenId, u32)>>,
    /// The goal with each run of object-like words replaced by [`MASK`].
    pub skeleton: Vec<TokenId>,
    /// Context triples `word relation word` whose outer words both match
    /// goal words: (relation token, first rank, second rank).
    pub pairs: BTreeSet<(TokenId, u32, u32)>,
}

impl PromptIndex {
    pub fn new(tokenizer: &Tokenizer, arguments: &BTreeSet<TokenId>, goal: &[TokenId], context: &[TokenId]) -> Self {
        let words: Vec<String> = goal.iter().map(|t| norm(tokenizer, *t)).collect();
        let bare: Vec<Option<TokenId>> = context
            .iter()
            .map(|t| {
                let s = norm(tokenizer, *t);
                if is_word(&s) {
                    tokenizer.id(&s)
                } else {
                    None
                }
            })
            .collect();
        let mut candidates: BTreeSet<TokenId> = arguments.clone();
        candidates.extend(bare.iter().flatten());
        let texts: Vec<String> = candidates.iter().map(|c| norm(tokenizer, *c)).collect();
        // a two-word match claims both words; shorter matches there do not count
        let spans: Vec<bool> = (0..words.len())
            .map(|i| texts.iter().any(|t| match_level(t, &words, i) == 3))
            .collect();
        // goal words that look like object names get ranks in order
        let mut ranks: Vec<Option<u32>> = vec![None; words.len()];
        let mut next = 0;
        for i in 0..words.len() {
            let second = i > 0 && spans[i - 1];
            if !second && is_word(&words[i]) && texts.iter().any(|t| match_level(t, &words, i) > 0) {
                ranks[i] = Some(next);
                next += 1;
            }
        }
        let best = |text: &str| -> Option<(u32, u32)> {
            (0..words.len())
                .filter_map(|i| Some((match_level(text, &words, i), ranks[i]?, spans[i])))
                .filter(|(l, _, span)| *l > 0 && (*l == 3 || !span))
                .map(|(l, r, _)| (l, r))
                .max_by_key(|(l, r)| (*l, std::cmp::Reverse(*r)))
        };
        let mut out = PromptIndex { candidates: candidates.into_iter().collect(), ..Default::default() };
        for (t, r) in goal.iter().zip(&ranks) {
            let t = if r.is_some() { MASK } else { *t };
            if t != MASK || out.skeleton.last() != Some(&MASK) {
                out.skeleton.push(t);
            }
        }
        for c in &out.candidates {
            if let Some(m) = best(&norm(tokenizer, *c)) {
                out.goal.insert(*c, m);
            }
        }
        out.in_context = bare.iter().flatten().copied().collect();
        for i in 0..context.len().saturating_sub(2) {
            let Some(a) = bare[i] else { continue };
            if let Some((_, rank)) = best(&norm(tokenizer, context[i + 2])) {
                out.links.entry(a).or_default().insert((context[i + 1], rank));
                if let Some((_, first)) = best(&norm(tokenizer, context[i])) {
                    out.pairs.insert((context[i + 1], first, rank));
                }
            }
        }
        out
    }
}

/// Where the next argument goes and what earlier steps used.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgPosition {
    pub action: TokenId,
    pub index: u32,
    /// Earlier arguments as (token, action, index), oldest first.
    pub used: Vec<(TokenId, TokenId, u32)>,
}

/// Reads the continuation; `None` unless the next token starts an argument.
pub fn arg_position(cont: &[TokenId], open: TokenId, comma: TokenId, close: TokenId) -> Option<ArgPosition> {
    let (mut action, mut index, mut inside) = (NONE, 0, false);
    let mut used = Vec::new();
    for (i, t) in cont.iter().enumerate() {
        if *t == open {
            action = if i > 0 { cont[i - 1] } else { NONE };
            index = 0;
            inside = true;
        } else if *t == close {
            inside = false;
        } else if *t == comma && inside {
            index += 1;
        } else if inside {
            used.push((*t, action, index));
        }
    }
    let last = *cont.last()?;
    (inside && (last == open || last == comma)).then_some(ArgPosition { action, index, used })
}

/// Pattern keys of a candidate from finest to coarsest.
pub fn pattern_keys(index: &PromptIndex, pos: &ArgPosition, slot: u32, candidate: TokenId, relation_class: impl Fn(TokenId) -> u32) -> Vec<Vec<u32>> {
    let g = index.goal.get(&candidate).map_or(0, |(l, r)| 1 + l * 8 + (*r).min(7));
    let x = u32::from(index.in_context.contains(&candidate));
    let links = index.links.get(&candidate);
    let full: Vec<u32> = links.into_iter().flatten().flat_map(|(rel, rank)| [*rel, *rank]).collect();
    let coarse: BTreeSet<(u32, u32)> =
        links.into_iter().flatten().map(|(rel, rank)| (relation_class(*rel), *rank)).collect();
    let coarse: Vec<u32> = coarse.into_iter().flat_map(|(c, r)| [c, r]).collect();
    let ranks: BTreeSet<u32> = links.into_iter().flatten().map(|(_, r)| *r).collect();
    let (pa, pi) = pos.used.iter().rev().find(|u| u.0 == candidate).map_or((NONE, NONE), |u| (u.1, u.2));
    let cls = [pos.action, pos.index];
    let key = |level: u32, head: &[u32], tail: &[&[u32]]| {
        let mut k = vec![level];
        k.extend(head);
        for part in tail {
            k.push(part.len() as u32);
            k.extend(*part);
        }
        k
    };
    let ranks: Vec<u32> = ranks.into_iter().collect();
    vec![
        key(0, &[slot], &[&[g, x, pa, pi], &full]),
        key(1, &cls, &[&[g, x, pa, pi], &full]),
        key(2, &cls, &[&[g, x, pa, pi], &coarse]),
        key(3, &cls, &[&[g, x, pa, pi], &ranks]),
        key(4, &cls, &[&[g, pa, pi]]),
        key(5, &cls, &[&[pa, pi]]),
    ]
}

/// Chosen / present counts per pattern key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternCounts {
    pub counts: HashMap<Vec<u32>, (u32, u32)>,
}

impl PatternCounts {
    pub fn observe(&mut self, keys: &[Vec<u32>], chosen: bool) {
        for k in keys {
            let e = self.counts.entry(k.clone()).or_insert((0, 0));
            e.0 += u32::from(chosen);
            e.1 += 1;
        }
    }

    /// Probability that a candidate with these keys is chosen, each level
    /// smoothed towards the next coarser one.
    pub fn probability(&self, keys: &[Vec<u32>], base: f64, prior: f64) -> f64 {
        keys.iter().rev().fold(base, |p, k| {
            let (c, n) = self.counts.get(k).copied().unwrap_or((0, 0));
            (c as f64 + prior * p) / (n as f64 + prior)
        })
    }
}
