//! Count-based autoregressive model.
//!
//! Two parts produce the logit of each vocabulary token:
//!
//! * a bounded-history n-gram with stupid backoff and add-k smoothing at the
//!   unigram level;
//! * for positions after `<BOS>`, a slot model. The slot is the part of the
//!   continuation generated so far with every token inside parentheses
//!   (other than `,` and `)`) replaced by a placeholder, so it records the
//!   structure of the output but not its arguments. Each slot keeps a
//!   next-token distribution smoothed towards the n-gram, and goal tokens act
//!   as naive-Bayes evidence for which token fills it. A bounded history
//!   cannot see the goal once a long context sits in between, so this term
//!   carries that information instead;
//! * at the start of an argument, the mass the slot gives to argument tokens
//!   is redistributed by the pattern counts of [`super::pointer`].

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::pointer::{arg_position, MASK, pattern_keys, PatternCounts, PromptIndex};
use super::tokenizer::{TokenId, Tokenizer};
use crate::error::LmError;
use crate::plandsl::{BOS, SEP};

pub const MODEL_FORMAT_VERSION: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// n-gram order; the history is `order - 1` tokens.
    pub order: usize,
    /// Add-k constant of the unigram level.
    pub add_k: f64,
    /// Stupid-backoff multiplier.
    pub backoff: f64,
    /// Maximum number of trailing continuation tokens that identify a slot.
    pub slot_len: usize,
    /// Weight of the n-gram distribution in a slot's smoothed distribution.
    pub slot_prior: f64,
    /// Weight of the plan-only slot estimate in the distribution of a slot
    /// that also fixes the goal skeleton.
    pub template_prior: f64,
    /// Dirichlet prior strength of the per-token feature estimates.
    pub prior_strength: f64,
    /// Scale of the prompt-evidence term; 0 disables it.
    pub evidence_weight: f64,
    /// Features seen fewer times with a slot are ignored.
    pub min_feature_count: u32,
    /// Smoothing strength between granularities of argument patterns.
    pub pointer_prior: f64,
    /// Exponent of the per-slot argument identity counts when combined with
    /// the pattern estimate.
    pub identity_weight: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            order: 6,
            add_k: 0.01,
            backoff: 0.4,
            slot_len: 64,
            slot_prior: 1.0,
            template_prior: 1.0,
            prior_strength: 4.0,
            evidence_weight: 0.3,
            min_feature_count: 3,
            pointer_prior: 1.0,
            identity_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct NextCounts {
    total: u32,
    next: HashMap<TokenId, u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SlotStats {
    total: u32,
    next: HashMap<TokenId, u32>,
    feature: HashMap<u64, u32>,
}


const GOAL_WORD: u64 = 0;
const GOAL_PAIR: u64 = 1 << 62;
const PLAN_ARG: u64 = 2 << 62;

/// Prompt evidence extracted from a token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptFeatures {
    /// Index just past the first `<BOS>`.
    pub plan_start: usize,
    /// Goal tokens and context relations between goal objects.
    pub features: Vec<u64>,
    pub index: PromptIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel {
    pub version: u32,
    pub config: ModelConfig,
    pub tokenizer: Tokenizer,
    /// `ngrams[m]` maps an m-token history to next-token counts.
    ngrams: Vec<HashMap<Vec<TokenId>, NextCounts>>,
    slots: HashMap<Vec<TokenId>, u32>,
    slot_stats: Vec<SlotStats>,
    /// (slot, feature, token) co-occurrence counts.
    joint: HashMap<(u32, u64, TokenId), u32>,
    /// Tokens seen inside parentheses in a training plan.
    arguments: BTreeSet<TokenId>,
    pointer: PatternCounts,
}

impl SequenceModel {
    /// Counts all n-grams and slot statistics of the corpus. The result does
    /// not depend on corpus order.
    pub fn train(
        corpus: &[Vec<TokenId>],
        tokenizer: Tokenizer,
        config: ModelConfig,
    ) -> Result<SequenceModel, LmError> {
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(LmError::EmptyCorpus);
        }
        if config.order == 0 {
            return Err(LmError::BadOrder);
        }
        let mut m = SequenceModel {
            version: MODEL_FORMAT_VERSION,
            config,
            tokenizer,
            ngrams: vec![HashMap::new(); config.order],
            slots: HashMap::new(),
            slot_stats: Vec::new(),
            joint: HashMap::new(),
            arguments: BTreeSet::new(),
            pointer: PatternCounts::default(),
        };
        for seq in corpus {
            for t in 0..seq.len() {
                for len in 0..config.order.min(t + 1) {
                    let entry = m.ngrams[len].entry(seq[t - len..t].to_vec()).or_default();
                    entry.total += 1;
                    *entry.next.entry(seq[t]).or_insert(0) += 1;
                }
            }
        }
        let bos = m.tokenizer.marker_ids(BOS);
        for seq in corpus {
            if let Some(b) = seq.iter().position(|t| bos.contains(t)) {
                let cont = &seq[b + 1..];
                for t in 1..=cont.len() {
                    if m.slot_key(&cont[..t - 1], 0).1 && Some(cont[t - 1]) != m.tokenizer.id(",") {
                        m.arguments.insert(cont[t - 1]);
                    }
                }
            }
        }
        m.arguments.retain(|t| Some(*t) != m.tokenizer.id(")"));
        let prompts: Vec<Option<PromptFeatures>> = corpus.iter().map(|s| m.prompt_features(s)).collect();
        // ids are handed out in sorted key order so the model does not
        // depend on corpus order
        let mut keys: Vec<Vec<TokenId>> = corpus
            .iter()
            .zip(&prompts)
            .filter_map(|(seq, pf)| pf.as_ref().map(|pf| (seq, pf)))
            .flat_map(|(seq, pf)| {
                (pf.plan_start..seq.len())
                    .flat_map(|t| {
                        let k = m.slot_key(&seq[..t], pf.plan_start).0;
                        [m.fine_key(pf, &k), k]
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let id = m.slots.len() as u32;
            m.slots.insert(k, id);
        }
        m.slot_stats = vec![SlotStats::default(); m.slots.len()];
        // (plan-only slot, slot with goal skeleton) per position
        let mut ids: Vec<Vec<(u32, u32)>> = Vec::with_capacity(corpus.len());
        for (seq, pf) in corpus.iter().zip(&prompts) {
            let Some(pf) = pf else {
                ids.push(Vec::new());
                continue;
            };
            let mut row = Vec::new();
            for t in pf.plan_start..seq.len() {
                let k = m.slot_key(&seq[..t], pf.plan_start).0;
                let pair = (m.slots[&k], m.slots[&m.fine_key(pf, &k)]);
                for sid in [pair.0, pair.1] {
                    let st = &mut m.slot_stats[sid as usize];
                    st.total += 1;
                    *st.next.entry(seq[t]).or_insert(0) += 1;
                }
                row.push(pair);
            }
            ids.push(row);
        }
        // evidence only matters where the slot has more than one outcome
        for ((seq, pf), row) in corpus.iter().zip(&prompts).zip(&ids) {
            let Some(pf) = pf else { continue };
            for (t, (sid, _)) in (pf.plan_start..seq.len()).zip(row) {
                let in_args = m.slot_key(&seq[..t], pf.plan_start).1;
                if in_args || m.slot_stats[*sid as usize].next.len() < 2 {
                    continue;
                }
                let features = m.position_features(pf, &seq[pf.plan_start..t]);
                let st = &mut m.slot_stats[*sid as usize];
                for f in &features {
                    *st.feature.entry(*f).or_insert(0) += 1;
                    *m.joint.entry((*sid, *f, seq[t])).or_insert(0) += 1;
                }
            }
        }
        let mut pointer = PatternCounts::default();
        for ((seq, pf), row) in corpus.iter().zip(&prompts).zip(&ids) {
            let Some(pf) = pf else { continue };
            for (t, (_, fine)) in (pf.plan_start..seq.len()).zip(row) {
                let Some(pos) = m.arg_position(&seq[pf.plan_start..t]) else { continue };
                for c in &pf.index.candidates {
                    pointer.observe(&m.pattern_keys(pf, &pos, *fine, *c), *c == seq[t]);
                }
            }
        }
        m.pointer = pointer;
        Ok(m)
    }

    fn arg_position(&self, cont: &[TokenId]) -> Option<super::pointer::ArgPosition> {
        let (open, comma, close) = self.parens()?;
        arg_position(cont, open, comma, close)
    }

    fn pattern_keys(&self, pf: &PromptFeatures, pos: &super::pointer::ArgPosition, slot: u32, c: TokenId) -> Vec<Vec<u32>> {
        pattern_keys(&pf.index, pos, slot, c, |rel| {
            self.tokenizer.token(rel).trim().chars().next().map_or(0, u32::from)
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokenizer.len()
    }

    /// Slot key that also fixes the goal skeleton.
    fn fine_key(&self, pf: &PromptFeatures, key: &[TokenId]) -> Vec<TokenId> {
        let mut k = pf.index.skeleton.clone();
        k.push(self.tokenizer.marker_ids(SEP)[0]);
        k.extend(key);
        k
    }

    /// Continuation since `plan_start` with argument tokens masked,
    /// truncated to the last `slot_len` tokens, and whether the next token
    /// sits inside parentheses.
    fn slot_key(&self, history: &[TokenId], plan_start: usize) -> (Vec<TokenId>, bool) {
        let id = |s: &str| self.tokenizer.id(s);
        let (open, comma, close) = (id("("), id(","), id(")"));
        let mut depth = 0usize;
        let mut key: Vec<TokenId> = history[plan_start.min(history.len())..]
            .iter()
            .map(|&t| {
                if Some(t) == open {
                    depth += 1;
                } else if Some(t) == close {
                    depth = depth.saturating_sub(1);
                } else if depth > 0 && Some(t) != comma {
                    return MASK;
                }
                t
            })
            .collect();
        key.drain(..key.len().saturating_sub(self.config.slot_len));
        (key, depth > 0)
    }

    /// Goal tokens and the argument index of the prompt, or `None` when the
    /// sequence has no `<BOS>`.
    pub fn prompt_features(&self, seq: &[TokenId]) -> Option<PromptFeatures> {
        let bos = self.tokenizer.marker_ids(BOS);
        let sep = self.tokenizer.marker_ids(SEP);
        let b = seq.iter().position(|t| bos.contains(t))?;
        let s = seq[..b].iter().position(|t| sep.contains(t));
        let goal = &seq[..s.unwrap_or(b)];
        let context = s.map_or(&[][..], |s| &seq[s + 1..b]);
        let index = PromptIndex::new(&self.tokenizer, &self.arguments, goal, context);
        let mut set: HashSet<u64> = goal.iter().map(|t| GOAL_WORD | u64::from(*t)).collect();
        for (rel, a, b) in &index.pairs {
            set.insert(GOAL_PAIR | (u64::from(*rel) << 8) | u64::from(a.min(&15) << 4 | b.min(&15)));
        }
        let mut features: Vec<u64> = set.into_iter().collect();
        features.sort_unstable();
        Some(PromptFeatures { plan_start: b + 1, features, index })
    }

    /// Backoff scores (not normalized) for every token.
    fn ngram_scores(&self, history: &[TokenId]) -> Vec<f64> {
        let v = self.vocab_size();
        let uni = &self.ngrams[0][&[][..]];
        let denom = uni.total as f64 + self.config.add_k * v as f64;
        let mut scores: Vec<f64> = (0..v)
            .map(|t| {
                let c = uni.next.get(&(t as TokenId)).copied().unwrap_or(0);
                (c as f64 + self.config.add_k) / denom
            })
            .collect();
        let max_len = (self.config.order - 1).min(history.len());
        for len in 1..=max_len {
            let Some(nc) = self.ngrams[len].get(&history[history.len() - len..]) else { break };
            let mut next = vec![f64::NAN; v];
            for (t, c) in &nc.next {
                next[*t as usize] = *c as f64 / nc.total as f64;
            }
            for (s, n) in scores.iter_mut().zip(next) {
                *s = if n.is_nan() { self.config.backoff * *s } else { n };
            }
        }
        scores
    }

    /// Scores of every vocabulary token as the continuation of `history`.
    pub fn logits(&self, history: &[TokenId]) -> Vec<f64> {
        let pf = self.prompt_features(history);
        self.logits_with(history, pf.as_ref())
    }

    /// [`SequenceModel::logits`] with the prompt features precomputed.
    pub fn logits_with(&self, history: &[TokenId], pf: Option<&PromptFeatures>) -> Vec<f64> {
        let mut probs = self.ngram_scores(history);
        let Some(pf) = pf.filter(|pf| history.len() >= pf.plan_start) else {
            return probs.into_iter().map(f64::ln).collect();
        };
        let (key, in_args) = self.slot_key(history, pf.plan_start);
        let slot = self.slots.get(&key).copied();
        let sum: f64 = probs.iter().sum();
        let st = slot.map(|sid| &self.slot_stats[sid as usize]);
        let alpha = self.config.slot_prior;
        for (t, p) in probs.iter_mut().enumerate() {
            let (c, n) = st.map_or((0.0, 0.0), |st| {
                (st.next.get(&(t as TokenId)).copied().unwrap_or(0) as f64, st.total as f64)
            });
            *p = (c + alpha * *p / sum) / (n + alpha);
        }
        let fine = self.slots.get(&self.fine_key(pf, &key)).copied();
        if let Some(fine) = fine {
            let st = &self.slot_stats[fine as usize];
            let a = self.config.template_prior;
            for (t, p) in probs.iter_mut().enumerate() {
                let c = st.next.get(&(t as TokenId)).copied().unwrap_or(0) as f64;
                *p = (c + a * *p) / (st.total as f64 + a);
            }
        }
        if !in_args {
            if let (Some(sid), Some(st)) = (slot, st) {
                let mut features = self.position_features(pf, &history[pf.plan_start..]);
                // the slot with the goal skeleton already accounts for goal words
                if fine.is_some() {
                    features.retain(|f| f >> 62 != GOAL_WORD >> 62);
                }
                self.add_evidence(&mut probs, &features, sid, st);
            }
        }
        if let Some(pos) = in_args.then(|| self.arg_position(&history[pf.plan_start..])).flatten() {
            self.redistribute(&mut probs, pf, &pos, slot, fine);
        }
        probs.into_iter().map(f64::ln).collect()
    }

    /// Prompt features plus the arguments the plan has used so far.
    fn position_features(&self, pf: &PromptFeatures, cont: &[TokenId]) -> Vec<u64> {
        let mut out = pf.features.clone();
        if let Some((open, comma, close)) = self.parens() {
            let mut inside = false;
            for t in cont {
                if *t == open || *t == close {
                    inside = *t == open;
                } else if inside && *t != comma {
                    out.push(PLAN_ARG | u64::from(*t));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn parens(&self) -> Option<(TokenId, TokenId, TokenId)> {
        let id = |s: &str| self.tokenizer.id(s);
        Some((id("(")?, id(",")?, id(")")?))
    }

    /// Multiplies in the naive-Bayes evidence and renormalizes.
    fn add_evidence(&self, probs: &mut [f64], features: &[u64], sid: u32, st: &SlotStats) {
        if self.config.evidence_weight == 0.0 || st.next.len() < 2 {
            return;
        }
        let beta = self.config.prior_strength;
        let used: Vec<(u64, f64)> = features
            .iter()
            .filter_map(|f| {
                let c = *st.feature.get(f)?;
                (c >= self.config.min_feature_count)
                    .then(|| (*f, (c as f64 + 0.5) / (st.total as f64 + 1.0)))
            })
            .collect();
        for (tok, cv) in &st.next {
            let mut evidence = 0.0;
            for (f, q) in &used {
                let joint = self.joint.get(&(sid, *f, *tok)).copied().unwrap_or(0);
                let p = (joint as f64 + beta * q) / (*cv as f64 + beta);
                evidence += (p / q).ln();
            }
            probs[*tok as usize] *= (self.config.evidence_weight * evidence).exp();
        }
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
    }

    /// Shares the mass of the argument candidates out by pattern estimate
    /// times the slot's identity estimate, both taken from the slot with the
    /// goal skeleton where it exists.
    fn redistribute(
        &self,
        probs: &mut [f64],
        pf: &PromptFeatures,
        pos: &super::pointer::ArgPosition,
        slot: Option<u32>,
        fine: Option<u32>,
    ) {
        let cands = &pf.index.candidates;
        if cands.is_empty() {
            return;
        }
        let n = cands.len() as f64;
        let count = |sid: Option<u32>, c: TokenId| {
            sid.map_or((0.0, 0.0), |s| {
                let st = &self.slot_stats[s as usize];
                (st.next.get(&c).copied().unwrap_or(0) as f64, st.total as f64)
            })
        };
        let weights: Vec<f64> = cands
            .iter()
            .map(|c| {
                let keys = self.pattern_keys(pf, pos, fine.unwrap_or(u32::MAX), *c);
                let p = self.pointer.probability(&keys, 1.0 / n, self.config.pointer_prior);
                // exactly one candidate is chosen: independent choice
                // probabilities condition to weights proportional to the odds
                let odds = p / (1.0 - p).max(1e-12);
                let (cc, nc) = count(slot, *c);
                let coarse = (cc + 1.0) / (nc + n);
                let (cf, nf) = count(fine, *c);
                let id = (cf + coarse) / (nf + 1.0);
                odds * id.powf(self.config.identity_weight)
            })
            .collect();
        let mass: f64 = cands.iter().map(|c| probs[*c as usize]).sum();
        let wsum: f64 = weights.iter().sum();
        for (c, w) in cands.iter().zip(weights) {
            probs[*c as usize] = mass * w / wsum;
        }
    }

    /// Log-probability of `seq[from..]` given `seq[..from]`, scored in one
    /// pass over the sequence with the prompt features extracted once.
    pub fn score_sequence(&self, seq: &[TokenId], from: usize) -> f64 {
        let pf = self.prompt_features(seq);
        (from..seq.len())
            .map(|t| {
                // features only depend on the prompt, which precedes `t`
                let pf = pf.as_ref().filter(|p| p.plan_start <= t);
                let lp = super::log_softmax(&self.logits_with(&seq[..t], pf));
                lp[seq[t] as usize]
            })
            .sum()
    }

    /// Per-token perplexity over whole sequences.
    pub fn perplexity(&self, corpus: &[Vec<TokenId>]) -> f64 {
        let (mut nll, mut n) = (0.0, 0usize);
        for seq in corpus {
            nll -= self.score_sequence(seq, 0);
            n += seq.len();
        }
        (nll / n.max(1) as f64).exp()
    }
}

const MAGIC: &[u8; 4] = b"GPLM";

#[derive(Serialize, Deserialize)]
struct FileHeader {
    config: ModelConfig,
    tokenizer: Tokenizer,
    arguments: Vec<TokenId>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], LmError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| LmError::ModelFile("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, LmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, LmError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn ids(&mut self) -> Result<Vec<TokenId>, LmError> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.u32()).collect()
    }
}

fn put_ids(out: &mut Vec<u8>, ids: &[TokenId]) {
    out.extend((ids.len() as u32).to_le_bytes());
    for i in ids {
        out.extend(i.to_le_bytes());
    }
}

fn sorted<K: Ord + Clone, V: Clone>(m: &HashMap<K, V>) -> Vec<(K, V)> {
    let mut v: Vec<(K, V)> = m.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

impl SequenceModel {
    /// Versioned binary encoding; identical models give identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(MAGIC);
        out.extend(self.version.to_le_bytes());
        let header = serde_json::to_vec(&FileHeader {
            config: self.config,
            tokenizer: self.tokenizer.clone(),
            arguments: self.arguments.iter().copied().collect(),
        })
        .expect("header serializes");
        out.extend((header.len() as u32).to_le_bytes());
        out.extend(header);
        for level in &self.ngrams {
            let entries = sorted(level);
            out.extend((entries.len() as u32).to_le_bytes());
            for (ctx, nc) in entries {
                put_ids(&mut out, &ctx);
                let next = sorted(&nc.next);
                out.extend((next.len() as u32).to_le_bytes());
                for (t, c) in next {
                    out.extend(t.to_le_bytes());
                    out.extend(c.to_le_bytes());
                }
            }
        }
        // slots in id order so joint keys stay valid
        let mut slots: Vec<(&Vec<TokenId>, u32)> = self.slots.iter().map(|(k, v)| (k, *v)).collect();
        slots.sort_by_key(|s| s.1);
        out.extend((slots.len() as u32).to_le_bytes());
        for (key, sid) in slots {
            put_ids(&mut out, key);
            let st = &self.slot_stats[sid as usize];
            let next = sorted(&st.next);
            out.extend((next.len() as u32).to_le_bytes());
            for (t, c) in next {
                out.extend(t.to_le_bytes());
                out.extend(c.to_le_bytes());
            }
            let feats = sorted(&st.feature);
            out.extend((feats.len() as u32).to_le_bytes());
            for (f, c) in feats {
                out.extend(f.to_le_bytes());
                out.extend(c.to_le_bytes());
            }
        }
        let joint = sorted(&self.joint);
        out.extend((joint.len() as u64).to_le_bytes());
        for ((sid, f, t), c) in joint {
            out.extend(sid.to_le_bytes());
            out.extend(f.to_le_bytes());
            out.extend(t.to_le_bytes());
            out.extend(c.to_le_bytes());
        }
        let pointer = sorted(&self.pointer.counts);
        out.extend((pointer.len() as u64).to_le_bytes());
        for (key, (chosen, present)) in pointer {
            put_ids(&mut out, &key);
            out.extend(chosen.to_le_bytes());
            out.extend(present.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SequenceModel, LmError> {
        let bad = |m: &str| LmError::ModelFile(m.to_string());
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("not a model file"));
        }
        let version = r.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(LmError::ModelFile(format!("unsupported format version {version}")));
        }
        let hlen = r.u32()? as usize;
        let header: FileHeader =
            serde_json::from_slice(r.take(hlen)?).map_err(|e| LmError::ModelFile(e.to_string()))?;
        let config = header.config;
        if config.order == 0 {
            return Err(LmError::BadOrder);
        }
        let vocab = header.tokenizer.len() as u32;
        let check = |t: u32| if t < vocab { Ok(t) } else { Err(bad("token id out of range")) };
        let mut ngrams = Vec::with_capacity(config.order);
        for len in 0..config.order {
            let n = r.u32()?;
            let mut level = HashMap::new();
            for _ in 0..n {
                let ctx = r.ids()?;
                if ctx.len() != len {
                    return Err(bad("n-gram history has the wrong length"));
                }
                let mut nc = NextCounts::default();
                for _ in 0..r.u32()? {
                    let (t, c) = (check(r.u32()?)?, r.u32()?);
                    nc.total += c;
                    nc.next.insert(t, c);
                }
                level.insert(ctx, nc);
            }
            ngrams.push(level);
        }
        if !ngrams[0].contains_key(&Vec::new()) {
            return Err(bad("missing unigram table"));
        }
        let n_slots = r.u32()?;
        let mut slots = HashMap::new();
        let mut slot_stats = Vec::new();
        for sid in 0..n_slots {
            slots.insert(r.ids()?, sid);
            let mut st = SlotStats::default();
            for _ in 0..r.u32()? {
                let (t, c) = (check(r.u32()?)?, r.u32()?);
                st.total += c;
                st.next.insert(t, c);
            }
            for _ in 0..r.u32()? {
                let (f, c) = (r.u64()?, r.u32()?);
                st.feature.insert(f, c);
            }
            slot_stats.push(st);
        }
        let n_joint = r.u64()?;
        let mut joint = HashMap::new();
        for _ in 0..n_joint {
            let (sid, f, t, c) = (r.u32()?, r.u64()?, check(r.u32()?)?, r.u32()?);
            if sid >= n_slots {
                return Err(bad("slot id out of range"));
            }
            joint.insert((sid, f, t), c);
        }
        let mut pointer = PatternCounts::default();
        for _ in 0..r.u64()? {
            let key = r.ids()?;
            let (chosen, present) = (r.u32()?, r.u32()?);
            if chosen > present {
                return Err(bad("pattern chosen more often than seen"));
            }
            pointer.counts.insert(key, (chosen, present));
        }
        let arguments = header.arguments.iter().map(|t| check(*t)).collect::<Result<_, _>>()?;
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(SequenceModel {
            version,
            config,
            tokenizer: header.tokenizer,
            ngrams,
            slots,
            slot_stats,
            joint,
            arguments,
            pointer,
        })
    }
}
