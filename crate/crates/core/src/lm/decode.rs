use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::SequenceModel;
use super::tokenizer::TokenId;
use crate::error::LmError;

pub const DEFAULT_MAX_LEN: usize = 1024;

/// Numerically stable softmax (max-shifted).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodingStrategy {
    Greedy,
    /// Top-k candidates, cut to the shortest prefix holding mass `p`.
    Sampled { k: usize, p: f64, seed: u64 },
}

impl DecodingStrategy {
    pub fn validate(&self) -> Result<(), LmError> {
        match *self {
            DecodingStrategy::Greedy => Ok(()),
            DecodingStrategy::Sampled { k, p, .. } => {
                if k >= 1 && (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(LmError::BadStrategy)
                }
            }
        }
    }
    /// The same strategy with an independent random stream for generation
    /// number `stream`, so a batch run with one seed does not reuse the same
    /// draws in every generation.
    pub fn for_stream(&self, stream: u64) -> DecodingStrategy {
        match *self {
            DecodingStrategy::Greedy => DecodingStrategy::Greedy,
            DecodingStrategy::Sampled { k, p, seed } => {
                let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                DecodingStrategy::Sampled { k, p, seed: z ^ (z >> 31) }
            }
        }
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(dist: &[f64]) -> TokenId {
    let mut best = 0;
    for (i, p) in dist.iter().enumerate() {
        if *p > dist[best] {
            best = i;
        }
    }
    best as TokenId
}

/// Tokens eligible under top-k then top-p filtering, most probable first:
/// the descending-sorted prefix of length `min(k, n_p)` where `n_p` is the
/// shortest prefix whose cumulative mass reaches `p`.
pub fn candidates(dist: &[f64], k: usize, p: f64) -> Vec<TokenId> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|a, b| dist[*b].total_cmp(&dist[*a]).then(a.cmp(b)));
    let mut cum = 0.0;
    let mut n_p = order.len();
    for (i, t) in order.iter().enumerate() {
        cum += dist[*t];
        if cum >= p {
            n_p = i + 1;
            break;
        }
    }
    order.truncate(n_p.min(k).max(1));
    order.into_iter().map(|t| t as TokenId).collect()
}

pub fn select_next(dist: &[f64], strategy: &DecodingStrategy, rng: &mut ChaCha8Rng) -> TokenId {
    match *strategy {
        DecodingStrategy::Greedy => argmax(dist),
        DecodingStrategy::Sampled { k, p, .. } => {
            let cand = candidates(dist, k, p);
            if cand.len() == 1 {
                return cand[0];
            }
            let mass: f64 = cand.iter().map(|t| dist[*t as usize]).sum();
            let mut r = rng.gen::<f64>() * mass;
            for t in &cand {
                r -= dist[*t as usize];
                if r < 0.0 {
                    return *t;
                }
            }
            *cand.last().expect("non-empty")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Prompt followed by the generated continuation.
    pub text: String,
    pub ids: Vec<TokenId>,
    pub prompt_len: usize,
    /// Sum of the log-probabilities of the generated tokens.
    pub log_prob: f64,
    /// Generation stopped at a stop token rather than the length limit.
    pub stopped: bool,
}

/// Extends the prompt token by token until `<EOS>`, end-of-text or
/// `max_len` tokens.
pub fn generate(
    model: &SequenceModel,
    prompt: &str,
    strategy: &DecodingStrategy,
    max_len: usize,
) -> Result<Generation, LmError> {
    strategy.validate()?;
    let mut ids = model.tokenizer.encode(prompt)?;
    let prompt_len = ids.len();
    if max_len < prompt_len {
        return Err(LmError::MaxLen { max_len, prompt_len });
    }
    let seed = match strategy {
        DecodingStrategy::Sampled { seed, .. } => *seed,
        DecodingStrategy::Greedy => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stops = model.tokenizer.stop_ids();
    let pf = model.prompt_features(&ids);
    let mut log_prob = 0.0;
    let mut stopped = false;
    while ids.len() < max_len {
        let logits = model.logits_with(&ids, pf.as_ref().filter(|p| p.plan_start <= ids.len()));
        let dist = softmax(&logits);
        let next = select_next(&dist, strategy, &mut rng);
        log_prob += dist[next as usize].ln();
        ids.push(next);
        if stops.contains(&next) {
            stopped = true;
            break;
        }
    }
    Ok(Generation { text: model.tokenizer.decode(&ids), ids, prompt_len, log_prob, stopped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_closed_form() {
        let d = softmax(&[0.0, 2f64.ln()]);
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((d[1] - 2.0 / 3.0).abs() < 1e-12);
        let u = softmax(&[5.0; 4]);
        assert!(u.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.4, 0.2, 0.4]), 0);
    }

    #[test]
    fn candidate_prefixes() {
        let d = [0.05, 0.5, 0.3, 0.15];
        assert_eq!(candidates(&d, 10, 0.9), vec![1, 2, 3]);
        assert_eq!(candidates(&d, 2, 0.9), vec![1, 2]);
        assert_eq!(candidates(&d, 10, 0.5), vec![1]);
        assert_eq!(candidates(&d, 10, 0.0), vec![1]);
        assert_eq!(candidates(&d, 10, 1.0).len(), 4);
    }

    #[test]
    fn bad_strategy_rejected() {
        assert!(DecodingStrategy::Sampled { k: 0, p: 0.9, seed: 1 }.validate().is_err());
        assert!(DecodingStrategy::Sampled { k: 3, p: 1.5, seed: 1 }.validate().is_err());
    }
}
