use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::lm::{generate, DecodingStrategy, SequenceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub label: String,
    pub max_len: usize,
    pub iterations: usize,
    pub seconds: f64,
    pub iterations_per_second: f64,
    /// Mean number of tokens per finished sequence.
    pub mean_tokens: f64,
}

/// Generation throughput over `prompts`, measured on one thread; one
/// iteration is one complete generation. Prompts longer than `max_len`
/// tokens are skipped.
pub fn bench(
    label: &str,
    model: &SequenceModel,
    prompts: &[String],
    strategy: &DecodingStrategy,
    max_len: usize,
) -> Result<BenchResult, EvalError> {
    if prompts.is_empty() {
        return Err(EvalError::Dataset("benchmark needs at least one prompt".into()));
    }
    let start = Instant::now();
    let (mut iterations, mut tokens) = (0usize, 0usize);
    for p in prompts {
        match generate(model, p, strategy, max_len) {
            Ok(g) => {
                iterations += 1;
                tokens += g.ids.len();
            }
            Err(crate::error::LmError::MaxLen { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let seconds = start.elapsed().as_secs_f64().max(1e-9);
    if iterations == 0 {
        return Err(EvalError::Dataset(format!("every prompt exceeds {max_len} tokens")));
    }
    Ok(BenchResult {
        label: label.to_string(),
        max_len,
        iterations,
        seconds,
        iterations_per_second: iterations as f64 / seconds,
        mean_tokens: tokens as f64 / iterations as f64,
    })
}
