//! Tokenizer, count-based sequence model and decoding.

mod decode;
mod model;
mod pointer;
mod tokenizer;

pub use decode::{
    argmax, candidates, generate, log_softmax, select_next, softmax, DecodingStrategy, Generation,
    DEFAULT_MAX_LEN,
};
pub use model::{ModelConfig, PromptFeatures, SequenceModel, MODEL_FORMAT_VERSION};
pub use tokenizer::{pretokenize, TokenId, Tokenizer, END_OF_TEXT, SPECIALS, UNKNOWN};

use crate::error::LmError;

/// Tokenizes a corpus of serialized samples and trains a model on it.
/// `extra` tokens are registered even when the corpus lacks them.
pub fn train_on_texts(
    texts: &[String],
    extra: &[String],
    config: ModelConfig,
) -> Result<SequenceModel, LmError> {
    if texts.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let tokenizer = Tokenizer::build(texts.iter().map(String::as_str), extra);
    let corpus: Vec<Vec<TokenId>> =
        texts.iter().map(|t| tokenizer.encode(t)).collect::<Result<_, _>>()?;
    SequenceModel::train(&corpus, tokenizer, config)
}
