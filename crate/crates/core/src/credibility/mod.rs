//! Single-tweet credibility scorer: a convolutional-recurrent network trained
//! from scratch with mini-batch SGD and hand-written backpropagation.

pub mod io;
pub mod model;
pub mod train;
pub mod vocab;

use thiserror::Error;

pub use model::{
    batch_loss, loss, CredibilityModel, CredibilityPrediction, Hyper, InitScheme, Params, NEWS,
    RUMOR,
};
pub use train::{
    accuracy, gradient_check, separable_toy_corpus, train_credibility, EpochStats, GradCheck,
    Trainer,
};
pub use vocab::{build_vocabulary, tokenize_and_pad, TweetEncoding, Vocabulary, PAD_ID, UNK_ID};

#[derive(Debug, Error)]
pub enum CredibilityError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("training data must contain both labels")]
    SingleClass,
    #[error("loss became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("non-finite activation in {0} layer")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
